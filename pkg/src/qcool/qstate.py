"""Statevectors, Pauli strings, projective measurement, reset and noise jumps.

Qubit ``q`` is bit ``q`` of the basis index. Bit value 0 is the ``+1``
eigenstate of sigma^z. Bath qubits relax to the ``-1`` eigenstate (bit 1),
so a ``+1`` outcome on a bath qubit counts as an excitation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import _kernels
from .errors import ConfigurationError, InvariantError

PAULIS = ("X", "Y", "Z")
NOISE_KINDS = ("none", "depolarizing", "pauli_x", "pauli_y", "pauli_z")
NOISE_TARGETS = ("system_only", "system_and_bath")
BATH_EXCITED = +1
BATH_GROUND = -1


@dataclass(frozen=True)
class PauliString:
    """``coefficient`` times a tensor product of Pauli factors.

    An empty ``factors`` mapping is the identity scaled by ``coefficient``.
    """

    factors: Mapping[int, str]
    coefficient: float = 1.0

    def __post_init__(self):
        facs = dict(self.factors)
        for q, p in facs.items():
            if p not in PAULIS:
                raise ConfigurationError(f"unknown Pauli factor {p!r} on qubit {q}")
            if int(q) < 0:
                raise ConfigurationError(f"negative qubit index {q}")
        coef = float(self.coefficient)
        if not np.isfinite(coef):
            raise ConfigurationError(f"non-finite coefficient {self.coefficient!r}")
        object.__setattr__(self, "factors", dict(sorted(facs.items())))
        object.__setattr__(self, "coefficient", coef)

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(self.factors)

    def masks(self) -> tuple[int, int, complex]:
        """Bit-mask encoding ``(xmask, zmask, phase)`` used by the kernels."""
        xmask = zmask = 0
        n_y = 0
        for q, p in self.factors.items():
            if p in ("X", "Y"):
                xmask |= 1 << q
            if p in ("Z", "Y"):
                zmask |= 1 << q
            if p == "Y":
                n_y += 1
        return xmask, zmask, 1j**n_y

    def scaled(self, factor: float) -> "PauliString":
        return PauliString(self.factors, self.coefficient * factor)

    def __str__(self):
        body = " ".join(f"{p}{q}" for q, p in self.factors.items()) or "I"
        return f"{self.coefficient:+g} {body}"


@dataclass
class StateVector:
    """Amplitudes over ``n_qubits`` qubits plus a role -> position map.

    ``qubit_labels`` maps logical roles such as ``("system", 3)`` or
    ``("bath", 3)`` to bit positions.
    """

    n_qubits: int
    amplitudes: np.ndarray
    qubit_labels: dict = field(default_factory=dict)

    def __post_init__(self):
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.shape[0] != 1 << self.n_qubits:
            raise ConfigurationError(
                f"expected {1 << self.n_qubits} amplitudes, got shape {amps.shape}"
            )
        self.amplitudes = amps

    @classmethod
    def basis(cls, bits, qubit_labels=None) -> "StateVector":
        """Computational basis state; ``bits[q]`` is the bit of qubit ``q``."""
        bits = [int(b) for b in bits]
        if any(b not in (0, 1) for b in bits):
            raise ConfigurationError(f"basis bits must be 0/1, got {bits}")
        amps = np.zeros(1 << len(bits), dtype=np.complex128)
        amps[sum(b << q for q, b in enumerate(bits))] = 1.0
        return cls(len(bits), amps, dict(qubit_labels or {}))

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy(), dict(self.qubit_labels))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def position(self, role, index) -> int:
        return self.qubit_labels[(role, index)]


def _check_qubit(state: StateVector, qubit: int):
    if not 0 <= qubit < state.n_qubits:
        raise ConfigurationError(f"qubit {qubit} out of range for {state.n_qubits} qubits")


def apply_pauli_string(state: StateVector, term: PauliString) -> StateVector:
    """Return ``term`` applied to ``state`` (coefficient included)."""
    for q in term.factors:
        _check_qubit(state, q)
    xmask, zmask, phase = term.masks()
    out = np.empty_like(state.amplitudes)
    _kernels.apply_pauli(state.amplitudes, out, xmask, zmask, complex(phase) * term.coefficient)
    return StateVector(state.n_qubits, out, dict(state.qubit_labels))


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    if a.n_qubits != b.n_qubits:
        raise ConfigurationError(f"size mismatch: {a.n_qubits} vs {b.n_qubits} qubits")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def z_plus_probability(state: StateVector, qubit: int) -> float:
    """Born probability of the +1 outcome of sigma^z on ``qubit``."""
    _check_qubit(state, qubit)
    return float(_kernels.weight_bit_clear(state.amplitudes, qubit))


def measure_qubit_z(
    state: StateVector, qubit: int, rng: np.random.Generator
) -> tuple[int, StateVector]:
    """Projective sigma^z measurement; returns the outcome and projected state."""
    p_plus = min(max(z_plus_probability(state, qubit), 0.0), 1.0)
    outcome = +1 if rng.random() < p_plus else -1
    weight = p_plus if outcome == +1 else 1.0 - p_plus
    if weight < 1e-14:
        raise InvariantError(f"outcome {outcome} drawn with weight {weight:.3e}")
    out = state.copy()
    _kernels.project_bit(out.amplitudes, qubit, outcome == -1, 1.0 / np.sqrt(weight))
    return outcome, out


def reset_bath_qubit(state: StateVector, qubit: int, outcome: int) -> StateVector:
    """Bring a measured bath qubit back to its ground state (bit 1)."""
    _check_qubit(state, qubit)
    out = state.copy()
    if outcome == BATH_EXCITED:
        _kernels.flip_bit(out.amplitudes, qubit)
    return out


@dataclass(frozen=True)
class NoiseModel:
    """Local Pauli jump noise, ``rate`` jumps per qubit per unit time."""

    kind: str = "none"
    rate: float = 0.0
    targets: str = "system_only"

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ConfigurationError(f"noise.kind must be one of {NOISE_KINDS}, got {self.kind!r}")
        if self.targets not in NOISE_TARGETS:
            raise ConfigurationError(
                f"noise.targets must be one of {NOISE_TARGETS}, got {self.targets!r}"
            )
        if not np.isfinite(self.rate) or self.rate < 0:
            raise ConfigurationError(f"noise.rate must be >= 0, got {self.rate!r}")

    @property
    def active(self) -> bool:
        return self.kind != "none" and self.rate > 0

    def check_step(self, dt: float):
        if self.rate * dt >= 1.0:
            raise ConfigurationError(
                f"noise.rate * dt = {self.rate * dt:g} must be < 1 for first-order jumps"
            )

    def target_qubits(self, state: StateVector) -> list[int]:
        roles = ("system",) if self.targets == "system_only" else ("system", "bath")
        picked = sorted(pos for (role, _), pos in state.qubit_labels.items() if role in roles)
        return picked or list(range(state.n_qubits))


def draw_jumps(
    noise: NoiseModel, dt: float, n_targets: int, rng: np.random.Generator, n_steps: int = 1
) -> tuple[np.ndarray, np.ndarray]:
    """Draw jump occurrences and Pauli choices for ``n_steps`` steps.

    Both arrays are drawn regardless of ``kind`` so that runs differing only in
    the noise kind consume identical random numbers (paired comparisons).
    Returns ``(occurs, pauli_index)`` of shape ``(n_steps, n_targets)``.
    """
    noise.check_step(dt)
    u = rng.random((n_steps, n_targets))
    which = rng.integers(0, 3, size=(n_steps, n_targets))
    occurs = u < noise.rate * dt if noise.kind != "none" else np.zeros_like(u, dtype=bool)
    if noise.kind in ("pauli_x", "pauli_y", "pauli_z"):
        which = np.full_like(which, "xyz".index(noise.kind[-1]))
    return occurs, which


def apply_noise_step(
    state: StateVector, noise: NoiseModel, dt: float, rng: np.random.Generator
) -> tuple[StateVector, list[tuple[int, str]]]:
    """One first-order jump step: each target qubit jumps w.p. ``rate * dt``."""
    targets = noise.target_qubits(state)
    occurs, which = draw_jumps(noise, dt, len(targets), rng)
    jumps = [(targets[i], PAULIS[which[0, i]]) for i in np.flatnonzero(occurs[0])]
    if not jumps:
        return state, []
    out = state.copy()
    for q, p in jumps:
        xmask, zmask, phase = PauliString({q: p}).masks()
        _kernels.apply_pauli_inplace(out.amplitudes, xmask, zmask, complex(phase))
    return out, jumps
