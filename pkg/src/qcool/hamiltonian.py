"""Problem, bath and coupling terms on chains and square lattices, and the
time-dependent schedules driving the bath field and coupling.

Register layout: system site ``i`` sits at bit ``2*i`` and its dedicated bath
qubit at bit ``2*i + 1``. Interleaving keeps every system/bath pair adjacent,
which the propagation kernels rely on for speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .qstate import PauliString


def system_position(site: int) -> int:
    return 2 * site


def bath_position(site: int) -> int:
    return 2 * site + 1


@dataclass(frozen=True)
class LatticeSpec:
    """Open-boundary chain (``extent=N``) or square lattice (``extent=(rows, cols)``)."""

    geometry: str = "chain"
    extent: int | tuple[int, int] = 8
    boundary: str = "open"

    def __post_init__(self):
        if self.boundary != "open":
            raise ConfigurationError(f"only open boundaries are supported, got {self.boundary!r}")
        if self.geometry == "chain":
            if isinstance(self.extent, (tuple, list)):
                raise ConfigurationError("chain extent must be a single site count")
            # single-site chains are allowed for toy spectra; bonds are then empty
            if int(self.extent) < 1:
                raise ConfigurationError(f"chain extent must be >= 1, got {self.extent}")
            object.__setattr__(self, "extent", int(self.extent))
        elif self.geometry == "square":
            try:
                rows, cols = (int(v) for v in self.extent)
            except (TypeError, ValueError):
                raise ConfigurationError("square extent must be (rows, cols)") from None
            if rows < 2 or cols < 2:
                raise ConfigurationError(f"square extent must be >= (2, 2), got {self.extent}")
            object.__setattr__(self, "extent", (rows, cols))
        else:
            raise ConfigurationError(f"geometry must be 'chain' or 'square', got {self.geometry!r}")

    @property
    def n_sites(self) -> int:
        if self.geometry == "chain":
            return self.extent
        rows, cols = self.extent
        return rows * cols

    def bonds(self) -> list[tuple[int, int]]:
        """Nearest-neighbour pairs ``(i, j)`` with ``i < j``, row-major sites."""
        if self.geometry == "chain":
            return [(i, i + 1) for i in range(self.extent - 1)]
        rows, cols = self.extent
        out = []
        for r in range(rows):
            for c in range(cols):
                i = r * cols + c
                if c + 1 < cols:
                    out.append((i, i + 1))
                if r + 1 < rows:
                    out.append((i, i + cols))
        return sorted(out)

    def site_coords(self, site: int) -> tuple[int, int]:
        if self.geometry == "chain":
            return (0, site)
        return divmod(site, self.extent[1])


@dataclass
class HamiltonianTerms:
    """Weighted Pauli strings grouped as problem / bath / coupling.

    Bath terms carry unit weight and are scaled by the Zeeman field at run
    time; coupling terms carry unit weight and are scaled by the coupling.
    """

    n_sites: int
    problem_terms: list[PauliString] = field(default_factory=list)
    bath_terms: list[PauliString] = field(default_factory=list)
    coupling_terms: list[PauliString] = field(default_factory=list)

    @property
    def n_qubits(self) -> int:
        return 2 * self.n_sites

    @property
    def system_positions(self) -> list[int]:
        return [system_position(i) for i in range(self.n_sites)]

    @property
    def bath_positions(self) -> list[int]:
        return [bath_position(i) for i in range(self.n_sites)]

    def labels(self) -> dict:
        out = {("system", i): system_position(i) for i in range(self.n_sites)}
        out.update({("bath", i): bath_position(i) for i in range(self.n_sites)})
        return out

    def all_terms(self) -> list[PauliString]:
        return [*self.problem_terms, *self.bath_terms, *self.coupling_terms]

    def merged(self, other: "HamiltonianTerms") -> "HamiltonianTerms":
        if other.n_sites != self.n_sites:
            raise ConfigurationError("cannot merge terms built for different lattices")
        return HamiltonianTerms(
            self.n_sites,
            [*self.problem_terms, *other.problem_terms],
            [*self.bath_terms, *other.bath_terms],
            [*self.coupling_terms, *other.coupling_terms],
        )

    def at(self, g_A: float, J_AP: float) -> list[PauliString]:
        """All terms with the bath and coupling weights folded in."""
        return [
            *self.problem_terms,
            *(t.scaled(g_A) for t in self.bath_terms),
            *(t.scaled(J_AP) for t in self.coupling_terms),
        ]


def build_tfim(lattice: LatticeSpec, J_P: float, g_P: float) -> HamiltonianTerms:
    """Transverse-field Ising problem terms: ``g_P X_n`` per site, ``J_P Z Z`` per bond."""
    if not (math.isfinite(J_P) and math.isfinite(g_P)):
        raise ConfigurationError(f"non-finite couplings J_P={J_P!r}, g_P={g_P!r}")
    n = lattice.n_sites
    fields = [PauliString({system_position(i): "X"}, g_P) for i in range(n)]
    bonds = [
        PauliString({system_position(i): "Z", system_position(j): "Z"}, J_P)
        for i, j in lattice.bonds()
    ]
    return HamiltonianTerms(n, problem_terms=fields + bonds)


def build_bath_and_coupling(lattice: LatticeSpec) -> HamiltonianTerms:
    """Unit-weight bath Zeeman terms and system--bath ``X X`` couplings."""
    n = lattice.n_sites
    bath = [PauliString({bath_position(i): "Z"}) for i in range(n)]
    coupling = [
        PauliString({system_position(i): "X", bath_position(i): "X"}) for i in range(n)
    ]
    return HamiltonianTerms(n, bath_terms=bath, coupling_terms=coupling)


def build_model(lattice: LatticeSpec, J_P: float, g_P: float) -> HamiltonianTerms:
    return build_tfim(lattice, J_P, g_P).merged(build_bath_and_coupling(lattice))


def densify(terms: list[PauliString], n_qubits: int, positions: list[int] | None = None) -> np.ndarray:
    """Dense matrix of a sum of Pauli strings.

    ``positions`` relabels the register: bit ``positions[k]`` of the full
    register becomes bit ``k`` of the returned operator.
    """
    dim = 1 << n_qubits
    remap = None if positions is None else {p: k for k, p in enumerate(positions)}
    idx = np.arange(dim, dtype=np.int64)
    mat = np.zeros((dim, dim), dtype=np.complex128)
    for term in terms:
        facs = term.factors
        if remap is not None:
            try:
                facs = {remap[q]: p for q, p in facs.items()}
            except KeyError as exc:
                raise ConfigurationError(f"term {term} acts outside the selected qubits") from exc
        if any(q >= n_qubits for q in facs):
            raise ConfigurationError(f"term {term} exceeds {n_qubits} qubits")
        xmask, zmask, phase = PauliString(facs, term.coefficient).masks()
        sign = 1.0 - 2.0 * (np.bitwise_count(idx & zmask) & 1)
        mat[idx ^ xmask, idx] += term.coefficient * phase * sign
    return mat


@dataclass(frozen=True)
class ScheduleSet:
    """Linear Zeeman scan, trapezoidal coupling ramp and annealing parameters."""

    g_max: float = 2.5
    g_min: float = 0.1
    T: float = 20.0
    t0: float = 2.0
    t1: float = 18.0
    J0: float = 0.5
    v: float = 0.9

    def __post_init__(self):
        vals = (self.g_max, self.g_min, self.T, self.t0, self.t1, self.J0, self.v)
        if not all(math.isfinite(float(x)) for x in vals):
            raise ConfigurationError("schedule parameters must be finite")
        if not 0 < self.t0 <= self.t1 < self.T:
            raise ConfigurationError(
                f"need 0 < t0 <= t1 < T, got t0={self.t0}, t1={self.t1}, T={self.T}"
            )
        if not self.g_max > self.g_min >= 0:
            raise ConfigurationError(
                f"need g_max > g_min >= 0, got g_max={self.g_max}, g_min={self.g_min}"
            )
        if not self.J0 > 0:
            raise ConfigurationError(f"J0 must be > 0, got {self.J0}")
        if not 0 < self.v <= 1:
            raise ConfigurationError(f"annealing rate v must be in (0, 1], got {self.v}")

    def _check_t(self, t):
        if not -1e-12 <= t <= self.T * (1 + 1e-12):
            raise ConfigurationError(f"time {t} outside the scan window [0, {self.T}]")

    def zeeman(self, t: float) -> float:
        self._check_t(t)
        # convex-combination form hits g_max and g_min exactly at the ends
        w = t / self.T
        return self.g_max * (1.0 - w) + self.g_min * w

    def coupling(self, t: float, J_max: float) -> float:
        self._check_t(t)
        if t <= self.t0:
            return J_max * t / self.t0
        if t <= self.t1:
            return J_max
        return J_max * (self.T - t) / (self.T - self.t1)

    def max_coupling(self, cycle: int) -> float:
        if cycle < 0:
            raise ConfigurationError(f"cycle must be >= 0, got {cycle}")
        return self.J0 * self.v**cycle

    def peak_zeeman(self) -> float:
        return max(abs(self.g_max), abs(self.g_min))


@dataclass(frozen=True)
class FrozenSchedule:
    """Constant bath field and coupling, for static-Hamiltonian checks."""

    g_A: float
    T: float = math.inf

    def zeeman(self, t: float) -> float:
        return self.g_A

    def coupling(self, t: float, J_max: float) -> float:
        return J_max

    def peak_zeeman(self) -> float:
        return abs(self.g_A)


def zeeman_at(s: ScheduleSet, t: float) -> float:
    """Bath field, ``g_max + (g_min - g_max) t / T``."""
    return s.zeeman(t)


def coupling_at(s: ScheduleSet, t: float, J_max: float) -> float:
    """Trapezoidal coupling: ramp up on [0, t0], hold, ramp down on [t1, T]."""
    return s.coupling(t, J_max)


def annealed_max_coupling(s: ScheduleSet, cycle: int) -> float:
    """Peak coupling of cycle ``cycle``: ``J0 * v**cycle``."""
    return s.max_coupling(cycle)
