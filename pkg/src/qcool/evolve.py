"""Time-ordered propagation under H(t) = H_P + g_A(t) H_A + J_AP(t) H_AP.

Two routes: second-order Strang splitting between the z-diagonal terms and
the commuting X-type terms (production), and a dense piecewise-constant
exponential (reference, small registers only).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import CapabilityError, ConfigurationError
from .hamiltonian import HamiltonianTerms, densify
from .qstate import StateVector

SCHEMES = ("strang_split", "oracle_dense")
STABILITY_LIMIT = 0.2
ORACLE_MAX_QUBITS = 12


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 0.01
    scheme: str = "strang_split"
    oracle_substeps: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigurationError(f"integrator.dt must be > 0, got {self.dt!r}")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"integrator.scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.oracle_substeps < 1:
            raise ConfigurationError("integrator.oracle_substeps must be >= 1")


def max_term_weight(terms: HamiltonianTerms, schedules, J_max: float) -> float:
    weights = [abs(t.coefficient) for t in terms.problem_terms]
    weights += [abs(t.coefficient) * schedules.peak_zeeman() for t in terms.bath_terms]
    weights += [abs(t.coefficient * J_max) for t in terms.coupling_terms]
    return max(weights, default=0.0)


def check_stability(terms: HamiltonianTerms, schedules, J_max: float, dt: float):
    w = max_term_weight(terms, schedules, J_max)
    if dt * w > STABILITY_LIMIT:
        raise ConfigurationError(
            f"dt * max term weight = {dt * w:.3g} exceeds {STABILITY_LIMIT}; reduce integrator.dt"
        )


def _kind(term) -> str:
    ps = set(term.factors.values())
    if not ps:
        return "identity"
    if ps == {"Z"}:
        return "z"
    if ps == {"X"}:
        return "x"
    return "mixed"


def _diag_values(terms, n_qubits: int) -> np.ndarray:
    idx = np.arange(1 << n_qubits, dtype=np.int64)
    out = np.zeros(idx.shape[0])
    for t in terms:
        _, zmask, _ = t.masks()
        out += t.coefficient * (1.0 - 2.0 * (np.bitwise_count(idx & zmask) & 1))
    return out


class SplitPlan:
    """Precomputed structure of a Hamiltonian for the splitting propagator.

    Holds the static diagonal of the problem terms, the level decomposition of
    the bath diagonal, and the fused (field, coupling) pair angles. Read-only
    once built, so one plan can serve many trajectories.
    """

    def __init__(self, terms: HamiltonianTerms):
        self.terms = terms
        n = self.n_qubits = terms.n_qubits
        groups = {"problem": terms.problem_terms, "bath": terms.bath_terms, "coupling": terms.coupling_terms}
        diag = {g: [] for g in groups}
        xs = {g: [] for g in groups}
        self.offset = 0.0
        for g, ts in groups.items():
            for t in ts:
                if any(q >= n for q in t.factors):
                    raise ConfigurationError(f"term {t} acts outside the {n}-qubit register")
                kind = _kind(t)
                if kind == "identity":
                    if g != "problem":
                        raise ConfigurationError(f"scaled identity in {g} terms is not supported")
                    self.offset += t.coefficient
                elif kind == "z":
                    diag[g].append(t)
                elif kind == "x":
                    xs[g].append(t)
                else:
                    raise ConfigurationError(
                        f"term {t} mixes Pauli types; use the oracle_dense scheme"
                    )
        if diag["coupling"]:
            raise ConfigurationError("z-type coupling terms are not supported by strang_split")

        self.diag_problem = _diag_values(diag["problem"], n) + self.offset
        bath_vals = _diag_values(diag["bath"], n)
        levels, inverse = np.unique(np.round(bath_vals, 12), return_inverse=True)
        self.bath_levels = levels
        self.level = inverse.astype(np.int64).ravel()

        # fuse X_s (field) and X_s X_{s+1} (coupling) on even/odd neighbours
        field = {}
        coup = {}
        extra = []
        for g, ts in xs.items():
            for t in ts:
                qs = t.qubits
                if g == "problem" and len(qs) == 1 and qs[0] % 2 == 0 and qs[0] + 1 < n:
                    field[qs[0]] = field.get(qs[0], 0.0) + t.coefficient
                elif g == "coupling" and len(qs) == 2 and qs[0] % 2 == 0 and qs[1] == qs[0] + 1:
                    coup[qs[0]] = coup.get(qs[0], 0.0) + t.coefficient
                else:
                    extra.append((t.masks()[0], t.coefficient, g))
        bits = sorted(set(field) | set(coup))
        self.pair_bits = np.array(bits, dtype=np.int64)
        self.pair_field = np.array([field.get(b, 0.0) for b in bits])
        self.pair_coupling = np.array([coup.get(b, 0.0) for b in bits])
        self.extra_masks = np.array([m for m, _, _ in extra], dtype=np.int64)
        self.extra_coef = np.array([c for _, c, _ in extra])
        self.extra_group = [g for _, _, g in extra]

        self.problem_x_masks = np.array([t.masks()[0] for t in xs["problem"]], dtype=np.int64)
        self.problem_x_coef = np.array([t.coefficient for t in xs["problem"]])
        self._static = {}

    def static_phases(self, h: float):
        key = float(h)
        if key not in self._static:
            half = np.exp(-0.5j * h * self.diag_problem)
            full = half * half
            self._static = {
                key: (
                    np.ascontiguousarray(half.real),
                    np.ascontiguousarray(half.imag),
                    np.ascontiguousarray(full.real),
                    np.ascontiguousarray(full.imag),
                )
            }
        return self._static[key]

    def advance(self, re, im, t_start: float, h: float, n_steps: int, schedules, J_max: float):
        """Apply ``n_steps`` Strang steps of size ``h`` starting at ``t_start``."""
        if n_steps <= 0:
            return
        t_mid = t_start + (np.arange(n_steps) + 0.5) * h
        t_mid = np.minimum(t_mid, getattr(schedules, "T", math.inf))
        g = np.array([schedules.zeeman(t) for t in t_mid])
        J = np.array([schedules.coupling(t, J_max) for t in t_mid])
        phase = np.exp(-0.5j * h * np.outer(g, self.bath_levels))
        th_c = h * np.outer(J, self.pair_coupling)
        th_f = np.broadcast_to(h * self.pair_field, th_c.shape)
        scale = {"problem": np.ones_like(g), "bath": g, "coupling": J}
        extra = np.zeros((n_steps, len(self.extra_group)))
        for k, grp in enumerate(self.extra_group):
            extra[:, k] = h * self.extra_coef[k] * scale[grp]
        _kernels.strang_steps(
            re,
            im,
            *self.static_phases(h),
            self.level,
            np.ascontiguousarray(phase.real),
            np.ascontiguousarray(phase.imag),
            self.pair_bits,
            np.cos(th_c),
            np.sin(th_c),
            np.ascontiguousarray(np.cos(th_f)),
            np.ascontiguousarray(np.sin(th_f)),
            self.extra_masks,
            extra,
        )

    def problem_energy(self, re, im) -> float:
        """<psi|H_P|psi> for a normalized split-layout state."""
        e = _kernels.weighted_norm_split(re, im, self.diag_problem)
        if self.problem_x_masks.shape[0]:
            e += float(self.problem_x_coef @ _kernels.x_expectations_split(re, im, self.problem_x_masks))
        return float(e)


def n_steps_for(duration: float, dt: float) -> tuple[int, float]:
    """Uniform step count and size covering ``duration`` with steps <= ``dt``."""
    n = max(1, math.ceil(duration / dt - 1e-9))
    return n, duration / n


def evolve_interval(
    state: StateVector,
    terms: HamiltonianTerms,
    schedules,
    J_max: float,
    t_start: float,
    t_end: float,
    cfg: IntegratorConfig,
    plan: SplitPlan | None = None,
) -> StateVector:
    """Propagate ``state`` from ``t_start`` to ``t_end``; returns a new state."""
    if t_end < t_start:
        raise ConfigurationError(f"t_end={t_end} precedes t_start={t_start}")
    if state.n_qubits != terms.n_qubits:
        raise ConfigurationError(f"state has {state.n_qubits} qubits, terms need {terms.n_qubits}")
    check_stability(terms, schedules, J_max, cfg.dt)
    if t_end == t_start:
        return state.copy()
    if cfg.scheme == "oracle_dense":
        return oracle_propagate(
            state, terms, schedules, J_max, t_start, t_end, cfg.oracle_substeps, dt=cfg.dt
        )
    plan = plan or SplitPlan(terms)
    n, h = n_steps_for(t_end - t_start, cfg.dt)
    re = state.amplitudes.real.copy()
    im = state.amplitudes.imag.copy()
    plan.advance(re, im, t_start, h, n, schedules, J_max)
    return StateVector(state.n_qubits, re + 1j * im, dict(state.qubit_labels))


def _chain_product(us: np.ndarray) -> np.ndarray:
    """U_{K-1} ... U_1 U_0 by pairwise reduction."""
    while us.shape[0] > 1:
        if us.shape[0] % 2:
            eye = np.eye(us.shape[1], dtype=us.dtype)[None]
            us = np.concatenate([us, eye], axis=0)
        us = us[1::2] @ us[0::2]
    return us[0]


def oracle_propagate(
    state: StateVector,
    terms: HamiltonianTerms,
    schedules,
    J_max: float,
    t_start: float,
    t_end: float,
    substeps_per_dt: int = 1,
    dt: float = 0.01,
) -> StateVector:
    """Dense reference propagator.

    Splits ``[t_start, t_end]`` into micro-intervals of at most
    ``dt / substeps_per_dt`` and applies the exact exponential of H at each
    micro-interval midpoint via eigendecomposition.
    """
    n = terms.n_qubits
    if n > ORACLE_MAX_QUBITS:
        raise CapabilityError(f"dense oracle limited to {ORACLE_MAX_QUBITS} qubits, got {n}")
    if t_end < t_start:
        raise ConfigurationError(f"t_end={t_end} precedes t_start={t_start}")
    psi = state.amplitudes.copy()
    if t_end == t_start:
        return StateVector(state.n_qubits, psi, dict(state.qubit_labels))
    hp = densify(terms.problem_terms, n)
    ha = densify(terms.bath_terms, n)
    hc = densify(terms.coupling_terms, n)
    real = not (hp.imag.any() or ha.imag.any() or hc.imag.any())
    if real:
        hp, ha, hc = hp.real, ha.real, hc.real
    n_micro, h = n_steps_for(t_end - t_start, dt / substeps_per_dt)
    dim = 1 << n
    chunk = max(1, min(4096, (1 << 22) // (dim * dim)))
    for k0 in range(0, n_micro, chunk):
        ks = np.arange(k0, min(k0 + chunk, n_micro))
        t_mid = np.minimum(t_start + (ks + 0.5) * h, getattr(schedules, "T", math.inf))
        g = np.array([schedules.zeeman(t) for t in t_mid])
        J = np.array([schedules.coupling(t, J_max) for t in t_mid])
        hs = hp[None] + g[:, None, None] * ha[None] + J[:, None, None] * hc[None]
        w, v = np.linalg.eigh(hs)
        us = v @ (np.exp(-1j * h * w)[..., None] * v.conj().transpose(0, 2, 1))
        psi = _chain_product(us) @ psi
    return StateVector(state.n_qubits, psi, dict(state.qubit_labels))
