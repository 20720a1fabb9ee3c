"""The cooling loop: scanned evolution, bath measurement, reset, noise and
annealing of the coupling, run as stochastic trajectories and ensembles.
"""

from __future__ import annotations

import functools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .analysis import ground_energy
from .errors import ConfigurationError, DomainError
from .evolve import IntegratorConfig, SplitPlan, check_stability, n_steps_for
from .hamiltonian import HamiltonianTerms, LatticeSpec, ScheduleSet, build_model
from .qstate import (
    BATH_EXCITED,
    PAULIS,
    NoiseModel,
    PauliString,
    StateVector,
    draw_jumps,
    measure_qubit_z,
    reset_bath_qubit,
)

log = logging.getLogger(__name__)

VARIANTS = ("annealed", "fixed_large_J", "fixed_small_J")
INITIAL_STATES = ("neel", "all_up", "all_down")


@dataclass(frozen=True)
class BenchmarkSettings:
    g_P_low: float = 1.2
    g_P_high: float = 10.0
    n_instances: int = 10
    variants: tuple[str, ...] = VARIANTS
    small_J_factor: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "variants", tuple(self.variants))
        if not self.g_P_low < self.g_P_high:
            raise ConfigurationError("benchmark.g_P_low must be < benchmark.g_P_high")
        if self.n_instances < 1:
            raise ConfigurationError("benchmark.n_instances must be >= 1")
        bad = [v for v in self.variants if v not in VARIANTS]
        if bad or not self.variants:
            raise ConfigurationError(f"benchmark.variants must be drawn from {VARIANTS}, got {bad}")
        if not 0 < self.small_J_factor <= 1:
            raise ConfigurationError("benchmark.small_J_factor must be in (0, 1]")


@dataclass(frozen=True)
class NoiseStudySettings:
    kinds: tuple[str, ...] = ("pauli_x", "pauli_y", "pauli_z")
    rate: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "kinds", tuple(self.kinds))
        bad = [k for k in self.kinds if k not in ("pauli_x", "pauli_y", "pauli_z", "depolarizing")]
        if bad or not self.kinds:
            raise ConfigurationError(f"noise_study.kinds has invalid entries {bad}")
        if self.rate < 0:
            raise ConfigurationError("noise_study.rate must be >= 0")


@dataclass(frozen=True)
class ProtocolConfig:
    lattice: LatticeSpec = field(default_factory=LatticeSpec)
    J_P: float = 1.0
    g_P: float = 1.5
    schedules: ScheduleSet = field(default_factory=ScheduleSet)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    noise: NoiseModel = field(default_factory=NoiseModel)
    initial_state: str = "neel"
    max_cycles: int = 60
    quiet_cycles_to_stop: int = 5
    n_trajectories: int = 30
    master_seed: int = 0
    sample_every: int = 10
    workers: int = 1
    benchmark: BenchmarkSettings = field(default_factory=BenchmarkSettings)
    noise_study: NoiseStudySettings = field(default_factory=NoiseStudySettings)

    def __post_init__(self):
        if self.max_cycles < 1:
            raise ConfigurationError("max_cycles must be >= 1")
        if self.n_trajectories < 1:
            raise ConfigurationError("n_trajectories must be >= 1")
        if self.quiet_cycles_to_stop < 1:
            raise ConfigurationError("quiet_cycles_to_stop must be >= 1")
        if self.sample_every < 1:
            raise ConfigurationError("sample_every must be >= 1")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigurationError("master_seed must be a 64-bit unsigned integer")
        if not (math.isfinite(self.J_P) and math.isfinite(self.g_P)):
            raise ConfigurationError("J_P and g_P must be finite")
        system_bits(self)  # validates initial_state
        if self.integrator.scheme != "strang_split":
            raise ConfigurationError("the protocol runs with integrator.scheme = 'strang_split'")


@dataclass
class TrajectoryRecord:
    """One stochastic run. ``sample_cycle[k]`` is the cycle a sample belongs to."""

    seed: int
    sample_times: list[float] = field(default_factory=list)
    energies: list[float] = field(default_factory=list)
    rel_energy_error: list[float] = field(default_factory=list)
    sample_cycle: list[int] = field(default_factory=list)
    cycle_boundaries: list[float] = field(default_factory=list)
    excitations_per_cycle: list[int] = field(default_factory=list)
    J_max_per_cycle: list[float] = field(default_factory=list)
    jumps: list[tuple[float, int, str]] = field(default_factory=list)
    terminated_by: str = ""

    @property
    def final_error(self) -> float:
        return self.rel_energy_error[-1]


@dataclass
class EnsembleSummary:
    """Mean relative error on a common grid; finished trajectories hold their last value."""

    times: np.ndarray
    mean_rel_error: np.ndarray
    final_errors: np.ndarray
    n_trajectories: int
    trajectories: list[TrajectoryRecord] = field(default_factory=list)
    cycle_length: float = 0.0
    label: str = ""

    @property
    def final_mean(self) -> float:
        return float(np.mean(self.final_errors))

    def value_at(self, t: float) -> float:
        return float(np.interp(t, self.times, self.mean_rel_error))

    def boundary_values(self) -> np.ndarray:
        """Mean error at t = 0, T, 2T, ... up to the end of the grid."""
        n = int(round(self.times[-1] / self.cycle_length)) if self.cycle_length else 0
        return np.array([self.value_at(k * self.cycle_length) for k in range(n + 1)])


def system_bits(cfg: ProtocolConfig) -> list[int]:
    """Bits of the system sites (0 = spin up) for ``cfg.initial_state``.

    ``"basis:<bits>"`` gives the bits site by site, ``'0'`` up, ``'1'`` down.
    """
    lat = cfg.lattice
    n = lat.n_sites
    spec = cfg.initial_state
    if spec == "neel":
        return [sum(lat.site_coords(i)) % 2 for i in range(n)]
    if spec == "all_up":
        return [0] * n
    if spec == "all_down":
        return [1] * n
    if spec.startswith("basis:"):
        bits = spec.split(":", 1)[1].strip()
        if len(bits) != n or set(bits) - {"0", "1"}:
            raise ConfigurationError(
                f"initial_state bitstring must have {n} characters of 0/1, got {bits!r}"
            )
        return [int(b) for b in bits]
    raise ConfigurationError(
        f"initial_state must be one of {INITIAL_STATES} or 'basis:<bits>', got {spec!r}"
    )


def model_terms(cfg: ProtocolConfig) -> HamiltonianTerms:
    return build_model(cfg.lattice, cfg.J_P, cfg.g_P)


@functools.lru_cache(maxsize=4)
def _plan(lattice: LatticeSpec, J_P: float, g_P: float) -> SplitPlan:
    return SplitPlan(build_model(lattice, J_P, g_P))


@functools.lru_cache(maxsize=64)
def _ground(lattice: LatticeSpec, J_P: float, g_P: float) -> float:
    return ground_energy(build_model(lattice, J_P, g_P))


def reference_energy(cfg: ProtocolConfig) -> float:
    """Exact ground energy E0 of the problem Hamiltonian."""
    return _ground(cfg.lattice, cfg.J_P, cfg.g_P)


def prepare_initial(cfg: ProtocolConfig) -> StateVector:
    """System in the configured product state, every bath qubit in its ground state."""
    terms = model_terms(cfg)
    bits = [0] * terms.n_qubits
    for site, b in enumerate(system_bits(cfg)):
        bits[2 * site] = b
        bits[2 * site + 1] = 1
    return StateVector.basis(bits, terms.labels())


def _rel_error(energy: float, e0: float) -> float:
    if e0 == 0:
        raise DomainError("ground energy is zero; relative error undefined")
    return abs(energy - e0) / abs(e0)


def measure_and_reset_bath(
    state: StateVector, bath_positions, rng: np.random.Generator
) -> tuple[StateVector, int]:
    """Measure bath qubits in ascending order, reset excited ones; count excitations."""
    excitations = 0
    for q in bath_positions:
        outcome, state = measure_qubit_z(state, q, rng)
        if outcome == BATH_EXCITED:
            excitations += 1
            state = reset_bath_qubit(state, q, outcome)
    return state, excitations


class _Cycle:
    """Shared machinery of run_cycle and run_trajectory."""

    def __init__(self, cfg: ProtocolConfig, plan: SplitPlan):
        self.cfg = cfg
        self.plan = plan
        self.terms = plan.terms
        self.n_steps, self.h = n_steps_for(cfg.schedules.T, cfg.integrator.dt)
        labels = self.terms.labels()
        roles = ("system",) if cfg.noise.targets == "system_only" else ("system", "bath")
        self.noise_targets = sorted(p for (r, _), p in labels.items() if r in roles)
        self.jump_ops = [
            [PauliString({q: p}).masks() for p in PAULIS] for q in self.noise_targets
        ]

    def run(self, state: StateVector, cycle: int, rng, noise_rng, t_offset=0.0, on_sample=None):
        cfg = self.cfg
        s = cfg.schedules
        J_max = s.max_coupling(cycle)
        check_stability(self.terms, s, J_max, cfg.integrator.dt)
        re = state.amplitudes.real.copy()
        im = state.amplitudes.imag.copy()
        n, h = self.n_steps, self.h
        jump_steps = np.zeros(0, dtype=np.int64)
        jumps = []
        if cfg.noise.active:
            occurs, which = draw_jumps(cfg.noise, h, len(self.noise_targets), noise_rng, n)
            jump_steps = np.flatnonzero(occurs.any(axis=1))
        ji = 0
        k = 0
        while k < n:
            stop = min(n, (k // cfg.sample_every + 1) * cfg.sample_every)
            if ji < len(jump_steps):
                stop = min(stop, int(jump_steps[ji]) + 1)
            self.plan.advance(re, im, k * h, h, stop - k, s, J_max)
            if ji < len(jump_steps) and jump_steps[ji] == stop - 1:
                row = stop - 1
                for i in np.flatnonzero(occurs[row]):
                    xm, zm, ph = self.jump_ops[i][which[row, i]]
                    _kernels.apply_pauli_split(re, im, xm, zm, ph.real, ph.imag)
                    jumps.append((t_offset + stop * h, self.noise_targets[i], PAULIS[which[row, i]]))
                ji += 1
            k = stop
            if on_sample is not None and k % cfg.sample_every == 0 and k < n:
                on_sample(t_offset + k * h, self.plan.problem_energy(re, im))
        out = StateVector(state.n_qubits, re + 1j * im, dict(state.qubit_labels))
        out.amplitudes /= np.linalg.norm(out.amplitudes)
        out, excitations = measure_and_reset_bath(out, self.terms.bath_positions, rng)
        return out, excitations, jumps


def run_cycle(
    state: StateVector,
    cfg: ProtocolConfig,
    cycle_index: int,
    rng: np.random.Generator,
    noise_rng: np.random.Generator | None = None,
) -> tuple[StateVector, int]:
    """One scan [0, T] at ``J_max = J0 v**cycle_index``, then measure and reset the bath."""
    cyc = _Cycle(cfg, _plan(cfg.lattice, cfg.J_P, cfg.g_P))
    out, excitations, _ = cyc.run(state, cycle_index, rng, noise_rng if noise_rng is not None else rng)
    return out, excitations


def _split_seed(seed: int):
    meas, noise = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(meas), np.random.default_rng(noise)


def run_trajectory(cfg: ProtocolConfig, seed: int, e0: float | None = None) -> TrajectoryRecord:
    """Cycle until ``quiet_cycles_to_stop`` consecutive quiet cycles or ``max_cycles``."""
    plan = _plan(cfg.lattice, cfg.J_P, cfg.g_P)
    e0 = reference_energy(cfg) if e0 is None else e0
    rng, noise_rng = _split_seed(seed)
    rec = TrajectoryRecord(seed=int(seed))
    cyc = _Cycle(cfg, plan)
    T = cfg.schedules.T

    state = prepare_initial(cfg)
    cycle = 0

    def sample(t, energy):
        rec.sample_times.append(float(t))
        rec.energies.append(float(energy))
        rec.rel_energy_error.append(_rel_error(energy, e0))
        rec.sample_cycle.append(cycle)

    sample(0.0, plan.problem_energy(state.amplitudes.real.copy(), state.amplitudes.imag.copy()))
    quiet = 0
    for cycle in range(cfg.max_cycles):
        J_max = cfg.schedules.max_coupling(cycle)
        state, excitations, jumps = cyc.run(state, cycle, rng, noise_rng, cycle * T, sample)
        rec.jumps.extend(jumps)
        rec.excitations_per_cycle.append(excitations)
        rec.J_max_per_cycle.append(J_max)
        rec.cycle_boundaries.append((cycle + 1) * T)
        amps = state.amplitudes
        sample((cycle + 1) * T, plan.problem_energy(amps.real.copy(), amps.imag.copy()))
        quiet = quiet + 1 if excitations == 0 else 0
        if quiet >= cfg.quiet_cycles_to_stop:
            rec.terminated_by = "quiet_stop"
            break
    else:
        rec.terminated_by = "cycle_budget"
    log.debug(
        "trajectory seed=%d cycles=%d final=%.4g (%s)",
        seed, len(rec.cycle_boundaries), rec.final_error, rec.terminated_by,
    )
    return rec


def trajectory_seeds(master_seed: int, n: int) -> list[int]:
    """Per-trajectory 64-bit seeds, a pure function of ``(master_seed, index)``."""
    return [
        int(np.random.SeedSequence(master_seed, spawn_key=(i,)).generate_state(1, np.uint64)[0])
        for i in range(n)
    ]


def _trajectory_task(args):
    cfg, seed, e0 = args
    return run_trajectory(cfg, seed, e0)


def summarize(records: list[TrajectoryRecord], cycle_length: float, label: str = "") -> EnsembleSummary:
    longest = max(records, key=lambda r: len(r.sample_times))
    grid = np.asarray(longest.sample_times)
    curves = [np.interp(grid, r.sample_times, r.rel_energy_error) for r in records]
    return EnsembleSummary(
        times=grid,
        mean_rel_error=np.mean(curves, axis=0),
        final_errors=np.array([r.final_error for r in records]),
        n_trajectories=len(records),
        trajectories=records,
        cycle_length=cycle_length,
        label=label,
    )


def run_ensemble(cfg: ProtocolConfig, e0: float | None = None, label: str = "") -> EnsembleSummary:
    """Run ``n_trajectories`` trajectories with seeds derived from ``master_seed``.

    The result does not depend on ``cfg.workers``: seeds are fixed per index
    and the reduction happens after all trajectories finish, in index order.
    """
    e0 = reference_energy(cfg) if e0 is None else e0
    seeds = trajectory_seeds(cfg.master_seed, cfg.n_trajectories)
    tasks = [(cfg, s, e0) for s in seeds]
    if cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_trajectory_task, tasks))
    else:
        records = [_trajectory_task(t) for t in tasks]
    return summarize(records, cfg.schedules.T, label)


def average_summaries(summaries: list[EnsembleSummary], label: str = "") -> EnsembleSummary:
    """Instance-average of ensemble curves on the longest common grid."""
    longest = max(summaries, key=lambda s: len(s.times))
    grid = longest.times
    curves = [np.interp(grid, s.times, s.mean_rel_error) for s in summaries]
    return EnsembleSummary(
        times=grid,
        mean_rel_error=np.mean(curves, axis=0),
        final_errors=np.concatenate([s.final_errors for s in summaries]),
        n_trajectories=sum(s.n_trajectories for s in summaries),
        trajectories=[r for s in summaries for r in s.trajectories],
        cycle_length=longest.cycle_length,
        label=label,
    )


def variant_schedule(schedules: ScheduleSet, variant: str, small_J_factor: float = 0.1) -> ScheduleSet:
    """Coupling policy of a benchmark variant."""
    if variant == "annealed":
        if schedules.v >= 1:
            raise ConfigurationError("the annealed variant needs an annealing rate v < 1")
        return schedules
    if variant == "fixed_large_J":
        return replace(schedules, v=1.0)
    if variant == "fixed_small_J":
        return replace(schedules, v=1.0, J0=schedules.J0 * small_J_factor)
    raise ConfigurationError(f"unknown variant {variant!r}")


def benchmark_instances(master_seed: int, low: float, high: float, n: int):
    """``[(g_P, instance_seed), ...]`` drawn deterministically from ``master_seed``."""
    root = np.random.SeedSequence(master_seed, spawn_key=(0xBE,))
    g = np.random.default_rng(root).uniform(low, high, n)
    seeds = [
        int(np.random.SeedSequence(master_seed, spawn_key=(0xBE, i)).generate_state(1, np.uint64)[0])
        for i in range(n)
    ]
    return list(zip(g.tolist(), seeds))


def run_benchmark(
    base_cfg: ProtocolConfig,
    g_P_low: float | None = None,
    g_P_high: float | None = None,
    n_instances: int | None = None,
    variants=None,
) -> dict[str, EnsembleSummary]:
    """Compare coupling policies on random ``g_P`` instances; returns variant -> summary."""
    bs = base_cfg.benchmark
    low = bs.g_P_low if g_P_low is None else g_P_low
    high = bs.g_P_high if g_P_high is None else g_P_high
    n = bs.n_instances if n_instances is None else n_instances
    variants = tuple(bs.variants if variants is None else variants)
    if not low < high:
        raise ConfigurationError("g_P_low must be < g_P_high")
    instances = benchmark_instances(base_cfg.master_seed, low, high, n)
    per_variant = {v: [] for v in variants}
    for i, (g, seed) in enumerate(instances):
        cfg_i = replace(base_cfg, g_P=g, master_seed=seed)
        e0 = reference_energy(cfg_i)
        for v in variants:
            sched = variant_schedule(base_cfg.schedules, v, bs.small_J_factor)
            summary = run_ensemble(replace(cfg_i, schedules=sched), e0, label=v)
            log.info("instance %d g_P=%.3f %s final=%.4g", i, g, v, summary.final_mean)
            per_variant[v].append(summary)
    out = {v: average_summaries(s, label=v) for v, s in per_variant.items()}
    for s in out.values():
        s.instances = instances
    return out


def run_noise_study(base_cfg: ProtocolConfig, kinds=None, rate: float | None = None) -> dict[str, EnsembleSummary]:
    """Ensemble per noise kind at equal rate with paired random streams."""
    ns = base_cfg.noise_study
    kinds = tuple(ns.kinds if kinds is None else kinds)
    rate = ns.rate if rate is None else rate
    e0 = reference_energy(base_cfg)
    out = {}
    for k in kinds:
        cfg_k = replace(base_cfg, noise=NoiseModel(k, rate, base_cfg.noise.targets))
        out[k] = run_ensemble(cfg_k, e0, label=k)
        log.info("noise %s final=%.4g", k, out[k].final_mean)
    return out
