"""Command-line drivers: ``qcool run | spectrum | amplitude | benchmark | noise-study``.

Every CSV starts with a header row, numbers are written with 17 significant
digits and lines end in ``\\n``, so identical configs give identical bytes.
Exit codes: 0 success, 1 configuration or domain error, 2 I/O error,
3 capability limit.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

from .analysis import AmplitudeQuery, exact_spectrum, ramped_amplitude, static_amplitude, transition_table
from .config import config_to_dict, parse_config
from .errors import CapabilityError, ConfigurationError, DomainError
from .hamiltonian import build_tfim
from .protocol import EnsembleSummary, ProtocolConfig, run_benchmark, run_ensemble, run_noise_study

__all__ = ["main", "parse_config", "cmd_run", "cmd_spectrum", "cmd_amplitude", "cmd_benchmark", "cmd_noise_study"]

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_CAPABILITY = 0, 1, 2, 3

log = logging.getLogger("qcool")


def tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0+unknown"


def _fmt(x) -> str:
    if isinstance(x, (int, str)):
        return str(x)
    return format(float(x), ".17g")


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _ensemble_rows(summary: EnsembleSummary):
    return zip(summary.times, summary.mean_rel_error)


def _trajectory_rows(summary: EnsembleSummary):
    for k, rec in enumerate(summary.trajectories):
        for t, err, c in zip(rec.sample_times, rec.rel_energy_error, rec.sample_cycle):
            yield k, t, err, c


def _write_manifest(out: Path, cfg: ProtocolConfig, started: str, outputs: list[str], extra=None) -> None:
    manifest = {
        "tool": "qcool",
        "version": tool_version(),
        "master_seed": cfg.master_seed,
        "started": started,
        "finished": _now(),
        "outputs": outputs,
        "config": config_to_dict(cfg),
    }
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(cfg: ProtocolConfig, out_dir) -> int:
    """Ensemble of cooling trajectories -> trajectories.csv, ensemble.csv, manifest.json."""
    started = _now()
    out = _out_dir(out_dir)
    summary = run_ensemble(cfg)
    write_csv(out / "trajectories.csv", ["trajectory_id", "time", "rel_energy_error", "cycle_index"],
              _trajectory_rows(summary))
    write_csv(out / "ensemble.csv", ["time", "mean_rel_error"], _ensemble_rows(summary))
    _write_manifest(out, cfg, started, ["trajectories.csv", "ensemble.csv"],
                    {"final_mean_rel_error": summary.final_mean})
    log.info("final mean rel_energy_error %.6g over %d trajectories", summary.final_mean, summary.n_trajectories)
    return EXIT_OK


def cmd_spectrum(cfg: ProtocolConfig, out_dir, aggregate: str = "sum_abs") -> int:
    """Problem-Hamiltonian spectrum and coupling transition table."""
    started = _now()
    terms = build_tfim(cfg.lattice, cfg.J_P, cfg.g_P)
    table = transition_table(terms, aggregate=aggregate)
    vals, _ = exact_spectrum(terms)
    out = _out_dir(out_dir)
    write_csv(out / "spectrum.csv", ["index", "energy"], enumerate(vals))
    write_csv(out / "transitions.csv", ["i", "j", "E_i", "E_j", "element"], table.rows())
    _write_manifest(out, cfg, started, ["spectrum.csv", "transitions.csv"], {"aggregate": aggregate})
    return EXIT_OK


def cmd_amplitude(mode: str, H_elem: float, t: float, delta_E: float = 0.0, A: float = 0.0, B: float = 0.0) -> int:
    """Print ``real,imag,magnitude`` of a first-order transition amplitude."""
    q = AmplitudeQuery(H_elem=H_elem, t=t, delta_E=delta_E, A=A, B=B)
    if mode == "static":
        amp = static_amplitude(q)
    else:
        if A == 0:
            raise DomainError("ramped mode needs A != 0; use --mode static for a linear phase")
        amp = ramped_amplitude(q)
    sys.stdout.write(f"{_fmt(amp.real)},{_fmt(amp.imag)},{_fmt(abs(amp))}\n")
    return EXIT_OK


def cmd_benchmark(cfg: ProtocolConfig, out_dir) -> int:
    """Coupling-policy comparison on random ``g_P`` instances."""
    started = _now()
    out = _out_dir(out_dir)
    results = run_benchmark(cfg)
    files = []
    for variant, summary in results.items():
        name = f"ensemble_{variant}.csv"
        write_csv(out / name, ["time", "mean_rel_error"], _ensemble_rows(summary))
        files.append(name)
    write_csv(out / "comparison.csv", ["variant", "final_mean_rel_error"],
              ((v, s.final_mean) for v, s in results.items()))
    instances = next(iter(results.values())).instances
    write_csv(out / "instances.csv", ["instance", "g_P", "seed"], ((i, g, s) for i, (g, s) in enumerate(instances)))
    files += ["comparison.csv", "instances.csv"]
    _write_manifest(out, cfg, started, files)
    return EXIT_OK


def cmd_noise_study(cfg: ProtocolConfig, out_dir) -> int:
    """Per-kind ensembles at equal rate; ordering.csv ranks final errors."""
    started = _now()
    out = _out_dir(out_dir)
    results = run_noise_study(cfg)
    files = []
    for kind, summary in results.items():
        name = f"ensemble_{kind}.csv"
        write_csv(out / name, ["time", "mean_rel_error"], _ensemble_rows(summary))
        files.append(name)
    ranked = sorted(results.items(), key=lambda kv: kv[1].final_mean)
    write_csv(out / "ordering.csv", ["rank", "kind", "final_mean_rel_error"],
              ((r, k, s.final_mean) for r, (k, s) in enumerate(ranked)))
    files.append("ordering.csv")
    _write_manifest(out, cfg, started, files)
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qcool", description="Bath-assisted cooling simulator.")
    p.add_argument("--quiet", action="store_true", help="only report errors")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, help="TOML config or JSON run manifest")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, help="override run.master_seed")
        sp.add_argument("--trajectories", type=int, help="override run.n_trajectories")
        sp.add_argument("--workers", type=int, help="override run.workers")
        sp.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)
        return sp

    with_config("run", "cooling ensemble")
    sp = with_config("spectrum", "spectrum and transition table of H_P")
    sp.add_argument("--aggregate", choices=("sum_abs", "abs_sum"), default="sum_abs")
    with_config("benchmark", "annealed vs fixed coupling on random instances")
    with_config("noise-study", "cooling under X, Y and Z noise")

    amp = sub.add_parser("amplitude", help="first-order transition amplitude")
    amp.add_argument("--mode", choices=("static", "ramped"), default="static")
    amp.add_argument("--H", dest="H_elem", type=float, required=True, help="coupling matrix element")
    amp.add_argument("--t", type=float, required=True, help="evolution time")
    amp.add_argument("--delta-E", type=float, default=0.0, help="energy mismatch (static mode)")
    amp.add_argument("--A", type=float, default=0.0, help="quadratic phase coefficient (ramped mode)")
    amp.add_argument("--B", type=float, default=0.0, help="linear phase coefficient (ramped mode)")
    amp.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)
    return p


def _load(args) -> ProtocolConfig:
    cfg = parse_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.trajectories is not None:
        overrides["n_trajectories"] = args.trajectories
    if args.workers is not None:
        overrides["workers"] = args.workers
    return replace(cfg, **overrides) if overrides else cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "amplitude":
            return cmd_amplitude(args.mode, args.H_elem, args.t, args.delta_E, args.A, args.B)
        cfg = _load(args)
        if args.command == "run":
            return cmd_run(cfg, args.out)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, args.out, args.aggregate)
        if args.command == "benchmark":
            return cmd_benchmark(cfg, args.out)
        return cmd_noise_study(cfg, args.out)
    except (ConfigurationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapabilityError as exc:
        print(f"capability limit: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
