import csv
import json

import pytest

from oracles import quadratic_phase_quad
from qcool.cli import main

SMALL = """
[lattice]
geometry = "chain"
extent = {n}

[model]
J_P = 1.0
g_P = 1.5

[schedule]
T = 10.0

[integrator]
dt = 0.05

[run]
n_trajectories = {traj}
max_cycles = {cycles}
sample_every = 20

[benchmark]
g_P_low = 1.2
g_P_high = 2.0
n_instances = 2

[noise_study]
rate = 0.0
"""


def config(tmp_path, n=2, traj=2, cycles=2):
    p = tmp_path / "c.toml"
    p.write_text(SMALL.format(n=n, traj=traj, cycles=cycles))
    return str(p)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_run_writes_schema(tmp_path):
    out = tmp_path / "out"
    assert main(["--quiet", "run", "--config", config(tmp_path, traj=1, cycles=1), "--out", str(out)]) == 0
    traj = read_rows(out / "trajectories.csv")
    assert traj[0] == ["trajectory_id", "time", "rel_energy_error", "cycle_index"]
    assert {r[0] for r in traj[1:]} == {"0"}
    assert read_rows(out / "ensemble.csv")[0] == ["time", "mean_rel_error"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["run"]["n_trajectories"] == 1
    assert set(manifest["outputs"]) == {"trajectories.csv", "ensemble.csv"}


def test_manifest_reproduces_run(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["--quiet", "run", "--config", config(tmp_path), "--out", str(a), "--seed", "7"]) == 0
    assert main(["--quiet", "run", "--config", str(a / "manifest.json"), "--out", str(b)]) == 0
    for name in ("trajectories.csv", "ensemble.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_overrides(tmp_path):
    out = tmp_path / "o"
    main(["--quiet", "run", "--config", config(tmp_path), "--out", str(out), "--trajectories", "3", "--seed", "5"])
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["master_seed"] == 5 and manifest["config"]["run"]["n_trajectories"] == 3


def test_spectrum_rows(tmp_path):
    out = tmp_path / "s"
    assert main(["--quiet", "spectrum", "--config", config(tmp_path, n=4), "--out", str(out)]) == 0
    assert len(read_rows(out / "spectrum.csv")) == 17
    assert read_rows(out / "transitions.csv")[0] == ["i", "j", "E_i", "E_j", "element"]
    assert main(["--quiet", "spectrum", "--config", config(tmp_path, n=1), "--out", str(out)]) == 0
    assert len(read_rows(out / "spectrum.csv")) == 3


def test_spectrum_capability_exit(tmp_path, capsys):
    assert main(["--quiet", "spectrum", "--config", config(tmp_path, n=11), "--out", str(tmp_path)]) == 3
    assert "limit" in capsys.readouterr().err


def test_config_error_exit(tmp_path, capsys):
    p = tmp_path / "bad.toml"
    p.write_text(SMALL.format(n=2, traj=1, cycles=1) + "\n[extra]\nx = 1\n")
    assert main(["run", "--config", str(p), "--out", str(tmp_path)]) == 1
    assert "extra" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "none.toml"), "--out", str(tmp_path)]) == 1


def test_io_error_exit(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["--quiet", "run", "--config", config(tmp_path, traj=1, cycles=1), "--out", str(blocker / "sub")]) == 2


def amplitude(capsys, *args):
    code = main(["amplitude", *args])
    return code, capsys.readouterr().out


def test_amplitude_static_resonance(capsys):
    code, out = amplitude(capsys, "--mode", "static", "--delta-E", "0", "--H", "1", "--t", "2")
    re, im, mag = map(float, out.strip().split(","))
    assert code == 0 and mag == pytest.approx(2.0) and out.count("\n") == 1


def test_amplitude_zero_element(capsys):
    _, out = amplitude(capsys, "--delta-E", "1.3", "--H", "0", "--t", "2")
    assert float(out.strip().split(",")[2]) == 0.0


def test_amplitude_ramped_against_quadrature(capsys):
    _, out = amplitude(capsys, "--mode", "ramped", "--A", "1", "--B", "0", "--H", "1", "--t", "100")
    re, im, mag = map(float, out.strip().split(","))
    ref = -1j * quadratic_phase_quad(1.0, 0.0, 100.0)
    assert abs(complex(re, im) - ref) <= 1e-8 * abs(ref)


def test_amplitude_ramped_A_zero_is_config_error(capsys):
    assert main(["amplitude", "--mode", "ramped", "--A", "0", "--H", "1", "--t", "1"]) == 1
    assert "static" in capsys.readouterr().err


def test_benchmark_outputs(tmp_path):
    out = tmp_path / "b"
    assert main(["--quiet", "benchmark", "--config", config(tmp_path, traj=2, cycles=2), "--out", str(out)]) == 0
    rows = read_rows(out / "comparison.csv")
    assert rows[0] == ["variant", "final_mean_rel_error"]
    assert [r[0] for r in rows[1:]] == ["annealed", "fixed_large_J", "fixed_small_J"]
    for v in ("annealed", "fixed_large_J", "fixed_small_J"):
        assert (out / f"ensemble_{v}.csv").exists()


def test_noise_study_zero_rate_identical_curves(tmp_path):
    out = tmp_path / "n"
    assert main(["--quiet", "noise-study", "--config", config(tmp_path), "--out", str(out)]) == 0
    curves = [(out / f"ensemble_{k}.csv").read_bytes() for k in ("pauli_x", "pauli_y", "pauli_z")]
    assert curves[0] == curves[1] == curves[2]
    assert read_rows(out / "ordering.csv")[0] == ["rank", "kind", "final_mean_rel_error"]
