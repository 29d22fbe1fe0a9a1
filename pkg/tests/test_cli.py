import json
import os
import subprocess
import sys

import pytest

from chiral_sta import cli, config, pulses
from chiral_sta.experiments import get_scenario
from chiral_sta.output import RunManifest


def run(*args, env=None):
    return subprocess.run([sys.executable, "-m", "chiral_sta.cli", *args], capture_output=True, text=True, env=env)


def test_simulate_fig4a(tmp_path):
    out = tmp_path / "o"
    proc = run("simulate", "--figure", "fig4a", "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    summary = json.loads((out / "summary.json").read_text())
    assert summary["D"] == pytest.approx(1.0, abs=1e-3)
    header = (out / "trajectory_L.csv").read_text().splitlines()[0]
    assert header == "t_us,P1,P2,P3"
    assert (out / "waveforms.csv").read_text().startswith("t_us,omega_P,omega_S,omega_Q\n")
    meta = json.loads((out / "trajectory_R.meta.json").read_text())
    assert {"scenario_hash", "max_step_us", "seed"} <= set(meta)
    manifest = RunManifest.load(out / "manifest.json")
    assert set(manifest.files) >= {"trajectory_L.csv", "trajectory_R.csv", "waveforms.csv", "summary.json"}
    assert manifest.verify() == []


def test_simulate_lab4_writes_four_populations(tmp_path):
    # coarse override keeps this black-box run short; accuracy is not the point here
    f = tmp_path / "s.yaml"
    f.write_text("figure: fig8-lab4\nsteps_per_period: 8\n")
    proc = run("simulate", str(f), "--out", str(tmp_path / "o"))
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "o" / "trajectory_L.csv").read_text().splitlines()[0] == "t_us,P1,P2,P3,P4"


def test_simulate_file_with_seed_and_dt(tmp_path):
    f = tmp_path / "s.yaml"
    f.write_text("figure: fig10rand\n")
    proc = run("simulate", str(f), "--out", str(tmp_path / "o"), "--seed", "7", "--dt", "5")
    assert proc.returncode == 0, proc.stderr
    s = config.load_scenario_file(tmp_path / "o" / "scenario.yaml")
    assert s.seed == 7 and s.dt == pytest.approx(0.005)


def test_simulate_reproducible(tmp_path):
    for tag in ("a", "b"):
        assert run("simulate", "--figure", "fig10awgn", "--out", str(tmp_path / tag)).returncode == 0
    for name in ("trajectory_L.csv", "trajectory_R.csv", "waveforms.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_empty_file_exit_2(tmp_path):
    f = tmp_path / "empty.yaml"
    f.write_text("")
    proc = run("simulate", str(f), "--out", str(tmp_path / "o"))
    assert proc.returncode == 2
    assert "line 1" in proc.stderr and "'model'" in proc.stderr


def test_bad_key_exit_2_with_line(tmp_path):
    f = tmp_path / "bad.yaml"
    f.write_text("figure: fig4a\nT_us: 1.0\nwidth: 3\n")
    proc = run("simulate", str(f), "--out", str(tmp_path / "o"))
    assert proc.returncode == 2 and "line 3" in proc.stderr


def test_unknown_figure_exit_2(tmp_path):
    proc = run("simulate", "--figure", "nope", "--out", str(tmp_path))
    assert proc.returncode == 2 and "valid names" in proc.stderr


def test_bad_flag_exit_2(tmp_path):
    assert run("simulate", "--figure", "fig4a", "--out", str(tmp_path), "--dt", "-1").returncode == 2
    assert run("simulate", "--figure", "fig4a", "--out", str(tmp_path), "--seed", "-3").returncode == 2
    assert run("frobnicate").returncode == 2


def test_integration_failure_exit_3(tmp_path):
    f = tmp_path / "s.yaml"
    f.write_text("figure: stirap-baseline\nomega0_rad_per_us: 5000\nmax_step_us: 0.04\n")
    proc = run("simulate", str(f), "--out", str(tmp_path / "o"))
    assert proc.returncode == 3
    assert config.load_scenario(f.read_text()).digest() in proc.stderr


def _sweep_file(tmp_path):
    f = tmp_path / "sweep.yaml"
    f.write_text("figure: fig9a\naxes:\n  field: [P, S]\n  amp_rel: [-0.1, 0.0, 0.1]\n")
    return f


def test_sweep_parallel_byte_identical(tmp_path):
    f = _sweep_file(tmp_path)
    assert run("sweep", str(f), "--out", str(tmp_path / "n1"), "--parallel", "1").returncode == 0
    assert run("sweep", str(f), "--out", str(tmp_path / "n3"), "--parallel", "3").returncode == 0
    a = (tmp_path / "n1" / "sweep.csv").read_bytes()
    b = (tmp_path / "n3" / "sweep.csv").read_bytes()
    assert a == b
    lines = a.decode().splitlines()
    assert lines[1] == "field,amp_rel,D,P3L,P3R,P1R,P2R,status,seed" and len(lines) == 8


def test_sweep_threads_env_fallback(tmp_path):
    f = _sweep_file(tmp_path)
    env = dict(os.environ, CHIRAL_STA_THREADS="2")
    assert run("sweep", str(f), "--out", str(tmp_path / "e"), env=env).returncode == 0
    env["CHIRAL_STA_THREADS"] = "0"
    assert run("sweep", str(f), "--out", str(tmp_path / "z"), env=env).returncode == 2


def test_sweep_all_points_failing_exit_3(tmp_path):
    f = tmp_path / "sweep.yaml"
    f.write_text("scenario: {figure: stirap-baseline, omega0_rad_per_us: 5000, max_step_us: 0.04}\naxes:\n  phi_q: [0.0, 1.0]\n")
    assert run("sweep", str(f), "--out", str(tmp_path / "o")).returncode == 3


def test_sweep_relaxation_figure(tmp_path):
    f = tmp_path / "sweep.yaml"
    f.write_text("figure: fig11\naxes:\n  tau2_us: [300]\n  tau3_us: [400]\n")
    assert run("sweep", str(f), "--out", str(tmp_path / "o")).returncode == 0
    row = (tmp_path / "o" / "sweep.csv").read_text().splitlines()[2].split(",")
    assert float(row[2]) > 0.99


def test_verify_passes():
    proc = run("verify")
    assert proc.returncode == 0
    assert "decoupling residual fig4a" in proc.stdout and "FAIL" not in proc.stdout


def test_verify_catches_corrupted_cp_sign(monkeypatch, capsys):
    original = pulses.cp_pulses

    def corrupted(t, p):
        omega_p, omega_s = original(t, p)
        return omega_p, -omega_s

    monkeypatch.setattr(pulses, "cp_pulses", corrupted)
    assert cli.main(["verify"]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_scenario_file_round_trip_via_cli(tmp_path):
    s = get_scenario("fig9b")
    f = tmp_path / "s.yaml"
    f.write_text(config.dump_scenario(s))
    assert run("simulate", str(f), "--out", str(tmp_path / "o")).returncode == 0
    assert config.load_scenario_file(tmp_path / "o" / "scenario.yaml") == s
