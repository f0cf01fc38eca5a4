import json
import subprocess
import sys

import pytest

from patternfront.cli import main
from patternfront.io import read_csv


def run(tmp_path, *args, out="out"):
    return main(["--out", str(tmp_path / out), *args])


def test_periodic_outputs(tmp_path):
    assert run(tmp_path, "periodic") == 0
    out = tmp_path / "out"
    digest, rows = read_csv(out / "periodic.csv")
    manifest = json.loads((out / "manifest_periodic.json").read_text())
    assert digest == manifest["digest"]
    assert len(rows) == 256 and set(rows[0]) == {"x", "u", "v"}
    assert manifest["params"]["eps"] == 0.1


def test_outputs_are_deterministic(tmp_path):
    for sub in (["spectrum", "--n-max", "6"], ["reduced", "--gamma", "0,1"], ["simulate", "--t-end", "1"]):
        assert run(tmp_path, *sub, out="a") == 0
        assert run(tmp_path, *sub, out="b") == 0
    csvs = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    assert csvs
    for name in csvs:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_threads_do_not_change_results(tmp_path):
    assert run(tmp_path, "reduced", "--gamma", "0,0.5,1", out="a") == 0
    assert run(tmp_path, "reduced", "--gamma", "0,0.5,1", "--threads", "3", out="b") == 0
    for name in ("reduced_gamma0.5.csv", "reduced_gamma1.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seeded_noise_is_reproducible(tmp_path):
    args = ("simulate", "--t-end", "1", "--noise", "1e-3", "--seed", "5")
    assert run(tmp_path, *args, out="a") == 0
    assert run(tmp_path, *args, out="b") == 0
    assert (tmp_path / "a" / "simulate_final.csv").read_bytes() == (tmp_path / "b" / "simulate_final.csv").read_bytes()


def test_env_overrides_out(tmp_path, monkeypatch):
    monkeypatch.setenv("PATTERNFRONT_OUT", str(tmp_path / "env"))
    assert run(tmp_path, "periodic") == 0
    assert (tmp_path / "env" / "periodic.csv").exists()
    assert not (tmp_path / "out").exists()


def test_precondition_exit_codes(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text("alpha0 = 3.0\nc0 = 4.0\ngamma = 0.0\neps = 0.1\n")
    assert run(tmp_path, "--config", str(cfg), "reduced") == 2
    err = capsys.readouterr().err.strip()
    assert err.startswith("error:") and "\n" not in err

    cfg.write_text("alpha0 = 3.0\nc0 = = 7\n")
    assert run(tmp_path, "--config", str(cfg), "periodic") == 2
    assert "line 2" in capsys.readouterr().err

    cfg.write_text("alpha0 = -3.0\nc0 = 7.0\ngamma = 0.0\neps = 0.1\n")
    assert run(tmp_path, "--config", str(cfg), "periodic") == 2
    assert "alpha0" in capsys.readouterr().err


def test_numerical_failure_exit_code(tmp_path):
    # too few modes to resolve the gap for the classification
    assert run(tmp_path, "spectrum", "--n-max", "1") == 3
    summary = json.loads((tmp_path / "out" / "gap_summary.json").read_text())
    assert summary


def test_validate_passes(tmp_path, capsys):
    assert run(tmp_path, "validate") == 0
    assert "FAIL" not in capsys.readouterr().out


def test_console_script(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "patternfront.cli", "--out", str(tmp_path), "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "patternfront" in proc.stdout
