import json
import subprocess
import sys

import pytest

from ri3bp.cli import run
from ri3bp.io import read_csv


def body(path):
    return [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]


def test_rho_is_deterministic(tmp_path):
    assert run(["rho", "--n", "17", "--out", str(tmp_path / "a")]) == 0
    assert run(["rho", "--n", "17", "--out", str(tmp_path / "b")]) == 0
    a, b = tmp_path / "a" / "rho.csv", tmp_path / "b" / "rho.csv"
    assert body(a) == body(b)
    head, cols = read_csv(a)
    assert head["tool"] == "ri3bp"
    assert cols["rho"].size == 17 and cols["rho"][0] == 0.0


def test_config_written_and_reloaded(tmp_path):
    out = tmp_path / "o"
    assert run(["parabola", "--G", "1.5", "--n", "5", "--out", str(out)]) == 0
    cfg = json.loads((out / "config.json").read_text())
    assert cfg["G"] == 1.5
    out2 = tmp_path / "o2"
    assert run(["parabola", "--config", str(out / "config.json"), "--n", "5",
                "--out", str(out2)]) == 0
    assert body(out / "parabola.csv") == body(out2 / "parabola.csv")


def test_classify_twobody_bounded(tmp_path, capsys):
    code = run(["classify", "--mode", "twobody", "--energy", "-0.5", "--G", "1",
                "--out", str(tmp_path)])
    assert code == 0
    assert capsys.readouterr().out.strip() == "B"
    assert json.loads((tmp_path / "classify.json").read_text())["result"]["label"] == "B"


def test_splitting_twobody(tmp_path):
    assert run(["splitting", "--twobody", "--window", "3", "6", "--n", "4",
                "--out", str(tmp_path)]) == 0
    _, cols = read_csv(tmp_path / "splitting.csv")
    assert abs(cols["delta"]).max() < 1e-8


def test_usage_errors(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(["nonsense"])
    assert exc.value.code == 1
    assert run(["classify", "--G", "5", "--r", "1", "--energy", "-0.5",
                "--out", str(tmp_path)]) == 1
    assert run(["rho", "--tol-int", "-1", "--out", str(tmp_path)]) == 1


def test_numerical_failure_exit_code(tmp_path, capsys):
    code = run(["homoclinic", "--window", "3.3", "3.5", "--r-far", "1e3", "--out", str(tmp_path)])
    assert code == 2
    assert "NO_SIGN_CHANGE" in capsys.readouterr().err


def test_console_script_entry(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "ri3bp.cli", "--version"], capture_output=True,
                          text=True)
    assert proc.returncode == 0 and "ri3bp" in proc.stdout
