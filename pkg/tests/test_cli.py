import json
import subprocess
import sys

import numpy as np
import pytest

from wlab.cli import main
from wlab.dyadic import GridFunction, build_grid, write_function
from wlab.oscillation import SparseFamily


def run(argv):
    try:
        return main(argv)
    except SystemExit as exc:
        return exc.code


def test_char_step(capsys):
    assert run(["char", "--weight", "step:9", "--p", "2", "--grid", "1,4", "--origin", "0"]) == 0
    out = capsys.readouterr().out.split("\n")
    assert float(out[0].split()[1]) == pytest.approx(25 / 9)
    assert out[1] == "argmax 0.0 2.0"
    assert out[2] == "scope windowed"


def test_char_mixed_fw(capsys):
    assert run(["char", "--weight", "step:100", "--p", "4", "--alpha", "0.25", "--beta", "0.75",
                "--second", "fw", "--scope", "dyadic"]) == 0
    assert float(capsys.readouterr().out.split()[1]) > 1


@pytest.mark.parametrize("argv", [
    ["char", "--weight", "step:-1", "--p", "2"],
    ["char", "--weight", "step:9", "--p", "2", "--scope", "cosmic"],
    ["char", "--weight", "step:9"],
    ["char", "--weight", "step:9", "--p", "2", "--grid", "abc"],
    ["op-norm", "--op", "fourier", "--weight", "const:1", "--p", "2"],
    ["exp", "step"],
    [],
])
def test_bad_arguments_exit_1(argv):
    assert run(argv) == 1


def test_op_norm_identity(capsys):
    assert run(["op-norm", "--op", "identity", "--weight", "power:0.5", "--p", "3", "--grid", "3,6"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert float(out[0].split()[1]) == pytest.approx(1.0)


def test_decompose_roundtrip(tmp_path, capsys):
    g = build_grid(0, 0, 6)
    write_function(tmp_path / "f.txt", GridFunction(g, np.random.default_rng(0).standard_normal(64)))
    assert run(["decompose", "--input", str(tmp_path / "f.txt"), "--out", str(tmp_path / "fam.txt"), "--verify"]) == 0
    out = capsys.readouterr().out
    assert "family pass" in out and "pointwise pass" in out
    fam = SparseFamily.from_text((tmp_path / "fam.txt").read_text())
    assert fam.root == g.root
    assert run(["decompose", "--input", str(tmp_path / "missing.txt"), "--out", str(tmp_path / "x")]) == 1


def test_exp_step(tmp_path, capsys):
    cfg = tmp_path / "step.json"
    cfg.write_text(json.dumps({"p": 4, "r": 8, "sweep": [10, 100, 1000], "level": 8}))
    out = tmp_path / "step.csv"
    assert run(["exp", "step", "--config", str(cfg), "--out", str(out)]) == 0
    assert out.read_text().startswith("param,")
    assert "pass lacey_over_mixed_decreasing" in capsys.readouterr().err


def test_exp_failure_exits_2(tmp_path):
    # the Buckley ratio is under-resolved at this level, so the slope checks fail
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"operator": "max", "p": 3, "r": 6, "sweep": [0.4, 0.2, 0.1]}))
    assert run(["exp", "sharpness", "--config", str(cfg), "--out", str(tmp_path / "o.csv")]) == 2


def test_console_script():
    r = subprocess.run([sys.executable, "-m", "wlab.cli", "char", "--weight", "const:2", "--p", "3",
                        "--grid", "2,4"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("value 1.0")
