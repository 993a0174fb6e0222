import json
import os
import shutil
from pathlib import Path

import pytest

from properhyp.cli import main
from properhyp.problemfile import load_problem

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"
UPDATE = os.environ.get("UPDATE_GOLDEN") == "1"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


GOLDEN_CASES = {
    "check_wave.json": ("check", "wave.toml"),
    "check_variable.json": ("check", "variable.toml"),
    "check_nondecomposable.json": ("check", "nondecomposable.toml"),
    "solve_wave.csv": ("solve", "wave.toml"),
    "solve_variable.csv": ("solve", "variable.toml"),
    "sweep_double_root.json": ("sweep", "double_root.toml"),
    "sweep_wave.json": ("sweep", "wave.toml"),
    "symmetrizer_variable.json": ("symmetrizer", "variable.toml"),
}


def produce(capsys, tmp_path, name):
    cmd, src = GOLDEN_CASES[name]
    out_path = tmp_path / name
    run(capsys, cmd, DATA / src, "--seed", 0, "--out", out_path)
    return out_path.read_bytes()


@pytest.mark.parametrize("name", sorted(GOLDEN_CASES))
def test_golden(capsys, tmp_path, name):
    first = produce(capsys, tmp_path, name)
    assert produce(capsys, tmp_path, name) == first
    if UPDATE:
        GOLDEN.mkdir(exist_ok=True)
        (GOLDEN / name).write_bytes(first)
    assert (GOLDEN / name).read_bytes() == first


def test_check_wave(capsys):
    code, out, _ = run(capsys, "check", DATA / "wave.toml")
    rep = json.loads(out)
    assert code == 0 and rep["pass"]
    assert rep["M"] == pytest.approx(0.5)


def test_check_nondecomposable_fails_near_origin(capsys):
    code, out, _ = run(capsys, "check", DATA / "nondecomposable.toml")
    rep = json.loads(out)
    assert code == 1 and not rep["pass"] and rep["hyperbolic"] and rep["co_bounded"]
    bad = [p for p in rep["proper"] if not p["pass"]]
    assert [p["d"] for p in bad] == [3]
    assert bad[0]["fail_point"][1] == 0.0


def test_malformed_formula(capsys, tmp_path):
    p = write(tmp_path, "bad.toml", 'm = 2\na = ["0", "-(1+x"]\n')
    code, _, err = run(capsys, "check", p)
    assert code == 2 and "offset" in err


def test_validation_errors(capsys, tmp_path):
    cases = [
        'm = 2\na = ["0"]\n',
        'm = 2\na = ["0", "-1"]\nbogus = 1\n',
        'm = 2\na = ["0", "-1"]\n[grid]\ndx = -1\n',
        'm = 2\na = ["0", "t"]\n',
        "m = \n",
    ]
    for i, text in enumerate(cases):
        code, _, err = run(capsys, "check", write(tmp_path, f"v{i}.toml", text))
        assert code == 2, text
        assert err.startswith("error:")
    code, _, _ = run(capsys, "check", tmp_path / "missing.toml")
    assert code == 2
    code, _, _ = run(capsys, "check", DATA / "wave.toml", "--grid", 1)
    assert code == 2


def test_cfl_violation_exit_2(capsys, tmp_path):
    text = (DATA / "wave.toml").read_text().replace("dx = 0.04", "dx = 0.04\ncfl = 0.95")
    code, out, err = run(capsys, "solve", write(tmp_path, "cfl.toml", text))
    assert code == 2 and out == "" and "CFL" in err
    text = (DATA / "wave.toml").read_text().replace("dx = 0.04", "dx = 0.04\ndt = 0.05")
    code, out, _ = run(capsys, "solve", write(tmp_path, "dt.toml", text))
    assert code == 2 and out == ""


def test_solve_zero_data(capsys, tmp_path):
    p = write(tmp_path, "zero.toml", 'm = 2\na = ["0", "-1"]\n[cone]\nT = 0.5\n[grid]\ndx = 0.05\n')
    code, out, err = run(capsys, "solve", p)
    assert code == 0
    rows = [line.split(",") for line in out.splitlines()[1:]]
    assert rows and all(float(v) == 0.0 for row in rows for v in row[1:5])
    assert json.loads(err)["C_emp"] == 0.0


def test_solve_wave_summary(capsys, tmp_path):
    out_csv = tmp_path / "trace.csv"
    code, out, _ = run(capsys, "solve", DATA / "wave.toml", "--out", out_csv)
    summary = json.loads(out)
    assert code == 0 and summary["pass"]
    header = out_csv.read_text().splitlines()[0]
    assert header == "t,energy,forcing_norm,dt_norm_0,dt_norm_1,cone_lo,cone_hi"
    energy = [float(l.split(",")[1]) for l in out_csv.read_text().splitlines()[1:]]
    assert max(energy) <= energy[0] * (1 + 1e-9)


def test_solve_refuses_failing_problem(capsys, tmp_path):
    code, out, err = run(capsys, "solve", DATA / "nondecomposable.toml", "--no-refine")
    assert code == 1 and out == "" and "--force" in err


def test_solve_non_finite(capsys, tmp_path):
    text = 'm = 2\na = ["0", "-1"]\nr = [["0"], ["1e200", "0"]]\nphi = ["0", "1"]\n[cone]\nT = 0.5\n[grid]\ndx = 0.05\n'
    code, _, err = run(capsys, "solve", write(tmp_path, "blow.toml", text), "--force", "--no-refine")
    assert code == 1 and "step" in err


def test_sweep_reports(capsys, tmp_path):
    code, out, _ = run(capsys, "sweep", DATA / "double_root.toml")
    rep = json.loads(out)
    assert code == 0
    d = [e["distance_prev"] for e in rep["entries"][1:]]
    assert d[1] < d[0]
    text = (DATA / "double_root.toml").read_text().replace("[0.1, 0.05, 0.025]", "[0.1]")
    code, out, _ = run(capsys, "sweep", write(tmp_path, "one.toml", text))
    rep = json.loads(out)
    assert code == 0 and len(rep["entries"]) == 1 and "distance_prev" not in rep["entries"][0]
    text = (DATA / "double_root.toml").read_text().split("[sweep]")[0]
    code, _, _ = run(capsys, "sweep", write(tmp_path, "none.toml", text))
    assert code == 2


def test_seed_changes_only_random_estimates(capsys, tmp_path):
    a = produce(capsys, tmp_path, "symmetrizer_variable.json")
    run(capsys, "symmetrizer", DATA / "variable.toml", "--seed", 7, "--out", tmp_path / "s7.json")
    b = json.loads((tmp_path / "s7.json").read_text())
    a = json.loads(a)
    assert a["samples"] == b["samples"]


def test_l1_output_reloads(capsys, tmp_path):
    code, out, _ = run(capsys, "l1", DATA / "variable.toml")
    assert code == 0
    doc = json.loads(out)
    path = write(tmp_path, "derived.json", out)
    problem, settings = load_problem(path)
    assert problem.m == 2 and len(settings.corrections) == 2
    # P = tau^2 - x^2(1 + x^2/4): the xi coefficient of R_1 gains -dP/dx / xi = 2x + x^3
    assert problem.r[1][1](0.0, 0.5) == pytest.approx(2 * 0.5 + 0.5**3)
    code, _, _ = run(capsys, "check", path)
    assert code in (0, 1)
    assert doc["cone"]["T"] == 0.5
