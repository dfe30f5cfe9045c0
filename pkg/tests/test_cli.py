import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from qnso import models
from qnso.cli import main
from qnso.cubic import save_matrix
from qnso.operator import apply, read_trajectory_csv


def run_cli(capsys, *args):
    code = main(list(args))
    out, err = capsys.readouterr()
    return code, out, err


def test_check_v2(capsys):
    code, out, _ = run_cli(capsys, "check", "--model", "v2", "--a", "2")
    doc = json.loads(out)
    assert code == 0
    assert doc["cond_iii"]["ok"] is False and doc["cond_iii_prime"]["ok"] is True
    assert doc["edge_necessity"]["passed"] is True


def test_check_negative_verdict(tmp_path, capsys):
    P = np.zeros((2, 2, 2))
    P[0, 0] = [1.5, -0.5]
    P[0, 1] = P[1, 0] = [0.5, 0.5]
    P[1, 1] = [0.0, 1.0]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"m": 2, "entries": P.tolist()}))
    code, out, _ = run_cli(capsys, "check", "--matrix", str(path))
    assert code == 2
    assert json.loads(out)["cond_ii"]["ok"] is False


def test_preserve_non_preserving_matrix(tmp_path, capsys):
    path = tmp_path / "r.json"
    save_matrix(models.non_preserving_example(), path)
    code, out, _ = run_cli(capsys, "preserve", "--matrix", str(path), "--samples", "2000")
    doc = json.loads(out)
    assert code == 2
    assert doc["preserved"] is False
    assert apply(models.non_preserving_example(), doc["counterexample"])[0] < -1e-12


def test_preserve_v2_ok(capsys):
    code, out, _ = run_cli(capsys, "preserve", "--model", "v2", "--a", "1", "--samples", "2000")
    assert code == 0 and json.loads(out)["preserved"] is True


def test_simulate_va(tmp_path, capsys):
    path = tmp_path / "t.csv"
    code, _, _ = run_cli(capsys, "simulate", "--model", "va", "--b", "-1", "--init", "0.3,0.7",
                         "--steps", "100", "--out", str(path))
    assert code == 0
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["n", "x1", "x2"] and len(rows) == 102
    traj = read_trajectory_csv(path)
    assert np.all(traj.points >= -1e-9)
    assert np.allclose(traj.points.sum(axis=1), 1.0)
    # 17 significant digits round-trip exactly
    assert traj.points[1, 1] == 4 * 0.7 * 0.3


def test_simulate_escape_exit_code(tmp_path, capsys):
    path = tmp_path / "r.json"
    save_matrix(models.non_preserving_example(), path)
    code, out, err = run_cli(capsys, "simulate", "--matrix", str(path), "--init", "0.5,0.25,0.25")
    assert code == 2 and "iterate 1 " in err and out == ""


def test_fixed_points_v3(capsys):
    code, out, _ = run_cli(capsys, "fixed-points", "--model", "v3", "--a", "1")
    recs = json.loads(out)
    assert code == 0 and len(recs) == 4
    pts = sorted(tuple(round(v, 10) for v in r["point"]) for r in recs)
    assert pts == sorted([(1.0, 0.0, 0.0), (round(1 / 3, 10), 0.0, round(2 / 3, 10)),
                          (round(1 / 3, 10), round(2 / 3, 10), 0.0),
                          (round(1 / 7, 10), round(2 / 7, 10), round(4 / 7, 10))])
    for r in recs:
        assert set(r) == {"point", "eigenvalues", "classification", "annotation", "isolated"}


def test_fixed_points_continuum_message(capsys):
    code, out, err = run_cli(capsys, "fixed-points", "--model", "v2", "--a", "2")
    assert code == 0
    assert "affine hull" in err
    assert any(not r["isolated"] for r in json.loads(out))


def test_bifurcation_csv(capsys):
    code, out, _ = run_cli(capsys, "bifurcation", "--model", "logistic", "--range", "2.8,3.8",
                           "--grid", "4", "--keep", "128")
    rows = list(csv.reader(out.splitlines()))
    assert code == 0
    assert rows[0] == ["param", "sample_index", "value", "period"]
    periods = {}
    for p, _, _, per in rows[1:]:
        periods.setdefault(float(p), per)
    assert list(periods.values())[0] == "1" and list(periods.values())[-1] == "aperiodic"


def test_lyapunov_logistic(capsys):
    code, out, _ = run_cli(capsys, "lyapunov", "--model", "logistic", "--mu", "4")
    doc = json.loads(out)
    assert code == 0
    assert doc["value"] == pytest.approx(np.log(2), rel=0.01)


def test_lyapunov_v2(capsys):
    code, out, _ = run_cli(capsys, "lyapunov", "--model", "v2", "--a", "2", "--iters", "20000",
                           "--init", "0.3,0.45,0.25")
    doc = json.loads(out)
    assert code == 0 and doc["value"] > 0 and doc["v2_criterion_chaotic"] is True


def test_invariants(capsys):
    code, out, _ = run_cli(capsys, "invariants", "--model", "v3", "--a", "1.5", "--samples", "200")
    doc = json.loads(out)
    assert code == 0
    assert [d["label"] for d in doc] == ["M1", "M2", "M3", "M4", "M5"]
    assert all(d["passed"] for d in doc)


def test_conjecture(capsys):
    code, out, _ = run_cli(capsys, "conjecture", "--model", "v3", "--a", "1", "--trials", "5",
                           "--steps", "200")
    doc = json.loads(out)
    assert code == 0
    assert {"a", "trials", "steps", "tol", "fraction_converged", "max_final_distance"} <= set(doc)


@pytest.mark.parametrize("args, needle", [
    (["check"], "exactly one"),
    (["check", "--model", "v2", "--a", "2", "--matrix", "x.json"], "exactly one"),
    (["check", "--model", "v3", "--a", "3"], "open interval"),
    (["check", "--model", "v3"], "--a"),
    (["check", "--matrix", "/nonexistent/p.json"], "not found"),
    (["simulate", "--model", "v3", "--a", "1", "--init", "0.5,0.5"], "--init"),
    (["simulate", "--model", "v3", "--a", "1", "--init", "0.5,0.6,0.1"], "simplex"),
    (["invariants", "--model", "va", "--b", "-0.5"], "v2 or v3"),
    (["lyapunov", "--model", "logistic", "--mu", "4", "--iters", "10"], "iters"),
])
def test_input_errors(capsys, args, needle):
    code, _, err = run_cli(capsys, *args)
    assert code == 1
    assert needle in err
    assert len(err.strip().splitlines()) == 1


def test_malformed_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{oops")
    code, _, err = run_cli(capsys, "check", "--matrix", str(path))
    assert code == 1 and err.startswith("error:")


def test_unknown_command(capsys):
    assert main(["frobnicate"]) == 1


@pytest.mark.parametrize("args", [
    ["check", "--model", "v3", "--a", "1.3"],
    ["preserve", "--model", "v2", "--a", "2", "--samples", "1500", "--seed", "4"],
    ["simulate", "--model", "v2", "--a", "2", "--steps", "300"],
    ["fixed-points", "--model", "v3", "--a", "2.2"],
    ["conjecture", "--model", "v3", "--a", "1", "--trials", "4", "--steps", "100"],
])
def test_byte_identical_reruns(capsys, args):
    _, first, _ = run_cli(capsys, *args)
    _, second, _ = run_cli(capsys, *args)
    assert first == second and first


def test_json_floats_round_trip(capsys):
    _, out, _ = run_cli(capsys, "fixed-points", "--model", "v3", "--a", "1")
    recs = json.loads(out)
    s4 = next(r for r in recs if r["classification"] == "non-hyperbolic" and r["annotation"] == "semi-attracting")
    assert json.loads(json.dumps(s4)) == s4
    assert abs(s4["point"][0] - 1 / 7) < 1e-12


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qnso", "check", "--model", "v2", "--a", "1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["cond_iii"]["ok"] is True
