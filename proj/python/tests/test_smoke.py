import json
import os
import pathlib
import subprocess

import numpy as np
import pytest

import cfa

SCHEMAS = pathlib.Path(__file__).resolve().parents[2] / "schemas"
EXAMPLE = np.array([[1.0, 0.5], [0.5, 1.0]])


def test_solve_running_example():
    res = cfa.solve(EXAMPLE, 1)
    assert res["objective"] == pytest.approx(0.0, abs=1e-6)
    assert np.all(res["phi"] >= -1e-9)
    resid = EXAMPLE - np.diag(res["phi"])
    assert np.linalg.eigvalsh(resid).min() >= -1e-8
    values = [t["value"] for t in res["trace"]]
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))


def test_objective_and_bounds():
    assert cfa.objective(EXAMPLE, 1, np.zeros(2)) == pytest.approx(0.5)
    u = cfa.compute_u(EXAMPLE)
    assert u == pytest.approx([0.75, 0.75])
    assert cfa.weyl_lower_bound(EXAMPLE, u, 1) <= 1e-12


def test_certify_small_instance():
    g = cfa.generate("A1(2/8)", seed=1)
    rep = cfa.certify(g["sigma"], 1, tol=0.1)
    assert rep["termination"] == "gap_closed"
    assert rep["z_lb"] <= rep["z_f"] + 1e-12
    assert rep["gap"] <= 0.1


def test_mtfa_and_baseline():
    g = cfa.generate("A1(3/30)", seed=0)
    m = cfa.mtfa(g["sigma"])
    assert np.linalg.eigvalsh(g["sigma"] - np.diag(m["phi"])).min() >= -1e-7
    pc = cfa.pc_baseline(g["sigma"], 2)
    assert pc["theta"].shape == (30, 30)
    met = cfa.metrics(g["sigma"], g["theta"], g["phi"], m["phi"], m["theta"], 3)
    assert set(met) == {"error_phi", "error_theta", "explained_variance", "lambda_min"}


def test_exceptions():
    with pytest.raises(cfa.InputError):
        cfa.solve(EXAMPLE, 5)
    with pytest.raises(ValueError):
        cfa.solve(np.ones((2, 3)), 1)
    with pytest.raises(cfa.NotPSDError):
        cfa.solve(np.array([[1.0, 2.0], [2.0, 1.0]]), 1)
    assert issubclass(cfa.NotPSDError, cfa.CfaError)


@pytest.mark.skipif("CFA_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_reports_match_schemas(tmp_path):
    jsonschema = pytest.importorskip("jsonschema")
    cli = os.environ["CFA_CLI"]
    matrix = tmp_path / "sigma.csv"
    subprocess.run([cli, "datagen", "--instance", "A1(2/8)", "--seed", "3", "-o", str(matrix)],
                   check=True)
    truth = tmp_path / "sigma.truth.json"
    assert truth.exists()
    solve = subprocess.run([cli, "solve", "-i", str(matrix), "-r", "1", "--truth", str(truth)],
                           check=True, capture_output=True, text=True)
    report = json.loads(solve.stdout)
    jsonschema.validate(report, json.loads((SCHEMAS / "solve_report.schema.json").read_text()))
    assert "metrics" in report
    cert = subprocess.run([cli, "certify", "-i", str(matrix), "-r", "1"],
                          check=True, capture_output=True, text=True)
    jsonschema.validate(json.loads(cert.stdout),
                        json.loads((SCHEMAS / "certify_report.schema.json").read_text()))
