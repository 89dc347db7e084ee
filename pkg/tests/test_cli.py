import json
import os

import numpy as np
import pytest

from impulsive_rnn.cli import main
from impulsive_rnn.io import (bundled_names, load_document, parse_document, read_csv,
                              trajectory_csv)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_doc(tmp_path, data, name="doc.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_bundled_examples_present():
    assert bundled_names() == ["example1", "example2", "example3"]


class TestCheck:
    def test_example1_passes(self, capsys):
        code, out, _ = run(capsys, "check", "example1", "--require", "all")
        assert code == 0
        rep = json.loads(out)
        values = {e["name"]: e["value"] for e in rep["entries"]}
        assert abs(values["H3"] - 0.9032) < 5e-4
        assert abs(values["H4"] - 0.8963) < 5e-4
        assert abs(values["H5"] - 0.4308) < 5e-4
        assert abs(rep["constants"]["alpha1"] - 0.1766) < 5e-4

    def test_example2_fails(self, capsys):
        code, out, _ = run(capsys, "check", "example2")
        assert code == 2
        rep = json.loads(out)
        h3 = next(e for e in rep["entries"] if e["name"] == "H3")
        assert not h3["passed"]

    def test_missing_field(self, capsys, tmp_path):
        data = load_document("example1").to_dict()
        del data["network"]["a"]
        code, _, err = run(capsys, "check", write_doc(tmp_path, data))
        assert code == 1
        assert "/network" in err and "'a'" in err

    def test_unknown_key(self, capsys, tmp_path):
        data = load_document("example1").to_dict()
        data["network"]["extra"] = 1
        code, _, err = run(capsys, "check", write_doc(tmp_path, data))
        assert code == 1 and "extra" in err

    def test_bad_type_location(self, capsys, tmp_path):
        data = load_document("example1").to_dict()
        data["network"]["B"][1][0] = "x"
        code, _, err = run(capsys, "check", write_doc(tmp_path, data))
        assert code == 1 and "/network/B/1/0" in err

    def test_invalid_json(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert run(capsys, "check", str(path))[0] == 1

    def test_structural_issue_is_input_error(self, capsys, tmp_path):
        data = load_document("example1").to_dict()
        data["time"]["tau"]["prefix"] = [0.0]
        code, _, err = run(capsys, "check", write_doc(tmp_path, data))
        assert code == 1 and "tau-theta-intersection" in err


class TestCommands:
    def test_equilibrium(self, capsys):
        code, out, _ = run(capsys, "equilibrium", "example3")
        assert code == 0
        rep = json.loads(out)
        assert rep["residual"] < 1e-10 and rep["in_Omega"]

    def test_simulate_csv(self, capsys, tmp_path):
        out_path = tmp_path / "traj.csv"
        code, out, _ = run(capsys, "simulate", "example1", "--t-end", "5", "--out", str(out_path))
        assert code == 0
        times, states, tags = read_csv(out_path.read_text())
        assert out_path.read_text().splitlines()[0] == "t,x1,x2,tag"
        left = times[np.array(tags) == "impulse-left"]
        right = times[np.array(tags) == "impulse-right"]
        np.testing.assert_array_equal(left, [0.5, 1.5, 2.5, 3.5, 4.5])
        np.testing.assert_array_equal(right, left)
        assert {1.0, 2.0, 3.0} <= set(times[np.array(tags) == "switch"])
        assert json.loads(out)["samples"] == len(times)
        assert not [p for p in os.listdir(tmp_path) if p.endswith(".tmp")]

    def test_simulate_stdout_deterministic(self, capsys):
        a = run(capsys, "simulate", "example2", "--t-end", "1", "--step", "0.01")[1]
        b = run(capsys, "simulate", "example2", "--t-end", "1", "--step", "0.01")[1]
        assert a == b and a.startswith("t,x1,x2,tag\n")

    def test_simulate_step_validated(self, capsys):
        assert run(capsys, "simulate", "example1", "--step", "0.5")[0] == 1

    def test_periodic(self, capsys, tmp_path):
        out_path = tmp_path / "phi.csv"
        code, out, _ = run(capsys, "periodic", "example1", "--out", str(out_path))
        assert code == 0
        rep = json.loads(out)
        assert rep["poincare_ok"] and rep["alpha1_observed"] <= 0.2
        times, _, tags = read_csv(out_path.read_text())
        assert times[0] == 0.0 and times[-1] == 1.0

    def test_periodic_without_omega(self, capsys, tmp_path):
        data = load_document("example1").to_dict()
        data["time"] = {"theta": {"prefix": [0.0, 1.0, 2.0, 3.0]}, "tau": {"prefix": [0.5, 1.5]}}
        code, _, err = run(capsys, "periodic", write_doc(tmp_path, data))
        assert code == 1 and "omega-required" in err

    def test_stability_periodic(self, capsys, tmp_path):
        out_path = tmp_path / "stab.json"
        code, out, _ = run(capsys, "stability", "example1", "--t-end", "10", "--out", str(out_path))
        assert code == 0
        rep = json.loads(out_path.read_text())
        assert rep["bound_violations"] == [] and rep["lambda_violations"] == []
        assert out == out_path.read_text()

    def test_stability_requires_lambda(self, capsys):
        code, _, err = run(capsys, "stability", "example2")
        assert code == 2 and "lambda-undefined" in err

    def test_numeric_failure_exit_3(self, capsys, tmp_path):
        data = load_document("example1").to_dict()
        data["impulses"]["maps"] = [[{"kind": "affine", "slope": 1e300, "offset": 0.0}] * 2]
        data["impulses"]["ell"] = 1e300
        with np.errstate(all="ignore"):
            code, _, err = run(capsys, "simulate", write_doc(tmp_path, data), "--t-end", "3")
        assert code == 3


class TestDocuments:
    @pytest.mark.parametrize("name", ["example1", "example2", "example3"])
    def test_round_trip(self, name):
        doc = load_document(name)
        again = parse_document(json.loads(doc.dumps()))
        assert again.dumps() == doc.dumps()
        np.testing.assert_array_equal(again.spec.B, doc.spec.B)
        assert again.imp == doc.imp and again.ts == doc.ts

    def test_full_float_precision(self):
        doc = load_document("example2")
        assert parse_document(json.loads(doc.dumps())).imp.ell == 1 / 3

    def test_csv_round_trip(self, ex1):
        from impulsive_rnn.integrator import simulate
        tr = simulate(ex1.spec, ex1.ts, ex1.imp, 0.0, [7.0, 7.0], 1.0)
        times, states, tags = read_csv(trajectory_csv(tr))
        np.testing.assert_array_equal(times, tr.times)
        np.testing.assert_array_equal(states, tr.states)
        assert tuple(tags) == tr.tags
