"""End-to-end CLI tests via main(argv)."""

import csv
import json
from fractions import Fraction

import pytest

from smlkit import ParameterSpace, RRMechanism, enumerate_params
from smlkit.cli import main

CSV_TEXT = """color,shape
red,circle
red,square
blue,circle
blue,circle
red,circle
blue,square
"""


@pytest.fixture
def csv_path(tmp_path):
    p = tmp_path / "data.csv"
    p.write_text(CSV_TEXT)
    return str(p)


@pytest.fixture
def rr_policy_path(tmp_path):
    sp = ParameterSpace(categories=(0, 1), tau=2)
    pol = RRMechanism(sp, weight=Fraction(3)).policy()
    p = tmp_path / "policy.json"
    p.write_text(pol.dumps())
    return str(p)


@pytest.fixture
def det_policy_path(tmp_path):
    inputs = enumerate_params(2, 2)
    obj = {
        "inputs": [p.to_json() for p in inputs],
        "outputs": [p.to_json() for p in inputs[:2]],
        "rows": [["1", "0"], ["0", "1"], ["0", "1"]],
    }
    p = tmp_path / "det_policy.json"
    p.write_text(json.dumps(obj))
    return str(p)


@pytest.fixture
def secret_path(tmp_path):
    p = tmp_path / "secret.json"
    p.write_text(json.dumps({"kind": "fraction", "category": 0}))
    return str(p)


def run_json(capsys, argv):
    rc = main(argv)
    out = capsys.readouterr().out
    return rc, json.loads(out)


class TestIngestCommand:
    def test_basic(self, capsys, csv_path):
        rc, out = run_json(capsys, ["ingest", "--csv", csv_path])
        assert rc == 0
        assert out["n"] == 6
        assert out["scale"]["tau"] == 6
        assert len(out["categories"]) == 4
        assert "manifest" in out
        assert out["manifest"]["seed"] == 0

    def test_manifest_hash_tracks_config(self, capsys, csv_path):
        _, a = run_json(capsys, ["ingest", "--csv", csv_path])
        _, b = run_json(capsys, ["--seed", "5", "ingest", "--csv", csv_path])
        assert a["manifest"]["config_hash"] != b["manifest"]["config_hash"]
        assert b["manifest"]["seed"] == 5


class TestSmlCommand:
    def test_randomized_policy(self, capsys, rr_policy_path, secret_path):
        rc, out = run_json(
            capsys,
            ["sml", "--policy", rr_policy_path, "--secret", secret_path,
             "--bounds", "--ldp"],
        )
        assert rc == 0
        assert out["method"] == "bruteforce"
        assert out["sandwich"]["lower"] <= out["value"] <= out["sandwich"]["upper"] + 1e-12
        assert out["ldp_parameter"] > 0

    def test_deterministic_uses_flow(self, capsys, det_policy_path, secret_path):
        rc, out = run_json(
            capsys, ["sml", "--policy", det_policy_path, "--secret", secret_path]
        )
        assert rc == 0
        assert out["method"] == "flow"

    def test_flow_on_randomized_fails_cleanly(
        self, capsys, rr_policy_path, secret_path
    ):
        rc = main(["sml", "--policy", rr_policy_path, "--secret", secret_path,
                   "--method", "flow"])
        err = json.loads(capsys.readouterr().err)
        assert rc == 1
        assert "error" in err

    def test_class_list_secret(self, capsys, det_policy_path, tmp_path):
        sec = tmp_path / "classes.json"
        sec.write_text(json.dumps({"classes": [[0, 1], [2]]}))
        rc, out = run_json(
            capsys, ["sml", "--policy", det_policy_path, "--secret", str(sec)]
        )
        assert rc == 0

    def test_bad_class_cover_rejected(self, capsys, det_policy_path, tmp_path):
        sec = tmp_path / "classes.json"
        sec.write_text(json.dumps({"classes": [[0, 1]]}))
        rc = main(["sml", "--policy", det_policy_path, "--secret", str(sec)])
        assert rc == 1


class TestReleaseCommand:
    def test_release_round_trip(self, capsys, csv_path, tmp_path):
        out_path = str(tmp_path / "released.csv")
        mech = tmp_path / "mech.json"
        mech.write_text(json.dumps({"type": "rr", "weight": 2}))
        rc, out = run_json(
            capsys,
            ["--seed", "3", "release", "--csv", csv_path,
             "--mechanism", str(mech), "--out", out_path],
        )
        assert rc == 0
        with open(out_path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["color", "shape"]
        assert len(rows) - 1 == out["n"] == 6

    def test_qm_release(self, capsys, csv_path, tmp_path):
        out_path = str(tmp_path / "released.csv")
        mech = tmp_path / "mech.json"
        mech.write_text(
            json.dumps({"type": "qm", "interval": 2, "category": ["red", "circle"]})
        )
        rc, _ = run_json(
            capsys,
            ["release", "--csv", csv_path, "--mechanism", str(mech),
             "--out", out_path],
        )
        assert rc == 0

    def test_unknown_mechanism(self, capsys, csv_path, tmp_path):
        mech = tmp_path / "mech.json"
        mech.write_text(json.dumps({"type": "laplace"}))
        rc = main(["release", "--csv", csv_path, "--mechanism", str(mech),
                   "--out", str(tmp_path / "x.csv")])
        assert rc == 1


class TestTradeoffCommand:
    def test_csv_output(self, capsys, tmp_path):
        rc = main(["--format", "csv", "tradeoff", "--tau", "4", "--d0", "2",
                   "--rr-weights", "2,3", "--qm-intervals", "1,2"])
        out = capsys.readouterr().out
        assert rc == 0
        rows = list(csv.DictReader(out.splitlines()))
        assert len(rows) == 4
        assert rows[0]["mechanism"] == "rr"
        assert set(rows[0]) == {
            "mechanism", "hyperparam", "privacy", "privacy_lo", "privacy_hi",
            "distortion", "distortion_lo", "distortion_hi", "method",
        }

    def test_json_output(self, capsys):
        rc, out = run_json(
            capsys,
            ["tradeoff", "--tau", "4", "--d0", "2", "--d1", "1", "--dstar", "3",
             "--qm-intervals", "2"],
        )
        assert rc == 0
        assert out["points"][0]["method"] == "closed-form+bounds"


class TestBoundsCommand:
    def test_caps_and_brackets(self, capsys):
        rc, out = run_json(
            capsys,
            ["bounds", "--tau", "4", "--d0", "2", "--d1", "1", "--dstar", "3",
             "--rr-weight", "2", "--qm-interval", "2"],
        )
        assert rc == 0
        assert out["rr"]["privacy_lower"] <= out["rr"]["privacy_upper"] + 1e-9
        assert out["qm"]["privacy_lower"] <= out["qm"]["privacy_upper"] + 1e-9
        assert out["rr_robust_epsilon_cap"] > 0
        assert out["qm"]["decay_threshold"] >= 0


class TestFlowDebugCommand:
    def test_dot_output(self, capsys, det_policy_path, secret_path, tmp_path):
        dot_path = str(tmp_path / "net.dot")
        rc, out = run_json(
            capsys,
            ["flow-debug", "--policy", det_policy_path, "--secret", secret_path,
             "--dot", dot_path],
        )
        assert rc == 0
        with open(dot_path) as fh:
            assert fh.read().startswith("digraph")
        assert out["raw_sum"] == "2"
