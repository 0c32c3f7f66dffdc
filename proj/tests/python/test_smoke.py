import json
import os
import pathlib

import numpy as np
import pytest

import causal_ensemble as ce

FIXTURES = pathlib.Path(os.environ.get("CAUSAL_FIXTURE_DIR", pathlib.Path(__file__).parents[2] / "data" / "fixture"))


def fork_spec():
    return json.loads((FIXTURES / "scm_fork.json").read_text())


def test_d_separation_and_backdoor():
    nodes = ["z", "x", "y"]
    edges = [("z", "x"), ("z", "y"), ("x", "y")]
    assert not ce.d_separated(nodes, edges, "x", "y", [])
    assert ce.d_separated(["a", "b", "c"], [("a", "c"), ("b", "c")], "a", "b", [])
    assert ce.backdoor_sets(nodes, edges, "x", "y") == [["z"]]


def test_sampling_is_seeded():
    a = ce.sample_scm(fork_spec(), 500, 3)
    b = ce.sample_scm(fork_spec(), 500, 3)
    assert set(a) == {"z", "x", "y"}
    assert np.array_equal(a["y"], b["y"])


def test_adjusted_estimate_tracks_truth():
    spec = fork_spec()
    data = ce.sample_scm(spec, 20000, 1)
    truth, se = ce.true_effect(spec, "x", "y", 200000, 2)
    est = ce.estimate_effect(data, "x", "y", ["z"], mode="full_sample", k=100, seed=5)
    low, high = est["ci"]
    assert low <= est["point"] <= high
    assert abs(est["point"] - truth) < 0.05


def test_vote_threshold():
    assert ce.vote_threshold(7) == 4
    with pytest.raises(ValueError):
        ce.vote_threshold(7, "plurality")


def test_pipeline_run(tmp_path):
    log = ce.run_pipeline(str(FIXTURES / "pipeline.ini"), out=str(tmp_path), seed=1)
    assert "report" in log
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["identifiable"] is True
    assert (tmp_path / "summary.txt").exists()
