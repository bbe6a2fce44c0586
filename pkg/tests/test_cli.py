from __future__ import annotations

import json

import pytest

from teamviability import __version__
from teamviability.cli import run


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert run(["synth", "--teams", "120", "--effect", "1.5", "--seed", "7", "--out-dir", str(root / "d")]) == 0
    d = root / "d"
    corpus = ["--transcripts", str(d / "messages.jsonl"), "--teams", str(d / "teams.jsonl")]
    assert run(["extract", *corpus, "--out", str(root / "f.csv")]) == 0
    return root, d, corpus


def test_synth_extract_cv_pipeline(workspace):
    root, d, corpus = workspace
    out = root / "cv.json"
    code = run(["cv", "--features", str(root / "f.csv"), "--teams", str(d / "teams.jsonl"),
                "--percentiles", "10,50,90", "--out", str(out)])
    assert code == 0
    rep = json.loads(out.read_text())
    assert [s["percentile"] for s in rep["summary"]] == [10, 50, 90]
    assert (root / "cv.csv").read_text().startswith("percentile,auc_mean")
    assert (root / "cv.txt").exists()
    side = json.loads((root / "cv.config.json").read_text())
    assert side["version"] == __version__
    assert len(side["config_hash"]) == 64
    assert side["config"]["inputs"]["features"]["sha256"]


def test_window_end_at_duration_equals_no_window(workspace):
    root, d, corpus = workspace
    assert run(["extract", *corpus, "--window-end", "600", "--out", str(root / "f600.csv")]) == 0
    assert run(["extract", *corpus, "--window-end", "70", "--out", str(root / "f70.csv")]) == 0
    full = (root / "f.csv").read_bytes()
    assert (root / "f600.csv").read_bytes() == full
    assert (root / "f70.csv").read_bytes() != full


def test_train_score_coeffs_corr(workspace):
    root, d, corpus = workspace
    teams = ["--teams", str(d / "teams.jsonl")]
    feats = ["--features", str(root / "f.csv")]
    assert run(["train", *feats, *teams, "--percentile", "50", "--model", str(root / "m.json")]) == 0
    assert run(["score", "--model", str(root / "m.json"), *feats, "--out", str(root / "s.csv")]) == 0
    lines = (root / "s.csv").read_text().splitlines()
    assert lines[0] == "team_id,probability" and len(lines) == 121
    assert run(["coeffs", *feats, *teams, "--bootstrap", "50", "--out", str(root / "c.json")]) == 0
    doc = json.loads((root / "c.json").read_text())
    assert doc["n_boot"] == 50 and len(doc["features"]) == 42
    assert run(["corr", *teams, "--out", str(root / "r.json")]) == 0
    assert -1 <= json.loads((root / "r.json").read_text())["r"] <= 1


def test_labels_and_human_subset(workspace):
    root, d, corpus = workspace
    assert run(["labels-aggregate", *corpus, "--ratings", str(d / "ratings.jsonl"), "--out", str(root / "hl.csv")]) == 0
    assert run(["extract", *corpus, "--ratings", str(d / "ratings.jsonl"), "--out", str(root / "fa.csv")]) == 0
    header = (root / "fa.csv").read_text().splitlines()[0].split(",")
    assert len(header) == 1 + 42 + 20
    code = run(["cv", "--features", str(root / "fa.csv"), "--teams", str(d / "teams.jsonl"),
                "--subset", "all", "--percentiles", "50", "--out", str(root / "cva.json")])
    assert code == 0


def test_holdout_condition_slice(workspace):
    root, d, corpus = workspace
    teams = ["--teams", str(d / "teams.jsonl")]
    feats = ["--features", str(root / "f.csv")]
    assert run(["holdout-round", *feats, *teams, "--round", "1", "--train-n", "50", "--test-n", "15",
                "--out", str(root / "h.json")]) == 0
    assert "round1" in json.loads((root / "h.json").read_text())
    assert run(["condition-eval", *feats, *teams, "--out", str(root / "ce.json")]) == 0
    assert run(["slice", *corpus, "--mode", "disjoint", "--window", "300", "--percentiles", "50",
                "--out", str(root / "sl.json")]) == 0
    assert len((root / "sl.csv").read_text().splitlines()) == 3


def test_usage_errors_exit_1(capsys):
    assert run(["cv", "--bogus"]) == 1
    assert run(["frobnicate"]) == 1
    assert run([]) == 1
    assert run(["cv", "--features", "f", "--teams", "t", "--out", "o", "--percentiles", "150"]) == 1
    assert run(["synth", "--teams", "5", "--out-dir", "x"]) == 1
    assert "usage" in capsys.readouterr().err


def test_data_errors_exit_2(workspace, tmp_path, capsys):
    root, d, corpus = workspace
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"team_id": "T001", "sender": "nobody", "timestamp_s": 1, "text": "x"}\n')
    assert run(["validate", "--transcripts", str(bad), "--teams", str(d / "teams.jsonl")]) == 2
    err = capsys.readouterr().err
    assert "bad.jsonl:1" in err
    assert run(["cv", "--features", str(tmp_path / "missing.csv"), "--teams", str(d / "teams.jsonl"),
                "--out", str(tmp_path / "x.json")]) == 2
    (tmp_path / "m.json").write_text('{"format_version": "nope"}')
    assert run(["score", "--model", str(tmp_path / "m.json"), "--features", str(root / "f.csv"),
                "--out", str(tmp_path / "s.csv")]) == 2


def test_degenerate_exit_3(workspace, tmp_path):
    root, d, corpus = workspace
    code = run(["cv", "--features", str(root / "f.csv"), "--teams", str(d / "teams.jsonl"),
                "--percentiles", "99.5", "--out", str(tmp_path / "x.json")])
    assert code == 3


def test_validate_reports(workspace, capsys):
    root, d, corpus = workspace
    assert run(["validate", *corpus, "--out", str(root / "v.json")]) == 0
    assert "120 teams" in capsys.readouterr().out
    assert json.loads((root / "v.json").read_text())["teams"] == 120
