"""Acceptance suite: one printed PASS/FAIL line per criterion."""

from __future__ import annotations

import itertools
import time
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

from teamviability.cli import run
from teamviability.evaluation import (
    DEFAULT_PERCENTILES,
    auc_roc,
    condition_split_eval,
    cv_sweep,
    round_holdout,
    thin_slice_sweep,
)
from teamviability.features import COMPUTATIONAL_FEATURES, extract_table, team_features
from teamviability.labels import QUESTION_IDS, RatingSubmission, aggregate_question, filter_attention
from teamviability.model import (
    coefficients_with_ci,
    fit_lasso_logistic,
    lambda_max,
    logistic_grad,
    logistic_loss,
)
from teamviability.synthetic import generate_synthetic_corpus
from teamviability.transcript import ChatMessage, Transcript, label_teams

from test_features import fixture_lexicons, fixture_transcript, golden
from test_model import make_data, newton_mle


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\n[acceptance] criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


@lru_cache(maxsize=None)
def corpus_and_table(effect, seed, condition_shift=0.0):
    t0 = time.perf_counter()
    corpus, _ = generate_synthetic_corpus(600, effect=effect, seed=seed, condition_shift=condition_shift)
    table, _ = extract_table(corpus.transcripts.values())
    return corpus, table, time.perf_counter() - t0


def brute_auc(scores, labels):
    pos = [s for s, l in zip(scores, labels) if l > 0]
    neg = [s for s, l in zip(scores, labels) if l < 0]
    wins = sum(1.0 if a > b else 0.5 if a == b else 0.0 for a, b in itertools.product(pos, neg))
    return wins / (len(pos) * len(neg))


def test_criterion_01_auc_oracle(capsys):
    rng = np.random.default_rng(0)
    t0 = time.perf_counter()
    mismatches = 0
    for i in range(200):
        n = int(rng.integers(2, 51))
        scores = rng.integers(0, 8, size=n) / 4.0  # coarse grid forces ties
        labels = np.where(rng.random(n) < 0.5, 1, -1)
        labels[0], labels[-1] = 1, -1
        if auc_roc(scores, labels) != brute_auc(scores, labels):
            mismatches += 1
    elapsed = time.perf_counter() - t0
    report(capsys, 1, mismatches == 0 and elapsed < 5,
           f"200 instances, {mismatches} mismatches, {elapsed:.2f}s (limit 5s)")


def test_criterion_02_solver(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    X, y = make_data(50, 5, seed=3)
    h = 1e-6
    worst = 0.0
    for _ in range(20):
        w, b = rng.standard_normal(5), float(rng.standard_normal())
        gw, gb = logistic_grad(w, b, X, y)
        num = []
        for j in range(5):
            e = np.zeros(5)
            e[j] = h
            num.append((logistic_loss(w + e, b, X, y) - logistic_loss(w - e, b, X, y)) / (2 * h))
        num.append((logistic_loss(w, b + h, X, y) - logistic_loss(w, b - h, X, y)) / (2 * h))
        g = np.append(gw, gb)
        worst = max(worst, np.linalg.norm(g - np.array(num)) / np.linalg.norm(g))
    ok_a = worst < 1e-5

    w_ref, b_ref = newton_mle(X, y)
    sol = fit_lasso_logistic(X, y, 0.0, tol=1e-15, max_iter=200_000)
    dev = max(np.max(np.abs(sol["weights"] - w_ref)), abs(sol["intercept"] - b_ref))
    ok_b = dev < 1e-4

    lm = lambda_max(X, y)
    ok_c = all(np.all(fit_lasso_logistic(X, y, lam)["weights"] == 0.0) for lam in (lm, 2 * lm))

    hist = np.asarray(fit_lasso_logistic(X, y, 0.01, tol=1e-12)["history"])
    ok_d = bool(np.all(np.diff(hist) <= 0))
    elapsed = time.perf_counter() - t0
    report(capsys, 2, ok_a and ok_b and ok_c and ok_d and elapsed < 30,
           f"(a) max rel grad err {worst:.1e}  (b) max |w - newton| {dev:.1e}  "
           f"(c) zeros at lambda_max={lm:.4f}: {ok_c}  (d) monotone over {len(hist)} steps: {ok_d}  "
           f"{elapsed:.2f}s")


def test_criterion_03_feature_fixture(capsys):
    fv = team_features(fixture_transcript(), lexicons=fixture_lexicons())
    want = golden()
    bad = []
    for name in COMPUTATIONAL_FEATURES:
        got = fv[name]
        if name == "tfidf_cosine_mean":
            ok = abs(got - want[name]) < 1e-9
        elif name.startswith(("polarity", "subjectivity", "readability")):
            ok = got == pytest.approx(want[name], rel=1e-14, abs=1e-15)
        else:
            ok = got == want[name]
        if not ok:
            bad.append(name)
    report(capsys, 3, not bad, f"42 features on the 4-member/20-message fixture, mismatches: {bad or 'none'}")


def test_criterion_04_label_fixtures(capsys):
    cases = [
        ([1, 5, 5, 5, 5], 5.0),
        ([3, 3, 3], 3.0),
        ([2, 3, 4], 3.0),
        ([1, 1, 4, 4], 2.5),
        ([1, 1, 1, 2, 5], 1.0),
        ([1, 1, 2, 2, 5, 5], 2.0),
    ]
    wrong = [(r, e, aggregate_question(r)) for r, e in cases if aggregate_question(r) != e]
    t = Transcript("T", 1, "masked", ("a", "b", "c", "d"), (ChatMessage("a", 0.0, "hi"),))
    subs = [RatingSubmission("T", f"r{i}", att, {q: 3 for q in QUESTION_IDS}) for i, att in enumerate([4, 3, 4, 5, 4, 0])]
    kept = [s.rater_id for s in filter_attention(subs, t)]
    ok_att = kept == ["r0", "r2", "r4"]
    report(capsys, 4, not wrong and ok_att,
           f"{len(cases) - len(wrong)}/{len(cases)} aggregation cases exact; attention filter kept {kept}")


def test_criterion_05_planted_signal(capsys):
    t0 = time.perf_counter()
    corpus, table, _ = corpus_and_table(1.0, 7)
    rep = cv_sweep(table, corpus.scores(), [10, 50, 90], k=5, seed=7)
    elapsed = time.perf_counter() - t0
    a10, a50, a90 = (rep.mean_auc(p) for p in (10, 50, 90))
    ok = a90 >= 0.85 and a50 >= 0.70 and a90 > a50 and elapsed < 120
    report(capsys, 5, ok, f"AUC p10={a10:.3f} p50={a50:.3f} (>=0.70) p90={a90:.3f} (>=0.85, > p50)  {elapsed:.1f}s")


def test_criterion_06_null_control(capsys):
    corpus, table, _ = corpus_and_table(0.0, 7)
    rep = cv_sweep(table, corpus.scores(), DEFAULT_PERCENTILES, k=5, seed=7)
    aucs = [rep.mean_auc(p) for p in DEFAULT_PERCENTILES]
    worst = max(abs(a - 0.5) for a in aucs)
    report(capsys, 6, worst <= 0.07, f"effect=0 AUCs {[round(a, 3) for a in aucs]}, max |AUC-0.5|={worst:.3f}")


def test_criterion_07_coefficients(capsys):
    corpus, table, _ = corpus_and_table(1.0, 7)
    scores = corpus.scores()
    labels = label_teams({t: scores[t] for t in table.team_ids}, 50)
    y = np.array([1.0 if labels[t] == "high" else -1.0 for t in table.team_ids])
    rep = coefficients_with_ci(table.values, y, lam=0.01, n_boot=200, seed=7, names=table.names, n_jobs=4)
    ex, sp, sa = (rep.row(f"liwc_{c}") for c in ("exclusive", "second_person", "sadness"))
    ok = ex["ci_lo"] > 0 and sp["ci_lo"] > 0 and sa["ci_hi"] < 0
    report(capsys, 7, ok,
           f"B=200 p=50: exclusive [{ex['ci_lo']:+.3f}, {ex['ci_hi']:+.3f}]  "
           f"second_person [{sp['ci_lo']:+.3f}, {sp['ci_hi']:+.3f}]  "
           f"sadness [{sa['ci_lo']:+.3f}, {sa['ci_hi']:+.3f}]")


def test_criterion_08_thin_slice(capsys):
    corpus, table, _ = corpus_and_table(1.0, 7)
    sl = thin_slice_sweep(corpus, "cumulative", 10, percentiles=(10, 50, 90), seed=7, ends=[70, 600], n_jobs=4)
    full = cv_sweep(table, corpus.scores(), [10, 50, 90], k=5, seed=7)
    identical = sl.reports[-1].rows == full.rows and sl.dropped[-1] == []
    a70, a600 = sl.auc(70, 90), sl.auc(600, 90)
    report(capsys, 8, identical and a600 >= a70 - 0.05,
           f"t=600 rows bit-identical to full report: {identical}; p=90 AUC t=70 {a70:.3f}, t=600 {a600:.3f}")


def test_criterion_09_rounds_and_conditions(capsys):
    corpus, table, _ = corpus_and_table(1.0, 7)
    aucs = [round_holdout(table, corpus.scores(), corpus.rounds(), j, 300, 60, seed=7).mean_auc() for j in (1, 2, 3, 4)]
    spread = max(aucs) - min(aucs)
    shifted, stable, _ = corpus_and_table(1.0, 7, 0.8)
    cond = condition_split_eval(stable, shifted.scores(), shifted.conditions(), percentile=50, seed=7)
    init, reco = cond["initial_visible"].mean_auc(), cond["reconvened"].mean_auc()
    report(capsys, 9, spread < 0.1 and reco < init,
           f"round AUCs {[round(a, 3) for a in aucs]} max pairwise diff {spread:.3f} (<0.1); "
           f"condition_shift=0.8: initial {init:.3f} > reconvened {reco:.3f}")


def _pipeline(root: Path, jobs: str) -> dict[str, bytes]:
    steps = [
        ["synth", "--teams", "150", "--effect", "1.0", "--seed", "11", "--out-dir", "d"],
        ["extract", "--transcripts", "d/messages.jsonl", "--teams", "d/teams.jsonl",
         "--ratings", "d/ratings.jsonl", "--out", "f.csv"],
        ["labels-aggregate", "--transcripts", "d/messages.jsonl", "--teams", "d/teams.jsonl",
         "--ratings", "d/ratings.jsonl", "--out", "hl.csv"],
        ["cv", "--features", "f.csv", "--teams", "d/teams.jsonl", "--percentiles", "10,50,90",
         "--subset", "all", "--seed", "3", "--jobs", jobs, "--out", "cv.json"],
        ["train", "--features", "f.csv", "--teams", "d/teams.jsonl", "--seed", "3", "--model", "m.json"],
        ["score", "--model", "m.json", "--features", "f.csv", "--out", "s.csv"],
        ["coeffs", "--features", "f.csv", "--teams", "d/teams.jsonl", "--bootstrap", "60", "--seed", "3",
         "--jobs", jobs, "--out", "c.json"],
        ["holdout-round", "--features", "f.csv", "--teams", "d/teams.jsonl", "--train-n", "60",
         "--test-n", "20", "--seed", "3", "--out", "h.json"],
        ["condition-eval", "--features", "f.csv", "--teams", "d/teams.jsonl", "--out", "ce.json"],
        ["slice", "--transcripts", "d/messages.jsonl", "--teams", "d/teams.jsonl", "--mode", "disjoint",
         "--window", "200", "--percentiles", "50", "--jobs", jobs, "--out", "sl.json"],
        ["corr", "--teams", "d/teams.jsonl", "--out", "r.json"],
    ]
    for argv in steps:
        assert run(argv) == 0, argv
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_criterion_10_determinism(capsys, tmp_path, monkeypatch):
    outputs = []
    for name, jobs in (("a", "1"), ("b", "1"), ("c", "4")):
        root = tmp_path / name
        root.mkdir()
        monkeypatch.chdir(root)
        outputs.append(_pipeline(root, jobs))
    a, b, c = outputs
    rerun_same = a == b
    # the worker count is not part of the resolved configuration, so even sidecars match
    parallel_same = a == c
    report(capsys, 10, rerun_same and parallel_same,
           f"{len(a)} files across 11 subcommands: rerun byte-identical {rerun_same}; "
           f"--jobs 4 vs 1 byte-identical {parallel_same}")
