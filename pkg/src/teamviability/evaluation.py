"""Evaluation protocols: AUC, stratified CV threshold sweeps, round holdout,
condition splits, thin slicing and the performance-confound check."""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .features import FeatureTable, extract_table
from .lexicon import CategoryLexicon
from .model import SingleClassError, train
from .transcript import HIGH, CONDITIONS, Corpus, DegenerateLabelWarning, label_teams, percentile_cutoff

DEFAULT_PERCENTILES = (10, 20, 30, 40, 50, 60, 70, 80, 90)
DEFAULT_FOLDS = 5
# per training set, see model.universal_lambda
DEFAULT_CV_LAMBDA = "auto"


class DegenerateAnalysisError(ValueError):
    """The requested analysis has a single-class split or too few teams."""


# ----------------------------------------------------------------- metrics


def _as_binary(labels) -> np.ndarray:
    arr = np.asarray(labels)
    if arr.dtype.kind in "US":
        return arr == HIGH
    if arr.dtype == bool:
        return arr
    return arr > 0


def auc_roc(scores: Sequence[float], labels) -> float:
    """Probability a positive outscores a negative, ties counting one half.

    Computed from average ranks (Mann-Whitney U); labels may be +1/-1,
    booleans or 'high'/'low'.
    """
    s = np.asarray(scores, dtype=float)
    pos = _as_binary(labels)
    n_pos = int(pos.sum())
    n_neg = len(pos) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateAnalysisError("AUC needs both classes")
    # doubled ranks are integers, so 2U is computed exactly
    ranks2 = (2 * stats.rankdata(s, method="average")).astype(np.int64)
    u2 = int(ranks2[pos].sum()) - n_pos * (n_pos + 1)
    return u2 / (2 * n_pos * n_neg)


def threshold_metrics(scores: Sequence[float], labels, cut: float = 0.5) -> dict:
    """Precision, recall and F1 with score >= cut predicted positive.

    A zero denominator yields 0 and is listed under ``flags``.
    """
    pos = _as_binary(labels)
    if pos.all() or not pos.any():
        raise DegenerateAnalysisError("threshold metrics need both classes")
    pred = np.asarray(scores, dtype=float) >= cut
    tp = int(np.sum(pred & pos))
    fp = int(np.sum(pred & ~pos))
    fn = int(np.sum(~pred & pos))
    flags = []
    if tp + fp == 0:
        precision = 0.0
        flags.append("no_predicted_positives")
    else:
        precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    if precision + recall == 0:
        f1 = 0.0
        flags.append("f1_undefined")
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return dict(precision=precision, recall=recall, f1=f1, flags=flags)


def mean_ci(values: Sequence[float], level: float = 0.95) -> tuple[float, float, float]:
    """Mean and t-distribution confidence interval across folds."""
    v = np.asarray(values, dtype=float)
    m = float(v.mean())
    if len(v) < 2:
        return m, m, m
    half = float(stats.t.ppf(0.5 + level / 2, len(v) - 1) * v.std(ddof=1) / math.sqrt(len(v)))
    return m, m - half, m + half


def performance_correlation(viability: Sequence[float], performance: Sequence[float]) -> dict:
    """Pearson r and r^2 between paired viability and task-performance scores."""
    x = np.asarray(viability, dtype=float)
    y = np.asarray(performance, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("need two paired 1-D sequences")
    if len(x) < 3:
        raise ValueError("need at least 3 paired observations")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise DegenerateAnalysisError("zero variance in one of the variables")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    return dict(r=r, r_squared=r * r, n=len(x))


# ------------------------------------------------------------------ splits


@dataclass(frozen=True)
class SplitPlan:
    kind: str
    folds: tuple[tuple[tuple[str, ...], tuple[str, ...]], ...]  # (train, test) per fold
    seed: int | None = None
    k: int | None = None
    detail: Mapping = field(default_factory=dict)


def stratified_kfold(team_ids: Sequence[str], labels, k: int = DEFAULT_FOLDS, seed: int = 0) -> SplitPlan:
    """Shuffle each class with a seeded RNG and deal teams round-robin into k folds."""
    if k < 2:
        raise ValueError("k must be at least 2")
    team_ids = list(team_ids)
    if isinstance(labels, Mapping):
        labels = [labels[t] for t in team_ids]
    pos = _as_binary(labels)
    classes = [[t for t, p in zip(team_ids, pos) if p], [t for t, p in zip(team_ids, pos) if not p]]
    for members in classes:
        if len(members) < k:
            raise DegenerateAnalysisError(f"a class has {len(members)} teams, fewer than k={k}")
    rng = np.random.default_rng(seed)
    assignment: dict[str, int] = {}
    offset = 0
    for members in classes:
        order = rng.permutation(len(members))
        for i, idx in enumerate(order):
            assignment[members[idx]] = (offset + i) % k
        offset = (offset + len(members)) % k
    folds = []
    for f in range(k):
        test = tuple(t for t in team_ids if assignment[t] == f)
        train_ = tuple(t for t in team_ids if assignment[t] != f)
        folds.append((train_, test))
    return SplitPlan("stratified_kfold", tuple(folds), seed, k)


# ------------------------------------------------------------------ report


@dataclass
class EvalReport:
    """Per-(threshold, split) metrics plus the configuration that produced them."""

    config: dict
    rows: list[dict] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def percentiles(self) -> list[float]:
        seen = []
        for r in self.rows:
            if r["percentile"] not in seen:
                seen.append(r["percentile"])
        return seen

    def summary(self) -> list[dict]:
        out = []
        for p in self.percentiles():
            rows = [r for r in self.rows if r["percentile"] == p]
            entry = {"percentile": p, "n_splits": len(rows)}
            for metric in ("auc", "f1", "precision", "recall"):
                m, lo, hi = mean_ci([r[metric] for r in rows])
                entry[metric] = m
                entry[f"{metric}_ci"] = [lo, hi]
            out.append(entry)
        return out

    def mean_auc(self, p: float | None = None, split: str | None = None) -> float:
        rows = [
            r for r in self.rows
            if (p is None or r["percentile"] == p) and (split is None or r["split"] == split)
        ]
        if not rows:
            raise KeyError(f"no rows for percentile={p} split={split}")
        return float(np.mean([r["auc"] for r in rows]))

    def to_dict(self) -> dict:
        return {"config": self.config, "rows": self.rows, "summary": self.summary(), "extra": self.extra}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        head = f"{'percentile':>10}  {'n':>3}  {'auc':>7}  {'auc 95% CI':>17}  {'f1':>6}  {'prec':>6}  {'recall':>6}"
        lines = [head]
        for s in self.summary():
            lo, hi = s["auc_ci"]
            lines.append(
                f"{s['percentile']:>10g}  {s['n_splits']:>3d}  {s['auc']:7.4f}  [{lo:7.4f}, {hi:7.4f}]"
                f"  {s['f1']:6.3f}  {s['precision']:6.3f}  {s['recall']:6.3f}"
            )
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["percentile", "auc_mean", "auc_ci_lo", "auc_ci_hi"])
        for s in self.summary():
            w.writerow([s["percentile"], repr(s["auc"]), repr(s["auc_ci"][0]), repr(s["auc_ci"][1])])
        return buf.getvalue()


def _labels_for(scores: Mapping[str, float], team_ids: Sequence[str], p: float) -> np.ndarray:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateLabelWarning)
        labels = label_teams({t: scores[t] for t in team_ids}, p)
    y = np.array([1.0 if labels[t] == HIGH else -1.0 for t in team_ids])
    if np.all(y > 0) or np.all(y < 0):
        raise DegenerateAnalysisError(f"percentile {p} leaves one class empty")
    return y


def _fit_and_score(X_train, y_train, X_test, y_test, lam, seed) -> dict:
    try:
        model = train(X_train, y_train, lam=lam, seed=seed)
    except SingleClassError as exc:
        raise DegenerateAnalysisError(str(exc)) from None
    proba = model.predict_proba(X_test)
    row = dict(auc=auc_roc(proba, y_test))
    tm = threshold_metrics(proba, y_test)
    row.update(precision=tm["precision"], recall=tm["recall"], f1=tm["f1"], flags=tm["flags"])
    row.update(n_train=len(y_train), n_test=len(y_test), n_pos_test=int(np.sum(y_test > 0)))
    row["nonzero_weights"] = int(np.count_nonzero(model.weights))
    return row


def _run_jobs(jobs: Sequence[Callable[[], dict]], n_jobs: int) -> list[dict]:
    if n_jobs == 1:
        return [j() for j in jobs]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(lambda j: j(), jobs))


def _cv_rows(X: np.ndarray, team_ids: Sequence[str], y: np.ndarray, p, k, lam, seed, n_jobs) -> list[dict]:
    plan = stratified_kfold(team_ids, y, k, seed)
    pos = {t: i for i, t in enumerate(team_ids)}
    jobs = []
    for f, (tr, te) in enumerate(plan.folds):
        itr = [pos[t] for t in tr]
        ite = [pos[t] for t in te]

        def job(itr=itr, ite=ite, f=f):
            row = _fit_and_score(X[itr], y[itr], X[ite], y[ite], lam, seed)
            return {"percentile": p, "split": f"fold{f}", **row}

        jobs.append(job)
    return _run_jobs(jobs, n_jobs)


def cv_sweep(
    features: FeatureTable,
    scores: Mapping[str, float],
    percentiles: Sequence[float] = DEFAULT_PERCENTILES,
    k: int = DEFAULT_FOLDS,
    lam: float | str = DEFAULT_CV_LAMBDA,
    seed: int = 0,
    subset: str = "computational",
    n_jobs: int = 1,
    window: Sequence[float] | None = None,
) -> EvalReport:
    """Stratified k-fold CV at each percentile threshold.

    The standardizer and model are fit on each training fold only.
    """
    table = features.columns(subset)
    missing = [t for t in table.team_ids if t not in scores]
    if missing:
        raise ValueError(f"no viability score for team {missing[0]!r}")
    config = dict(
        protocol="cv_sweep",
        percentiles=list(percentiles),
        k=k,
        lam=lam,
        seed=seed,
        subset=subset,
        features=list(table.names),
        n_teams=len(table.team_ids),
        window=None if window is None else list(window),
    )
    report = EvalReport(config)
    for p in percentiles:
        y = _labels_for(scores, table.team_ids, p)
        report.rows += _cv_rows(table.values, table.team_ids, y, p, k, lam, seed, n_jobs)
    return report


def round_holdout(
    features: FeatureTable,
    scores: Mapping[str, float],
    rounds: Mapping[str, int],
    j: int,
    train_n: int = 300,
    test_n: int = 60,
    seed: int = 0,
    lam: float | str = DEFAULT_CV_LAMBDA,
    percentile: float = 50,
    subset: str = "computational",
) -> EvalReport:
    """Train on rounds other than j, test on round j, with seeded fixed-size subsamples.

    The class cutoff is the percentile of all supplied teams' scores.
    """
    table = features.columns(subset)
    ids = list(table.team_ids)
    test_pool = [t for t in ids if rounds[t] == j]
    train_pool = [t for t in ids if rounds[t] != j]
    if not test_pool:
        raise ValueError(f"round {j} not present")
    if train_n > len(train_pool) or test_n > len(test_pool):
        raise DegenerateAnalysisError(
            f"round {j}: requested {train_n}/{test_n} train/test teams, "
            f"available {len(train_pool)}/{len(test_pool)}"
        )
    rng = np.random.default_rng(np.random.SeedSequence([seed, j]))
    tr = [train_pool[i] for i in sorted(rng.choice(len(train_pool), train_n, replace=False))]
    te = [test_pool[i] for i in sorted(rng.choice(len(test_pool), test_n, replace=False))]
    cutoff = percentile_cutoff([scores[t] for t in ids], percentile)
    y = {t: 1.0 if scores[t] > cutoff else -1.0 for t in ids}
    y_tr = np.array([y[t] for t in tr])
    y_te = np.array([y[t] for t in te])
    for part, yy in (("training", y_tr), ("test", y_te)):
        if np.all(yy > 0) or np.all(yy < 0):
            raise DegenerateAnalysisError(f"round {j}: {part} subsample has a single class")
    row = _fit_and_score(table.rows(tr), y_tr, table.rows(te), y_te, lam, seed)
    config = dict(
        protocol="round_holdout",
        round=j,
        train_n=train_n,
        test_n=test_n,
        seed=seed,
        lam=lam,
        percentile=percentile,
        cutoff=cutoff,
        subset=subset,
        features=list(table.names),
    )
    report = EvalReport(config, [{"percentile": percentile, "split": f"round{j}", **row}])
    report.extra = {"train_ids": tr, "test_ids": te}
    return report


def condition_split_eval(
    features: FeatureTable,
    scores: Mapping[str, float],
    conditions: Mapping[str, str],
    percentile: float = 50,
    lam: float | str = DEFAULT_CV_LAMBDA,
    train_condition: str = "masked",
    test_conditions: Sequence[str] = ("initial_visible", "reconvened"),
    subset: str = "computational",
    seed: int = 0,
) -> dict[str, EvalReport]:
    """Fit once on ``train_condition`` teams and score each test condition separately."""
    table = features.columns(subset)
    ids = list(table.team_ids)
    present = {conditions[t] for t in ids}
    for c in (train_condition, *test_conditions):
        if c not in CONDITIONS:
            raise ValueError(f"unknown condition {c!r}")
        if c not in present:
            raise DegenerateAnalysisError(f"condition {c!r} has no teams")
    cutoff = percentile_cutoff([scores[t] for t in ids], percentile)
    y = {t: 1.0 if scores[t] > cutoff else -1.0 for t in ids}
    tr = [t for t in ids if conditions[t] == train_condition]
    y_tr = np.array([y[t] for t in tr])
    if np.all(y_tr > 0) or np.all(y_tr < 0):
        raise DegenerateAnalysisError(f"{train_condition} training teams have a single class")
    try:
        model = train(table.rows(tr), y_tr, lam=lam, seed=seed)
    except SingleClassError as exc:
        raise DegenerateAnalysisError(str(exc)) from None
    out = {}
    for c in test_conditions:
        te = [t for t in ids if conditions[t] == c]
        y_te = np.array([y[t] for t in te])
        if np.all(y_te > 0) or np.all(y_te < 0):
            raise DegenerateAnalysisError(f"{c} test teams have a single class")
        proba = model.predict_proba(table.rows(te))
        tm = threshold_metrics(proba, y_te)
        row = dict(
            percentile=percentile,
            split=c,
            auc=auc_roc(proba, y_te),
            precision=tm["precision"],
            recall=tm["recall"],
            f1=tm["f1"],
            flags=tm["flags"],
            n_train=len(tr),
            n_test=len(te),
            n_pos_test=int(np.sum(y_te > 0)),
            nonzero_weights=int(np.count_nonzero(model.weights)),
        )
        config = dict(
            protocol="condition_split_eval",
            train_condition=train_condition,
            test_condition=c,
            percentile=percentile,
            cutoff=cutoff,
            lam=lam,
            seed=seed,
            subset=subset,
            features=list(table.names),
        )
        out[c] = EvalReport(config, [row])
    return out


# ------------------------------------------------------------ thin slicing


def slice_windows(duration: float, mode: str, increment: float = 10, window: float = 200) -> list[tuple[float, float]]:
    if mode == "cumulative":
        if increment <= 0 or increment > duration:
            raise ValueError("increment must lie in (0, duration]")
        n = duration / increment
        if abs(n - round(n)) > 1e-9:
            raise ValueError(f"increment {increment} does not divide duration {duration}")
        return [(0.0, increment * i) for i in range(1, int(round(n)) + 1)]
    if mode == "disjoint":
        if window <= 0 or window > duration:
            raise ValueError(f"window {window} must lie in (0, duration={duration}]")
        n = int(math.floor(duration / window + 1e-9))
        return [(window * i, window * (i + 1)) for i in range(n)]
    raise ValueError(f"unknown slicing mode {mode!r}")


@dataclass
class SliceReport:
    config: dict
    windows: list[tuple[float, float]]
    reports: list[EvalReport]
    dropped: list[list[str]]

    def auc(self, end: float, p: float, start: float = 0.0) -> float:
        for w, r in zip(self.windows, self.reports):
            if math.isclose(w[0], start) and math.isclose(w[1], end):
                return r.mean_auc(p)
        raise KeyError(f"no window [{start}, {end})")

    def to_dict(self) -> dict:
        return dict(
            config=self.config,
            windows=[
                dict(window=list(w), dropped=len(d), dropped_ids=d, report=r.to_dict())
                for w, r, d in zip(self.windows, self.reports, self.dropped)
            ],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["window_start", "window_end", "percentile", "auc_mean", "auc_ci_lo", "auc_ci_hi", "dropped"])
        for win, r, d in zip(self.windows, self.reports, self.dropped):
            for s in r.summary():
                w.writerow([win[0], win[1], s["percentile"], repr(s["auc"]), repr(s["auc_ci"][0]), repr(s["auc_ci"][1]), len(d)])
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"{'window':>14}  {'percentile':>10}  {'auc':>7}  {'dropped':>7}"]
        for win, r, d in zip(self.windows, self.reports, self.dropped):
            for s in r.summary():
                lines.append(f"[{win[0]:5g},{win[1]:5g})  {s['percentile']:>10g}  {s['auc']:7.4f}  {len(d):>7d}")
        return "\n".join(lines) + "\n"


def thin_slice_sweep(
    corpus: Corpus,
    mode: str = "cumulative",
    increment: float = 10,
    window: float = 200,
    percentiles: Sequence[float] = (10, 50, 90),
    k: int = DEFAULT_FOLDS,
    lam: float | str = DEFAULT_CV_LAMBDA,
    seed: int = 0,
    lexicons: Mapping[str, CategoryLexicon] | None = None,
    rates: bool = False,
    n_jobs: int = 1,
    ends: Iterable[float] | None = None,
) -> SliceReport:
    """Re-extract computational features per window and cross-validate each.

    Class labels use cutoffs over the whole corpus; teams silent in a window
    are dropped from that window's trial. ``ends`` restricts a cumulative
    sweep to the listed window ends.
    """
    durations = {t.duration for t in corpus.transcripts.values()}
    if len(durations) != 1:
        raise ValueError("thin slicing needs a uniform transcript duration")
    duration = durations.pop()
    windows = slice_windows(duration, mode, increment, window)
    if ends is not None:
        wanted = list(ends)
        windows = [w for w in windows if any(math.isclose(w[1], e) for e in wanted)]
    scores = corpus.scores()
    all_ids = list(corpus.transcripts)
    cutoffs = {p: percentile_cutoff([scores[t] for t in all_ids], p) for p in percentiles}
    reports, dropped = [], []
    for win in windows:
        table, gone = extract_table(corpus.transcripts.values(), win, lexicons, rates, skip_empty=True)
        report = EvalReport(
            dict(
                protocol="thin_slice",
                mode=mode,
                window=list(win),
                percentiles=list(percentiles),
                k=k,
                lam=lam,
                seed=seed,
                subset="computational",
                features=list(table.names),
                n_teams=len(table.team_ids),
            )
        )
        for p in percentiles:
            y = np.array([1.0 if scores[t] > cutoffs[p] else -1.0 for t in table.team_ids])
            if np.all(y > 0) or np.all(y < 0):
                raise DegenerateAnalysisError(f"window {win}: percentile {p} leaves one class empty")
            report.rows += _cv_rows(table.values, table.team_ids, y, p, k, lam, seed, n_jobs)
        report.extra = {"dropped": len(gone)}
        reports.append(report)
        dropped.append(gone)
    config = dict(
        protocol="thin_slice_sweep",
        mode=mode,
        increment=increment,
        window=window,
        percentiles=list(percentiles),
        k=k,
        lam=lam,
        seed=seed,
        rates=rates,
        duration=duration,
    )
    return SliceReport(config, windows, reports, dropped)
