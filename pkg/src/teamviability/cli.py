"""Command-line entry point: ``teamviability <subcommand> [flags]``.

Exit codes: 0 success, 1 usage error, 2 data-validation error, 3 degenerate
analysis (for example a single-class split). Every subcommand writes a
``<output>.config.json`` sidecar holding the resolved configuration, input
digests, the tool version and a hash of the configuration.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .evaluation import (
    DEFAULT_CV_LAMBDA,
    DEFAULT_FOLDS,
    DEFAULT_PERCENTILES,
    DegenerateAnalysisError,
    condition_split_eval,
    cv_sweep,
    performance_correlation,
    round_holdout,
    thin_slice_sweep,
)
from .features import FeatureTable, extract_table, read_table, write_table
from .labels import aggregate_corpus, load_ratings
from .lexicon import LexiconError, load_lexicon_dir
from .model import (
    DEFAULT_BOOTSTRAP,
    DEFAULT_LAMBDA,
    ModelFormatError,
    SingleClassError,
    coefficients_with_ci,
    load_model,
    save_model,
    train,
)
from .synthetic import generate_synthetic_corpus, write_synthetic_corpus
from .transcript import ValidationError, load_corpus, percentile_cutoff

log = logging.getLogger("teamviability")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DEGENERATE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; 2 is reserved for bad data here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ------------------------------------------------------------ flag parsing


def _lambda(text: str) -> float | str:
    if text == "auto":
        return text
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {text!r}") from None
    if not v >= 0:
        raise argparse.ArgumentTypeError("lambda must be >= 0")
    return v


def _percentile(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < v < 100:
        raise argparse.ArgumentTypeError(f"percentile {v} outside (0, 100)")
    return int(v) if v.is_integer() else v


def _percentiles(text: str) -> list[float]:
    return [_percentile(p.strip()) for p in text.split(",") if p.strip()]


def _add(p, *names, **kw):
    p.add_argument(*names, **kw)


def _corpus_flags(p, transcripts=True):
    if transcripts:
        _add(p, "--transcripts", required=True, help="messages JSONL")
    _add(p, "--teams", required=True, help="teams JSONL with viability items")


def _eval_flags(p, lam_default=DEFAULT_CV_LAMBDA):
    _add(p, "--lambda", dest="lam", type=_lambda, default=lam_default, help="L1 strength or 'auto'")
    _add(p, "--seed", type=int, default=0)
    _add(p, "--subset", choices=("computational", "human", "all"), default="computational")


def _jobs_flag(p):
    _add(p, "--jobs", type=int, default=1, help="worker threads; results do not depend on it")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="teamviability", description="Team viability prediction from chat transcripts.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check a messages/teams pair")
    _corpus_flags(p)
    _add(p, "--out", help="write a JSON summary here")

    p = sub.add_parser("extract", help="compute the 42 computational features")
    _corpus_flags(p)
    _add(p, "--ratings", help="ratings JSONL; appends the 20 human-label columns")
    _add(p, "--lexicons", help="directory of lexicon files (default: bundled)")
    _add(p, "--window-start", type=float, default=None)
    _add(p, "--window-end", type=float, default=None)
    _add(p, "--rates", action="store_true", help="count features per 100 team words")
    _add(p, "--out", required=True, help="feature CSV")

    p = sub.add_parser("labels-aggregate", help="aggregate crowd ratings into hl_* columns")
    _corpus_flags(p)
    _add(p, "--ratings", required=True)
    _add(p, "--out", required=True, help="label CSV")

    p = sub.add_parser("train", help="fit a lasso-logistic model at one threshold")
    _add(p, "--features", required=True)
    _corpus_flags(p, transcripts=False)
    _add(p, "--percentile", type=_percentile, default=50)
    _eval_flags(p, lam_default=DEFAULT_LAMBDA)
    _add(p, "--model", required=True, help="output model JSON")

    p = sub.add_parser("cv", help="stratified k-fold CV across percentile thresholds")
    _add(p, "--features", required=True)
    _corpus_flags(p, transcripts=False)
    _add(p, "--percentiles", type=_percentiles, default=list(DEFAULT_PERCENTILES))
    _add(p, "--folds", type=int, default=DEFAULT_FOLDS)
    _eval_flags(p)
    _jobs_flag(p)
    _add(p, "--out", required=True, help="report JSON; .csv and .txt are written alongside")

    p = sub.add_parser("holdout-round", help="train on other rounds, test on one")
    _add(p, "--features", required=True)
    _corpus_flags(p, transcripts=False)
    _add(p, "--round", type=int, default=None, help="held-out round (default: every round present)")
    _add(p, "--train-n", type=int, default=300)
    _add(p, "--test-n", type=int, default=60)
    _add(p, "--percentile", type=_percentile, default=50)
    _eval_flags(p)
    _add(p, "--out", required=True)

    p = sub.add_parser("condition-eval", help="train on masked teams, test per condition")
    _add(p, "--features", required=True)
    _corpus_flags(p, transcripts=False)
    _add(p, "--percentile", type=_percentile, default=50)
    _eval_flags(p)
    _add(p, "--out", required=True)

    p = sub.add_parser("slice", help="thin-slicing sweep over time windows")
    _corpus_flags(p)
    _add(p, "--mode", choices=("cumulative", "disjoint"), default="cumulative")
    _add(p, "--increment", type=float, default=10.0)
    _add(p, "--window", type=float, default=200.0)
    _add(p, "--percentiles", type=_percentiles, default=[10, 50, 90])
    _add(p, "--folds", type=int, default=DEFAULT_FOLDS)
    _add(p, "--lexicons")
    _add(p, "--rates", action="store_true")
    _add(p, "--lambda", dest="lam", type=_lambda, default=DEFAULT_CV_LAMBDA)
    _add(p, "--seed", type=int, default=0)
    _jobs_flag(p)
    _add(p, "--out", required=True, help="report JSON; .csv and .txt are written alongside")

    p = sub.add_parser("score", help="predict P(high viability) with a saved model")
    _add(p, "--model", required=True)
    _add(p, "--features", required=True)
    _add(p, "--out", required=True, help="CSV of team_id,probability")

    p = sub.add_parser("coeffs", help="lasso coefficients with bootstrap CIs")
    _add(p, "--features", required=True)
    _corpus_flags(p, transcripts=False)
    _add(p, "--percentile", type=_percentile, default=50)
    _add(p, "--bootstrap", type=int, default=DEFAULT_BOOTSTRAP)
    _eval_flags(p, lam_default=DEFAULT_LAMBDA)
    _jobs_flag(p)
    _add(p, "--out", required=True)

    p = sub.add_parser("corr", help="viability vs task performance correlation")
    _corpus_flags(p, transcripts=False)
    _add(p, "--out", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus with a planted signal")
    _add(p, "--teams", type=int, required=True, help="number of teams")
    _add(p, "--effect", type=float, default=1.0)
    _add(p, "--condition-shift", type=float, default=0.0)
    _add(p, "--seed", type=int, default=0)
    _add(p, "--out-dir", required=True)
    return parser


# ---------------------------------------------------------------- helpers


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _sidecar_path(out: Path) -> Path:
    return out.with_name(out.stem + ".config.json")


def _write_sidecar(out: Path, args: argparse.Namespace, inputs: dict, outputs: list[Path], extra=None) -> None:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("verbose", "jobs")}
    config["inputs"] = {k: {"path": str(v), "sha256": _digest(v)} for k, v in sorted(inputs.items()) if v}
    config["outputs"] = [str(o) for o in outputs]
    if extra:
        config["resolved"] = extra
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    doc = {
        "tool": "teamviability",
        "version": __version__,
        "config_hash": hashlib.sha256(blob.encode("utf-8")).hexdigest(),
        "config": config,
    }
    _sidecar_path(out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _scores_for(table: FeatureTable, teams_path) -> dict[str, float]:
    corpus = load_corpus(None, teams_path)
    scores = corpus.scores()
    missing = [t for t in table.team_ids if t not in scores]
    if missing:
        raise ValidationError(f"feature table team {missing[0]!r} has no viability record", teams_path)
    return {t: scores[t] for t in table.team_ids}


def _labels(scores: dict[str, float], ids, p) -> np.ndarray:
    cutoff = percentile_cutoff([scores[t] for t in ids], p)
    y = np.array([1.0 if scores[t] > cutoff else -1.0 for t in ids])
    if np.all(y > 0) or np.all(y < 0):
        raise DegenerateAnalysisError(f"percentile {p} leaves one class empty")
    return y


def _window(args):
    if args.window_start is None and args.window_end is None:
        return None
    return (0.0 if args.window_start is None else args.window_start,
            float("inf") if args.window_end is None else args.window_end)


# ------------------------------------------------------------ subcommands


def cmd_validate(args) -> int:
    corpus = load_corpus(args.transcripts, args.teams)
    summary = dict(
        teams=len(corpus.transcripts),
        messages=corpus.n_messages,
        warnings=list(corpus.warnings),
        conditions={c: sum(1 for v in corpus.conditions().values() if v == c) for c in sorted(set(corpus.conditions().values()))},
    )
    print(f"ok: {summary['teams']} teams, {summary['messages']} messages, {len(summary['warnings'])} warnings")
    if args.out:
        out = Path(args.out)
        _write(out, _dump(summary))
        _write_sidecar(out, args, {"transcripts": args.transcripts, "teams": args.teams}, [out])
    return EXIT_OK


def cmd_extract(args) -> int:
    corpus = load_corpus(args.transcripts, args.teams)
    lexicons = load_lexicon_dir(args.lexicons) if args.lexicons else None
    window = _window(args)
    table, dropped = extract_table(corpus.transcripts.values(), window, lexicons, args.rates, skip_empty=True)
    if args.ratings:
        kept = {t: corpus.transcripts[t] for t in table.team_ids}
        subs = [s for s in load_ratings(args.ratings) if s.team_id in corpus.transcripts]
        subs = [s for s in subs if s.team_id in kept]
        table = table.join(aggregate_corpus(subs, kept))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_table(table, out)
    if dropped:
        log.warning("dropped %d teams with no messages in the window", len(dropped))
    inputs = {"transcripts": args.transcripts, "teams": args.teams, "ratings": args.ratings}
    _write_sidecar(out, args, inputs, [out], {"dropped": dropped, "n_teams": len(table.team_ids)})
    print(f"wrote {len(table.team_ids)} teams x {len(table.names)} features to {out}")
    return EXIT_OK


def cmd_labels(args) -> int:
    corpus = load_corpus(args.transcripts, args.teams)
    table = aggregate_corpus(load_ratings(args.ratings), corpus.transcripts)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_table(table, out)
    inputs = {"transcripts": args.transcripts, "teams": args.teams, "ratings": args.ratings}
    _write_sidecar(out, args, inputs, [out])
    print(f"wrote human labels for {len(table.team_ids)} teams to {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    table = read_table(args.features).columns(args.subset)
    scores = _scores_for(table, args.teams)
    y = _labels(scores, table.team_ids, args.percentile)
    model = train(table.values, y, lam=args.lam, seed=args.seed, names=table.names)
    out = Path(args.model)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    cutoff = percentile_cutoff(list(scores.values()), args.percentile)
    _write_sidecar(out, args, {"features": args.features, "teams": args.teams}, [out],
                   {"lambda": model.lam, "cutoff": cutoff, "converged": model.converged})
    print(f"trained on {len(y)} teams: {np.count_nonzero(model.weights)} nonzero weights, lambda={model.lam:g}")
    return EXIT_OK


def _report_outputs(out: Path, report) -> list[Path]:
    csv_path, txt_path = out.with_suffix(".csv"), out.with_suffix(".txt")
    _write(out, report.to_json())
    _write(csv_path, report.to_csv())
    _write(txt_path, report.to_text())
    return [out, csv_path, txt_path]


def cmd_cv(args) -> int:
    table = read_table(args.features)
    scores = _scores_for(table, args.teams)
    report = cv_sweep(table, scores, args.percentiles, args.folds, args.lam, args.seed, args.subset, args.jobs)
    out = Path(args.out)
    outputs = _report_outputs(out, report)
    _write_sidecar(out, args, {"features": args.features, "teams": args.teams}, outputs)
    sys.stdout.write(report.to_text())
    return EXIT_OK


def cmd_holdout(args) -> int:
    table = read_table(args.features)
    corpus = load_corpus(None, args.teams)
    scores = _scores_for(table, args.teams)
    rounds = corpus.rounds()
    wanted = sorted({rounds[t] for t in table.team_ids}) if args.round is None else [args.round]
    results = {}
    for j in wanted:
        rep = round_holdout(table, scores, rounds, j, args.train_n, args.test_n, args.seed, args.lam,
                            args.percentile, args.subset)
        results[f"round{j}"] = rep.to_dict()
        print(f"round {j}: auc={rep.mean_auc():.4f}")
    out = Path(args.out)
    _write(out, _dump(results))
    _write_sidecar(out, args, {"features": args.features, "teams": args.teams}, [out])
    return EXIT_OK


def cmd_condition(args) -> int:
    table = read_table(args.features)
    corpus = load_corpus(None, args.teams)
    scores = _scores_for(table, args.teams)
    reports = condition_split_eval(table, scores, corpus.conditions(), args.percentile, args.lam,
                                   subset=args.subset, seed=args.seed)
    out = Path(args.out)
    _write(out, _dump({c: r.to_dict() for c, r in reports.items()}))
    _write_sidecar(out, args, {"features": args.features, "teams": args.teams}, [out])
    for c, r in reports.items():
        print(f"{c}: auc={r.mean_auc():.4f}")
    return EXIT_OK


def cmd_slice(args) -> int:
    corpus = load_corpus(args.transcripts, args.teams)
    lexicons = load_lexicon_dir(args.lexicons) if args.lexicons else None
    report = thin_slice_sweep(corpus, args.mode, args.increment, args.window, args.percentiles, args.folds,
                              args.lam, args.seed, lexicons, args.rates, args.jobs)
    out = Path(args.out)
    outputs = _report_outputs(out, report)
    _write_sidecar(out, args, {"transcripts": args.transcripts, "teams": args.teams}, outputs)
    sys.stdout.write(report.to_text())
    return EXIT_OK


def cmd_score(args) -> int:
    model = load_model(args.model)
    table = read_table(args.features)
    missing = [n for n in model.feature_names if n not in table.names]
    if missing:
        raise ModelFormatError(f"feature table lacks model feature {missing[0]!r}")
    idx = [table.names.index(n) for n in model.feature_names]
    proba = model.predict_proba(table.values[:, idx])
    lines = ["team_id,probability"] + [f"{t},{float(p)!r}" for t, p in zip(table.team_ids, proba)]
    out = Path(args.out)
    _write(out, "\n".join(lines) + "\n")
    _write_sidecar(out, args, {"model": args.model, "features": args.features}, [out])
    print(f"scored {len(proba)} teams")
    return EXIT_OK


def cmd_coeffs(args) -> int:
    table = read_table(args.features).columns(args.subset)
    scores = _scores_for(table, args.teams)
    y = _labels(scores, table.team_ids, args.percentile)
    lam = args.lam
    if lam == "auto":
        from .model import universal_lambda

        lam = universal_lambda(*table.values.shape)
    report = coefficients_with_ci(table.values, y, lam, args.bootstrap, args.seed, table.names, n_jobs=args.jobs)
    out = Path(args.out)
    doc = report.to_dict()
    doc["percentile"] = args.percentile
    _write(out, _dump(doc))
    _write_sidecar(out, args, {"features": args.features, "teams": args.teams}, [out], {"lambda": lam})
    print(f"{'feature':<28} {'coef':>8} {'ci_lo':>8} {'ci_hi':>8}")
    for r in doc["features"]:
        if r["significant"]:
            print(f"{r['feature']:<28} {r['coefficient']:8.3f} {r['ci_lo']:8.3f} {r['ci_hi']:8.3f}")
    return EXIT_OK


def cmd_corr(args) -> int:
    corpus = load_corpus(None, args.teams)
    scores, perf = corpus.scores(), corpus.performance()
    ids = sorted(perf)
    res = performance_correlation([scores[t] for t in ids], [perf[t] for t in ids])
    out = Path(args.out)
    _write(out, _dump(res))
    _write_sidecar(out, args, {"teams": args.teams}, [out])
    print(f"r={res['r']:.4f} r^2={res['r_squared']:.4f} n={res['n']}")
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        corpus, ratings = generate_synthetic_corpus(args.teams, args.effect, args.condition_shift, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    paths = write_synthetic_corpus(corpus, ratings, args.out_dir)
    out = Path(args.out_dir) / "synth.json"
    _write_sidecar(out, args, {}, list(paths.values()))
    print(f"wrote {args.teams} teams to {args.out_dir}")
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "extract": cmd_extract,
    "labels-aggregate": cmd_labels,
    "train": cmd_train,
    "cv": cmd_cv,
    "holdout-round": cmd_holdout,
    "condition-eval": cmd_condition,
    "slice": cmd_slice,
    "score": cmd_score,
    "coeffs": cmd_coeffs,
    "corr": cmd_corr,
    "synth": cmd_synth,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"teamviability {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DegenerateAnalysisError, SingleClassError) as exc:
        print(f"teamviability {args.command}: degenerate analysis: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ValidationError, LexiconError, ModelFormatError, ValueError, OSError) as exc:
        print(f"teamviability {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
