"""L1-regularized logistic regression on standardized features.

The solver is proximal gradient descent (ISTA) with a backtracking line search
on the step size. It minimizes

    (1/n) * sum_i log(1 + exp(-y_i (w . x_i + b))) + lam * ||w||_1

with labels y in {-1, +1} and an unpenalized intercept b.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import expit

from .features import ALL_FEATURES, FeatureVector

FORMAT_VERSION = "teamviability-model/1"
DEFAULT_LAMBDA = 0.01
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10_000
DEFAULT_BOOTSTRAP = 200
MAX_RESAMPLE_RETRIES = 100


class SingleClassError(ValueError):
    """Training data (or a resample of it) contains only one class."""


class ModelFormatError(ValueError):
    pass


class RegistryMismatchError(ModelFormatError):
    pass


@dataclass(frozen=True)
class Standardizer:
    names: tuple[str, ...]
    means: np.ndarray
    stds: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != len(self.names):
            raise RegistryMismatchError(f"expected {len(self.names)} features, got {X.shape[-1]}")
        safe = np.where(self.stds > 0, self.stds, 1.0)
        return np.where(self.stds > 0, (X - self.means) / safe, 0.0)


def fit_standardizer(X: np.ndarray, names: Sequence[str] | None = None) -> Standardizer:
    """Column means and population standard deviations of the training rows."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("standardizer needs a 2-D matrix with at least two rows")
    if names is None:
        names = tuple(f"x{j}" for j in range(X.shape[1]))
    if len(names) != X.shape[1]:
        raise ValueError("names do not match matrix width")
    return Standardizer(tuple(names), X.mean(axis=0), X.std(axis=0))


@dataclass
class TrainedModel:
    weights: np.ndarray
    intercept: float
    lam: float
    standardizer: Standardizer
    seed: int = 0
    iterations: int = 0
    objective: float = math.nan
    tol: float = DEFAULT_TOL
    converged: bool = False
    history: list[float] = field(default_factory=list, repr=False)

    @property
    def feature_names(self) -> tuple[str, ...]:
        return self.standardizer.names

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        Z = self.standardizer.transform(X)
        return Z @ self.weights + self.intercept

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """P(high) for each raw (unstandardized) row."""
        return expit(self.decision_function(X))

    def negated(self) -> "TrainedModel":
        return TrainedModel(-self.weights, -self.intercept, self.lam, self.standardizer, self.seed)


def predict_proba(model: TrainedModel, x: FeatureVector) -> float:
    if tuple(x.names) != model.feature_names:
        raise RegistryMismatchError("feature vector names/order differ from the model registry")
    return float(model.predict_proba(np.asarray(x.values, dtype=float)[None, :])[0])


# ------------------------------------------------------------------ solver


def logistic_loss(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray) -> float:
    margins = y * (X @ w + b)
    return float(np.mean(np.logaddexp(0.0, -margins)))


def logistic_grad(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    margins = y * (X @ w + b)
    s = -y * expit(-margins)
    return X.T @ s / len(y), float(np.mean(s))


def objective(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, lam: float) -> float:
    return logistic_loss(w, b, X, y) + lam * float(np.sum(np.abs(w)))


def soft_threshold(x: np.ndarray, t: float) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def null_intercept(y: np.ndarray) -> float:
    """Optimal intercept when all weights are zero."""
    p = float(np.mean(y > 0))
    return math.log(p / (1.0 - p))


def lambda_max(X: np.ndarray, y: np.ndarray) -> float:
    """Smallest lam for which w = 0 solves the lasso problem."""
    X, y = _check_xy(X, y)
    gw, _ = logistic_grad(np.zeros(X.shape[1]), null_intercept(y), X, y)
    return float(np.max(np.abs(gw))) if gw.size else 0.0


def universal_lambda(n: int, d: int) -> float:
    """Noise-level penalty: the typical largest weight gradient when no feature
    carries signal (logistic residual sd <= 1/2, d standardized features)."""
    return 0.5 * math.sqrt(2.0 * math.log(2.0 * max(d, 1)) / n)


def resolve_lambda(lam: float | str, n: int, d: int) -> float:
    if lam == "auto":
        return universal_lambda(n, d)
    lam = float(lam)
    if lam < 0 or not math.isfinite(lam):
        raise ValueError("lambda must be a finite non-negative number or 'auto'")
    return lam


def _check_xy(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be n x d and y length n")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature values")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    if np.all(y == 1) or np.all(y == -1):
        raise SingleClassError("training labels contain a single class")
    return X, y


def fit_lasso_logistic(
    X: np.ndarray,
    y: np.ndarray,
    lam: float = DEFAULT_LAMBDA,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> dict:
    """Solve the lasso-logistic problem on an already standardized matrix."""
    X, y = _check_xy(X, y)
    if lam < 0 or not math.isfinite(lam):
        raise ValueError("lambda must be a finite non-negative number")
    n, d = X.shape
    w = np.zeros(d)
    b = null_intercept(y)
    # Lipschitz bound of the smooth part: ||[X 1]||_2^2 / (4n)
    lip = (np.linalg.norm(np.hstack([X, np.ones((n, 1))]), 2) ** 2) / (4.0 * n)
    step = 1.0 / max(lip, 1e-12)
    f = logistic_loss(w, b, X, y)
    F = f + lam * float(np.sum(np.abs(w)))
    history = [F]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        gw, gb = logistic_grad(w, b, X, y)
        while True:
            w_new = soft_threshold(w - step * gw, step * lam)
            b_new = b - step * gb
            dw, db = w_new - w, b_new - b
            f_new = logistic_loss(w_new, b_new, X, y)
            quad = f + float(gw @ dw) + gb * db + (float(dw @ dw) + db * db) / (2.0 * step)
            if f_new <= quad + 1e-15 * abs(f) or step < 1e-20:
                break
            step *= 0.5
        F_new = f_new + lam * float(np.sum(np.abs(w_new)))
        if F_new > F:
            # rounding noise at the optimum; keep the previous iterate
            converged = True
            break
        w, b, f = w_new, b_new, f_new
        history.append(F_new)
        change = abs(F - F_new)
        F = F_new
        if change <= tol * max(abs(F), 1e-300) or (not dw.any() and db == 0.0):
            converged = True
            break
        step *= 1.25
    return dict(weights=w, intercept=float(b), iterations=it, objective=F, converged=converged, history=history)


def train(
    X: np.ndarray,
    y: np.ndarray,
    lam: float | str = DEFAULT_LAMBDA,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    names: Sequence[str] | None = None,
    standardizer: Standardizer | None = None,
) -> TrainedModel:
    """Fit a standardizer on X (unless given) and the lasso-logistic model on top.

    y holds +1 for high viability and -1 for low. The solver is deterministic;
    ``seed`` is recorded for provenance. ``lam="auto"`` uses
    :func:`universal_lambda` for the training matrix shape.
    """
    X = np.asarray(X, dtype=float)
    lam = resolve_lambda(lam, *X.shape)
    if standardizer is None:
        standardizer = fit_standardizer(X, names)
    Z = standardizer.transform(X)
    sol = fit_lasso_logistic(Z, y, lam, tol, max_iter)
    return TrainedModel(
        weights=sol["weights"],
        intercept=sol["intercept"],
        lam=float(lam),
        standardizer=standardizer,
        seed=int(seed),
        iterations=sol["iterations"],
        objective=sol["objective"],
        tol=tol,
        converged=sol["converged"],
        history=sol["history"],
    )


# --------------------------------------------------------- coefficient CIs


@dataclass(frozen=True)
class CoefficientReport:
    names: tuple[str, ...]
    coefficients: np.ndarray
    boot_median: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    n_boot: int
    lam: float
    seed: int

    @property
    def significant(self) -> np.ndarray:
        return (self.lo > 0) | (self.hi < 0)

    def row(self, name: str) -> dict:
        j = self.names.index(name)
        return dict(
            feature=name,
            coefficient=float(self.coefficients[j]),
            boot_median=float(self.boot_median[j]),
            ci_lo=float(self.lo[j]),
            ci_hi=float(self.hi[j]),
            significant=bool(self.significant[j]),
        )

    def to_dict(self) -> dict:
        return dict(
            lam=self.lam,
            seed=self.seed,
            n_boot=self.n_boot,
            features=[self.row(n) for n in self.names],
        )


def _replicate(Z, y, lam, tol, max_iter, seq: np.random.SeedSequence) -> np.ndarray:
    rng = np.random.default_rng(seq)
    n = len(y)
    for _ in range(MAX_RESAMPLE_RETRIES):
        idx = rng.integers(0, n, size=n)
        yb = y[idx]
        if np.any(yb > 0) and np.any(yb < 0):
            return fit_lasso_logistic(Z[idx], yb, lam, tol, max_iter)["weights"]
    raise SingleClassError(f"no two-class resample after {MAX_RESAMPLE_RETRIES} draws")


def coefficients_with_ci(
    X: np.ndarray,
    y: np.ndarray,
    lam: float = DEFAULT_LAMBDA,
    n_boot: int = DEFAULT_BOOTSTRAP,
    seed: int = 0,
    names: Sequence[str] | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    n_jobs: int = 1,
) -> CoefficientReport:
    """Standardized lasso coefficients with percentile bootstrap 95% CIs.

    Teams are resampled with replacement; each replicate has its own seed
    spawned from ``seed``, so results do not depend on ``n_jobs``.
    """
    if n_boot < 50:
        raise ValueError("need at least 50 bootstrap replicates")
    X = np.asarray(X, dtype=float)
    std = fit_standardizer(X, names)
    Z = std.transform(X)
    _, y = _check_xy(Z, y)
    full = fit_lasso_logistic(Z, y, lam, tol, max_iter)["weights"]
    seqs = np.random.SeedSequence(seed).spawn(n_boot)
    if n_jobs == 1:
        draws = [_replicate(Z, y, lam, tol, max_iter, s) for s in seqs]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            draws = list(pool.map(lambda s: _replicate(Z, y, lam, tol, max_iter, s), seqs))
    W = np.vstack(draws)
    lo, med, hi = np.percentile(W, [2.5, 50.0, 97.5], axis=0)
    return CoefficientReport(std.names, full, med, lo, hi, n_boot, float(lam), int(seed))


# ---------------------------------------------------------- serialization


def _check_registry(names: Sequence[str]) -> None:
    known = [n for n in ALL_FEATURES if n in names]
    if list(names) != known:
        raise RegistryMismatchError("feature_names are not a registry-ordered subset of the feature registry")


def model_to_dict(model: TrainedModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "feature_names": list(model.feature_names),
        "means": model.standardizer.means.tolist(),
        "stds": model.standardizer.stds.tolist(),
        "weights": model.weights.tolist(),
        "intercept": model.intercept,
        "lambda": model.lam,
        "seed": model.seed,
        "solver": {"iterations": model.iterations, "objective": model.objective, "tol": model.tol},
    }


def save_model(model: TrainedModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> TrainedModel:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"{path}: cannot read model ({exc})") from None
    if not isinstance(obj, dict):
        raise ModelFormatError(f"{path}: model file must hold a JSON object")
    if obj.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported format_version {obj.get('format_version')!r}, expected {FORMAT_VERSION!r}"
        )
    try:
        names = tuple(obj["feature_names"])
        means = np.asarray(obj["means"], dtype=float)
        stds = np.asarray(obj["stds"], dtype=float)
        weights = np.asarray(obj["weights"], dtype=float)
        solver = obj["solver"]
        model = TrainedModel(
            weights=weights,
            intercept=float(obj["intercept"]),
            lam=float(obj["lambda"]),
            standardizer=Standardizer(names, means, stds),
            seed=int(obj["seed"]),
            iterations=int(solver["iterations"]),
            objective=float(solver["objective"]),
            tol=float(solver["tol"]),
            converged=True,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: corrupt model file ({exc})") from None
    _check_registry(names)
    if not (len(means) == len(stds) == len(weights) == len(names)):
        raise RegistryMismatchError(f"{path}: parameter lengths do not match feature_names")
    if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(means)) and np.all(stds >= 0)):
        raise ModelFormatError(f"{path}: non-finite parameters")
    return model
