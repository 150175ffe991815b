"""Per-area sparse linear classifiers on bag-of-words, plus propagation.

Each macro area gets an independent L1-penalized least-squares model fit by
coordinate descent on the Gram (covariance) form of the problem,

    (1/2n) ||y - X b - b0||^2 + lam * ||b||_1,

with an unpenalized intercept handled by centering. The L1 strength is
chosen by nested cross-validation (5 outer folds for reporting, 4 inner
folds for selection) maximizing precision of the thresholded prediction.
A score strictly above 0.5 counts as a positive label.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from ..errors import ConfigError, DataError

logger = logging.getLogger(__name__)

THRESHOLD = 0.5
N_LAMBDA = 20
LAMBDA_MIN_RATIO = 1e-3
OUTER_FOLDS = 5
INNER_FOLDS = 4


def _soft(x: float, t: float) -> float:
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


def lasso_gram(G: np.ndarray, q: np.ndarray, lam: float,
               beta0: np.ndarray | None = None, tol: float = 1e-9,
               max_passes: int = 1000) -> np.ndarray:
    """Coordinate descent on centered second moments.

    G = X'X/n - mean outer product, q = X'y/n - x_mean*y_mean. The running
    product G @ beta is updated incrementally per coordinate move.
    """
    p = q.shape[0]
    beta = np.zeros(p) if beta0 is None else beta0.copy()
    Gb = G @ beta if beta.any() else np.zeros(p)
    diag = np.diag(G).copy()
    for _ in range(max_passes):
        delta_max = 0.0
        for j in range(p):
            if diag[j] <= 0.0:
                continue
            rho = q[j] - Gb[j] + diag[j] * beta[j]
            new = _soft(rho, lam) / diag[j]
            d = new - beta[j]
            if d != 0.0:
                beta[j] = new
                Gb += G[:, j] * d
                delta_max = max(delta_max, abs(d))
        if delta_max < tol:
            break
    return beta


def lasso_kkt_violation(G: np.ndarray, q: np.ndarray, beta: np.ndarray,
                        lam: float) -> float:
    """Largest violation of the subgradient optimality conditions."""
    grad = G @ beta - q
    worst = 0.0
    for j in range(beta.shape[0]):
        if beta[j] == 0.0:
            worst = max(worst, abs(grad[j]) - lam)
        else:
            worst = max(worst, abs(grad[j] + lam * np.sign(beta[j])))
    return worst


@dataclass
class LassoPath:
    lambdas: np.ndarray
    betas: np.ndarray        # len(lambdas) x p
    intercepts: np.ndarray
    x_mean: np.ndarray
    y_mean: float


def _moments(X, y: np.ndarray):
    n = X.shape[0]
    if sparse.issparse(X):
        Xd = X
        x_mean = np.asarray(X.mean(axis=0)).ravel()
        G = np.asarray((Xd.T @ Xd).todense()) / n - np.outer(x_mean, x_mean)
        q = np.asarray(Xd.T @ y).ravel() / n - x_mean * float(y.mean())
    else:
        X = np.asarray(X, dtype=np.float64)
        x_mean = X.mean(axis=0)
        G = X.T @ X / n - np.outer(x_mean, x_mean)
        q = X.T @ y / n - x_mean * float(y.mean())
    return G, q, x_mean, float(y.mean())


def lambda_grid(q: np.ndarray, n_lambda: int = N_LAMBDA,
                min_ratio: float = LAMBDA_MIN_RATIO) -> np.ndarray:
    lam_max = float(np.max(np.abs(q)))
    if lam_max <= 0.0:
        lam_max = 1e-8
    return np.geomspace(lam_max, lam_max * min_ratio, n_lambda)


def lasso_path(X, y: np.ndarray, lambdas: np.ndarray | None = None) -> LassoPath:
    """Warm-started descent along a decreasing lambda grid."""
    G, q, x_mean, y_mean = _moments(X, y)
    if lambdas is None:
        lambdas = lambda_grid(q)
    betas = np.zeros((len(lambdas), q.shape[0]))
    beta = None
    for i, lam in enumerate(lambdas):
        beta = lasso_gram(G, q, float(lam), beta0=beta)
        betas[i] = beta
    intercepts = y_mean - betas @ x_mean
    return LassoPath(lambdas=np.asarray(lambdas, dtype=np.float64), betas=betas,
                     intercepts=intercepts, x_mean=x_mean, y_mean=y_mean)


def _precision(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    pos = y_pred > THRESHOLD
    if not pos.any():
        return 0.0
    return float(np.mean(y_true[pos] > THRESHOLD))


def _folds(n: int, k: int, rng: np.random.Generator) -> list[np.ndarray]:
    idx = rng.permutation(n)
    return [np.sort(part) for part in np.array_split(idx, k)]


@dataclass
class AreaClassifier:
    area: str
    weights: np.ndarray
    intercept: float
    lam: float
    seed: int
    precision: float = float("nan")  # pooled over outer CV folds
    f1: float = float("nan")
    threshold: float = THRESHOLD

    def scores(self, X) -> np.ndarray:
        if sparse.issparse(X):
            return np.asarray(X @ self.weights).ravel() + self.intercept
        return np.asarray(X, dtype=np.float64) @ self.weights + self.intercept

    def save(self, path: str | Path, vocab_lemmas: list[str]) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"# area={self.area} lambda={format(self.lam, '.12g')} "
                    f"threshold={self.threshold} seed={self.seed} "
                    f"precision={format(self.precision, '.12g')} "
                    f"f1={format(self.f1, '.12g')}\n")
            f.write(f"__intercept__\t{format(self.intercept, '.12g')}\n")
            for j in np.flatnonzero(self.weights):
                f.write(f"{vocab_lemmas[j]}\t{format(self.weights[j], '.12g')}\n")

    @classmethod
    def load(cls, path: str | Path, vocab_index: dict[str, int]) -> "AreaClassifier":
        params: dict[str, str] = {}
        weights = np.zeros(len(vocab_index))
        intercept = 0.0
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.rstrip("\n")
                if not line:
                    continue
                if line.startswith("#"):
                    for kv in line[1:].split():
                        if "=" in kv:
                            k, v = kv.split("=", 1)
                            params[k] = v
                    continue
                lemma, val = line.split("\t")
                if lemma == "__intercept__":
                    intercept = float(val)
                elif lemma in vocab_index:
                    weights[vocab_index[lemma]] = float(val)
                else:
                    raise DataError(f"{path}: lemma {lemma!r} not in vocabulary")
        return cls(area=params.get("area", ""), weights=weights, intercept=intercept,
                   lam=float(params.get("lambda", 0.0)), seed=int(params.get("seed", 0)),
                   precision=float(params.get("precision", "nan")),
                   f1=float(params.get("f1", "nan")),
                   threshold=float(params.get("threshold", THRESHOLD)))


def _select_lambda(X, y: np.ndarray, folds: list[np.ndarray],
                   lambdas: np.ndarray) -> float:
    """Mean thresholded precision per lambda over folds; ties prefer the
    larger (sparser) lambda. The grid is decreasing, so the first argmax wins."""
    n = X.shape[0]
    scores = np.zeros(len(lambdas))
    for fold in folds:
        mask = np.ones(n, dtype=bool)
        mask[fold] = False
        path = lasso_path(X[mask], y[mask], lambdas)
        Xv = X[fold]
        for i in range(len(lambdas)):
            pred = (Xv @ path.betas[i]) + path.intercepts[i]
            pred = np.asarray(pred).ravel()
            scores[i] += _precision(y[fold], pred)
    best = int(np.argmax(scores))
    return float(lambdas[best])


def nested_cv_train(X, y: np.ndarray, area: str, seed: int = 0) -> AreaClassifier:
    """Outer folds give pooled precision/F1; the shipped model refits on all
    rows at a lambda selected by inner CV on the full data."""
    n = X.shape[0]
    rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    lambdas = lambda_grid(_moments(X, y)[1])
    tp = fp = fn = 0
    outer = _folds(n, OUTER_FOLDS, rng)
    for fold in outer:
        mask = np.ones(n, dtype=bool)
        mask[fold] = False
        Xtr, ytr = X[mask], y[mask]
        inner = _folds(int(mask.sum()), INNER_FOLDS, rng)
        lam = _select_lambda(Xtr, ytr, inner, lambdas)
        path = lasso_path(Xtr, ytr, np.asarray([lam]))
        pred = np.asarray(X[fold] @ path.betas[0]).ravel() + path.intercepts[0]
        hit = pred > THRESHOLD
        true = y[fold] > THRESHOLD
        tp += int(np.sum(hit & true))
        fp += int(np.sum(hit & ~true))
        fn += int(np.sum(~hit & true))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0

    final_folds = _folds(n, INNER_FOLDS, rng)
    lam = _select_lambda(X, y, final_folds, lambdas)
    path = lasso_path(X, y, np.asarray([lam]))
    return AreaClassifier(area=area, weights=path.betas[0],
                          intercept=float(path.intercepts[0]), lam=lam,
                          seed=seed, precision=precision, f1=f1)


MIN_POSITIVES = 50


def train_area_classifiers(X, targets: dict[str, np.ndarray], seed: int = 0,
                           threads: int = 1,
                           min_positives: int = MIN_POSITIVES) -> dict[str, AreaClassifier]:
    """X: BOW rows for the training tweets; targets: area -> 0/1 vector."""
    areas = sorted(targets)
    usable = []
    for area in areas:
        y = np.asarray(targets[area], dtype=np.float64)
        npos = int(np.sum(y > 0.5))
        if npos < min_positives:
            logger.warning("area %s has %d positives (< %d); skipped", area, npos, min_positives)
            continue
        if npos == y.size:
            logger.warning("area %s is all-positive; skipped", area)
            continue
        usable.append(area)
    if not usable:
        raise DataError("no trainable areas; check the merge map and thresholds")

    def train_one(i_area):
        i, area = i_area
        y = np.asarray(targets[area], dtype=np.float64)
        return area, nested_cv_train(X, y, area, seed=seed + i)

    items = list(enumerate(usable))
    out: dict[str, AreaClassifier] = {}
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(train_one, it) for it in items]
        for fut in futures:  # submission order keeps reduction deterministic
            area, clf = fut.result()
            out[area] = clf
    else:
        for it in items:
            area, clf = train_one(it)
            out[area] = clf
    return out


@dataclass
class AreaLabels:
    ids: list[str]
    areas: list[str]
    scores: np.ndarray  # n x len(areas)

    def binary(self) -> np.ndarray:
        return self.scores > THRESHOLD

    def area_scores(self, area: str) -> np.ndarray:
        return self.scores[:, self.areas.index(area)]


def propagate_labels(classifiers: dict[str, AreaClassifier], X,
                     ids: list[str]) -> AreaLabels:
    areas = sorted(classifiers)
    if not areas:
        raise ConfigError("no classifiers to propagate")
    cols = [classifiers[a].scores(X) for a in areas]
    return AreaLabels(ids=list(ids), areas=areas, scores=np.column_stack(cols))


def coverage_table(labels: AreaLabels, outlet_of: dict[str, str | None]) -> tuple[list[str], list[str], np.ndarray]:
    """Percent of each outlet's posts labelled with each area."""
    outlets = sorted({o for o in outlet_of.values() if o})
    rows = {o: np.zeros(len(labels.areas)) for o in outlets}
    totals = {o: 0 for o in outlets}
    binary = labels.binary()
    for i, tid in enumerate(labels.ids):
        o = outlet_of.get(tid)
        if not o:
            continue
        rows[o] += binary[i]
        totals[o] += 1
    mat = np.zeros((len(outlets), len(labels.areas)))
    for r, o in enumerate(outlets):
        if totals[o]:
            mat[r] = 100.0 * rows[o] / totals[o]
    return outlets, list(labels.areas), mat
