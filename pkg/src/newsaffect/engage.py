"""Engagement regressions over outlet-post affect features.

Every column (features and targets) is quantile-normalized through the
rank-based inverse normal transform, multicollinearity is controlled by
iterative VIF filtering at 5.0, and ordinary least squares supplies
standardized coefficients, classical standard errors, two-sided t-test
p-values, and adjusted R^2. One model per (scheme, target); per-area
submodels reuse the pipeline on label-selected row subsets with follower
count as the only confounder.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special, stats

from .errors import ConfigError, DataError, NumericalError

logger = logging.getLogger(__name__)

VIF_THRESHOLD = 5.0
SIGNIFICANCE = 0.05
RANK_OFFSET = 0.5  # value -> ndtri((rank - RANK_OFFSET) / n)

TARGETS = ("likes", "retweets", "replies", "quotes", "conversation_sentiment")


def quantile_normalize(x: np.ndarray, offset: float = RANK_OFFSET) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ConfigError("quantile_normalize expects a 1-d column")
    n = x.size
    if n < 2 or np.all(x == x[0]):
        raise DataError("constant or empty column cannot be quantile-normalized")
    ranks = stats.rankdata(x, method="average")
    return special.ndtri((ranks - offset) / n)


def vif_values(X: np.ndarray) -> np.ndarray:
    """VIF_j = 1 / (1 - R^2_j), column j regressed on the others + intercept."""
    X = np.asarray(X, dtype=np.float64)
    n, p = X.shape
    out = np.empty(p)
    for j in range(p):
        y = X[:, j]
        others = np.delete(X, j, axis=1)
        A = np.column_stack([np.ones(n), others])
        beta, *_ = np.linalg.lstsq(A, y, rcond=None)
        resid = y - A @ beta
        tss = float(np.sum((y - y.mean()) ** 2))
        if tss == 0.0:
            out[j] = np.inf
            continue
        r2 = 1.0 - float(np.sum(resid**2)) / tss
        out[j] = np.inf if r2 >= 1.0 else 1.0 / (1.0 - r2)
    return out


def vif_filter(X: np.ndarray, names: list[str],
               threshold: float = VIF_THRESHOLD) -> tuple[list[int], list[str]]:
    """Indices of surviving columns plus names of the dropped, in drop order.

    While any VIF exceeds the threshold the worst column goes; on exact ties
    the later column goes, so earlier columns win.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] <= X.shape[1]:
        raise DataError(f"need more rows than columns for VIF ({X.shape[0]} x {X.shape[1]})")
    alive = list(range(X.shape[1]))
    dropped: list[str] = []
    while len(alive) > 1:
        vifs = vif_values(X[:, alive])
        worst = float(np.max(vifs))
        if worst <= threshold:
            break
        pos = int(np.flatnonzero(vifs == worst)[-1])
        dropped.append(names[alive[pos]])
        del alive[pos]
    return alive, dropped


@dataclass(frozen=True)
class CoefEntry:
    name: str
    beta: float
    se: float
    t: float
    p: float

    @property
    def significant(self) -> bool:
        return self.p <= SIGNIFICANCE


@dataclass
class RegressionReport:
    scheme: str
    target: str
    n: int
    r2: float
    adj_r2: float
    intercept: float
    coefficients: list[CoefEntry] = field(default_factory=list)
    dropped_vif: list[str] = field(default_factory=list)
    dropped_constant: list[str] = field(default_factory=list)
    area: str | None = None


def fit_ols(X: np.ndarray, y: np.ndarray, names: list[str],
            scheme: str = "", target: str = "") -> RegressionReport:
    """Least squares with intercept; inputs are expected pre-normalized."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    if len(names) != p:
        raise ConfigError("one name per column required")
    if n <= p + 1:
        raise DataError(f"n={n} too small for p={p} features")
    A = np.column_stack([np.ones(n), X])
    gram = A.T @ A
    try:
        gram_inv = np.linalg.inv(gram)
    except np.linalg.LinAlgError:
        raise NumericalError("singular design matrix after VIF filtering") from None
    beta = gram_inv @ (A.T @ y)
    resid = y - A @ beta
    rss = float(resid @ resid)
    tss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - rss / tss if tss > 0 else 0.0
    df = n - p - 1
    adj_r2 = 1.0 - (1.0 - r2) * (n - 1) / df
    sigma2 = rss / df
    se = np.sqrt(np.maximum(sigma2 * np.diag(gram_inv), 0.0))
    coefs = []
    for j, name in enumerate(names):
        b = float(beta[j + 1])
        s = float(se[j + 1])
        if s > 0:
            t = b / s
            pval = 2.0 * float(stats.t.sf(abs(t), df))
        else:
            t, pval = np.inf if b else 0.0, 0.0 if b else 1.0
        coefs.append(CoefEntry(name, b, s, t, pval))
    return RegressionReport(scheme=scheme, target=target, n=n, r2=r2,
                            adj_r2=adj_r2, intercept=float(beta[0]),
                            coefficients=coefs)


@dataclass
class FeatureTable:
    """Raw (un-normalized) design columns for outlet posts.

    groups maps a feature-group name to its column names; columns not in any
    group are unavailable to schemes. article_rows flags rows for which the
    article-text feature variants are populated.
    """

    ids: list[str]
    names: list[str]
    X: np.ndarray
    groups: dict[str, list[str]]
    article_rows: np.ndarray | None = None

    def __post_init__(self):
        if self.X.shape != (len(self.ids), len(self.names)):
            raise ConfigError("feature matrix shape does not match ids/names")
        col = set(self.names)
        for g, cols in self.groups.items():
            missing = [c for c in cols if c not in col]
            if missing:
                raise ConfigError(f"group {g!r} references unknown columns {missing}")

    def columns(self, wanted: list[str]) -> np.ndarray:
        idx = [self.names.index(c) for c in wanted]
        return self.X[:, idx]


# scheme -> (feature groups, include confounders)
_SCHEMES = {
    "all": (("emotions", "morals", "nmf"), True),
    "followers": ((), "followers_only"),
    "areas": ((), "areas_only"),
    "nmf": (("nmf",), True),
    "emotions": (("emotions",), True),
    "morals": (("morals",), True),
    "emotions_article": (("emotions_article",), True),
    "morals_article": (("morals_article",), True),
}


def _scheme_columns(features: FeatureTable, scheme: str,
                    confounders: bool = True) -> list[str]:
    group_names, conf_mode = _SCHEMES[scheme]
    cols: list[str] = []
    for g in group_names:
        cols.extend(features.groups.get(g, ()))
    if conf_mode == "followers_only":
        cols.extend(features.groups.get("followers", ()))
    elif conf_mode == "areas_only":
        cols.extend(features.groups.get("areas", ()))
    elif conf_mode and confounders:
        cols.extend(features.groups.get("followers", ()))
        cols.extend(features.groups.get("areas", ()))
    # preserve table order, duplicates impossible by construction
    order = {c: i for i, c in enumerate(features.names)}
    return sorted(cols, key=order.__getitem__)


def _prepare(X: np.ndarray, names: list[str]) -> tuple[np.ndarray, list[str], list[str]]:
    """Drop constant columns (warned), quantile-normalize the rest."""
    keep: list[int] = []
    dropped: list[str] = []
    for j in range(X.shape[1]):
        col = X[:, j]
        if np.all(col == col[0]):
            dropped.append(names[j])
        else:
            keep.append(j)
    if dropped:
        logger.warning("dropping constant columns: %s", ", ".join(dropped))
    Xn = np.column_stack([quantile_normalize(X[:, j]) for j in keep]) if keep else \
        np.empty((X.shape[0], 0))
    return Xn, [names[j] for j in keep], dropped


def _run_one(features: FeatureTable, scheme: str, target: str, y: np.ndarray,
             rows: np.ndarray, confounders: bool = True,
             area: str | None = None) -> RegressionReport | None:
    cols = _scheme_columns(features, scheme, confounders=confounders)
    if not cols:
        logger.warning("scheme %s has no columns; skipped", scheme)
        return None
    X = features.columns(cols)[rows]
    yv = y[rows]
    if yv.size < 2 or np.all(yv == yv[0]):
        logger.warning("target %s constant on %s subset; skipped", target, scheme)
        return None
    Xn, names, dropped_const = _prepare(X, cols)
    if Xn.shape[1] == 0:
        logger.warning("scheme %s degenerate for %s: all columns constant", scheme, target)
        rep = RegressionReport(scheme=scheme, target=target, n=int(yv.size),
                               r2=0.0, adj_r2=0.0, intercept=float(np.mean(yv)),
                               dropped_constant=dropped_const, area=area)
        return rep
    kept_idx, dropped_vif = vif_filter(Xn, names)
    Xk = Xn[:, kept_idx]
    kept_names = [names[i] for i in kept_idx]
    yn = quantile_normalize(yv)
    rep = fit_ols(Xk, yn, kept_names, scheme=scheme, target=target)
    rep.dropped_vif = dropped_vif
    rep.dropped_constant = dropped_const
    rep.area = area
    return rep


def run_engagement_suite(features: FeatureTable, targets: dict[str, np.ndarray],
                         schemes: list[str] | None = None) -> list[RegressionReport]:
    """One model per (scheme, target); article schemes restrict to rows with
    article text, sentiment targets to rows with observed conversations
    (NaN marks a post with no replies)."""
    if schemes is None:
        schemes = ["all", "followers", "areas", "nmf", "emotions", "morals"]
        if features.article_rows is not None and bool(np.any(features.article_rows)):
            schemes += ["emotions_article", "morals_article"]
    unknown = [s for s in schemes if s not in _SCHEMES]
    if unknown:
        raise ConfigError(f"unknown schemes: {unknown}")
    n = len(features.ids)
    reports: list[RegressionReport] = []
    for scheme in schemes:
        base = np.ones(n, dtype=bool)
        if scheme.endswith("_article"):
            if features.article_rows is None:
                continue
            base = features.article_rows.astype(bool)
        for target in sorted(targets):
            y = np.asarray(targets[target], dtype=np.float64)
            rows = base & np.isfinite(y)
            if rows.sum() < 2:
                logger.warning("no usable rows for %s/%s; skipped", scheme, target)
                continue
            rep = _run_one(features, scheme, target, y, rows)
            if rep is not None:
                reports.append(rep)
    return reports


def run_topic_suite(features: FeatureTable, labels: dict[str, np.ndarray],
                    targets: dict[str, np.ndarray],
                    schemes: list[str] | None = None,
                    membership_threshold: float = 0.5) -> list[RegressionReport]:
    """Per-area submodels with follower count as the only confounder.

    An area subset must satisfy n > p + 10 for every scheme it runs; smaller
    subsets are skipped with a warning.
    """
    if schemes is None:
        schemes = ["emotions", "morals", "nmf"]
    reports: list[RegressionReport] = []
    for area in sorted(labels):
        member = np.asarray(labels[area], dtype=np.float64) > membership_threshold
        for scheme in schemes:
            cols = [c for c in _scheme_columns(features, scheme, confounders=False)]
            cols += features.groups.get("followers", [])
            p = len(cols)
            for target in sorted(targets):
                y = np.asarray(targets[target], dtype=np.float64)
                rows = member & np.isfinite(y)
                n_rows = int(rows.sum())
                if n_rows <= p + 10:
                    logger.warning("area %s/%s/%s undersized (n=%d, p=%d); skipped",
                                   area, scheme, target, n_rows, p)
                    continue
                rep = _run_one_cols(features, cols, scheme, target, y, rows, area)
                if rep is not None:
                    reports.append(rep)
    return reports


def _run_one_cols(features: FeatureTable, cols: list[str], scheme: str,
                  target: str, y: np.ndarray, rows: np.ndarray,
                  area: str | None) -> RegressionReport | None:
    X = features.columns(cols)[rows]
    yv = y[rows]
    if np.all(yv == yv[0]):
        logger.warning("target %s constant on area %s; skipped", target, area)
        return None
    Xn, names, dropped_const = _prepare(X, cols)
    if Xn.shape[1] == 0:
        return None
    kept_idx, dropped_vif = vif_filter(Xn, names)
    rep = fit_ols(Xn[:, kept_idx], quantile_normalize(yv),
                  [names[i] for i in kept_idx], scheme=scheme, target=target)
    rep.dropped_vif = dropped_vif
    rep.dropped_constant = dropped_const
    rep.area = area
    return rep


def write_r2_table(path: str | Path, reports: list[RegressionReport],
                   seed: int | None = None) -> None:
    """Models x targets grid of adjusted R^2 (blank cell when not run)."""
    scheme_order = [s for s in _SCHEMES if any(r.scheme == s for r in reports)]
    targets = [t for t in TARGETS if any(r.target == t for r in reports)]
    cells = {(r.scheme, r.target): r.adj_r2 for r in reports}
    with open(path, "w", newline="", encoding="utf-8") as f:
        if seed is not None:
            f.write(f"# seed={seed}\n")
        w = csv.writer(f)
        w.writerow(["model"] + targets)
        for s in scheme_order:
            row = [s]
            for t in targets:
                v = cells.get((s, t))
                row.append("" if v is None else format(v, ".12g"))
            w.writerow(row)


def write_coefficients(path: str | Path, reports: list[RegressionReport],
                       seed: int | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        if seed is not None:
            f.write(f"# seed={seed}\n")
        w = csv.writer(f)
        w.writerow(["scheme", "target", "feature", "beta", "se", "p", "significant"])
        for rep in reports:
            for c in rep.coefficients:
                w.writerow([rep.scheme, rep.target, c.name,
                            format(c.beta, ".12g"), format(c.se, ".12g"),
                            format(c.p, ".12g"), int(c.significant)])
