"""Nonnegative matrix factorization of post affect profiles.

X (n posts x 18 dims) is factored as W H with W >= 0 (n x K loadings) and
H >= 0 (K x 18 factor compositions). Multiplicative updates under squared
Frobenius loss; the objective trace is kept so monotonicity is checkable.
The number of factors is picked by the largest discrete curvature drop of
the explained-variance curve.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .affect import DIMS
from .errors import ConfigError, NumericalError

logger = logging.getLogger(__name__)

_EPS = 1e-12


@dataclass
class NMFResult:
    W: np.ndarray
    H: np.ndarray
    objective_trace: list[float] = field(default_factory=list)
    n_iter: int = 0
    converged: bool = False

    @property
    def k(self) -> int:
        return self.H.shape[0]

    def explained_variance(self, X: np.ndarray) -> float:
        denom = float(np.sum(X * X))
        if denom == 0.0:
            return 1.0
        resid = X - self.W @ self.H
        return 1.0 - float(np.sum(resid * resid)) / denom


def _nndsvd_init(X: np.ndarray, k: int, rng: np.random.Generator):
    """SVD-seeded nonnegative init; zero entries get small seeded noise."""
    n, m = X.shape
    U, S, Vt = np.linalg.svd(X, full_matrices=False)
    W = np.zeros((n, k))
    H = np.zeros((k, m))
    W[:, 0] = np.sqrt(S[0]) * np.abs(U[:, 0])
    H[0, :] = np.sqrt(S[0]) * np.abs(Vt[0, :])
    for j in range(1, min(k, len(S))):
        u, v = U[:, j], Vt[j, :]
        up, un = np.maximum(u, 0), np.maximum(-u, 0)
        vp, vn = np.maximum(v, 0), np.maximum(-v, 0)
        pnorm = np.linalg.norm(up) * np.linalg.norm(vp)
        nnorm = np.linalg.norm(un) * np.linalg.norm(vn)
        if pnorm >= nnorm:
            scale, uu, vv = pnorm, up, vp
        else:
            scale, uu, vv = nnorm, un, vn
        if scale > 0:
            coef = np.sqrt(S[j] * scale)
            W[:, j] = coef * uu / (np.linalg.norm(uu) or 1.0)
            H[j, :] = coef * vv / (np.linalg.norm(vv) or 1.0)
    fill = X.mean() / 100.0 if X.size else 0.0
    if fill <= 0:
        fill = 1e-6
    W[W <= 0] = fill * rng.random(int((W <= 0).sum()))
    H[H <= 0] = fill * rng.random(int((H <= 0).sum()))
    return W, H


def fit_nmf(X: np.ndarray, k: int, seed: int = 0, max_iter: int = 2000,
            tol: float = 1e-6) -> NMFResult:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ConfigError("factor input must be a 2-d matrix")
    if np.any(X < 0):
        raise NumericalError("factor input has negative entries")
    if not 1 <= k <= min(X.shape):
        raise ConfigError(f"k={k} outside [1, {min(X.shape)}] for shape {X.shape}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, k]))
    W, H = _nndsvd_init(X, k, rng)

    def objective(W, H):
        R = X - W @ H
        return 0.5 * float(np.sum(R * R))

    trace = [objective(W, H)]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        # H half-step, then W against the fresh H
        H *= (W.T @ X) / (W.T @ W @ H + _EPS)
        W *= (X @ H.T) / (W @ (H @ H.T) + _EPS)
        obj = objective(W, H)
        trace.append(obj)
        prev = trace[-2]
        if prev > 0 and (prev - obj) / prev < tol:
            converged = True
            break
    if not np.all(np.isfinite(W)) or not np.all(np.isfinite(H)):
        raise NumericalError("factorization diverged to non-finite values")
    return NMFResult(W=W, H=H, objective_trace=trace, n_iter=it, converged=converged)


def ev_curve(X: np.ndarray, k_range: range, seed: int = 0,
             max_iter: int = 500) -> dict[int, float]:
    out = {}
    for k in k_range:
        res = fit_nmf(X, k, seed=seed, max_iter=max_iter)
        out[k] = res.explained_variance(X)
        logger.info("k=%d explained variance %.4f (%d iters)", k, out[k], res.n_iter)
    return out


def select_k(curve: dict[int, float]) -> int:
    """Largest discrete curvature of the EV curve, with a virtual zero at k=0.

    curvature(k) = 2 e(k) - e(k-1) - e(k+1); only k with a right neighbor are
    eligible. A curve that never bends (all curvatures <= 0) falls back to the
    largest k with a warning.
    """
    ks = sorted(curve)
    if not ks:
        raise ConfigError("empty explained-variance curve")
    if len(ks) == 1:
        return ks[0]
    ext = dict(curve)
    if ks[0] == 1:
        ext[0] = 0.0  # rank 0 reconstructs nothing
    best_k, best_c = None, None
    for k in ks:
        if k + 1 not in ext or k - 1 not in ext:
            continue
        c = 2.0 * ext[k] - ext[k - 1] - ext[k + 1]
        if best_c is None or c > best_c or (c == best_c and k < best_k):
            best_k, best_c = k, c
    if best_k is None:
        logger.warning("no interior point in EV curve; using largest k")
        return ks[-1]
    if best_c <= 0:
        logger.warning("explained-variance curve has no convex bend; using largest k")
        return ks[-1]
    return best_k


def predominance(W: np.ndarray, groups: list[str]) -> tuple[list[str], np.ndarray]:
    """Percent rows per group whose strongest loading is each factor.

    Rows with all-zero loadings are excluded from their group's base, and a
    group left with no rows is omitted entirely, so every returned row sums
    to 100. Returned matrix is groups x K.
    """
    if W.shape[0] != len(groups):
        raise ConfigError("one group label per loading row required")
    k = W.shape[1]
    counts = {g: np.zeros(k) for g in sorted(set(groups))}
    totals = {g: 0 for g in counts}
    argmax = np.argmax(W, axis=1)
    nonzero = np.any(W > 0, axis=1)
    for i, g in enumerate(groups):
        if not nonzero[i]:
            continue
        counts[g][argmax[i]] += 1
        totals[g] += 1
    empty = [g for g, t in totals.items() if not t]
    if empty:
        logger.warning("omitting groups with no nonzero loadings: %s", ", ".join(empty))
    names = [g for g in counts if totals[g]]
    mat = np.stack([100.0 * counts[g] / totals[g] for g in names]) if names else \
        np.empty((0, k))
    return names, mat


def write_ev_curve_csv(path: str | Path, curve: dict[int, float], chosen: int,
                       seed: int | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        if seed is not None:
            f.write(f"# seed={seed}\n")
        w = csv.writer(f)
        w.writerow(["k", "explained_variance", "chosen"])
        for k in sorted(curve):
            w.writerow([k, format(curve[k], ".12g"), int(k == chosen)])


def write_composition_csv(path: str | Path, H: np.ndarray,
                          seed: int | None = None) -> None:
    """Factor compositions, one row per affect dimension (18 x K)."""
    k = H.shape[0]
    with open(path, "w", newline="", encoding="utf-8") as f:
        if seed is not None:
            f.write(f"# seed={seed}\n")
        w = csv.writer(f)
        w.writerow(["dimension"] + [f"factor_{j + 1}" for j in range(k)])
        for d, dim in enumerate(DIMS):
            w.writerow([dim] + [format(H[j, d], ".12g") for j in range(k)])


def write_loadings_csv(path: str | Path, ids: list[str], W: np.ndarray,
                       seed: int | None = None) -> None:
    k = W.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as f:
        if seed is not None:
            f.write(f"# seed={seed}\n")
        w = csv.writer(f)
        w.writerow(["id"] + [f"factor_{j + 1}" for j in range(k)])
        for i, tid in enumerate(ids):
            w.writerow([tid] + [format(W[i, j], ".12g") for j in range(k)])


def read_loadings_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    ids: list[str] = []
    rows: list[list[float]] = []
    with open(path, newline="", encoding="utf-8") as f:
        first = f.readline()
        if not first.startswith("#"):
            f.seek(0)
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or header[0] != "id":
            raise ConfigError(f"{path}: unexpected loadings header")
        for row in reader:
            if row:
                ids.append(row[0])
                rows.append([float(x) for x in row[1:]])
    return ids, (np.asarray(rows) if rows else np.empty((0, 0)))


def write_predominance_csv(path: str | Path, names: list[str], mat: np.ndarray,
                           group_kind: str, seed: int | None = None) -> None:
    k = mat.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as f:
        if seed is not None:
            f.write(f"# seed={seed}\n")
        w = csv.writer(f)
        w.writerow([group_kind] + [f"factor_{j + 1}" for j in range(k)])
        for r, name in enumerate(names):
            w.writerow([name] + [format(mat[r, j], ".12g") for j in range(k)])
