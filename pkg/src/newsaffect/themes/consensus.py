"""Consensus K-means over hashtag vectors with PAC-based K selection.

For each candidate K the clustering is repeated (default 20 runs) from
distinct seeded initializations; the consensus matrix holds the fraction of
runs in which two points share a cluster. PAC is the fraction of off-diagonal
consensus entries strictly inside (0.1, 0.9); the K minimizing PAC wins and
the final partition is K-means on the rows of that consensus matrix.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DataError

logger = logging.getLogger(__name__)

PAC_LOWER = 0.1
PAC_UPPER = 0.9
DEFAULT_RUNS = 20


def kmeans(X: np.ndarray, k: int, rng: np.random.Generator,
           max_iter: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd iterations from a k-means++ start; stops when labels stabilize.

    An emptied cluster is reseeded to the point currently farthest from its
    own center (lowest index on ties).
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ConfigError(f"k={k} outside [1, {n}]")
    sq = np.einsum("ij,ij->i", X, X)

    def dist2_to(c: np.ndarray) -> np.ndarray:
        return np.maximum(sq - 2.0 * (X @ c) + c @ c, 0.0)

    centers = np.empty((k, X.shape[1]))
    centers[0] = X[int(rng.integers(n))]
    d2 = dist2_to(centers[0])
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(rng.integers(n))
        centers[j] = X[idx]
        d2 = np.minimum(d2, dist2_to(centers[j]))

    labels = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iter):
        # n x k squared distances, argmin ties to the lowest cluster id
        D = sq[:, None] - 2.0 * (X @ centers.T) + np.einsum("ij,ij->i", centers, centers)[None, :]
        new_labels = np.argmin(D, axis=1)
        for j in range(k):
            members = new_labels == j
            if not members.any():
                own = D[np.arange(n), new_labels]
                far = int(np.argmax(own))
                centers[j] = X[far]
                new_labels[far] = j
                members = new_labels == j
            centers[j] = X[members].mean(axis=0)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels, centers


def consensus_from_labels(labels_per_run: list[np.ndarray]) -> np.ndarray:
    """C_ij = fraction of runs with labels[i] == labels[j]."""
    runs = len(labels_per_run)
    if runs == 0:
        raise ConfigError("no runs to form a consensus over")
    n = labels_per_run[0].shape[0]
    acc = np.zeros((n, n))
    for lab in labels_per_run:
        k = int(lab.max()) + 1
        onehot = np.zeros((n, k))
        onehot[np.arange(n), lab] = 1.0
        acc += onehot @ onehot.T
    return acc / runs


def pac_score(C: np.ndarray, lower: float = PAC_LOWER, upper: float = PAC_UPPER) -> float:
    n = C.shape[0]
    if n < 2:
        return 0.0
    off = ~np.eye(n, dtype=bool)
    vals = C[off]
    return float(np.mean((vals > lower) & (vals < upper)))


@dataclass
class ConsensusModel:
    names: list[str]
    k_values: list[int]
    pac: dict[int, float]
    chosen_k: int
    consensus: np.ndarray                   # for the chosen K
    labels: np.ndarray                      # final partition on consensus rows
    runs_labels: dict[int, list[np.ndarray]] = field(default_factory=dict)
    seed: int = 0
    runs: int = DEFAULT_RUNS

    def consensus_matrix(self, k: int) -> np.ndarray:
        if k not in self.runs_labels:
            raise ConfigError(f"K={k} was not evaluated")
        return consensus_from_labels(self.runs_labels[k])

    def clusters(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = {}
        for name, lab in zip(self.names, self.labels):
            out.setdefault(int(lab), []).append(name)
        return out


def consensus_cluster(names: list[str], X: np.ndarray,
                      k_range: range = range(1, 101), runs: int = DEFAULT_RUNS,
                      seed: int = 0, threads: int = 1) -> ConsensusModel:
    """Stability selection of K. K=1 is evaluated for the report but cannot be
    chosen: its consensus is identically 1 so its PAC is 0 by construction,
    which would always win. Ties go to the smallest eligible K.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n != len(names):
        raise ConfigError("one name per row required")
    if n < 2:
        raise DataError("need at least 2 points to cluster")

    def run_k(k: int) -> list[np.ndarray]:
        out = []
        for h in range(runs):
            rng = np.random.default_rng(np.random.SeedSequence([seed, k, h]))
            lab, _ = kmeans(X, k, rng)
            out.append(lab)
        return out

    k_values = []
    skipped = []
    for k in k_range:
        (k_values if k <= n else skipped).append(k)
    if skipped:
        logger.warning("skipping K > %d points: %s", n, skipped)
    if not k_values:
        raise ConfigError("no usable K in range")

    runs_labels: dict[int, list[np.ndarray]] = {}
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {k: pool.submit(run_k, k) for k in k_values}
        for k in k_values:  # reduce in K order regardless of completion order
            runs_labels[k] = futures[k].result()
    else:
        for k in k_values:
            runs_labels[k] = run_k(k)

    pac: dict[int, float] = {}
    for k in k_values:
        pac[k] = pac_score(consensus_from_labels(runs_labels[k]))
        logger.info("K=%d PAC=%.4f", k, pac[k])

    eligible = [k for k in k_values if k >= 2]
    if not eligible:
        chosen = k_values[0]
    else:
        best = min(pac[k] for k in eligible)
        chosen = min(k for k in eligible if pac[k] == best)
    if chosen == n:
        logger.warning("chose K equal to the number of points (%d); singleton "
                       "partitions are trivially stable, so the K range likely "
                       "extends too close to the point count", n)
    C = consensus_from_labels(runs_labels[chosen])
    rng = np.random.default_rng(np.random.SeedSequence([seed, chosen, runs]))
    final_labels, _ = kmeans(C, chosen, rng)
    return ConsensusModel(names=list(names), k_values=k_values, pac=pac,
                          chosen_k=chosen, consensus=C, labels=final_labels,
                          runs_labels=runs_labels, seed=seed, runs=runs)
