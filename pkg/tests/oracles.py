"""Brute-force reference implementations the tests check the package against.

Everything here favors obviousness over speed: plain loops, dicts, exact
rational arithmetic where feasible, mpmath for high-precision special
functions. None of it shares code paths with the package internals.
"""

from __future__ import annotations

from fractions import Fraction

import mpmath
import numpy as np

mpmath.mp.dps = 50


# ---------------------------------------------------------------- affect

def tally_affect(tokens, emotion_sets, valence, moral_scores):
    """Per-token tally of emotion presence, sentiment, and moral means.

    emotion_sets: emotion -> set of lemmas; valence: lemma -> +-1;
    moral_scores: lemma -> {foundation: score}. Returns (E dict, sentiment,
    m dict, virtue dict, vice dict) with plain Python floats.
    """
    n = len(tokens)
    emotions = {e: 0 for e in emotion_sets}
    val_total = 0
    m_sum: dict[str, float] = {}
    m_cnt: dict[str, int] = {}
    for tok in tokens:
        for e, words in emotion_sets.items():
            if tok in words:
                emotions[e] += 1
        val_total += valence.get(tok, 0)
        for fnd, s in moral_scores.get(tok, {}).items():
            m_sum[fnd] = m_sum.get(fnd, 0.0) + s
            m_cnt[fnd] = m_cnt.get(fnd, 0) + 1
    E = {e: (c / n if n else 0.0) for e, c in emotions.items()}
    sentiment = val_total / n if n else 0.0
    m = {}
    virtue = {}
    vice = {}
    for fnd in ("care", "fairness", "loyalty", "authority", "purity"):
        mk = m_sum[fnd] / m_cnt[fnd] if m_cnt.get(fnd) else 5.0
        m[fnd] = mk
        virtue[fnd] = (2.0 * mk - 10.0) / 10.0 if mk > 5.0 else 0.0
        vice[fnd] = (10.0 - 2.0 * mk) / 10.0 if mk < 5.0 else 0.0
    return E, sentiment, m, virtue, vice


# ---------------------------------------------------------------- corpus

def reachable_from_root(records, root_id):
    """BFS over reply edges; returns the set of ids whose chains reach root.

    records: iterable of objects with .id and .reply_to. The root itself is
    not included.
    """
    children: dict[str, list[str]] = {}
    for r in records:
        if r.reply_to is not None:
            children.setdefault(r.reply_to, []).append(r.id)
    out: set[str] = set()
    frontier = [root_id]
    while frontier:
        nxt = []
        for parent in frontier:
            for c in children.get(parent, ()):
                if c not in out:
                    out.add(c)
                    nxt.append(c)
        frontier = nxt
    return out


# ---------------------------------------------------------------- themes

def ppmi_svd_embedding(sentences, dim):
    """PPMI co-occurrence matrix + truncated SVD, rows L2-normalized.

    An alternative factorization route to the same co-occurrence structure
    the skip-gram trainer sees; used to confirm community geometry, not to
    match coordinates.
    """
    names = sorted({t for s in sentences for t in s})
    idx = {t: i for i, t in enumerate(names)}
    n = len(names)
    C = np.zeros((n, n))
    for s in sentences:
        for a in s:
            for b in s:
                if a != b:
                    C[idx[a], idx[b]] += 1.0
    total = C.sum()
    row = C.sum(axis=1, keepdims=True)
    col = C.sum(axis=0, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        pmi = np.log(C * total / (row * col))
    ppmi = np.where(np.isfinite(pmi) & (pmi > 0), pmi, 0.0)
    U, S, _ = np.linalg.svd(ppmi)
    d = min(dim, n)
    V = U[:, :d] * np.sqrt(S[:d])
    norms = np.linalg.norm(V, axis=1, keepdims=True)
    return names, V / np.maximum(norms, 1e-12)


def cosine_margins(names, vectors, community_of):
    """(mean within-community cosine, mean between-community cosine)."""
    within = []
    between = []
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            c = float(vectors[i] @ vectors[j])
            same = community_of[names[i]] == community_of[names[j]]
            (within if same else between).append(c)
    return float(np.mean(within)), float(np.mean(between))


def co_membership_counts(labels_per_run):
    """Integer co-clustering counts by explicit pairwise comparison."""
    n = len(labels_per_run[0])
    counts = np.zeros((n, n), dtype=np.int64)
    for lab in labels_per_run:
        for i in range(n):
            for j in range(n):
                if lab[i] == lab[j]:
                    counts[i, j] += 1
    return counts


def lasso_kkt_gap(X, y, beta, lam):
    """Max KKT violation of the centered-gram lasso objective, from raw data.

    Objective: (1/2n)||y_c - X_c b||^2 + lam * ||b||_1 with columns centered.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    grad = -(Xc.T @ (yc - Xc @ beta)) / X.shape[0]
    gap = 0.0
    for j, b in enumerate(beta):
        if b == 0.0:
            gap = max(gap, abs(grad[j]) - lam)
        else:
            gap = max(gap, abs(grad[j] + lam * np.sign(b)))
    return gap


# ---------------------------------------------------------------- numerics

def phi_inverse(p):
    """Standard normal quantile at 50 decimal digits."""
    return float(mpmath.sqrt(2) * mpmath.erfinv(2 * mpmath.mpf(p) - 1))


def quantile_normal_oracle(column):
    """Average-rank inverse-normal transform computed the slow way."""
    col = list(map(float, column))
    n = len(col)
    order = sorted(range(n), key=lambda i: col[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and col[order[j + 1]] == col[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0  # 1-based average rank of the tie block
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return np.array([phi_inverse((r - 0.5) / n) for r in ranks])


def ols_exact(X, y):
    """Least-squares coefficients (intercept first) in exact rationals.

    X entries must convert exactly to Fraction (ints or dyadic floats).
    Solves the normal equations by Gaussian elimination with full pivoting
    on Fractions; returns a list of Fraction.
    """
    n = len(X)
    rows = [[Fraction(1)] + [Fraction(v) for v in r] for r in X]
    p = len(rows[0])
    yf = [Fraction(v) for v in y]
    A = [[sum(rows[i][a] * rows[i][b] for i in range(n)) for b in range(p)]
         for a in range(p)]
    rhs = [sum(rows[i][a] * yf[i] for i in range(n)) for a in range(p)]
    for col in range(p):
        piv = max(range(col, p), key=lambda r: abs(A[r][col]))
        if A[piv][col] == 0:
            raise ZeroDivisionError("singular normal equations")
        A[col], A[piv] = A[piv], A[col]
        rhs[col], rhs[piv] = rhs[piv], rhs[col]
        for r in range(p):
            if r != col and A[r][col] != 0:
                f = A[r][col] / A[col][col]
                A[r] = [a - f * b for a, b in zip(A[r], A[col])]
                rhs[r] = rhs[r] - f * rhs[col]
    return [rhs[i] / A[i][i] for i in range(p)]


def t_sf_two_sided(t, df):
    """Two-sided t-test p-value via the regularized incomplete beta."""
    t = mpmath.mpf(abs(float(t)))
    x = df / (df + t * t)
    return float(mpmath.betainc(mpmath.mpf(df) / 2, mpmath.mpf(1) / 2,
                                0, x, regularized=True))


def vif_from_correlation(X):
    """VIFs as the diagonal of the inverse correlation matrix."""
    X = np.asarray(X, dtype=np.float64)
    Z = X - X.mean(axis=0)
    sd = Z.std(axis=0)
    Z = Z / sd
    R = (Z.T @ Z) / X.shape[0]
    return np.diag(np.linalg.inv(R)).copy()


def hungarian_match_cosine(H_hat, H_true):
    """Best row matching by cosine; returns the matched cosines."""
    from scipy.optimize import linear_sum_assignment

    a = H_hat / np.maximum(np.linalg.norm(H_hat, axis=1, keepdims=True), 1e-12)
    b = H_true / np.maximum(np.linalg.norm(H_true, axis=1, keepdims=True), 1e-12)
    sim = a @ b.T
    ri, ci = linear_sum_assignment(-sim)
    return sim[ri, ci]


def predominance_oracle(W, groups):
    """Percent of each group's nonzero rows argmax-ing at each factor."""
    out: dict[str, list[float]] = {}
    k = W.shape[1]
    for g in sorted(set(groups)):
        idx = [i for i, gg in enumerate(groups) if gg == g]
        live = [i for i in idx if any(W[i] > 0)]
        counts = [0] * k
        for i in live:
            best = max(range(k), key=lambda j: (W[i][j], -j))
            counts[best] += 1
        if live:
            out[g] = [100.0 * c / len(live) for c in counts]
        else:
            out[g] = [0.0] * k
    return out
