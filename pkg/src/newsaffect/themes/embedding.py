"""Skip-gram hashtag embedding with negative sampling.

Each post's eligible hashtags form one sentence and every ordered pair of
distinct positions is a (center, context) example: the context window is the
whole post. Training is plain SGD on the negative-sampling objective,
applied in fixed-size batches from a seeded generator, so a given seed
reproduces the vectors bitwise. Stored vectors are L2-normalized.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DataError

logger = logging.getLogger(__name__)

_NEG_EXPONENT = 0.75  # negatives drawn from the unigram distribution^0.75
_BATCH = 256
_MIN_LR_FRACTION = 1e-4


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class HashtagEmbedding:
    names: list[str]
    vectors: np.ndarray  # n x d, unit rows
    dim: int
    epochs: int
    negatives: int
    learning_rate: float
    seed: int
    loss_trace: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.index = {w: i for i, w in enumerate(self.names)}

    def vector(self, name: str) -> np.ndarray:
        return self.vectors[self.index[name]]

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"# dim={self.dim} epochs={self.epochs} negatives={self.negatives} "
                    f"lr={self.learning_rate} seed={self.seed}\n")
            for i, name in enumerate(self.names):
                vals = "\t".join(format(x, ".12g") for x in self.vectors[i])
                f.write(f"{name}\t{vals}\n")

    @classmethod
    def load(cls, path: str | Path) -> "HashtagEmbedding":
        params: dict[str, str] = {}
        names: list[str] = []
        rows: list[list[float]] = []
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
                parts = line.split("\t")
                names.append(parts[0])
                rows.append([float(x) for x in parts[1:]])
        if not names:
            raise DataError(f"{path}: empty embedding file")
        return cls(names=names, vectors=np.asarray(rows), dim=int(params.get("dim", 0)),
                   epochs=int(params.get("epochs", 0)), negatives=int(params.get("negatives", 0)),
                   learning_rate=float(params.get("lr", 0.0)), seed=int(params.get("seed", 0)))


def _pairs_from_sentences(sentences: list[tuple[str, ...]],
                          index: dict[str, int]) -> np.ndarray:
    pairs: list[tuple[int, int]] = []
    for sent in sentences:
        ids = [index[t] for t in sent if t in index]
        m = len(ids)
        if m < 2:
            continue
        for a in range(m):
            for b in range(m):
                if a != b:
                    pairs.append((ids[a], ids[b]))
    return np.asarray(pairs, dtype=np.int64) if pairs else np.empty((0, 2), dtype=np.int64)


def train_embedding(sentences: list[tuple[str, ...]], dim: int = 32,
                    epochs: int = 15, negatives: int = 5,
                    learning_rate: float = 0.025, seed: int = 0,
                    eval_pairs: int = 1024) -> HashtagEmbedding:
    """sentences: per-post tuples of eligible hashtags (already filtered)."""
    counts: dict[str, int] = {}
    for sent in sentences:
        for t in sent:
            counts[t] = counts.get(t, 0) + 1
    names = sorted(counts)
    if len(names) < 2:
        raise DataError("need at least 2 distinct hashtags to embed")
    index = {w: i for i, w in enumerate(names)}
    pairs = _pairs_from_sentences(sentences, index)
    if pairs.shape[0] == 0:
        raise DataError("no hashtag co-occurrences; embedding is undefined")

    n = len(names)
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    Win = (rng.random((n, dim)) - 0.5) / dim
    Wout = np.zeros((n, dim))

    freq = np.array([counts[w] for w in names], dtype=np.float64) ** _NEG_EXPONENT
    cum = np.cumsum(freq / freq.sum())

    def sample_negatives(g: np.random.Generator, shape) -> np.ndarray:
        idx = np.searchsorted(cum, g.random(shape))
        return np.minimum(idx, n - 1).astype(np.int64)

    # fixed evaluation batch: loss comparisons across epochs stay apples to apples
    eval_rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    n_eval = min(eval_pairs, pairs.shape[0])
    eval_idx = eval_rng.choice(pairs.shape[0], size=n_eval, replace=False)
    eval_c, eval_o = pairs[eval_idx, 0], pairs[eval_idx, 1]
    eval_neg = sample_negatives(eval_rng, (n_eval, negatives))

    def eval_loss() -> float:
        h = Win[eval_c]
        pos = np.einsum("bd,bd->b", h, Wout[eval_o])
        neg = np.einsum("bd,bnd->bn", h, Wout[eval_neg])
        eps = 1e-12
        loss = -np.log(_sigmoid(pos) + eps).sum() - np.log(_sigmoid(-neg) + eps).sum()
        return float(loss / n_eval)

    total_updates = epochs * pairs.shape[0]
    done = 0
    trace = []
    for _epoch in range(epochs):
        order = rng.permutation(pairs.shape[0])
        for start in range(0, order.size, _BATCH):
            batch = pairs[order[start:start + _BATCH]]
            c, o = batch[:, 0], batch[:, 1]
            negs = sample_negatives(rng, (c.size, negatives))
            lr = learning_rate * max(1.0 - done / total_updates, _MIN_LR_FRACTION)
            h = Win[c]
            v = Wout[o]
            g_pos = _sigmoid(np.einsum("bd,bd->b", h, v)) - 1.0
            Vn = Wout[negs]
            g_neg = _sigmoid(np.einsum("bd,bnd->bn", h, Vn))
            grad_h = g_pos[:, None] * v + np.einsum("bn,bnd->bd", g_neg, Vn)
            np.add.at(Win, c, -lr * grad_h)
            np.add.at(Wout, o, -lr * (g_pos[:, None] * h))
            np.add.at(Wout, negs.reshape(-1),
                      (-lr * (g_neg[:, :, None] * h[:, None, :])).reshape(-1, dim))
            done += c.size
        trace.append(eval_loss())
        logger.debug("epoch %d eval loss %.5f", _epoch + 1, trace[-1])

    norms = np.linalg.norm(Win, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    vectors = Win / norms
    return HashtagEmbedding(names=names, vectors=vectors, dim=dim, epochs=epochs,
                            negatives=negatives, learning_rate=learning_rate,
                            seed=seed, loss_trace=trace)
