"""Deterministic text normalization and bag-of-words construction.

The token pipeline is: strip URLs and user mentions, drop every codepoint
that is not a letter, digit, or whitespace (this removes emoji and the
hashtag marker while keeping the tag body), lowercase, split, drop stopwords
on the surface form, then lemmatize through a plain dictionary with identity
fallback. All steps are pure; resources are immutable after load.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import DataError

logger = logging.getLogger(__name__)

_URL_RE = re.compile(r"(?:https?://|www\.)\S+")
_MENTION_RE = re.compile(r"@\w+")
_SYMBOL_RE = re.compile(r"[^\w\s]|_")


@dataclass(frozen=True)
class TokenizedDoc:
    """Lowercase lemma sequence with stopwords removed; order preserved."""

    tokens: tuple[str, ...]

    @property
    def n_nonstop(self) -> int:
        return len(self.tokens)


class TextResources:
    """Stopword set plus surface->lemma map, loaded from plain data files.

    Lemma-map entries whose target is a stopword or is itself remapped would
    break idempotence of preprocess, so they are dropped at load with a
    warning.
    """

    def __init__(self, stopwords: set[str], lemma_map: dict[str, str]):
        self.stopwords = frozenset(w.lower() for w in stopwords)
        clean = {}
        dropped = 0
        for surface, lemma in lemma_map.items():
            surface, lemma = surface.lower(), lemma.lower()
            if lemma in self.stopwords or lemma_map.get(lemma, lemma) != lemma:
                dropped += 1
                continue
            clean[surface] = lemma
        if dropped:
            logger.warning("dropped %d lemma-map entries that would break idempotence", dropped)
        self.lemma_map = clean

    @classmethod
    def load(cls, stopwords_path: str | Path, lemma_map_path: str | Path) -> "TextResources":
        stopwords = set()
        with open(stopwords_path, encoding="utf-8") as f:
            for line in f:
                w = line.strip()
                if w:
                    stopwords.add(w)
        lemma_map = {}
        with open(lemma_map_path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise DataError(f"{lemma_map_path}:{lineno}: expected surface<TAB>lemma")
                lemma_map[parts[0].strip()] = parts[1].strip()
        return cls(stopwords, lemma_map)


def strip_urls(text: str) -> str:
    return _URL_RE.sub(" ", text)


def preprocess(text: str, resources: TextResources) -> TokenizedDoc:
    """Normalize raw text into a TokenizedDoc. Empty results are fine."""
    text = _URL_RE.sub(" ", text)
    text = _MENTION_RE.sub(" ", text)
    text = _SYMBOL_RE.sub(" ", text).lower()
    stop = resources.stopwords
    lemmas = resources.lemma_map
    tokens = tuple(lemmas.get(w, w) for w in text.split() if w not in stop)
    return TokenizedDoc(tokens)


class BowVocab:
    """Dense lemma->index map thresholded on two disjoint corpus halves."""

    def __init__(self, lemmas: list[str], train_min: int, rest_min: int,
                 retained_volume_fraction: float = 0.0, unique_lemma_fraction: float = 0.0):
        self.index = {w: i for i, w in enumerate(lemmas)}
        self.lemmas = list(lemmas)
        self.train_min = train_min
        self.rest_min = rest_min
        self.retained_volume_fraction = retained_volume_fraction
        self.unique_lemma_fraction = unique_lemma_fraction

    def __len__(self):
        return len(self.lemmas)

    def __contains__(self, lemma):
        return lemma in self.index

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for w, i in self.index.items():
                f.write(f"{w}\t{i}\n")

    @classmethod
    def load(cls, path: str | Path) -> "BowVocab":
        pairs = []
        with open(path, encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    w, i = line.rstrip("\n").split("\t")
                    pairs.append((int(i), w))
        pairs.sort()
        return cls([w for _, w in pairs], train_min=0, rest_min=0)


def build_vocab(train_docs: list[TokenizedDoc], rest_docs: list[TokenizedDoc],
                train_min: int = 500, rest_min: int = 1000) -> BowVocab:
    """Keep lemmas frequent enough in both halves; error if nothing survives.

    The retained-volume fraction (kept tokens / all tokens over both halves)
    and the unique-lemma fraction are recorded on the vocab for reporting.
    """
    train_counts: dict[str, int] = {}
    rest_counts: dict[str, int] = {}
    for docs, counts in ((train_docs, train_counts), (rest_docs, rest_counts)):
        for doc in docs:
            for tok in doc.tokens:
                counts[tok] = counts.get(tok, 0) + 1
    kept = sorted(
        w for w, c in train_counts.items()
        if c >= train_min and rest_counts.get(w, 0) >= rest_min
    )
    if not kept:
        raise DataError(
            f"empty vocabulary at thresholds train>={train_min}, rest>={rest_min}; "
            "lower the thresholds for this corpus"
        )
    kept_set = set(kept)
    total_volume = sum(train_counts.values()) + sum(rest_counts.values())
    kept_volume = sum(train_counts[w] for w in kept) + sum(rest_counts.get(w, 0) for w in kept)
    unique_total = len(set(train_counts) | set(rest_counts))
    vocab = BowVocab(
        kept, train_min, rest_min,
        retained_volume_fraction=kept_volume / total_volume if total_volume else 0.0,
        unique_lemma_fraction=len(kept_set) / unique_total if unique_total else 0.0,
    )
    logger.info(
        "vocab: %d lemmas (%.1f%% of unique), %.1f%% of corpus volume retained",
        len(vocab), 100 * vocab.unique_lemma_fraction, 100 * vocab.retained_volume_fraction,
    )
    return vocab


def to_bow(doc: TokenizedDoc, vocab: BowVocab) -> dict[int, int]:
    """Raw term-frequency vector over the vocab; OOV lemmas dropped."""
    out: dict[int, int] = {}
    index = vocab.index
    for tok in doc.tokens:
        i = index.get(tok)
        if i is not None:
            out[i] = out.get(i, 0) + 1
    return out


def bow_matrix(docs: list[TokenizedDoc], vocab: BowVocab):
    """CSR matrix of raw counts, one row per doc (scipy.sparse)."""
    import numpy as np
    from scipy import sparse

    indptr = [0]
    indices: list[int] = []
    data: list[int] = []
    for doc in docs:
        bow = to_bow(doc, vocab)
        for i in sorted(bow):
            indices.append(i)
            data.append(bow[i])
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices), np.asarray(indptr)),
        shape=(len(docs), len(vocab)),
    )
