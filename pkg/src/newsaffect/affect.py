"""Lexicon scoring: eight emotions, sentiment, and ten moral dimensions.

Emotion scores are association-mass averages over the non-stopword tokens of
a post. Moral scoring averages per-foundation word scores on a 1..9 scale
(5 is neutral), then splits each foundation into a virtue pole and a vice
pole so that exactly one of the two is nonzero unless the mean sits at the
neutral point, where both are zero. Scored poles live in [0, 0.8].
"""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import ConversationTree, Corpus, TweetRecord
from .errors import DataError
from .textprep import TextResources, TokenizedDoc, preprocess, strip_urls

logger = logging.getLogger(__name__)

_SENT_SPLIT_RE = re.compile(r"[.!?]+")

EMOTIONS = ("anger", "anticipation", "disgust", "fear", "joy", "sadness", "surprise", "trust")
FOUNDATIONS = ("care", "fairness", "loyalty", "authority", "purity")
VICES = ("harm", "cheating", "betrayal", "subversion", "degradation")
# canonical 18-dimension order used by every matrix and CSV in the pipeline
DIMS = EMOTIONS + FOUNDATIONS + VICES

MORAL_NEUTRAL = 5.0


class EmotionLexicon:
    """lemma -> (emotion multi-hot, valence in {-1, 0, +1})."""

    def __init__(self, emotions: dict[str, frozenset[str]], valence: dict[str, int]):
        self.emotions = emotions
        self.valence = valence

    @classmethod
    def load(cls, path: str | Path) -> "EmotionLexicon":
        emotions: dict[str, set[str]] = {}
        valence: dict[str, int] = {}
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise DataError(f"{path}:{lineno}: expected lemma<TAB>category<TAB>value")
                lemma, cat, val = parts[0].strip().lower(), parts[1].strip().lower(), parts[2].strip()
                if cat == "valence":
                    if val not in ("-1", "1", "+1"):
                        raise DataError(f"{path}:{lineno}: valence must be -1 or 1")
                    valence[lemma] = int(val)
                elif cat in EMOTIONS:
                    if val != "1":
                        raise DataError(f"{path}:{lineno}: emotion association flag must be 1")
                    emotions.setdefault(lemma, set()).add(cat)
                else:
                    raise DataError(f"{path}:{lineno}: unknown category {cat!r}")
        return cls({w: frozenset(s) for w, s in emotions.items()}, valence)


class MoralLexicon:
    """lemma -> {foundation: score}; scores live on the 1..9 scale."""

    def __init__(self, scores: dict[str, dict[str, float]]):
        self.scores = scores

    @classmethod
    def load(cls, path: str | Path) -> "MoralLexicon":
        scores: dict[str, dict[str, float]] = {}
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise DataError(f"{path}:{lineno}: expected lemma<TAB>foundation<TAB>score")
                lemma, fnd, val = parts[0].strip().lower(), parts[1].strip().lower(), parts[2].strip()
                if fnd not in FOUNDATIONS:
                    raise DataError(f"{path}:{lineno}: unknown foundation {fnd!r}")
                try:
                    score = float(val)
                except ValueError:
                    raise DataError(f"{path}:{lineno}: score is not a number") from None
                if not 1.0 <= score <= 9.0:
                    raise DataError(f"{path}:{lineno}: score {score} outside [1, 9]")
                scores.setdefault(lemma, {})[fnd] = score
        return cls(scores)


@dataclass(frozen=True)
class AffectVector:
    """Per-post scores; vector() flattens to the canonical 18-dim order."""

    emotions: tuple[float, ...]          # 8, order EMOTIONS
    virtue: tuple[float, ...]            # 5, order FOUNDATIONS
    vice: tuple[float, ...]              # 5, order VICES
    foundation_means: tuple[float, ...]  # 5, raw 1..9 means (5 when absent)
    sentiment: float

    def vector(self) -> np.ndarray:
        return np.array(self.emotions + self.virtue + self.vice, dtype=np.float64)


class AffectScorer:
    """Caches a per-lemma profile so a 100k-post corpus scores in seconds."""

    def __init__(self, emotion_lex: EmotionLexicon, moral_lex: MoralLexicon,
                 resources: TextResources):
        self.resources = resources
        self._emo_index = {e: i for i, e in enumerate(EMOTIONS)}
        self._fnd_index = {k: i for i, k in enumerate(FOUNDATIONS)}
        # lemma -> (emotion index tuple, valence, ((foundation index, score), ...))
        profiles: dict[str, tuple[tuple[int, ...], int, tuple[tuple[int, float], ...]]] = {}
        for w in set(emotion_lex.emotions) | set(emotion_lex.valence) | set(moral_lex.scores):
            emo = tuple(sorted(self._emo_index[e] for e in emotion_lex.emotions.get(w, ())))
            val = emotion_lex.valence.get(w, 0)
            moral = tuple(sorted(
                (self._fnd_index[k], s) for k, s in moral_lex.scores.get(w, {}).items()
            ))
            profiles[w] = (emo, val, moral)
        self._profiles = profiles

    def _tally(self, tokens: tuple[str, ...]) -> tuple[list[float], float, list[float], list[int]]:
        emo_acc = [0.0] * 8
        val_acc = 0.0
        fnd_sum = [0.0] * 5
        fnd_cnt = [0] * 5
        profiles = self._profiles
        for tok in tokens:
            prof = profiles.get(tok)
            if prof is None:
                continue
            emo, val, moral = prof
            for i in emo:
                emo_acc[i] += 1.0
            val_acc += val
            for i, s in moral:
                fnd_sum[i] += s
                fnd_cnt[i] += 1
        return emo_acc, val_acc, fnd_sum, fnd_cnt

    @staticmethod
    def _split_poles(m: float) -> tuple[float, float]:
        # single correctly-rounded division so integer means land exactly
        # on the k/10 grid (2*(m/10)-1 drifts 2 ulp at m=3)
        virtue = (2.0 * m - 10.0) / 10.0 if m > MORAL_NEUTRAL else 0.0
        vice = (10.0 - 2.0 * m) / 10.0 if m < MORAL_NEUTRAL else 0.0
        return virtue, vice

    def score_tokens(self, doc: TokenizedDoc) -> AffectVector:
        n = doc.n_nonstop
        if n:
            emo_acc, val_acc, fnd_sum, fnd_cnt = self._tally(doc.tokens)
        else:
            emo_acc, val_acc, fnd_sum, fnd_cnt = [0.0] * 8, 0.0, [0.0] * 5, [0] * 5
        emotions = tuple(a / n for a in emo_acc) if n else (0.0,) * 8
        sentiment = val_acc / n if n else 0.0
        means = []
        virtue = []
        vice = []
        for i in range(5):
            m = fnd_sum[i] / fnd_cnt[i] if fnd_cnt[i] else MORAL_NEUTRAL
            means.append(m)
            vt, vc = self._split_poles(m)
            virtue.append(vt)
            vice.append(vc)
        return AffectVector(emotions, tuple(virtue), tuple(vice), tuple(means), sentiment)

    def score_text(self, text: str) -> AffectVector:
        return self.score_tokens(preprocess(text, self.resources))

    def score_text_sentences(self, text: str) -> AffectVector:
        """Sentence-mean variant: emotion presence and sentiment are averaged
        over the sentences that survive preprocessing; each foundation mean
        averages the per-sentence means of the sentences containing that
        foundation's words, and the pole split is applied to the aggregate.
        Single-sentence texts score exactly as score_text.
        """
        # URLs go first so sentence splitting cannot shred them on their dots
        fragments = _SENT_SPLIT_RE.split(strip_urls(text))
        docs = [preprocess(p, self.resources) for p in fragments]
        docs = [d for d in docs if d.n_nonstop]
        if not docs:
            return self.score_tokens(TokenizedDoc(()))
        emo_mean = [0.0] * 8
        val_mean = 0.0
        m_sum = [0.0] * 5
        m_hits = [0] * 5
        for d in docs:
            emo_acc, val_acc, fnd_sum, fnd_cnt = self._tally(d.tokens)
            n = d.n_nonstop
            for i in range(8):
                emo_mean[i] += emo_acc[i] / n
            val_mean += val_acc / n
            for k in range(5):
                if fnd_cnt[k]:
                    m_sum[k] += fnd_sum[k] / fnd_cnt[k]
                    m_hits[k] += 1
        s = len(docs)
        emotions = tuple(x / s for x in emo_mean)
        sentiment = val_mean / s
        means = []
        virtue = []
        vice = []
        for k in range(5):
            m = m_sum[k] / m_hits[k] if m_hits[k] else MORAL_NEUTRAL
            means.append(m)
            vt, vc = self._split_poles(m)
            virtue.append(vt)
            vice.append(vc)
        return AffectVector(emotions, tuple(virtue), tuple(vice), tuple(means), sentiment)

    def score_corpus(self, corpus: Corpus) -> dict[str, AffectVector]:
        return {t.id: self.score_tokens(preprocess(t.text, self.resources))
                for t in corpus.tweets}


def conversation_sentiment(tree: ConversationTree, scores: dict[str, AffectVector],
                           corpus: Corpus | None = None,
                           direct_only: bool = False) -> float | None:
    """Mean reply sentiment over a tree; None when there are no replies."""
    members = list(tree.nodes)
    if direct_only:
        if corpus is None:
            raise ValueError("direct_only needs the corpus to resolve reply edges")
        members = [i for i in members if corpus.get(i).reply_to == tree.root]
    if not members:
        return None
    return float(np.mean([scores[i].sentiment for i in members]))


def affect_matrix(corpus: Corpus, scores: dict[str, AffectVector],
                  ids: list[str] | None = None) -> np.ndarray:
    """Rows in corpus (or given id) order, columns in DIMS order."""
    if ids is None:
        ids = [t.id for t in corpus.tweets]
    return np.stack([scores[i].vector() for i in ids]) if ids else np.empty((0, 18))


def write_affect_csv(path: str | Path, corpus: Corpus, scores: dict[str, AffectVector],
                     seed: int | None = None) -> None:
    """id, the 18 affect dimensions, sentiment; floats at 12 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        if seed is not None:
            f.write(f"# seed={seed}\n")
        writer = csv.writer(f)
        writer.writerow(("id",) + DIMS + ("sentiment",))
        for t in corpus.tweets:
            v = scores[t.id]
            row = [t.id]
            row.extend(format(x, ".12g") for x in v.vector())
            row.append(format(v.sentiment, ".12g"))
            writer.writerow(row)


def read_affect_csv(path: str | Path) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Returns (ids, 18-dim matrix, sentiment array); validates the header."""
    ids: list[str] = []
    rows: list[list[float]] = []
    sent: list[float] = []
    with open(path, newline="", encoding="utf-8") as f:
        first = f.readline()
        if not first.startswith("#"):
            f.seek(0)
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(header) != ("id",) + DIMS + ("sentiment",):
            raise DataError(f"{path}: unexpected affect table header")
        for row in reader:
            if not row:
                continue
            if len(row) != 20:
                raise DataError(f"{path}: row for {row[0]!r} has {len(row)} fields, want 20")
            ids.append(row[0])
            rows.append([float(x) for x in row[1:19]])
            sent.append(float(row[19]))
    mat = np.asarray(rows, dtype=np.float64) if rows else np.empty((0, 18))
    return ids, mat, np.asarray(sent, dtype=np.float64)
