"""Tweet corpus data model: JSONL ingestion, conversation trees, engagement counts.

Records are plain dataclasses, immutable after load; every downstream stage
reads the corpus without mutating it, so parallel workers can share one copy.
"""

from __future__ import annotations

import csv
import gzip
import json
import logging
from dataclasses import dataclass, field, asdict
from pathlib import Path

from .errors import DataError

logger = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400

COUNT_FIELDS = ("like_count", "retweet_count", "reply_count", "quote_count")


@dataclass(frozen=True)
class TweetRecord:
    """One post. `outlet` is set when the author is a news outlet handle.

    `follower_count` is the author's readership size at post time; it is the
    popularity confounder in the engagement models. `article_text`, when
    present, is the full text of the article linked in the post (the pipeline
    never fetches it; it must be supplied in the input).
    """

    id: str
    author: str
    timestamp: int
    text: str
    outlet: str | None = None
    hashtags: tuple[str, ...] = ()
    reply_to: str | None = None
    like_count: int = 0
    retweet_count: int = 0
    reply_count: int = 0
    quote_count: int = 0
    follower_count: int = 0
    article_text: str | None = None

    def __post_init__(self):
        if not self.id:
            raise DataError("tweet id must be nonempty")
        for f in COUNT_FIELDS + ("follower_count",):
            if getattr(self, f) < 0:
                raise DataError(f"{f} must be >= 0 on tweet {self.id!r}")
        if self.reply_to == self.id:
            raise DataError(f"tweet {self.id!r} replies to itself")
        # hashtags are stored as a sorted tuple of unique lowercase tags so
        # iteration order is reproducible across processes
        object.__setattr__(
            self, "hashtags", tuple(sorted({h.lower().lstrip("#") for h in self.hashtags} - {""}))
        )

    @property
    def day(self) -> int:
        """UTC day index (epoch days)."""
        return self.timestamp // SECONDS_PER_DAY


@dataclass
class Corpus:
    tweets: list[TweetRecord]
    malformed_count: int = 0
    _by_id: dict[str, TweetRecord] = field(init=False, repr=False)

    def __post_init__(self):
        self._by_id = {}
        for t in self.tweets:
            if t.id in self._by_id:
                raise DataError(f"duplicate tweet id {t.id!r}")
            self._by_id[t.id] = t

    def __len__(self):
        return len(self.tweets)

    def __eq__(self, other):
        return isinstance(other, Corpus) and self.tweets == other.tweets

    def get(self, tweet_id: str) -> TweetRecord | None:
        return self._by_id.get(tweet_id)

    def __contains__(self, tweet_id: str) -> bool:
        return tweet_id in self._by_id

    @property
    def span_days(self) -> int:
        """Number of distinct UTC calendar days with at least one tweet."""
        return len({t.day for t in self.tweets})

    def outlet_tweets(self) -> list[TweetRecord]:
        return [t for t in self.tweets if t.outlet is not None]


@dataclass
class ConversationTree:
    """Reply tree under one root tweet. `size` excludes the root."""

    root: str
    nodes: tuple[str, ...]

    @property
    def size(self) -> int:
        return len(self.nodes)


def _open_maybe_gzip(path: Path):
    if path.suffix in (".gz", ".gzip"):
        return gzip.open(path, "rt", encoding="utf-8")
    return open(path, "r", encoding="utf-8")


def _record_from_json(obj: dict) -> TweetRecord:
    known = {
        "id": str(obj["id"]),
        "author": str(obj.get("author", "")),
        "timestamp": int(obj["timestamp"]),
        "text": str(obj.get("text", "")),
        "outlet": obj.get("outlet"),
        "hashtags": tuple(obj.get("hashtags", ())),
        "reply_to": obj.get("reply_to"),
        "article_text": obj.get("article_text"),
    }
    for f in COUNT_FIELDS + ("follower_count",):
        known[f] = int(obj.get(f, 0))
    return TweetRecord(**known)


def load_corpus(path: str | Path) -> Corpus:
    """Load a JSONL corpus (one record per line; unknown fields ignored).

    Malformed lines are counted, reported via the log, and skipped; if more
    than half the nonempty lines are malformed the load aborts with a DataError
    carrying line-number diagnostics.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"corpus file not found: {path}")
    tweets: list[TweetRecord] = []
    bad_lines: list[int] = []
    total = 0
    with _open_maybe_gzip(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            total += 1
            try:
                tweets.append(_record_from_json(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError, DataError):
                bad_lines.append(lineno)
    if total and len(bad_lines) * 2 > total:
        raise DataError(
            f"{path}: {len(bad_lines)} of {total} lines malformed "
            f"(first bad lines: {bad_lines[:10]})"
        )
    if bad_lines:
        logger.warning("%s: skipped %d malformed lines (first: %s)", path, len(bad_lines), bad_lines[:5])
    return Corpus(tweets, malformed_count=len(bad_lines))


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write JSONL that load_corpus round-trips to an equal corpus."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        for t in corpus.tweets:
            obj = asdict(t)
            obj["hashtags"] = list(t.hashtags)
            obj = {k: v for k, v in obj.items() if v is not None}
            f.write(json.dumps(obj, sort_keys=True) + "\n")


@dataclass
class ConversationBuild:
    trees: list[ConversationTree]
    dangling_count: int
    cycle_count: int


def build_conversations(corpus: Corpus, roots: set[str]) -> ConversationBuild:
    """Group reply-linked tweets into one tree per root.

    A tweet joins the tree whose root its reply chain terminates at. Chains
    that hit a missing parent, or terminate at a tweet outside `roots`, count
    as dangling and are excluded. Cycles are skipped and counted separately.
    """
    for r in roots:
        if r not in corpus:
            raise DataError(f"conversation root {r!r} not in corpus")

    ROOT, DANGLING, CYCLE = 0, 1, 2
    resolution: dict[str, tuple[int, str | None]] = {r: (ROOT, r) for r in roots}

    def resolve(tid: str) -> tuple[int, str | None]:
        chain = []
        seen = set()
        cur = tid
        while cur not in resolution:
            if cur in seen:
                res = (CYCLE, None)
                break
            seen.add(cur)
            chain.append(cur)
            tweet = corpus.get(cur)
            if tweet is None or tweet.reply_to is None:
                # missing parent, or chain ends outside the root set
                res = (DANGLING, None)
                break
            cur = tweet.reply_to
        else:
            res = resolution[cur]
        for c in chain:
            resolution[c] = res
        return res

    members: dict[str, list[str]] = {r: [] for r in sorted(roots)}
    dangling = 0
    cycles = 0
    for t in corpus.tweets:
        if t.reply_to is None or t.id in roots:
            continue
        kind, root = resolve(t.id)
        if kind == ROOT:
            members[root].append(t.id)
        elif kind == CYCLE:
            cycles += 1
        else:
            dangling += 1
    if cycles:
        logger.warning("skipped %d tweets on reply cycles", cycles)
    trees = [ConversationTree(root=r, nodes=tuple(ids)) for r, ids in members.items()]
    return ConversationBuild(trees=trees, dangling_count=dangling, cycle_count=cycles)


def avg_conversation_size(trees: list[ConversationTree], corpus: Corpus) -> dict[str, float]:
    """Mean tree size per outlet (outlets with zero trees omitted)."""
    sums: dict[str, list[int]] = {}
    for tree in trees:
        root = corpus.get(tree.root)
        if root is None or root.outlet is None:
            continue
        sums.setdefault(root.outlet, []).append(tree.size)
    return {outlet: sum(sizes) / len(sizes) for outlet, sizes in sorted(sums.items())}


def write_conversation_summary(trees: list[ConversationTree], corpus: Corpus, path: str | Path) -> None:
    """CSV summary: outlet, n_trees, avg_size."""
    counts: dict[str, int] = {}
    for tree in trees:
        root = corpus.get(tree.root)
        if root is not None and root.outlet is not None:
            counts[root.outlet] = counts.get(root.outlet, 0) + 1
    means = avg_conversation_size(trees, corpus)
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["outlet", "n_trees", "avg_size"])
        for outlet in sorted(means):
            w.writerow([outlet, counts[outlet], format(means[outlet], ".12g")])
