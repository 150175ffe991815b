"""Hashtag eligibility, cluster listings, and the cluster -> area merge map."""

from __future__ import annotations

import csv
import logging
from pathlib import Path

from ..corpus import Corpus
from ..errors import DataError
from .consensus import ConsensusModel

logger = logging.getLogger(__name__)

MIN_AUTHORS = 10


def hashtag_stats(corpus: Corpus) -> dict[str, tuple[int, int]]:
    """tag -> (total count, distinct authors)."""
    counts: dict[str, int] = {}
    authors: dict[str, set[str]] = {}
    for t in corpus.tweets:
        for tag in t.hashtags:
            counts[tag] = counts.get(tag, 0) + 1
            authors.setdefault(tag, set()).add(t.author)
    return {tag: (counts[tag], len(authors[tag])) for tag in counts}


def select_hashtags(corpus: Corpus, min_authors: int = MIN_AUTHORS) -> list[str]:
    """Tags used at least once per day on average and by enough authors.

    "Once per day on average" means total count >= the corpus day span.
    """
    span = corpus.span_days
    if span == 0:
        raise DataError("corpus has no tweets; cannot select hashtags")
    stats = hashtag_stats(corpus)
    kept = sorted(tag for tag, (count, nauth) in stats.items()
                  if count >= span and nauth >= min_authors)
    if not kept:
        raise DataError(
            f"no hashtag passes count >= {span} and authors >= {min_authors}; "
            "lower the thresholds for this corpus"
        )
    return kept


def hashtag_sentences(corpus: Corpus, eligible: list[str]) -> list[tuple[str, ...]]:
    """Per-post tuples of eligible tags, posts with >= 2 of them only."""
    keep = set(eligible)
    out = []
    for t in corpus.tweets:
        sent = tuple(tag for tag in t.hashtags if tag in keep)
        if len(sent) >= 2:
            out.append(sent)
    return out


def load_merge_map(path: str | Path, valid_clusters: set[int]) -> dict[int, str]:
    """cluster_id<TAB>macro_area; referencing an unknown cluster is an error."""
    out: dict[int, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected cluster_id<TAB>macro_area")
            try:
                cid = int(parts[0])
            except ValueError:
                raise DataError(f"{path}:{lineno}: cluster id {parts[0]!r} is not an integer") from None
            area = parts[1].strip()
            if not area:
                raise DataError(f"{path}:{lineno}: empty macro area name")
            if cid not in valid_clusters:
                raise DataError(f"{path}:{lineno}: cluster {cid} does not exist in the model")
            out[cid] = area
    return out


def assign_macro_areas(model: ConsensusModel, merge_map: dict[int, str]) -> dict[str, str]:
    """hashtag -> macro area; clusters absent from the map land in "none"."""
    unmapped = sorted(set(int(l) for l in model.labels) - set(merge_map))
    if unmapped:
        logger.warning("clusters %s not in merge map; their tags get area 'none'", unmapped)
    out: dict[str, str] = {}
    for name, lab in zip(model.names, model.labels):
        out[name] = merge_map.get(int(lab), "none")
    return out


def write_cluster_listing(path: str | Path, model: ConsensusModel,
                          stats: dict[str, tuple[int, int]], top_n: int = 20,
                          seed: int | None = None) -> None:
    """Top tags per cluster by corpus count, for a human building the map."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        if seed is not None:
            f.write(f"# seed={seed}\n")
        w = csv.writer(f)
        w.writerow(["cluster", "rank", "hashtag", "count", "authors"])
        for cid, tags in sorted(model.clusters().items()):
            ranked = sorted(tags, key=lambda t: (-stats.get(t, (0, 0))[0], t))
            for rank, tag in enumerate(ranked[:top_n], 1):
                count, nauth = stats.get(tag, (0, 0))
                w.writerow([cid, rank, tag, count, nauth])


def write_pac_curve(path: str | Path, model: ConsensusModel,
                    seed: int | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        if seed is not None:
            f.write(f"# seed={seed}\n")
        w = csv.writer(f)
        w.writerow(["K", "PAC", "chosen"])
        for k in model.k_values:
            w.writerow([k, format(model.pac[k], ".12g"), int(k == model.chosen_k)])
