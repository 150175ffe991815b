"""Shared fixtures: packaged resources, tiny corpora, and one small
end-to-end pipeline run reused by the CLI and table-shape tests."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import pytest

from newsaffect import cli, synth
from newsaffect.affect import AffectScorer, EmotionLexicon, MoralLexicon
from newsaffect.corpus import Corpus, TweetRecord
from newsaffect.resources import data_path
from newsaffect.textprep import TextResources

DAY = 86400
T0 = 1577836800  # 2020-01-01 UTC


@pytest.fixture(scope="session")
def resources() -> TextResources:
    return TextResources.load(data_path("stopwords_en.txt"), data_path("lemma_map_en.tsv"))


@pytest.fixture(scope="session")
def emotion_lex() -> EmotionLexicon:
    return EmotionLexicon.load(data_path("test_emotion_lexicon.tsv"))


@pytest.fixture(scope="session")
def moral_lex() -> MoralLexicon:
    return MoralLexicon.load(data_path("test_moral_lexicon.tsv"))


@pytest.fixture(scope="session")
def scorer(emotion_lex, moral_lex, resources) -> AffectScorer:
    return AffectScorer(emotion_lex, moral_lex, resources)


def tweet(tid: str, text: str = "word", *, day: int = 0, author: str | None = None,
          outlet: str | None = None, reply_to: str | None = None,
          hashtags: tuple[str, ...] = (), **kw) -> TweetRecord:
    return TweetRecord(
        id=tid, author=author or f"u_{tid}", timestamp=T0 + day * DAY, text=text,
        outlet=outlet, hashtags=hashtags, reply_to=reply_to, **kw)


@pytest.fixture
def make_tweet():
    return tweet


@pytest.fixture(scope="session")
def synth_small():
    """In-memory synthetic corpus with its planted truth (n=600)."""
    spec = synth.SynthSpec(n_tweets=600, n_outlets=6, n_users=900, seed=11)
    corpus, truth = synth.generate(spec)
    return spec, corpus, truth


def area_of_tag(spec: synth.SynthSpec) -> dict[str, str]:
    out = {}
    for area, (_lemmas, tags) in spec.areas.items():
        for t in tags:
            out[t] = area
    return out


def build_merge_map(listing_csv: Path, tag_to_area: dict[str, str], dest: Path) -> None:
    """cluster -> majority area of its member hashtags, from the listing CSV."""
    members: dict[int, list[str]] = {}
    with open(listing_csv, newline="", encoding="utf-8") as f:
        first = f.readline()
        if not first.startswith("#"):
            f.seek(0)
        for row in csv.DictReader(f):
            members.setdefault(int(row["cluster"]), []).append(row["hashtag"])
    with open(dest, "w", encoding="utf-8") as f:
        for cid in sorted(members):
            areas = [tag_to_area.get(t, "none") for t in members[cid]]
            best = max(sorted(set(areas)), key=areas.count)
            f.write(f"{cid}\t{best}\n")


PIPELINE_SYNTH_CFG = """\
n_tweets = 1200
n_outlets = 8
n_users = 2000
seed = 7
"""

PIPELINE_CFG = """\
corpus = {out}/corpus.jsonl
output = {out}
seed = 7
consensus_k_max = 10
vocab_train_min = 60
vocab_rest_min = 60
"""


def run_pipeline(out: Path, threads: int = 1, n_tweets: int = 1200,
                 merge_map_src: Path | None = None) -> Path:
    """Full CLI chain into `out`; returns the merge map path used."""
    out.mkdir(parents=True, exist_ok=True)
    synth_cfg = out / "synth.cfg"
    synth_cfg.write_text(PIPELINE_SYNTH_CFG.replace("n_tweets = 1200",
                                                    f"n_tweets = {n_tweets}"))
    base_cfg = out / "pipeline.cfg"
    base_cfg.write_text(PIPELINE_CFG.format(out=out))
    merge_map = out / "merge_map.tsv"
    full_cfg = out / "pipeline_merged.cfg"
    full_cfg.write_text(PIPELINE_CFG.format(out=out) + f"merge_map = {merge_map}\n")
    t = ["--threads", str(threads)]

    assert cli.main(["synth", "--config", str(synth_cfg), "--output", str(out)] + t) == 0
    assert cli.main(["score", "--config", str(base_cfg)] + t) == 0
    assert cli.main(["themes", "--config", str(base_cfg)] + t) == 0  # phase 1
    if merge_map_src is not None:
        merge_map.write_bytes(merge_map_src.read_bytes())
    else:
        build_merge_map(out / "cluster_hashtags.csv",
                        area_of_tag(synth.SynthSpec()), merge_map)
    assert cli.main(["themes", "--config", str(full_cfg)] + t) == 0   # phase 2
    assert cli.main(["factors", "--config", str(full_cfg)] + t) == 0
    assert cli.main(["regress", "--config", str(full_cfg)] + t) == 0
    assert cli.main(["report", "--config", str(full_cfg)] + t) == 0
    return merge_map


@pytest.fixture(scope="session")
def pipeline_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("pipeline")
    run_pipeline(out)
    return out


def read_csv_rows(path: Path) -> tuple[list[str], list[list[str]]]:
    """(header, rows), skipping a leading `# seed=` comment line."""
    with open(path, newline="", encoding="utf-8") as f:
        first = f.readline()
        if not first.startswith("#"):
            f.seek(0)
        reader = csv.reader(f)
        header = next(reader)
        return header, [r for r in reader if r]
