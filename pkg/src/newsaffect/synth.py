"""Planted-truth corpus generator.

Every generated post gets a deterministic token budget: emotion tokens in
proportion to the intended per-emotion presence, three same-score moral
tokens per active foundation (so the foundation mean is hit exactly on the
lexicon's 0.25 score grid), a few area-informative lemmas, and filler
mapping to no lexicon entry. Engagement counts follow a log link
round(exp(a + beta.x + noise)); reply sentiment is planted by mixing
positive- and negative-valence words. Per-post RNG streams are derived by
counter so generation order or parallelism never changes the output.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .affect import DIMS, EMOTIONS, FOUNDATIONS, VICES, EmotionLexicon, MoralLexicon
from .corpus import Corpus, TweetRecord, save_corpus
from .errors import ConfigError, DataError
from .resources import data_path

logger = logging.getLogger(__name__)

EPOCH_2020 = 1577836800  # 2020-01-01T00:00:00Z

FILLER = (
    "breaking", "update", "tonight", "morning", "weekend", "city", "nation",
    "program", "moment", "figure", "window", "corner", "road", "house",
    "paper", "signal", "bridge", "garden", "market", "engine",
)

# informative lemmas and hashtag pools per default area
_DEFAULT_AREAS = {
    "covid": (("vaccine", "lockdown", "variant"),
              ("covidnews", "pandemiclife", "maskup", "boostershot",
               "quarantinediary", "viralwave")),
    "politics": (("senate", "ballot", "congress"),
                 ("electionwatch", "votersvoice", "capitolbeat",
                  "policydebate", "campaigntrail", "swingstate")),
    "sports": (("playoff", "touchdown", "goalkeeper"),
               ("gameday", "finalscore", "champsleague", "overtimewin",
                "fanzone", "homerun")),
}

_DEFAULT_FACTORS = {
    1: {"anger": 0.35, "disgust": 0.22, "fear": 0.08, "harm": 0.5, "subversion": 0.2},
    2: {"surprise": 0.5, "anticipation": 0.08, "cheating": 0.3},
    3: {"joy": 0.28, "trust": 0.25, "anticipation": 0.15, "loyalty": 0.4},
    4: {"sadness": 0.38, "fear": 0.2, "degradation": 0.45},
}

_DEFAULT_BETAS = {
    "likes": {"intercept": 2.2, "followers": 0.55, "surprise": 1.6, "trust": 1.2, "harm": 1.0},
    "retweets": {"intercept": 1.8, "followers": 0.5, "harm": 1.5, "fear": 1.1},
    "replies": {"intercept": 1.6, "followers": 0.45, "harm": 1.4, "surprise": 1.0},
    "quotes": {"intercept": 1.2, "followers": 0.4, "cheating": 1.3, "anger": 1.0},
    "conversation_sentiment": {"intercept": 0.0, "joy": 1.5, "trust": 0.8,
                               "harm": -1.5, "sadness": -1.0},
}

COUNT_TARGETS = ("likes", "retweets", "replies", "quotes")

_VIRTUE_OF = dict(zip(VICES, FOUNDATIONS))  # vice dim -> its foundation


@dataclass
class SynthSpec:
    n_tweets: int = 2000
    n_outlets: int = 12
    n_users: int = 3000
    span_days: int = 30
    tweet_length: int = 60
    reply_cap: int = 8
    echo_prob: float = 0.35
    none_prob: float = 0.2
    noise_sigma: float = 0.3
    dirichlet_alpha: float = 0.15
    seed: int = 42
    factors: dict[int, dict[str, float]] = field(default_factory=lambda: dict(_DEFAULT_FACTORS))
    areas: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = field(
        default_factory=lambda: dict(_DEFAULT_AREAS))
    betas: dict[str, dict[str, float]] = field(default_factory=lambda: dict(_DEFAULT_BETAS))

    @property
    def k_true(self) -> int:
        return len(self.factors)

    def h_matrix(self) -> np.ndarray:
        dims = {d: i for i, d in enumerate(DIMS)}
        H = np.zeros((len(self.factors), 18))
        for row, fid in enumerate(sorted(self.factors)):
            for dim, w in self.factors[fid].items():
                H[row, dims[dim]] = w
        return H


def _parse_weights(text: str, where: str) -> dict[str, float]:
    out: dict[str, float] = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" not in item:
            raise ConfigError(f"{where}: expected dim:weight, got {item!r}")
        dim, val = item.rsplit(":", 1)
        try:
            out[dim.strip()] = float(val)
        except ValueError:
            raise ConfigError(f"{where}: weight {val!r} is not a number") from None
    return out


def parse_spec(pairs: dict[str, str]) -> SynthSpec:
    """Flat key=value keys; factor.*/area.*/beta.* groups replace the
    defaults wholesale when any key of the group is present."""
    spec = SynthSpec()
    factors: dict[int, dict[str, float]] = {}
    areas: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {}
    betas: dict[str, dict[str, float]] = {}
    ints = {"n_tweets", "n_outlets", "n_users", "span_days", "tweet_length",
            "reply_cap", "seed"}
    floats = {"echo_prob", "none_prob", "noise_sigma", "dirichlet_alpha"}
    for key, val in pairs.items():
        if key in ints:
            setattr(spec, key, int(val))
        elif key in floats:
            setattr(spec, key, float(val))
        elif key.startswith("factor."):
            try:
                fid = int(key.split(".", 1)[1])
            except ValueError:
                raise ConfigError(f"bad factor id in {key!r}") from None
            factors[fid] = _parse_weights(val, key)
        elif key.startswith("beta."):
            betas[key.split(".", 1)[1]] = _parse_weights(val, key)
        elif key.startswith("area."):
            name = key.split(".", 1)[1]
            if "|" not in val:
                raise ConfigError(f"{key}: expected lemmas | hashtags")
            lemmas, tags = val.split("|", 1)
            areas[name] = (tuple(w.strip() for w in lemmas.split(",") if w.strip()),
                           tuple(w.strip() for w in tags.split(",") if w.strip()))
        else:
            raise ConfigError(f"unknown generator key {key!r}")
    if factors:
        spec.factors = factors
    if areas:
        spec.areas = areas
    if betas:
        spec.betas = betas
    return spec


class _Pools:
    """Token machinery derived from the shipped test lexicons."""

    def __init__(self, emo_lex: EmotionLexicon, moral_lex: MoralLexicon):
        self.by_emotion: dict[str, list[str]] = {e: [] for e in EMOTIONS}
        for w, cats in sorted(emo_lex.emotions.items()):
            for c in cats:
                self.by_emotion[c].append(w)
        self.positive = sorted(w for w, v in emo_lex.valence.items() if v > 0)
        self.negative = sorted(w for w, v in emo_lex.valence.items() if v < 0)
        # (foundation, grid score) -> word with exactly that score
        self.by_score: dict[tuple[str, float], str] = {}
        for w, fs in sorted(moral_lex.scores.items()):
            for fnd, s in fs.items():
                self.by_score.setdefault((fnd, round(s * 4) / 4), w)
        self.lexicon_words = set(emo_lex.emotions) | set(emo_lex.valence) | set(moral_lex.scores)

    def emotion_words(self, emotion: str, count: int, rng) -> list[str]:
        pool = self.by_emotion[emotion]
        return [pool[int(i)] for i in rng.integers(len(pool), size=count)]

    def moral_word(self, foundation: str, score: float) -> str:
        w = self.by_score.get((foundation, score))
        if w is None:
            raise DataError(f"no lexicon word scores {score} on {foundation}")
        return w


def _snap(value: float, lo: float, hi: float) -> float:
    return min(max(round(value * 4) / 4, lo), hi)


def validate_spec(spec: SynthSpec, pools: _Pools) -> None:
    dims = set(DIMS)
    pole_seen: dict[str, str] = {}
    for fid, comp in sorted(spec.factors.items()):
        for dim, w in comp.items():
            if dim not in dims:
                raise ConfigError(f"factor.{fid}: unknown dimension {dim!r}")
            if w < 0:
                raise ConfigError(f"factor.{fid}: negative weight on {dim}")
            if dim not in EMOTIONS and w > 0.8:
                raise DataError(
                    f"infeasible composition: factor.{fid} asks {dim}={w}, "
                    "but the moral transform tops out at 0.8")
            if w > 0 and dim not in EMOTIONS:
                fnd = dim if dim in FOUNDATIONS else _VIRTUE_OF[dim]
                pole = "virtue" if dim in FOUNDATIONS else "vice"
                prev = pole_seen.setdefault(fnd, pole)
                if prev != pole:
                    raise DataError(
                        f"infeasible composition: foundation {fnd!r} is requested "
                        "on both poles; a scored text can only show one")
        # worst-case token budget for a pure loading on this factor
        emo_tokens = sum(round(comp.get(e, 0.0) * spec.tweet_length) for e in EMOTIONS)
        active = sum(1 for d, w in comp.items() if d not in EMOTIONS and w > 0.025)
        budget = emo_tokens + 3 * active + 4 + 3 + 1  # area lemmas + tags + slack
        if budget > spec.tweet_length:
            raise DataError(
                f"infeasible composition: factor.{fid} needs ~{budget} tokens "
                f"but tweet_length={spec.tweet_length}")
    reserved = set(FILLER) | pools.lexicon_words
    for area, (lemmas, tags) in sorted(spec.areas.items()):
        if not lemmas or not tags:
            raise ConfigError(f"area.{area}: needs informative lemmas and hashtags")
        clash = (set(lemmas) & reserved) | (set(tags) & reserved)
        if clash:
            raise ConfigError(f"area.{area}: words {sorted(clash)} collide with "
                              "lexicon or filler pools")
        reserved |= set(lemmas) | set(tags)
    for target, weights in sorted(spec.betas.items()):
        for dim in weights:
            if dim not in dims and dim not in ("intercept", "followers"):
                raise ConfigError(f"beta.{target}: unknown dimension {dim!r}")
    if not 0.0 <= spec.none_prob <= 1.0:
        raise ConfigError("none_prob outside [0, 1]")
    if spec.n_tweets < 1 or spec.n_outlets < 1 or spec.span_days < 1:
        raise ConfigError("n_tweets, n_outlets, span_days must be positive")


@dataclass
class SynthTruth:
    ids: list[str]
    loadings: np.ndarray          # n_tweets x K_true
    areas: list[str]              # per outlet tweet, "none" when absent
    betas: dict[str, dict[str, float]]
    seed: int


def _moral_tokens(a: np.ndarray, pools: _Pools) -> list[str]:
    out: list[str] = []
    dim_index = {d: i for i, d in enumerate(DIMS)}
    for fnd, vice in zip(FOUNDATIONS, VICES):
        v = a[dim_index[fnd]]
        u = a[dim_index[vice]]
        if v > 0.025:
            m = _snap(5.0 * (v + 1.0), 5.25, 9.0)
        elif u > 0.025:
            m = _snap(5.0 * (1.0 - u), 1.0, 4.75)
        else:
            continue
        out.extend([pools.moral_word(fnd, m)] * 3)
    return out


def _make_tweet(spec: SynthSpec, pools: _Pools, i: int, outlet: str,
                followers: int, area_names: list[str],
                H: np.ndarray) -> tuple[list[TweetRecord], np.ndarray, str]:
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 1, i]))
    w = rng.dirichlet([spec.dirichlet_alpha] * H.shape[0])
    a = w @ H

    if area_names and rng.random() >= spec.none_prob:
        area = area_names[int(rng.integers(len(area_names)))]
    else:
        area = "none"

    L = spec.tweet_length
    tokens: list[str] = []
    for e_i, emotion in enumerate(EMOTIONS):
        n_e = round(float(a[e_i]) * L)
        if n_e:
            tokens.extend(pools.emotion_words(emotion, n_e, rng))
    tokens.extend(_moral_tokens(a, pools))
    tags: tuple[str, ...] = ()
    if area != "none":
        lemmas, pool_tags = spec.areas[area]
        tokens.extend(lemmas[int(j)] for j in rng.integers(len(lemmas), size=4))
        n_tags = 2 + int(rng.integers(2))
        picked = rng.choice(len(pool_tags), size=min(n_tags, len(pool_tags)), replace=False)
        tags = tuple(pool_tags[int(j)] for j in sorted(picked))
    # hashtag bodies survive preprocessing as tokens, so they share the
    # length-L budget; keeps scored emotion presence at n_e / L exactly
    while len(tokens) < L - len(tags):
        tokens.append(FILLER[int(rng.integers(len(FILLER)))])
    order = rng.permutation(len(tokens))
    text = " ".join([tokens[int(j)] for j in order] + [f"#{t}" for t in tags])

    z_fol = math.log10(followers) - 5.0
    dim_index = {d: i for i, d in enumerate(DIMS)}

    def link(target: str) -> float:
        weights = spec.betas.get(target, {})
        s = weights.get("intercept", 0.0) + weights.get("followers", 0.0) * z_fol
        for dim, b in weights.items():
            if dim in dim_index:
                s += b * float(a[dim_index[dim]])
        return s

    counts = {}
    for target in COUNT_TARGETS:
        eta = link(target) + spec.noise_sigma * rng.standard_normal()
        counts[target] = max(int(round(math.exp(eta))), 0)

    day = int(rng.integers(spec.span_days))
    ts = EPOCH_2020 + day * 86400 + int(rng.integers(86400))
    tid = f"t{i:07d}"
    root = TweetRecord(
        id=tid, author=outlet, timestamp=ts, text=text, outlet=outlet,
        hashtags=tags, reply_to=None, like_count=counts["likes"],
        retweet_count=counts["retweets"], reply_count=counts["replies"],
        quote_count=counts["quotes"], follower_count=followers,
    )

    records = [root]
    s_tweet = float(np.clip(link("conversation_sentiment")
                            + spec.noise_sigma * rng.standard_normal(), -0.8, 0.8))
    n_replies = min(counts["replies"], spec.reply_cap)
    for r in range(n_replies):
        s_r = float(np.clip(s_tweet + 0.1 * rng.standard_normal(), -0.8, 0.8))
        echo = area != "none" and rng.random() < spec.echo_prob
        extra: list[str] = []
        rtags: tuple[str, ...] = ()
        if echo:
            lemmas, _ = spec.areas[area]
            extra = [lemmas[int(j)] for j in rng.integers(len(lemmas), size=2)]
            rtags = tags
        elif area != "none" and rng.random() < 0.5:
            # keep informative lemmas visible outside the hashtagged half
            lemmas, _ = spec.areas[area]
            extra = [lemmas[int(rng.integers(len(lemmas)))]]
        fillers = [FILLER[int(j)] for j in rng.integers(len(FILLER), size=2)]
        total = 18 + len(extra) + len(fillers) + len(rtags)
        diff = 2 * round(s_r * total / 2.0)
        diff = max(-18, min(18, diff))
        n_pos = (18 + diff) // 2
        vtokens = [pools.positive[int(j)]
                   for j in rng.integers(len(pools.positive), size=n_pos)]
        vtokens += [pools.negative[int(j)]
                    for j in rng.integers(len(pools.negative), size=18 - n_pos)]
        rtokens = vtokens + extra + fillers
        rorder = rng.permutation(len(rtokens))
        rtext = " ".join([rtokens[int(j)] for j in rorder] + [f"#{t}" for t in rtags])
        records.append(TweetRecord(
            id=f"{tid}r{r:02d}", author=f"user{int(rng.integers(spec.n_users)):05d}",
            timestamp=ts + 60 * (r + 1), text=rtext, outlet=None, hashtags=rtags,
            reply_to=tid,
        ))
    return records, w, area


def generate(spec: SynthSpec, emotion_lexicon: str | Path | None = None,
             moral_lexicon: str | Path | None = None,
             threads: int = 1) -> tuple[Corpus, SynthTruth]:
    emo_lex = EmotionLexicon.load(emotion_lexicon or data_path("test_emotion_lexicon.tsv"))
    moral_lex = MoralLexicon.load(moral_lexicon or data_path("test_moral_lexicon.tsv"))
    pools = _Pools(emo_lex, moral_lex)
    validate_spec(spec, pools)

    meta_rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 0]))
    followers = {f"outlet{k:02d}": int(10 ** meta_rng.uniform(3.5, 7.0))
                 for k in range(spec.n_outlets)}
    outlet_names = sorted(followers)
    area_names = sorted(spec.areas)
    H = spec.h_matrix()

    def build(i: int):
        outlet = outlet_names[i % len(outlet_names)]
        return _make_tweet(spec, pools, i, outlet, followers[outlet], area_names, H)

    results: list[tuple[list[TweetRecord], np.ndarray, str]]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool_ex:
            results = list(pool_ex.map(build, range(spec.n_tweets)))
    else:
        results = [build(i) for i in range(spec.n_tweets)]

    tweets: list[TweetRecord] = []
    ids: list[str] = []
    loadings = np.zeros((spec.n_tweets, H.shape[0]))
    areas: list[str] = []
    for i, (records, w, area) in enumerate(results):
        tweets.extend(records)
        ids.append(records[0].id)
        loadings[i] = w
        areas.append(area)
    corpus = Corpus(tweets=tweets)
    truth = SynthTruth(ids=ids, loadings=loadings, areas=areas,
                       betas={t: dict(ws) for t, ws in spec.betas.items()},
                       seed=spec.seed)
    logger.info("generated %d posts (%d records) over %d outlets",
                spec.n_tweets, len(tweets), spec.n_outlets)
    return corpus, truth


def write_truth(out_dir: str | Path, truth: SynthTruth) -> None:
    out = Path(out_dir)
    k = truth.loadings.shape[1]
    with open(out / "truth_loadings.csv", "w", newline="", encoding="utf-8") as f:
        f.write(f"# seed={truth.seed}\n")
        f.write("id," + ",".join(f"loading_{j + 1}" for j in range(k)) + "\n")
        for i, tid in enumerate(truth.ids):
            vals = ",".join(format(x, ".12g") for x in truth.loadings[i])
            f.write(f"{tid},{vals}\n")
    with open(out / "truth_areas.csv", "w", newline="", encoding="utf-8") as f:
        f.write(f"# seed={truth.seed}\n")
        f.write("id,area\n")
        for tid, area in zip(truth.ids, truth.areas):
            f.write(f"{tid},{area}\n")
    with open(out / "truth_beta.csv", "w", newline="", encoding="utf-8") as f:
        f.write(f"# seed={truth.seed}\n")
        f.write("target,dimension,weight\n")
        for target in sorted(truth.betas):
            for dim, wt in sorted(truth.betas[target].items()):
                f.write(f"{target},{dim},{format(wt, '.12g')}\n")


def run_synth(spec: SynthSpec, out_dir: str | Path, threads: int = 1) -> Corpus:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus, truth = generate(spec, threads=threads)
    save_corpus(corpus, out / "corpus.jsonl")
    write_truth(out, truth)
    return corpus
