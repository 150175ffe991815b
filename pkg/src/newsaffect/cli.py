"""Command-line front door for the pipeline.

Subcommands: score, themes, factors, regress, synth, report. Options shared
by all of them: --config (plain key=value file), --seed, --threads,
--output. Exit codes: 0 success, 2 configuration problems, 3 data problems,
4 numerical failures.
"""

from __future__ import annotations

import argparse
import logging
import re
import sys
from pathlib import Path

import numpy as np

from . import affect, engage, factors, reports, synth
from .corpus import (Corpus, build_conversations, load_corpus,
                     write_conversation_summary)
from .errors import ConfigError, DataError, NumericalError
from .resources import data_path
from .textprep import BowVocab, TextResources, bow_matrix, build_vocab, preprocess
from .themes import consensus, embedding, hashtags, labelprop

logger = logging.getLogger(__name__)

DEFAULTS = {
    "corpus": "",                      # path to JSONL corpus (required by most commands)
    "output": "out",
    "seed": "0",
    "threads": "1",
    "stopwords": "",                   # blank = packaged list
    "lemma_map": "",
    "emotion_lexicon": "",
    "moral_lexicon": "",
    "merge_map": "",                   # cluster_id<TAB>area file; themes halts without it
    "min_authors": "10",
    "vocab_train_min": "500",
    "vocab_rest_min": "1000",
    "keep_hashtag_tokens": "false",
    "embed_dim": "32",
    "embed_epochs": "15",
    "embed_negatives": "5",
    "embed_lr": "0.025",
    "consensus_k_min": "1",
    "consensus_k_max": "100",
    "consensus_runs": "20",
    "min_positives": "50",
    "nmf_k": "0",                      # 0 = choose by the elbow rule
    "nmf_k_min": "1",
    "nmf_k_max": "18",
    "nmf_max_iter": "2000",
    "nmf_select_iter": "500",
    "nmf_tol": "1e-6",
    "direct_replies_only": "false",
    "membership_threshold": "0.5",
    "prevalence_window": "7",
    "cluster_top_n": "20",
}


def load_config(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {p} does not exist")
    with open(p, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{p}:{lineno}: expected key = value")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out


class Settings:
    """Config file merged over defaults, then command-line overrides."""

    def __init__(self, cfg: dict[str, str], args: argparse.Namespace):
        merged = dict(DEFAULTS)
        for k, v in cfg.items():
            merged[k] = v
        self.raw = cfg
        self.args = args
        self.values = merged
        if args.seed is not None:
            self.values["seed"] = str(args.seed)
        if args.threads is not None:
            self.values["threads"] = str(args.threads)
        if args.output is not None:
            self.values["output"] = args.output

    def get(self, key: str) -> str:
        return self.values[key]

    def get_int(self, key: str) -> int:
        try:
            return int(self.values[key])
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {self.values[key]!r}") from None

    def get_float(self, key: str) -> float:
        try:
            return float(self.values[key])
        except ValueError:
            raise ConfigError(f"{key} must be a number, got {self.values[key]!r}") from None

    def get_bool(self, key: str) -> bool:
        v = self.values[key].lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off", ""):
            return False
        raise ConfigError(f"{key} must be a boolean, got {self.values[key]!r}")

    @property
    def seed(self) -> int:
        return self.get_int("seed")

    @property
    def threads(self) -> int:
        n = self.get_int("threads")
        if n < 1:
            raise ConfigError("threads must be >= 1")
        return n

    @property
    def out_dir(self) -> Path:
        p = Path(self.get("output"))
        p.mkdir(parents=True, exist_ok=True)
        return p

    def path_or_packaged(self, key: str, packaged: str) -> Path:
        v = self.get(key)
        if not v:
            return data_path(packaged)
        p = Path(v)
        if not p.is_file():
            raise ConfigError(f"{key} path {p} does not exist")
        return p

    def corpus(self) -> Corpus:
        v = self.get("corpus")
        if not v:
            # lets synth -> score -> ... chain on a single --output
            fallback = self.out_dir / "corpus.jsonl"
            if fallback.is_file():
                return load_corpus(fallback)
            raise ConfigError("no corpus path configured (key: corpus)")
        p = Path(v)
        if not p.is_file():
            raise ConfigError(f"corpus path {p} does not exist")
        return load_corpus(p)

    def resources(self) -> TextResources:
        return TextResources.load(
            self.path_or_packaged("stopwords", "stopwords_en.txt"),
            self.path_or_packaged("lemma_map", "lemma_map_en.tsv"),
        )

    def scorer(self) -> affect.AffectScorer:
        emo = affect.EmotionLexicon.load(
            self.path_or_packaged("emotion_lexicon", "test_emotion_lexicon.tsv"))
        moral = affect.MoralLexicon.load(
            self.path_or_packaged("moral_lexicon", "test_moral_lexicon.tsv"))
        return affect.AffectScorer(emo, moral, self.resources())


def _safe_name(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_") or "area"


def _scores_for(settings: Settings, corpus: Corpus) -> dict[str, affect.AffectVector]:
    """Reuse affect.csv when the ids match the corpus; else score afresh."""
    path = settings.out_dir / "affect.csv"
    if path.is_file():
        ids, mat, sent = affect.read_affect_csv(path)
        if ids == [t.id for t in corpus.tweets]:
            out = {}
            for i, tid in enumerate(ids):
                row = mat[i]
                out[tid] = affect.AffectVector(
                    emotions=tuple(row[:8]), virtue=tuple(row[8:13]),
                    vice=tuple(row[13:18]),
                    foundation_means=(float("nan"),) * 5, sentiment=float(sent[i]))
            logger.info("reusing %s", path)
            return out
        logger.warning("%s does not match the corpus; rescoring", path)
    return settings.scorer().score_corpus(corpus)


def cmd_score(settings: Settings) -> int:
    corpus = settings.corpus()
    scorer = settings.scorer()
    scores = scorer.score_corpus(corpus)
    out = settings.out_dir
    affect.write_affect_csv(out / "affect.csv", corpus, scores, seed=settings.seed)
    print(f"scored {len(corpus.tweets)} posts -> {out / 'affect.csv'}")
    return 0


def _docs_for(corpus: Corpus, resources: TextResources,
              strip_own_hashtags: bool):
    """TokenizedDocs in corpus order; optionally drop tokens that echo the
    post's own hashtags so area classifiers cannot read the label."""
    docs = []
    for t in corpus.tweets:
        doc = preprocess(t.text, resources)
        if strip_own_hashtags and t.hashtags:
            banned = {resources.lemma_map.get(h, h) for h in t.hashtags}
            doc = type(doc)(tuple(tok for tok in doc.tokens if tok not in banned))
        docs.append(doc)
    return docs


def cmd_themes(settings: Settings) -> int:
    corpus = settings.corpus()
    out = settings.out_dir
    seed = settings.seed

    eligible = hashtags.select_hashtags(corpus, settings.get_int("min_authors"))
    logger.info("%d eligible hashtags", len(eligible))
    sentences = hashtags.hashtag_sentences(corpus, eligible)
    emb = embedding.train_embedding(
        sentences, dim=settings.get_int("embed_dim"),
        epochs=settings.get_int("embed_epochs"),
        negatives=settings.get_int("embed_negatives"),
        learning_rate=settings.get_float("embed_lr"), seed=seed)
    emb.save(out / "embedding.tsv")

    k_range = range(settings.get_int("consensus_k_min"),
                    settings.get_int("consensus_k_max") + 1)
    model = consensus.consensus_cluster(
        emb.names, emb.vectors, k_range, runs=settings.get_int("consensus_runs"),
        seed=seed, threads=settings.threads)
    stats = hashtags.hashtag_stats(corpus)
    hashtags.write_pac_curve(out / "pac_curve.csv", model, seed=seed)
    hashtags.write_cluster_listing(out / "cluster_hashtags.csv", model, stats,
                                   top_n=settings.get_int("cluster_top_n"), seed=seed)

    merge_path = settings.get("merge_map")
    if not merge_path:
        print(f"chose K={model.chosen_k}; wrote {out / 'pac_curve.csv'} and "
              f"{out / 'cluster_hashtags.csv'}")
        print("no merge_map configured: inspect the cluster listing, write a "
              "cluster_id<TAB>macro_area file, set merge_map, and re-run")
        return 0
    mp = Path(merge_path)
    if not mp.is_file():
        raise ConfigError(f"merge_map path {mp} does not exist")
    merge_map = hashtags.load_merge_map(mp, {int(l) for l in model.labels})
    tag_area = hashtags.assign_macro_areas(model, merge_map)
    areas = sorted(set(tag_area.values()) - {"none"})
    if not areas:
        raise DataError("merge map assigns every cluster to 'none'")

    resources = settings.resources()
    strip = not settings.get_bool("keep_hashtag_tokens")
    docs = _docs_for(corpus, resources, strip)
    has_tags = [bool(t.hashtags) for t in corpus.tweets]
    train_docs = [d for d, h in zip(docs, has_tags) if h]
    rest_docs = [d for d, h in zip(docs, has_tags) if not h]
    if not train_docs or not rest_docs:
        raise DataError("corpus needs both hashtagged and plain posts to build a vocabulary")
    vocab = build_vocab(train_docs, rest_docs,
                        train_min=settings.get_int("vocab_train_min"),
                        rest_min=settings.get_int("vocab_rest_min"))
    vocab.save(out / "vocab.tsv")

    train_tweets = [t for t in corpus.tweets if t.hashtags]
    X_train = bow_matrix(train_docs, vocab)
    targets = {}
    for area in areas:
        targets[area] = np.array(
            [1.0 if any(tag_area.get(h) == area for h in t.hashtags) else 0.0
             for t in train_tweets])
    classifiers = labelprop.train_area_classifiers(
        X_train, targets, seed=seed, threads=settings.threads,
        min_positives=settings.get_int("min_positives"))

    with open(out / "area_metrics.csv", "w", newline="", encoding="utf-8") as f:
        f.write(f"# seed={seed}\n")
        f.write("area,lambda,precision,f1,n_positive\n")
        for area in sorted(classifiers):
            clf = classifiers[area]
            npos = int(targets[area].sum())
            f.write(f"{area},{format(clf.lam, '.12g')},{format(clf.precision, '.12g')},"
                    f"{format(clf.f1, '.12g')},{npos}\n")
        for area in sorted(set(areas) - set(classifiers)):
            f.write(f"{area},,,,{int(targets[area].sum())}\n")
    for area in sorted(classifiers):
        classifiers[area].save(out / f"area_model_{_safe_name(area)}.tsv", vocab.lemmas)

    X_all = bow_matrix(docs, vocab)
    labels = labelprop.propagate_labels(classifiers, X_all,
                                        [t.id for t in corpus.tweets])
    with open(out / "area_scores.csv", "w", newline="", encoding="utf-8") as f:
        f.write(f"# seed={seed}\n")
        cols = [f"score_{a}" for a in labels.areas] + [f"label_{a}" for a in labels.areas]
        f.write("id," + ",".join(cols) + "\n")
        binary = labels.binary()
        for i, tid in enumerate(labels.ids):
            vals = [format(x, ".12g") for x in labels.scores[i]]
            vals += [str(int(b)) for b in binary[i]]
            f.write(f"{tid},{','.join(vals)}\n")

    outlet_of = {t.id: t.outlet for t in corpus.tweets}
    outlets, area_names, cov = labelprop.coverage_table(labels, outlet_of)
    with open(out / "coverage.csv", "w", newline="", encoding="utf-8") as f:
        f.write(f"# seed={seed}\n")
        f.write("outlet," + ",".join(area_names) + "\n")
        for r, o in enumerate(outlets):
            f.write(o + "," + ",".join(format(x, ".12g") for x in cov[r]) + "\n")

    print(f"K={model.chosen_k}, {len(classifiers)} area classifiers, "
          f"labels for {len(labels.ids)} posts -> {out}")
    return 0


def _read_area_scores(path: Path) -> tuple[list[str], list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as f:
        first = f.readline()
        if not first.startswith("#"):
            f.seek(0)
        header = f.readline().rstrip("\n").split(",")
        score_cols = [(i, c[len("score_"):]) for i, c in enumerate(header)
                      if c.startswith("score_")]
        ids, rows = [], []
        for line in f:
            if not line.strip():
                continue
            parts = line.rstrip("\n").split(",")
            ids.append(parts[0])
            rows.append([float(parts[i]) for i, _ in score_cols])
    return ids, [c for _, c in score_cols], np.asarray(rows)


def cmd_factors(settings: Settings) -> int:
    corpus = settings.corpus()
    out = settings.out_dir
    seed = settings.seed
    scores = _scores_for(settings, corpus)
    outlet = corpus.outlet_tweets()
    if not outlet:
        raise DataError("no outlet posts to factor")
    ids = [t.id for t in outlet]
    X = affect.affect_matrix(corpus, scores, ids)

    k_fixed = settings.get_int("nmf_k")
    k_max = min(settings.get_int("nmf_k_max"), min(X.shape))
    k_min = max(settings.get_int("nmf_k_min"), 1)
    if k_fixed > 0:
        chosen = k_fixed
        curve = {chosen: factors.fit_nmf(
            X, chosen, seed=seed,
            max_iter=settings.get_int("nmf_select_iter")).explained_variance(X)}
    else:
        curve = factors.ev_curve(X, range(k_min, k_max + 1), seed=seed,
                                 max_iter=settings.get_int("nmf_select_iter"))
        chosen = factors.select_k(curve)
    res = factors.fit_nmf(X, chosen, seed=seed,
                          max_iter=settings.get_int("nmf_max_iter"),
                          tol=settings.get_float("nmf_tol"))
    factors.write_ev_curve_csv(out / "ev_curve.csv", curve, chosen, seed=seed)
    factors.write_composition_csv(out / "factor_composition.csv", res.H, seed=seed)
    factors.write_loadings_csv(out / "factor_loadings.csv", ids, res.W, seed=seed)

    outlets = [t.outlet for t in outlet]
    names, mat = factors.predominance(res.W, outlets)
    factors.write_predominance_csv(out / "predominance_outlets.csv", names, mat,
                                   "outlet", seed=seed)

    area_path = out / "area_scores.csv"
    if area_path.is_file():
        aid, area_names, all_scores = _read_area_scores(area_path)
        row_of = {tid: i for i, tid in enumerate(aid)}
        if all(tid in row_of for tid in ids):
            rows = []
            kept = []
            for a_i, area in enumerate(area_names):
                mask = np.array([all_scores[row_of[tid], a_i] > 0.5 for tid in ids])
                if not mask.any():
                    continue
                _, m = factors.predominance(res.W[mask], [area] * int(mask.sum()))
                rows.append(m[0])
                kept.append(area)
            if rows:
                factors.write_predominance_csv(out / "predominance_areas.csv",
                                               kept, np.stack(rows), "area", seed=seed)
        else:
            logger.warning("area_scores.csv does not cover the outlet posts; "
                           "skipping per-area predominance")

    print(f"K={chosen}, explained variance {curve[chosen]:.4f} -> {out}")
    return 0


def _feature_table(settings: Settings, corpus: Corpus,
                   scores: dict[str, affect.AffectVector]) -> engage.FeatureTable:
    outlet = corpus.outlet_tweets()
    ids = [t.id for t in outlet]
    names: list[str] = []
    cols: list[np.ndarray] = []
    groups: dict[str, list[str]] = {}

    def add_group(group: str, col_names: list[str], mat: np.ndarray):
        groups[group] = list(col_names)
        names.extend(col_names)
        for j in range(mat.shape[1]):
            cols.append(mat[:, j])

    X = affect.affect_matrix(corpus, scores, ids)
    add_group("emotions", [f"emotion_{e}" for e in affect.EMOTIONS], X[:, :8])
    moral_names = [f"virtue_{k}" for k in affect.FOUNDATIONS] + \
                  [f"vice_{v}" for v in affect.VICES]
    add_group("morals", moral_names, X[:, 8:18])
    add_group("followers", ["followers"],
              np.array([[float(t.follower_count)] for t in outlet]))

    out = settings.out_dir
    loadings_path = out / "factor_loadings.csv"
    if loadings_path.is_file():
        lid, W = factors.read_loadings_csv(loadings_path)
        row_of = {tid: i for i, tid in enumerate(lid)}
        if all(tid in row_of for tid in ids):
            Wo = np.stack([W[row_of[tid]] for tid in ids])
            add_group("nmf", [f"factor_{j + 1}" for j in range(Wo.shape[1])], Wo)
        else:
            logger.warning("factor_loadings.csv does not cover the outlet posts; "
                           "nmf scheme unavailable")

    area_path = out / "area_scores.csv"
    if area_path.is_file():
        aid, area_names, A = _read_area_scores(area_path)
        row_of = {tid: i for i, tid in enumerate(aid)}
        if all(tid in row_of for tid in ids):
            Ao = np.stack([A[row_of[tid]] for tid in ids])
            add_group("areas", [f"area_{_safe_name(a)}" for a in area_names], Ao)
        else:
            logger.warning("area_scores.csv does not cover the outlet posts; "
                           "area confounders unavailable")

    article_rows = np.array([t.article_text is not None for t in outlet])
    if article_rows.any():
        scorer = settings.scorer()
        art = np.zeros((len(outlet), 18))
        for i, t in enumerate(outlet):
            if t.article_text is not None:
                art[i] = scorer.score_text(t.article_text).vector()
        add_group("emotions_article",
                  [f"emotion_{e}_article" for e in affect.EMOTIONS], art[:, :8])
        add_group("morals_article", [f"{m}_article" for m in moral_names], art[:, 8:18])
    else:
        article_rows = None

    table = engage.FeatureTable(
        ids=ids, names=names, X=np.column_stack(cols), groups=groups,
        article_rows=article_rows)
    return table


def cmd_regress(settings: Settings) -> int:
    corpus = settings.corpus()
    out = settings.out_dir
    seed = settings.seed
    scores = _scores_for(settings, corpus)
    outlet = corpus.outlet_tweets()
    if not outlet:
        raise DataError("no outlet posts to regress on")

    roots = {t.id for t in outlet}
    build = build_conversations(corpus, roots)
    trees = {tr.root: tr for tr in build.trees}
    direct = settings.get_bool("direct_replies_only")
    conv = []
    for t in outlet:
        s = affect.conversation_sentiment(trees[t.id], scores, corpus=corpus,
                                          direct_only=direct)
        conv.append(np.nan if s is None else s)
    targets = {
        "likes": np.array([float(t.like_count) for t in outlet]),
        "retweets": np.array([float(t.retweet_count) for t in outlet]),
        "replies": np.array([float(t.reply_count) for t in outlet]),
        "quotes": np.array([float(t.quote_count) for t in outlet]),
        "conversation_sentiment": np.asarray(conv),
    }

    features = _feature_table(settings, corpus, scores)
    suite = engage.run_engagement_suite(features, targets)
    engage.write_r2_table(out / "r2_table.csv", suite, seed=seed)
    engage.write_coefficients(out / "coefficients.csv", suite, seed=seed)

    if "areas" in features.groups:
        labels = {}
        for col in features.groups["areas"]:
            area = col[len("area_"):]
            labels[area] = features.columns([col])[:, 0]
        topic = engage.run_topic_suite(
            features, labels, targets,
            membership_threshold=settings.get_float("membership_threshold"))
        by_area: dict[str, list[engage.RegressionReport]] = {}
        for rep in topic:
            by_area.setdefault(rep.area, []).append(rep)
        for area in sorted(by_area):
            sub = out / "areas" / _safe_name(area)
            sub.mkdir(parents=True, exist_ok=True)
            engage.write_r2_table(sub / "r2_table.csv", by_area[area], seed=seed)
            engage.write_coefficients(sub / "coefficients.csv", by_area[area], seed=seed)
    else:
        logger.warning("no area scores available; per-area models skipped")

    series = reports.prevalence_series(corpus, scores,
                                       window=settings.get_int("prevalence_window"))
    reports.write_prevalence(out, series, seed=seed)
    write_conversation_summary(build.trees, corpus, out / "conversations.csv")
    print(f"{len(suite)} models -> {out}")
    return 0


def cmd_synth(settings: Settings) -> int:
    # output/threads belong to the CLI layer even when set in the same file
    gen_keys = {k: v for k, v in settings.raw.items()
                if k not in ("output", "threads", "corpus")}
    spec = synth.parse_spec(gen_keys)
    if settings.args.seed is not None:
        spec.seed = settings.args.seed
    out = settings.out_dir
    corpus = synth.run_synth(spec, out, threads=settings.threads)
    print(f"{len(corpus.tweets)} records -> {out / 'corpus.jsonl'}")
    return 0


def cmd_report(settings: Settings) -> int:
    out = settings.out_dir
    if not (out / "prevalence_series.csv").is_file():
        try:
            corpus = settings.corpus()
        except ConfigError:
            corpus = None
        if corpus is not None:
            scores = _scores_for(settings, corpus)
            series = reports.prevalence_series(
                corpus, scores, window=settings.get_int("prevalence_window"))
            reports.write_prevalence(out, series, seed=settings.seed)
    written = reports.render_figures(out)
    if not written:
        raise DataError(f"nothing to render in {out}; run the pipeline first")
    print("\n".join(str(p) for p in written))
    return 0


COMMANDS = {
    "score": (cmd_score, "score every post for emotions, morals, and sentiment"),
    "themes": (cmd_themes, "discover macro areas from hashtags and propagate labels"),
    "factors": (cmd_factors, "extract latent affect factors from outlet posts"),
    "regress": (cmd_regress, "fit engagement regressions and emit report tables"),
    "synth": (cmd_synth, "generate a planted-truth synthetic corpus"),
    "report": (cmd_report, "render figures for the CSV outputs"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="newsaffect",
        description="Affect and engagement analysis of social news posts")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_fn, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--seed", type=int, help="global random seed")
        p.add_argument("--threads", type=int, help="worker threads for parallel stages")
        p.add_argument("--output", help="output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else {}
        settings = Settings(cfg, args)
        fn, _ = COMMANDS[args.command]
        return fn(settings)
    except (ConfigError, DataError, NumericalError) as e:
        logger.error("%s", e)
        return e.exit_code
    except OSError as e:
        logger.error("%s", e)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
