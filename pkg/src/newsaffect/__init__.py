"""Affect scoring, theme discovery, latent factors, and engagement models
for social news posts."""

from .affect import (DIMS, EMOTIONS, FOUNDATIONS, VICES, AffectScorer,
                     AffectVector, EmotionLexicon, MoralLexicon,
                     conversation_sentiment)
from .corpus import Corpus, TweetRecord, build_conversations, load_corpus, save_corpus
from .engage import (FeatureTable, RegressionReport, fit_ols, quantile_normalize,
                     run_engagement_suite, run_topic_suite, vif_filter)
from .errors import ConfigError, DataError, NumericalError
from .factors import NMFResult, fit_nmf, predominance, select_k
from .synth import SynthSpec, generate
from .textprep import BowVocab, TextResources, build_vocab, preprocess, to_bow

__version__ = "0.1.0"

__all__ = [
    "DIMS", "EMOTIONS", "FOUNDATIONS", "VICES",
    "AffectScorer", "AffectVector", "EmotionLexicon", "MoralLexicon",
    "conversation_sentiment",
    "Corpus", "TweetRecord", "build_conversations", "load_corpus", "save_corpus",
    "FeatureTable", "RegressionReport", "fit_ols", "quantile_normalize",
    "run_engagement_suite", "run_topic_suite", "vif_filter",
    "ConfigError", "DataError", "NumericalError",
    "NMFResult", "fit_nmf", "predominance", "select_k",
    "SynthSpec", "generate",
    "BowVocab", "TextResources", "build_vocab", "preprocess", "to_bow",
    "__version__",
]
