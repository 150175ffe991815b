"""Tokenization, vocabulary thresholds, and bag-of-words counting."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from newsaffect.errors import DataError
from newsaffect.textprep import (BowVocab, TextResources, TokenizedDoc,
                                 bow_matrix, build_vocab, preprocess, to_bow)


def rsrc(stopwords=(), lemma_map=None):
    return TextResources(set(stopwords), dict(lemma_map or {}))


def test_preprocess_lemma_and_url():
    r = rsrc(lemma_map={"cats": "cat", "running": "run"})
    assert preprocess("Cats RUNNING!! http://x.co", r).tokens == ("cat", "run")


def test_preprocess_empty():
    assert preprocess("", rsrc()).tokens == ()


def test_preprocess_all_stopwords():
    assert preprocess("the the the", rsrc(stopwords=["the"])).tokens == ()


def test_preprocess_mentions_emoji_hashtags():
    got = preprocess("@bob says #Fire \U0001f525 is near", rsrc()).tokens
    assert got == ("says", "fire", "is", "near")


def test_preprocess_www_url_and_underscore():
    got = preprocess("see www.example.com/a_b snake_case stays", rsrc()).tokens
    assert got == ("see", "snake", "case", "stays")


def test_stopwords_filter_surface_not_lemma():
    # stopword check happens on the surface form, before the lemma map
    r = rsrc(stopwords=["running"], lemma_map={"ran": "run"})
    assert preprocess("running ran", r).tokens == ("run",)


def test_lemma_map_sanitized_against_stopwords():
    # an entry pointing at a stopword would undo stopword removal downstream
    r = rsrc(stopwords=["be"], lemma_map={"was": "be", "cats": "cat"})
    assert r.lemma_map == {"cats": "cat"}
    assert preprocess("was cats", r).tokens == ("was", "cat")


def test_lemma_map_sanitized_against_chains():
    r = rsrc(lemma_map={"a": "b", "b": "c"})
    # a->b would need a second pass to reach c, so only b->c survives
    assert r.lemma_map == {"b": "c"}


@settings(max_examples=60, deadline=None)
@given(st.lists(st.text(alphabet="abcdefgh", min_size=1, max_size=6), max_size=15))
def test_preprocess_idempotent(words):
    r = rsrc(stopwords=["the", "a"], lemma_map={"cats": "cat", "abc": "ab"})
    once = preprocess(" ".join(words), r)
    again = preprocess(" ".join(once.tokens), r)
    assert once.tokens == again.tokens


def test_resources_load_roundtrip(tmp_path):
    sw = tmp_path / "stop.txt"
    sw.write_text("the\nand\n")
    lm = tmp_path / "lemma.tsv"
    lm.write_text("cats\tcat\nmice\tmouse\n")
    r = TextResources.load(sw, lm)
    assert "and" in r.stopwords and r.lemma_map["mice"] == "mouse"
    lm.write_text("broken line no tab\n")
    with pytest.raises(DataError):
        TextResources.load(sw, lm)


def doc(*tokens):
    return TokenizedDoc(tuple(tokens))


def test_build_vocab_includes_at_thresholds():
    v = build_vocab([doc("cat")], [doc("cat")], train_min=1, rest_min=1)
    assert "cat" in v


def test_build_vocab_boundary_excluded():
    train = [doc(*["cat"] * 499)]
    rest = [doc(*["cat"] * 1000)]
    with pytest.raises(DataError):
        build_vocab(train, rest, train_min=500, rest_min=1000)
    v = build_vocab(train + [doc("cat")], rest, train_min=500, rest_min=1000)
    assert "cat" in v


def test_build_vocab_needs_both_halves():
    with pytest.raises(DataError):
        build_vocab([doc("cat")], [doc("dog")], train_min=1, rest_min=1)


def _zipf_docs(rng, n_docs, vocab_size):
    ranks = np.arange(1, vocab_size + 1)
    p = (1.0 / ranks) / np.sum(1.0 / ranks)
    docs = []
    for _ in range(n_docs):
        words = rng.choice(vocab_size, size=rng.integers(5, 30), p=p)
        docs.append(doc(*[f"w{int(i)}" for i in words]))
    return docs


def test_zipf_volume_fraction_recount_oracle():
    rng = np.random.default_rng(3)
    train = _zipf_docs(rng, 400, 300)
    rest = _zipf_docs(rng, 400, 300)
    v = build_vocab(train, rest, train_min=20, rest_min=20)
    kept = set(v.lemmas)
    total = 0
    kept_tokens = 0
    lemmas_seen = set()
    for d in train + rest:
        for tok in d.tokens:
            total += 1
            lemmas_seen.add(tok)
            if tok in kept:
                kept_tokens += 1
    assert v.retained_volume_fraction == pytest.approx(kept_tokens / total, abs=1e-12)
    assert v.unique_lemma_fraction == pytest.approx(len(kept) / len(lemmas_seen), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=6), st.integers(min_value=1, max_value=6))
def test_build_vocab_monotone_in_thresholds(tm, rm):
    rng = np.random.default_rng(17)
    train = _zipf_docs(rng, 60, 40)
    rest = _zipf_docs(rng, 60, 40)

    def kept(a, b):
        try:
            return set(build_vocab(train, rest, train_min=a, rest_min=b).lemmas)
        except DataError:
            return set()

    assert kept(tm + 1, rm) <= kept(tm, rm)
    assert kept(tm, rm + 1) <= kept(tm, rm)


def test_to_bow_counts():
    v = BowVocab(["cat", "run"], 1, 1)
    assert to_bow(doc("cat", "cat", "run"), v) == {0: 2, 1: 1}


def test_to_bow_oov_dropped():
    v = BowVocab(["cat"], 1, 1)
    assert to_bow(doc("dog", "bird"), v) == {}


def test_bow_matrix_dense_counting_oracle():
    rng = np.random.default_rng(9)
    words = [f"w{i}" for i in range(30)]
    docs = [doc(*rng.choice(words, size=rng.integers(0, 25)).tolist())
            for _ in range(50)]
    v = BowVocab(words[:20], 1, 1)
    M = bow_matrix(docs, v).toarray()
    expect = np.zeros((50, 20))
    for i, d in enumerate(docs):
        for tok in d.tokens:
            if tok in v.index:
                expect[i, v.index[tok]] += 1
    assert np.array_equal(M, expect)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from(["cat", "run", "dog", "x"]), max_size=30))
def test_to_bow_l1_bounded_by_doc_length(tokens):
    v = BowVocab(["cat", "run"], 1, 1)
    bow = to_bow(doc(*tokens), v)
    assert sum(bow.values()) <= len(tokens)


def test_vocab_save_load_roundtrip(tmp_path):
    v = build_vocab([doc("b", "a", "a")], [doc("a", "b")], train_min=1, rest_min=1)
    p = tmp_path / "vocab.tsv"
    v.save(p)
    v2 = BowVocab.load(p)
    assert v2.index == v.index and v2.lemmas == v.lemmas
