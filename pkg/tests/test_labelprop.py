"""L1 path solver correctness, nested-CV training, and label propagation."""

from __future__ import annotations

import numpy as np
import pytest
from scipy import sparse

from newsaffect.errors import DataError
from newsaffect.themes import labelprop

from . import oracles


def _dyadic(rng, shape, scale=4):
    # values on the 1/2^scale grid convert exactly to Fraction
    return rng.integers(-40, 41, size=shape).astype(np.float64) / (1 << scale)


def test_tiny_lambda_matches_exact_ols():
    rng = np.random.default_rng(0)
    X = _dyadic(rng, (60, 4))
    beta_true = np.array([1.5, -2.0, 0.5, 0.0])
    y = X @ beta_true + 0.25 + _dyadic(rng, 60, scale=6)
    path = labelprop.lasso_path(X, y, np.asarray([1e-10]))
    want = oracles.ols_exact(X, y)
    assert abs(path.intercepts[0] - want[0]) < 1e-6
    assert np.max(np.abs(path.betas[0] - np.asarray(want[1:]))) < 1e-6


def test_lambda_at_max_gives_empty_model():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((50, 6))
    y = X[:, 0] + 0.1 * rng.standard_normal(50)
    _G, q, _xm, _ym = labelprop._moments(X, y)
    lam_max = float(np.max(np.abs(q)))
    path = labelprop.lasso_path(X, y, np.asarray([lam_max * 1.001]))
    assert not path.betas[0].any()
    assert path.intercepts[0] == float(y.mean())


def test_kkt_holds_along_whole_path():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((80, 12))
    y = X[:, 0] - 0.7 * X[:, 3] + 0.2 * rng.standard_normal(80)
    path = labelprop.lasso_path(X, y)
    assert len(path.lambdas) == labelprop.N_LAMBDA
    for i, lam in enumerate(path.lambdas):
        gap = oracles.lasso_kkt_gap(X, y, path.betas[i], float(lam))
        assert gap <= 1e-6, f"lambda index {i}: KKT gap {gap}"


def test_sparse_and_dense_inputs_agree():
    rng = np.random.default_rng(3)
    X = (rng.random((40, 8)) < 0.3) * rng.integers(1, 4, size=(40, 8))
    X = X.astype(np.float64)
    y = X[:, 1] + rng.standard_normal(40) * 0.1
    lambdas = labelprop.lambda_grid(labelprop._moments(X, y)[1])
    dense = labelprop.lasso_path(X, y, lambdas)
    sp = labelprop.lasso_path(sparse.csr_matrix(X), y, lambdas)
    assert np.allclose(dense.betas, sp.betas, atol=1e-10)
    assert np.allclose(dense.intercepts, sp.intercepts, atol=1e-10)


def test_path_recovers_planted_support():
    rng = np.random.default_rng(4)
    n, p = 300, 30
    X = rng.standard_normal((n, p))
    planted = [2, 7, 11, 25]
    beta = np.zeros(p)
    beta[planted] = 1.0
    y = X @ beta + 0.1 * rng.standard_normal(n)
    path = labelprop.lasso_path(X, y)
    last = path.betas[-1]
    assert all(abs(last[j]) > 0.8 for j in planted)
    nulls = np.delete(last, planted)
    assert np.max(np.abs(nulls)) < 0.1


def test_precision_zero_when_nothing_predicted():
    y_true = np.array([1.0, 0.0, 1.0])
    y_pred = np.array([0.2, 0.1, 0.5])  # 0.5 is not strictly above threshold
    assert labelprop._precision(y_true, y_pred) == 0.0
    assert labelprop._precision(y_true, np.array([0.9, 0.1, 0.51])) == 1.0


def test_lambda_tie_prefers_sparser_model():
    # constant target: every lambda predicts nothing, precision ties at 0
    rng = np.random.default_rng(5)
    X = rng.standard_normal((40, 3))
    y = np.zeros(40)
    lambdas = np.geomspace(1.0, 0.001, 10)
    folds = labelprop._folds(40, 4, np.random.default_rng(0))
    assert labelprop._select_lambda(X, y, folds, lambdas) == 1.0


def _count_data(seed=6, n=400, p=20):
    """BOW-ish counts where two columns decide the label."""
    rng = np.random.default_rng(seed)
    X = rng.poisson(0.5, size=(n, p)).astype(np.float64)
    y = ((X[:, 0] + X[:, 1]) >= 2).astype(np.float64)
    return X, y


def test_nested_cv_learns_and_reports_precision():
    X, y = _count_data()
    clf = labelprop.nested_cv_train(X, y, "topic", seed=3)
    assert clf.area == "topic"
    assert clf.precision >= 0.7
    assert 0.0 < clf.f1 <= 1.0
    top = np.argsort(-np.abs(clf.weights))[:2]
    assert set(top) == {0, 1}


def test_nested_cv_deterministic():
    X, y = _count_data(seed=7)
    a = labelprop.nested_cv_train(X, y, "t", seed=9)
    b = labelprop.nested_cv_train(X, y, "t", seed=9)
    assert a.lam == b.lam and a.precision == b.precision and a.f1 == b.f1
    assert np.array_equal(a.weights, b.weights)
    assert a.intercept == b.intercept


def test_train_skips_and_errors():
    X, y = _count_data(seed=8, n=200)
    few = np.zeros(200)
    few[:10] = 1.0
    targets = {"ok": y, "rare": few, "full": np.ones(200)}
    out = labelprop.train_area_classifiers(X, targets, seed=1)
    assert sorted(out) == ["ok"]
    with pytest.raises(DataError, match="no trainable areas"):
        labelprop.train_area_classifiers(X, {"rare": few, "full": np.ones(200)})
    out = labelprop.train_area_classifiers(X, {"rare": few}, min_positives=5)
    assert sorted(out) == ["rare"]


def test_train_threads_equivalent():
    X, y = _count_data(seed=10, n=200, p=10)
    y2 = (X[:, 2] >= 1).astype(np.float64)
    targets = {"a": y, "b": y2}
    one = labelprop.train_area_classifiers(X, targets, seed=4, threads=1)
    four = labelprop.train_area_classifiers(X, targets, seed=4, threads=4)
    for area in targets:
        assert np.array_equal(one[area].weights, four[area].weights)
        assert one[area].lam == four[area].lam


def test_classifier_save_load_roundtrip(tmp_path):
    vocab = ["apple", "pear", "plum", "quince"]
    clf = labelprop.AreaClassifier(
        area="fruit", weights=np.array([0.0, 1.25, -0.5, 0.0]),
        intercept=0.125, lam=0.03125, seed=7, precision=0.75, f1=0.6)
    p = tmp_path / "model.tsv"
    clf.save(p, vocab)
    back = labelprop.AreaClassifier.load(p, {w: i for i, w in enumerate(vocab)})
    assert back.area == "fruit" and back.seed == 7
    assert np.array_equal(back.weights, clf.weights)
    assert back.intercept == clf.intercept and back.lam == clf.lam
    assert back.precision == 0.75 and back.f1 == 0.6 and back.threshold == 0.5


def test_classifier_load_unknown_lemma(tmp_path):
    p = tmp_path / "model.tsv"
    p.write_text("# area=x lambda=0.1 seed=0\n__intercept__\t0\nmystery\t1.0\n")
    with pytest.raises(DataError, match="mystery"):
        labelprop.AreaClassifier.load(p, {"apple": 0})


def test_propagation_threshold_is_strict():
    clf = labelprop.AreaClassifier(area="a", weights=np.array([0.5]),
                                   intercept=0.0, lam=0.1, seed=0)
    labels = labelprop.propagate_labels({"a": clf}, np.array([[1.0], [1.02]]),
                                        ["t1", "t2"])
    assert labels.areas == ["a"]
    assert labels.binary()[:, 0].tolist() == [False, True]
    assert labels.area_scores("a")[1] == pytest.approx(0.51)


def test_propagation_orders_areas():
    mk = lambda name: labelprop.AreaClassifier(
        area=name, weights=np.zeros(2), intercept=1.0, lam=0.1, seed=0)
    labels = labelprop.propagate_labels(
        {"zebra": mk("zebra"), "ant": mk("ant")}, np.zeros((3, 2)), ["a", "b", "c"])
    assert labels.areas == ["ant", "zebra"]
    assert labels.binary().all()


def test_coverage_recount_oracle():
    rng = np.random.default_rng(11)
    n, areas = 60, ["covid", "politics", "sports"]
    ids = [f"t{i}" for i in range(n)]
    scores = rng.random((n, len(areas)))
    labels = labelprop.AreaLabels(ids=ids, areas=areas, scores=scores)
    pool = ["outlet_a", "outlet_b", None]
    outlet_of = {tid: pool[int(rng.integers(3))] for tid in ids}
    outlets, got_areas, mat = labelprop.coverage_table(labels, outlet_of)
    assert outlets == ["outlet_a", "outlet_b"] and got_areas == areas
    for r, o in enumerate(outlets):
        mine = [tid for tid in ids if outlet_of[tid] == o]
        for c in range(len(areas)):
            hits = sum(1 for tid in mine if scores[ids.index(tid), c] > 0.5)
            assert mat[r, c] == pytest.approx(100.0 * hits / len(mine))
