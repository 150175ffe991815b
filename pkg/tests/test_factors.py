"""NMF fitting, K selection on the explained-variance curve, predominance."""

from __future__ import annotations

import numpy as np
import pytest

from newsaffect import factors
from newsaffect.affect import DIMS
from newsaffect.errors import ConfigError, NumericalError

from . import oracles


def _planted(seed=0, n=1000, noise=0.01):
    """Mixture data with 4 factors on disjoint dimension blocks.

    H rows are unit norm so the factors carry equal energy; otherwise the
    second-difference elbow can land on the bend at K=1 instead.
    """
    rng = np.random.default_rng(seed)
    blocks = [range(0, 4), range(4, 9), range(9, 13), range(13, 18)]
    H0 = np.zeros((4, 18))
    for j, block in enumerate(blocks):
        row = 0.5 + rng.random(len(block))
        H0[j, list(block)] = row / np.linalg.norm(row)
    W0 = rng.dirichlet(np.full(4, 0.05), size=n)
    X = np.clip(W0 @ H0 + noise * rng.standard_normal((n, 18)), 0.0, None)
    return X, W0, H0


def test_rank_one_matrix_fully_explained():
    rng = np.random.default_rng(1)
    X = np.outer(0.5 + rng.random(60), 0.5 + rng.random(10))
    res = factors.fit_nmf(X, 1, seed=0)
    assert res.explained_variance(X) >= 0.999


def test_full_rank_k_equal_to_columns():
    rng = np.random.default_rng(2)
    X = rng.random((40, 6))
    res = factors.fit_nmf(X, 6, seed=0)
    assert res.explained_variance(X) >= 0.99


def test_input_validation():
    with pytest.raises(NumericalError):
        factors.fit_nmf(np.array([[1.0, -0.1], [0.2, 0.3]]), 1)
    with pytest.raises(ConfigError):
        factors.fit_nmf(np.ones((4, 3)), 4)
    with pytest.raises(ConfigError):
        factors.fit_nmf(np.ones((4, 3)), 0)
    with pytest.raises(ConfigError):
        factors.fit_nmf(np.ones(5), 1)


def test_factors_nonnegative_and_objective_monotone():
    X, _W0, _H0 = _planted(seed=3, n=300)
    res = factors.fit_nmf(X, 4, seed=1)
    assert np.all(res.W >= 0) and np.all(res.H >= 0)
    trace = res.objective_trace
    assert len(trace) == res.n_iter + 1
    for a, b in zip(trace, trace[1:]):
        assert b <= a * (1.0 + 1e-10)


def test_planted_factors_recovered():
    X, _W0, H0 = _planted(seed=4)
    res = factors.fit_nmf(X, 4, seed=2)
    matched = oracles.hungarian_match_cosine(res.H, H0)
    assert len(matched) == 4
    assert min(matched) >= 0.9


def test_ev_curve_elbow_at_planted_k():
    X, _W0, _H0 = _planted(seed=5, n=600)
    curve = factors.ev_curve(X, range(1, 7), seed=0, max_iter=500)
    assert all(0.0 <= v <= 1.0 + 1e-12 for v in curve.values())
    assert factors.select_k(curve) == 4


def test_select_k_synthetic_curves(caplog):
    assert factors.select_k({1: 0.2, 2: 0.8, 3: 0.85, 4: 0.88}) == 2
    assert factors.select_k({1: 0.9994}) == 1
    # sharp bend at 1 thanks to the virtual zero at k=0
    assert factors.select_k({1: 0.99, 2: 0.991, 3: 0.992}) == 1
    with caplog.at_level("WARNING"):
        # dyadic values keep the straight line exactly straight in floats
        got = factors.select_k({1: 0.25, 2: 0.5, 3: 0.75})
    assert got == 3
    assert "no convex bend" in caplog.text
    with pytest.raises(ConfigError):
        factors.select_k({})


def test_predominance_single_group_uniform():
    W = np.eye(4)
    names, mat = factors.predominance(W, ["all"] * 4)
    assert names == ["all"]
    assert mat.tolist() == [[25.0, 25.0, 25.0, 25.0]]


def test_predominance_matches_oracle_and_sums_100():
    rng = np.random.default_rng(6)
    W = rng.random((200, 5))
    W[rng.random(200) < 0.1] = 0.0  # some rows carry no loading at all
    groups = [f"g{int(i)}" for i in rng.integers(0, 4, size=200)]
    names, mat = factors.predominance(W, groups)
    want = oracles.predominance_oracle(W, groups)
    assert names == sorted(want)
    for r, g in enumerate(names):
        assert np.allclose(mat[r], want[g], atol=1e-9)
        assert mat[r].sum() == pytest.approx(100.0, abs=1e-6)


def test_predominance_omits_empty_group(caplog):
    W = np.array([[1.0, 0.0], [0.0, 0.0]])
    with caplog.at_level("WARNING"):
        names, mat = factors.predominance(W, ["alive", "ghost"])
    assert names == ["alive"]
    assert mat.shape == (1, 2)
    assert "ghost" in caplog.text


def test_predominance_shape_mismatch():
    with pytest.raises(ConfigError):
        factors.predominance(np.ones((3, 2)), ["a", "b"])


def test_ev_curve_csv_format(tmp_path):
    p = tmp_path / "ev.csv"
    factors.write_ev_curve_csv(p, {1: 0.5, 2: 0.875}, chosen=2, seed=3)
    lines = p.read_text().splitlines()
    assert lines[0] == "# seed=3"
    assert lines[1] == "k,explained_variance,chosen"
    assert lines[2] == "1,0.5,0" and lines[3] == "2,0.875,1"


def test_composition_csv_lists_all_dimensions(tmp_path):
    rng = np.random.default_rng(7)
    H = rng.random((3, 18))
    p = tmp_path / "comp.csv"
    factors.write_composition_csv(p, H, seed=1)
    lines = p.read_text().splitlines()
    assert lines[1].split(",") == ["dimension", "factor_1", "factor_2", "factor_3"]
    assert [ln.split(",")[0] for ln in lines[2:]] == list(DIMS)
    assert float(lines[2].split(",")[1]) == pytest.approx(H[0, 0], rel=1e-10)


def test_loadings_roundtrip(tmp_path):
    rng = np.random.default_rng(8)
    ids = [f"t{i}" for i in range(25)]
    W = rng.random((25, 4))
    p = tmp_path / "loadings.csv"
    factors.write_loadings_csv(p, ids, W, seed=9)
    back_ids, back = factors.read_loadings_csv(p)
    assert back_ids == ids
    assert np.allclose(back, W, rtol=1e-10)
    (tmp_path / "bad.csv").write_text("tweet,factor_1\nx,1\n")
    with pytest.raises(ConfigError):
        factors.read_loadings_csv(tmp_path / "bad.csv")


def test_predominance_csv_format(tmp_path):
    p = tmp_path / "pred.csv"
    factors.write_predominance_csv(p, ["cnn"], np.array([[60.0, 40.0]]),
                                   group_kind="outlet", seed=2)
    lines = p.read_text().splitlines()
    assert lines[1] == "outlet,factor_1,factor_2"
    assert lines[2] == "cnn,60,40"
