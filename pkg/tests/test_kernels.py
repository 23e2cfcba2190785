"""Backend equivalence: the compiled kernels must reproduce the fallback."""

import numpy as np
import pytest

from orbitlab._kernels import _fallback as fb

try:
    from orbitlab._kernels import _speedups as sp
    HAVE_EXT = True
except ImportError:
    HAVE_EXT = False

needs_ext = pytest.mark.skipif(not HAVE_EXT, reason="compiled extension absent")

GENS = np.array([[0, -1, 1, 0], [1, 1, 0, 1], [1, -1, 0, 1]], dtype=np.int64)


def _random_model_points(n, seed=0):
    rng = np.random.default_rng(seed)
    pts = np.empty((n, 3))
    pts[:, 0] = rng.uniform(-5, 5, n)
    pts[:, 1] = np.exp(rng.uniform(-2, 2, n))
    pts[:, 2] = rng.uniform(-3, 3, n)
    return pts


@needs_ext
@pytest.mark.parametrize("period", [0.0, 4.0])
def test_sup_dist_matches(period):
    pts = _random_model_points(3000)
    q = np.array([0.3, 1.7, 0.2])
    d1 = fb.sup_dist_many(pts, q, 1, period)
    d2 = sp.sup_dist_many(pts, q, 1, period)
    assert np.allclose(d1, d2, atol=1e-12, rtol=0)


@needs_ext
@pytest.mark.parametrize("period", [0.0, 4.0])
def test_greedy_select_matches(period):
    pts = _random_model_points(4000, seed=3)
    i1 = fb.greedy_select(pts, 0.8, 1, period)
    i2 = sp.greedy_select(pts, 0.8, 1, period)
    assert np.array_equal(i1, i2)


@needs_ext
def test_greedy_line_only_matches():
    pts = _random_model_points(2000, seed=5)[:, 2:3].copy()
    i1 = fb.greedy_select(pts, 0.4, 0)
    i2 = sp.greedy_select(pts, 0.4, 0)
    assert np.array_equal(i1, i2)


@needs_ext
def test_expand_round_matches():
    mats = np.array([[1, 0, 0, 1]], dtype=np.int64)
    frontier = mats
    for _ in range(4):
        r1 = fb.expand_round_int(frontier, GENS, 0.0, 1.0, 9.0)
        r2 = sp.expand_round_int(frontier, GENS, 0.0, 1.0, 9.0)
        assert np.array_equal(r1[0], np.asarray(r2[0]))
        assert np.array_equal(r1[1], np.asarray(r2[1]))
        assert np.array_equal(r1[2], np.asarray(r2[2]))
        assert np.array_equal(r1[3], np.asarray(r2[3]))
        assert np.allclose(r1[4], r2[4], atol=1e-12)
        frontier = r1[0][:50]


@needs_ext
def test_reduce_and_concave_match():
    rng = np.random.default_rng(1)
    x = rng.uniform(-30, 30, 2000)
    y = np.exp(rng.uniform(-4, 4, 2000))
    x1, y1 = fb.reduce_modular(x, y)
    x2, y2 = sp.reduce_modular(x, y)
    assert np.array_equal(x1, np.asarray(x2))
    assert np.array_equal(y1, np.asarray(y2))

    mats, _, _, _, dists = fb.expand_round_int(
        np.array([[1, 0, 0, 1]], dtype=np.int64), GENS, 0.0, 1.0, 30.0)
    # grow a richer sample of elements
    for _ in range(5):
        mats, _, _, _, dists = fb.expand_round_int(mats, GENS, 0.0, 1.0, 30.0)
        if len(mats) > 400:
            mats, dists = mats[:400], dists[:400]
    f1 = fb.concave_flags_int(mats, dists, 0.0, 1.0, 2.0, 2.2, 0.05)
    f2 = sp.concave_flags_int(mats, dists, 0.0, 1.0, 2.0, 2.2, 0.05)
    assert np.array_equal(f1, np.asarray(f2))


@needs_ext
def test_max_pairwise_matches():
    pts = _random_model_points(300, seed=7)
    assert abs(fb.max_pairwise_dist(pts, 1) - sp.max_pairwise_dist(pts, 1)) < 1e-12


def test_pack_overflow_guard():
    mats = np.array([[40000, 0, 0, 1]], dtype=np.int64)
    with pytest.raises(OverflowError):
        fb._pack_keys(mats)


def test_periodic_distance_wraps():
    # period 2: points at x=0 and x=1.9 are 0.1 apart horizontally
    pts = np.array([[1.9, 1.0]])
    d_wrap = fb.sup_dist_many(pts, np.array([0.0, 1.0]), 1, 2.0)[0]
    d_flat = fb.sup_dist_many(pts, np.array([0.0, 1.0]), 1, 0.0)[0]
    assert d_wrap < d_flat
    assert abs(d_wrap - fb.hyp_dist(0.0, 1.0, 0.1, 1.0)) < 1e-12
