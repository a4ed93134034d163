import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from logconcave.errors import DegenerateSimplex, NotIntegrable, PreconditionViolated
from logconcave.geometry import Polytope, Simplex, convex_hull
from logconcave.integrals import (AffineForm, exp_affine_integral, exp_divdiff, gamma_lower,
                                  moment_exp_affine_integral, normalizer, second_moment,
                                  slab_ratio_bound, slab_volume, slice_ratio_check)

from oracles import exp_affine_quad, random_simplex, simplex_quad

TRI = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
E = np.e


def test_hand_values():
    assert abs(exp_affine_integral(TRI, AffineForm([0.0, 0.0])) - 0.5) < 1e-10
    assert abs(exp_affine_integral([[0.0], [1.0]], AffineForm([-1.0])) - (1 - 1 / E)) < 1e-10
    assert abs(exp_affine_integral(TRI, AffineForm([1.0, 0.0])) - (E - 2)) < 1e-10


def test_moments_hand_values():
    assert moment_exp_affine_integral([[0.0], [1.0]], AffineForm([0.0]))[0] == pytest.approx(0.5, abs=1e-14)
    assert moment_exp_affine_integral(TRI, AffineForm([0.0, 0.0])) == pytest.approx([1 / 6, 1 / 6], abs=1e-14)
    # int_0^1 x e^{-x} dx = 1 - 2/e
    assert moment_exp_affine_integral([[0.0], [1.0]], AffineForm([-1.0]))[0] == pytest.approx(
        0.2642411176571153, abs=1e-13)


def test_degenerate_simplex():
    with pytest.raises(DegenerateSimplex):
        exp_affine_integral([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]], AffineForm([1.0, 0.0]))


def test_divdiff_clustered_and_spread():
    # e[z, z] = e^z; e[0, h] = (e^h - 1)/h across the series switch
    assert exp_divdiff(np.array([[0.3, 0.3]]))[0] == pytest.approx(np.exp(0.3), rel=1e-14)
    for h in (1e-8, 1e-4, 0.5, 0.99, 1.01, 3.0):
        assert exp_divdiff(np.array([[0.0, h]]))[0] == pytest.approx(np.expm1(h) / h, rel=1e-13)
    # e[0,0,0] = 1/2, e[0,0,0,0] = 1/6
    assert exp_divdiff(np.zeros((1, 3)))[0] == pytest.approx(0.5, rel=1e-15)
    assert exp_divdiff(np.zeros((1, 4)))[0] == pytest.approx(1 / 6, rel=1e-15)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_against_quadrature(d):
    rng = np.random.default_rng(d)
    for _ in range(8):
        V = random_simplex(rng, d)
        a = rng.normal(scale=2.0, size=d)
        b = rng.normal()
        exact = exp_affine_integral(V, AffineForm(a, b))
        assert exact == pytest.approx(exp_affine_quad(V, a, b), rel=1e-9)


@pytest.mark.parametrize("d", [1, 2])
def test_moment_against_quadrature(d):
    rng = np.random.default_rng(10 + d)
    for _ in range(4):
        V = random_simplex(rng, d)
        a = rng.normal(size=d)
        m = moment_exp_affine_integral(V, AffineForm(a, 0.2))
        ref = [simplex_quad(V, lambda x, k=k: x[k] * np.exp(a @ x + 0.2)) for k in range(d)]
        assert m == pytest.approx(ref, rel=1e-8, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 3))
def test_permutation_symmetry(seed, d):
    rng = np.random.default_rng(seed)
    V = random_simplex(rng, d)
    a = AffineForm(rng.uniform(-5, 5, size=d), rng.uniform(-1, 1))
    base = exp_affine_integral(V, a)
    assert exp_affine_integral(V[rng.permutation(d + 1)], a) == pytest.approx(base, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 3))
def test_translation_covariance(seed, d):
    rng = np.random.default_rng(seed)
    V = random_simplex(rng, d)
    a = rng.uniform(-3, 3, size=d)
    c = rng.normal(size=d)
    lhs = exp_affine_integral(V + c, AffineForm(a, -a @ c))
    assert lhs == pytest.approx(exp_affine_integral(V, AffineForm(a)), rel=1e-12)


def test_near_clustered_exponents_continuous():
    # exponents spread straddling the series threshold give a continuous value
    V = TRI
    vals = [exp_affine_integral(V, AffineForm([s, 0.0])) for s in (0.999999, 1.0, 1.000001)]
    assert abs(vals[0] - vals[1]) < 1e-6 and abs(vals[2] - vals[1]) < 1e-6


def test_normalizer_examples():
    half_line = Polytope.from_vertices_rays([[0.0]], [[1.0]])
    assert normalizer(half_line, [1.0]) == pytest.approx(1.0, rel=1e-10)
    sq = convex_hull(np.array([[0.0, 0], [1, 0], [1, 1], [0, 1]]))
    assert normalizer(sq, [0.0, 0.0]) == pytest.approx(1.0, rel=1e-12)
    quad = Polytope.from_vertices_rays([[0.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]])
    assert normalizer(quad, [1.0, 1.0]) == pytest.approx(1.0, rel=1e-10)
    with pytest.raises(NotIntegrable):
        normalizer(quad, [1.0, -1.0])


def test_normalizer_additive():
    quad = Polytope.from_vertices_rays([[0.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]])
    lo = Polytope.from_vertices_rays([[0.0, 0.0]], [[1.0, 0.0], [1.0, 1.0]])
    hi = Polytope.from_vertices_rays([[0.0, 0.0]], [[1.0, 1.0], [0.0, 1.0]])
    a = [1.0, 2.0]
    assert normalizer(lo, a) + normalizer(hi, a) == pytest.approx(normalizer(quad, a), rel=1e-9)
    # frozen: int_0^inf int_0^x e^{-x-2y} dy dx = 1/3, upper part = 1/6
    assert normalizer(lo, a) == pytest.approx(1 / 3, rel=1e-9)


def test_second_moment_exponential():
    # Exp(1) on [0, inf): E[X^2] = 2
    half_line = Polytope.from_vertices_rays([[0.0]], [[1.0]])
    assert second_moment(half_line, AffineForm([-1.0]))[0, 0] == pytest.approx(2.0, rel=1e-9)


def test_slice_ratios():
    half_line = Polytope.from_vertices_rays([[0.0]], [[1.0]])
    r = slice_ratio_check(half_line, [1.0], 1.0)
    assert r["ratio"] == pytest.approx(1.0) and r["holds"]
    assert r["lower"] == pytest.approx(1 - 1 / E) and r["upper"] == pytest.approx(E)
    quad = Polytope.from_vertices_rays([[0.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]])
    r = slice_ratio_check(quad, [1.0, 1.0], 2.0)
    assert r["ratio"] == pytest.approx(2.0, rel=1e-9) and r["holds"]
    assert r["lower"] == pytest.approx(gamma_lower(2, 2.0)) == pytest.approx(1 - 3 * np.exp(-2))
    with pytest.raises(PreconditionViolated):
        slice_ratio_check(quad, [1.0, 1.0], -1.0)
    shifted = Polytope.from_vertices_rays([[1.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(PreconditionViolated):
        slice_ratio_check(shifted, [1.0, 1.0], 1.0)


def test_slab_bound_random_cones():
    rng = np.random.default_rng(7)
    for _ in range(10):
        # cone spanned by two directions in the positive quadrant, alpha inside the dual
        t1, t2 = np.sort(rng.uniform(0.05, np.pi / 2 - 0.05, 2))
        K = Polytope.from_vertices_rays([[0.0, 0.0]], [[np.cos(t1), np.sin(t1)], [np.cos(t2), np.sin(t2)]])
        alpha = np.array([1.0, 1.0])
        for s, t in ((1.0, 3.0), (2.0, 4.5)):
            bound = slab_ratio_bound(2, s, t)
            assert slab_volume(K, alpha, t) <= bound * slab_volume(K, alpha, s) * (1 + 1e-9)
