import numpy as np
import pytest

from logconcave.densities import AffineTransformed, GaussianDensity, LaplaceDensity, UniformBall
from logconcave.errors import MissingConstant, OutOfRange
from logconcave.separation import (MahalanobisContext, SeparationParams, check_grad_criterion,
                                   check_separation_pairs, empirical_floor, gradient_ratio_sup,
                                   lambda_bump, lambda_gaussian, lambda_holder, lambda_laplace,
                                   mahalanobis, nesting_checks, nesting_constant, scaled_norm,
                                   tau_laplace, validate_gradient, worked_examples)


def test_norms():
    assert mahalanobis(np.array([3.0, 4.0]), MahalanobisContext(np.eye(2)))[0] == pytest.approx(5.0)
    assert mahalanobis(np.array([2.0, 0.0]), MahalanobisContext(4 * np.eye(2)))[0] == pytest.approx(1.0)
    ctx = MahalanobisContext(np.diag([1.0, 4.0]))
    assert scaled_norm(np.array([0.0, 1.0]), ctx)[0] == pytest.approx(0.25)


def test_params_validation():
    with pytest.raises(OutOfRange):
        SeparationParams(0.5, 1.0)
    with pytest.raises(OutOfRange):
        SeparationParams(2.0, 0.0)


def test_lambda_holder():
    assert lambda_holder(2.0, 1.0) == pytest.approx(np.sqrt(2), rel=1e-14)
    assert lambda_holder(1 + 1e-6, 3.0) == pytest.approx(3.0, rel=1e-4)
    with pytest.raises(OutOfRange):
        lambda_holder(2.0, 0.0)
    with pytest.raises(OutOfRange):
        lambda_holder(2.5, 1.0)


def test_holder_embedding_gaussian():
    # the standard normal density has Lipschitz gradient with L = sup|f''| = f(0)
    L = 1 / np.sqrt(2 * np.pi)
    f = GaussianDensity(d=1)
    assert check_grad_criterion(f, SeparationParams(2.0, lambda_holder(2.0, L))).passed


def test_worked_constants_frozen():
    # frozen with mpmath from the closed forms
    assert lambda_gaussian(3, 2.0) == pytest.approx(0.21613885955760744, rel=1e-12)
    assert lambda_laplace(1, 2.0) == pytest.approx(2 / np.sqrt(2), rel=1e-14)
    assert tau_laplace(1) == pytest.approx(np.sqrt(2) / 2, rel=1e-14)
    assert lambda_bump(1, 2.0) > 0


def test_gaussian_sup_matches_constant_d3():
    f = GaussianDensity(d=3)
    sup = gradient_ratio_sup(f, 2.0)
    assert sup == pytest.approx(lambda_gaussian(3, 2.0), rel=1e-2)
    assert sup <= lambda_gaussian(3, 2.0) * (1 + 1e-9)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_grad_criterion_worked_examples(d):
    for name, f, p in worked_examples(d):
        assert check_grad_criterion(f, p).passed, name


def test_gaussian_pairs_pass_and_fail():
    f = GaussianDensity(d=2)
    lam = lambda_gaussian(2, 2.0)
    assert check_separation_pairs(f, SeparationParams(2.0, lam), 20000).passed
    c = check_separation_pairs(f, SeparationParams(2.0, lam / 2), 20000)
    assert not c.passed and c.witness is not None
    js = c.to_json()
    assert js["pass"] is False and len(js["witness_pair"]) == 2


def test_uniform_ball_fails():
    f = UniformBall(2)
    for lam in (1.0, 1e3, 1e6):
        assert not check_separation_pairs(f, SeparationParams(2.0, lam), 20000).passed


def test_validate_gradient():
    rng = np.random.default_rng(0)
    for f in (GaussianDensity(d=2), LaplaceDensity(2)):
        X = f.sample(300, rng)
        assert validate_gradient(f, X) < 1e-6


def test_nesting_constant():
    assert nesting_constant(1) == pytest.approx(1.0, abs=1e-9)
    assert nesting_constant(2, B=0.5) == 0.5
    with pytest.raises(MissingConstant):
        nesting_constant(2)


def test_certificate_invariant_under_fixed_map():
    f = GaussianDensity(d=1)
    p = SeparationParams(2.0, lambda_gaussian(1, 2.0))
    a = check_separation_pairs(f, p, 20000, seed=1)
    b = check_separation_pairs(AffineTransformed(f, [[3.0]], [2.0]), p, 20000, seed=1)
    assert a.passed == b.passed
    assert b.worst_ratio == pytest.approx(a.worst_ratio, rel=1e-6)


def test_laplace_nesting_d1():
    f = LaplaceDensity(1)
    p = SeparationParams(2.0, lambda_laplace(1, 2.0), tau_laplace(1))
    out = nesting_checks(f, p, alpha=1.5, n_maps=2, pair_budget=20000)
    assert out["base"].passed and out["nested"].passed and out["affine_invariant"]
    assert out["nested_lambda"] == pytest.approx(p.lam, rel=1e-8)


def test_empirical_floor():
    floor = empirical_floor(2)
    for name, f, p in worked_examples(2):
        below = SeparationParams(2.0, 0.99 * floor, p.tau)
        assert not check_grad_criterion(f, below).passed, name
