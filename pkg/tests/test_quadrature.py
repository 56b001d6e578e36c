import math

import numpy as np
import pytest

from bilinear_comparison import ComparisonInstance, VectorSet
from bilinear_comparison.checks import tiny_instance
from bilinear_comparison.kernel import build_workspace, f1h, psi_sample
from bilinear_comparison.montecarlo import SamplerConfig, estimate
from bilinear_comparison.quadrature import (MAX_NODES, expect_draw_quadrature,
                                            expect_quadrature, hermite_rule)


@pytest.mark.parametrize("order", [2, 5, 20, 60, 80])
def test_rule_normalized_and_symmetric(order):
    rule = hermite_rule(order)
    assert abs(math.fsum(rule.weights) - 1.0) <= 1e-13
    np.testing.assert_allclose(rule.nodes, -rule.nodes[::-1], atol=0)
    assert np.all(rule.weights > 0)


@pytest.mark.parametrize("order", [3, 6, 10])
def test_rule_exact_for_low_degree_moments(order):
    rule = hermite_rule(order)
    for k in range(0, 2 * order):
        exact = 0.0 if k % 2 else float(math.prod(range(k - 1, 0, -2)))
        got = math.fsum(rule.weights * rule.nodes ** k)
        assert got == pytest.approx(exact, rel=1e-11, abs=1e-12)


def test_draw_space_polynomials():
    assert expect_draw_quadrature(lambda d: d.u4 ** 2, 1, 1, order=2) == pytest.approx(1.0,
                                                                                      abs=1e-13)
    # G + u4 ~ N(0, 2), fourth moment 12
    val = expect_draw_quadrature(lambda d: (d.G[..., 0, 0] + d.u4) ** 4, 1, 1, order=3)
    assert val == pytest.approx(12.0, abs=1e-12)


def test_odd_field_integrand_is_zero():
    def fn(d):
        return np.array([f1h([1.0], [1.0], d[k], 0.5) for k in range(d.u4.shape[0])])
    assert abs(expect_draw_quadrature(fn, 1, 1, order=4)) < 1e-14


def test_budget_and_argument_errors():
    big = ComparisonInstance(VectorSet(np.eye(2)), VectorSet(np.eye(2)), beta=1.0, s=1.0)
    with pytest.raises(ValueError, match="budget"):
        expect_quadrature(big, "psi", 0.5)
    with pytest.raises(ValueError, match="budget"):
        expect_draw_quadrature(lambda d: d.u4, 2, 2)
    tiny = tiny_instance()
    with pytest.raises(ValueError, match="order"):
        expect_quadrature(tiny, "psi", 0.5, order=1)
    with pytest.raises(ValueError, match="interior"):
        expect_quadrature(tiny, "dpsi_standard", 1.0)


@pytest.mark.parametrize("y2, s", [(0.5, 1.0), (-0.5, 1.0), (-0.5, -1.0)])
def test_order_doubling_stability(y2, s):
    inst = tiny_instance(beta=1.0, s=s, y2=y2)
    a = expect_quadrature(inst, "psi", 0.5, order=40)
    b = expect_quadrature(inst, "psi", 0.5, order=80)
    assert abs(a - b) <= 1e-8
    assert 80 ** 4 > MAX_NODES  # the four-dimensional case runs on a capped order


@pytest.mark.xfail(strict=True, reason="softmax kinks at scale 1/beta slow Gauss-Hermite "
                                       "convergence; order 40 is accurate to ~5e-5 at beta=3")
def test_order_doubling_stability_beta3():
    inst = tiny_instance(beta=3.0, y2=0.5)
    a = expect_quadrature(inst, "psi", 0.5, order=40)
    b = expect_quadrature(inst, "psi", 0.5, order=80)
    assert abs(a - b) <= 1e-8


def test_beta3_converges_at_higher_order():
    # two-dimensional case at t = 1: no node cap, so the order can grow freely
    inst = tiny_instance(beta=3.0, y2=0.5)
    a = expect_quadrature(inst, "psi", 1.0, order=200)
    b = expect_quadrature(inst, "psi", 1.0, order=400)
    assert abs(a - b) <= 1e-8


def test_rank_reduction_matches_full_draw_tensor():
    inst = tiny_instance(beta=1.0, s=-1.0)
    reduced = expect_quadrature(inst, "psi", 0.3, order=40)
    full = expect_draw_quadrature(lambda d: psi_sample(build_workspace(inst, d, 0.3), inst.n),
                                  1, 1, order=40)
    assert reduced == pytest.approx(full, abs=1e-9)


TINY = [
    dict(beta=1.0, s=1.0, y2=0.5),
    dict(beta=1.0, s=1.0, y2=-0.5),
    dict(beta=1.3, s=-1.0, y2=-0.5),
    dict(beta=0.7, s=0.5, y2=-2.0),
]


@pytest.mark.parametrize("params", TINY)
def test_quadrature_psi_non_increasing(params):
    inst = tiny_instance(**params)
    # the degenerate instance is exactly flat and two-dimensional: resolve it finely
    order = 60 if params["y2"] > 0 else 24
    vals = [expect_quadrature(inst, "psi", t, order=order) for t in np.linspace(0, 1, 21)]
    assert np.all(np.diff(vals) <= 1e-10)


@pytest.mark.parametrize("params", TINY[1:])
@pytest.mark.parametrize("t", [0.6])
def test_derivative_estimators_agree_exactly_in_expectation(params, t):
    inst = tiny_instance(**params)
    std = expect_quadrature(inst, "dpsi_standard", t, order=40)
    closed = expect_quadrature(inst, "dpsi_closed", t, order=40)
    d = 1e-3
    fd = (expect_quadrature(inst, "psi", t + d, 40) - expect_quadrature(inst, "psi", t - d, 40)) / (2 * d)
    assert closed < 0
    assert std == pytest.approx(closed, rel=1e-5)
    assert fd == pytest.approx(closed, rel=1e-5)


@pytest.mark.parametrize("c3", [0.3, 2.0])
def test_lifted_derivative_estimators_agree_in_expectation(c3):
    inst = tiny_instance(beta=1.2, s=-1.0).with_params(c3=c3)
    std = expect_quadrature(inst, "dpsistar_standard", 0.4, order=40)
    closed = expect_quadrature(inst, "dpsistar_closed", 0.4, order=40)
    assert std == pytest.approx(closed, rel=1e-5)
    assert (closed < 0) == (0 < c3 < 1)


def test_degenerate_tiny_instance_is_flat():
    # both y vectors point the same way, so the curve does not move with t
    inst = tiny_instance(y2=0.5)
    vals = [expect_quadrature(inst, "psi", t, order=40) for t in (0.0, 0.5, 1.0)]
    np.testing.assert_allclose(vals, vals[0], atol=1e-12)
    assert expect_quadrature(inst, "dpsi_closed", 0.5) == 0.0


def test_monte_carlo_matches_quadrature():
    inst = tiny_instance(y2=-0.5)
    exact = expect_quadrature(inst, "psi", 0.5, order=40)
    r = estimate(inst, "psi", 0.5, SamplerConfig(seed=4, n_samples=100_000))
    assert abs(r.mean - exact) <= 3 * r.std_error
