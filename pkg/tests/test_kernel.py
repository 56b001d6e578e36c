import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bilinear_comparison import ComparisonInstance, GaussianDraw, VectorSet
from bilinear_comparison.kernel import (bilinear_fields, build_workspace, f1h, logsumexp,
                                        psi_sample, psistar_sample, workspace_from_field)
from bilinear_comparison.montecarlo import draw_block

from conftest import random_instance


def _draws(inst, count=64, seed=3):
    return draw_block(seed, 0, count, inst.m, inst.n)


def test_fields_match_pairwise_f1h(small_inst):
    draws = _draws(small_inst, 5)
    fields = bilinear_fields(small_inst, draws)
    X, Y = small_inst.xset.vectors, small_inst.yset.vectors
    for t in (0.0, 0.3, 1.0):
        F = fields.at(t)
        for b in range(5):
            for i in range(X.shape[0]):
                for p in range(Y.shape[0]):
                    assert F[b, i, p] == pytest.approx(f1h(X[i], Y[p], draws[b], t), abs=1e-12)


def test_field_endpoints(small_inst):
    fields = bilinear_fields(small_inst, _draws(small_inst))
    np.testing.assert_array_equal(fields.at(1.0), fields.coupled)
    np.testing.assert_array_equal(fields.at(0.0), fields.decoupled)


def test_f1h_validation():
    d = GaussianDraw.zeros(2, 3)
    with pytest.raises(ValueError, match="dimension"):
        f1h(np.ones(2), np.ones(2), d, 0.5)
    with pytest.raises(ValueError, match="t must"):
        f1h(np.ones(3), np.ones(2), d, 1.5)


def test_field_covariance_matches_analytic():
    # coupled/decoupled covariances differ by the outer product of the norm gaps
    inst = random_instance(seed=1, l1=2, l2=2, n=2, m=2)
    fields = bilinear_fields(inst, draw_block(11, 0, 200_000, inst.m, inst.n))
    X, Y = inst.xset.vectors, inst.yset.vectors
    nx, ny = inst.xset.norms, inst.yset.norms
    gx, gy = X @ X.T, Y @ Y.T
    cov_c = np.einsum("ij,pq->ipjq", gx, gy) + np.einsum("i,j,p,q->ipjq", nx, nx, ny, ny)
    cov_d = np.einsum("ij,pq->ipjq", np.outer(nx, nx), gy) + np.einsum("ij,pq->ipjq", gx,
                                                                       np.outer(ny, ny))
    gap = np.einsum("ij,pq->ipjq", inst.xset.norm_gap, inst.yset.norm_gap)
    np.testing.assert_allclose(cov_c - cov_d, gap, atol=1e-12)
    for raw, cov in ((fields.coupled, cov_c), (fields.decoupled, cov_d)):
        flat = raw.reshape(raw.shape[0], -1)
        emp = np.cov(flat, rowvar=False)
        scale = np.sqrt(np.outer(np.diag(emp), np.diag(emp)))
        np.testing.assert_allclose(emp, cov.reshape(4, 4), atol=float(np.max(scale)) * 0.02)


def test_workspace_direct_sum_oracle():
    inst = random_instance(seed=4, l1=3, l2=3, beta=0.5, s=-1.5)
    draws = _draws(inst, 8)
    F = bilinear_fields(inst, draws).at(0.4)
    ws = build_workspace(inst, draws, 0.4)
    A = np.exp(inst.beta * F)
    C = A.sum(axis=-1)
    Z = (C ** inst.s).sum(axis=-1)
    np.testing.assert_allclose(ws.logC, np.log(C), rtol=1e-13)
    np.testing.assert_allclose(ws.logZ, np.log(Z), rtol=1e-12)
    np.testing.assert_allclose(ws.P, C ** inst.s / Z[:, None], rtol=1e-12)
    np.testing.assert_allclose(ws.Q, A / C[..., None], rtol=1e-12)


@pytest.mark.parametrize("s", [1.0, -1.0, 0.3])
def test_workspace_invariants(small_inst, s):
    inst = small_inst.with_params(s=s)
    ws = build_workspace(inst, _draws(inst), 0.7)
    assert np.all(ws.P >= 0) and np.all(ws.Q >= 0)
    np.testing.assert_allclose(ws.P.sum(axis=-1), 1.0, atol=1e-14)
    np.testing.assert_allclose(ws.Q.sum(axis=-1), 1.0, atol=1e-14)
    # logC within [beta max F, beta max F + log l2]; logZ likewise for s logC
    bmax = inst.beta * ws.F.max(axis=-1)
    assert np.all(ws.logC >= bmax - 1e-12)
    assert np.all(ws.logC <= bmax + math.log(inst.yset.count) + 1e-12)
    smax = (s * ws.logC).max(axis=-1)
    assert np.all(ws.logZ >= smax - 1e-12)
    assert np.all(ws.logZ <= smax + math.log(inst.xset.count) + 1e-12)


def test_shift_stability():
    rng = np.random.default_rng(0)
    F = rng.normal(size=(10, 4, 5))
    base = workspace_from_field(F, 2.0, -1.0, 0.5)
    shifted = workspace_from_field(F + 300.0, 2.0, -1.0, 0.5)
    np.testing.assert_allclose(shifted.logC, base.logC + 600.0, rtol=1e-13)
    np.testing.assert_allclose(shifted.logZ, base.logZ - 600.0, rtol=1e-12)
    np.testing.assert_allclose(shifted.P, base.P, atol=1e-10)
    np.testing.assert_allclose(shifted.Q, base.Q, atol=1e-12)


def test_large_beta_is_finite(preset_inst):
    inst = preset_inst.with_params(beta=1e4, s=-1.0)
    ws = build_workspace(inst, _draws(inst, 100), 0.5)
    for a in (ws.logC, ws.logZ, ws.P, ws.Q):
        assert np.all(np.isfinite(a))


def test_t_perturbation_near_endpoints(small_inst):
    fields = bilinear_fields(small_inst, _draws(small_inst))
    # the field moves like sqrt(t) at the ends: |dF| <= sqrt(eps) |part| + eps |part|
    eps = 1e-12
    bound_c = 2e-6 * np.abs(fields.coupled).max() + 1e-6 * np.abs(fields.decoupled).max()
    bound_d = 2e-6 * np.abs(fields.decoupled).max() + 1e-6 * np.abs(fields.coupled).max()
    np.testing.assert_allclose(fields.at(eps), fields.at(0.0), atol=bound_c)
    np.testing.assert_allclose(fields.at(1 - eps), fields.at(1.0), atol=bound_d)
    with pytest.raises(ValueError):
        fields.at(-0.01)


def test_psi_and_psistar_samples(small_inst):
    ws = build_workspace(small_inst, _draws(small_inst), 0.5)
    np.testing.assert_allclose(psi_sample(ws, small_inst.n),
                               ws.logZ / (small_inst.beta * math.sqrt(small_inst.n)))
    np.testing.assert_allclose(psistar_sample(ws, 0.1), np.exp(0.1 * ws.logZ))
    with pytest.raises(ValueError):
        psistar_sample(ws, 1.0)


def test_single_pair_psi_is_scaled_field():
    inst = ComparisonInstance(VectorSet([[1.0, 2.0]]), VectorSet([[0.5]]), beta=2.0, s=-3.0)
    draws = _draws(inst, 10)
    ws = build_workspace(inst, draws, 0.25)
    expected = -ws.F[:, 0, 0] / math.sqrt(2)
    np.testing.assert_allclose(psi_sample(ws, inst.n), expected, rtol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-700, 700, allow_nan=False), min_size=1, max_size=8))
def test_logsumexp_matches_sorted_reference(vals):
    a = np.array(vals)
    ref = max(vals) + math.log(math.fsum(math.exp(v - max(vals)) for v in vals))
    assert logsumexp(a) == pytest.approx(ref, rel=1e-12, abs=1e-12)
