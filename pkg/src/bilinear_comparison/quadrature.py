"""Gauss-Hermite tensor-product expectations for tiny instances.

The integrands only see the draw through the linear map ``draw -> fields``,
so before building the tensor grid the map is factored with an SVD and the
expectation is taken over its range only (a rotation of a standard normal
vector is standard normal).  For the two-point sets used as oracles this
cuts the integration dimension from ``m*n + 1 + m + n`` to 2-4.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Union

import numpy as np
from scipy.special import roots_hermitenorm

from .estimators import Functional, functional as lookup_functional
from .kernel import Fields, workspace_from_field, workspace_from_fields
from .model import ComparisonInstance, GaussianDraw

__all__ = [
    "MAX_DIM",
    "MAX_NODES",
    "HermiteRule",
    "hermite_rule",
    "expect_quadrature",
    "expect_draw_quadrature",
]

MAX_DIM = 8
MAX_NODES = 10_000_000
_CHUNK = 200_000


@dataclass(frozen=True, eq=False)
class HermiteRule:
    """Nodes and weights for ``E f(Z)``, ``Z ~ N(0, 1)``; weights sum to one."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=None)
def hermite_rule(order: int) -> HermiteRule:
    """Gauss rule for the probabilists' Hermite weight ``exp(-x^2/2)``."""
    if order < 1:
        raise ValueError("order must be >= 1")
    nodes, weights = roots_hermitenorm(order)
    # exact symmetry, then a probability measure
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    weights = weights / math.fsum(weights)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return HermiteRule(order, nodes, weights)


def _draw_dim(m: int, n: int) -> int:
    return m * n + 1 + m + n


def _capped_order(order: int, dim: int) -> int:
    cap = int(math.floor(MAX_NODES ** (1.0 / dim) + 1e-9)) if dim else order
    return max(1, min(order, cap))


def _tensor_expectation(dim: int, order: int, fn: Callable[[np.ndarray], np.ndarray]) -> float:
    """``E fn(z)`` for ``z ~ N(0, I_dim)``; ``fn`` maps ``(k, dim)`` points to ``(k,)``."""
    rule = hermite_rule(order)
    total_nodes = order ** dim
    if dim == 0:
        return float(fn(np.zeros((1, 0)))[0])
    # Enumerate the grid in chunks of whole leading-index slabs.
    inner_dim = dim
    while inner_dim > 0 and order ** inner_dim > _CHUNK:
        inner_dim -= 1
    outer_dim = dim - inner_dim
    inner_nodes = np.array(list(itertools.product(rule.nodes, repeat=inner_dim))).reshape(-1, inner_dim)
    inner_w = np.prod(np.array(list(itertools.product(rule.weights, repeat=inner_dim))).reshape(-1, inner_dim), axis=1)
    partial = []
    for outer in itertools.product(range(order), repeat=outer_dim):
        head = rule.nodes[list(outer)]
        w_head = float(np.prod(rule.weights[list(outer)]))
        pts = np.hstack([np.broadcast_to(head, (inner_nodes.shape[0], outer_dim)), inner_nodes])
        vals = np.asarray(fn(pts), dtype=np.float64)
        partial.append(w_head * float(np.dot(inner_w, vals)))
    assert len(partial) * inner_nodes.shape[0] == total_nodes
    return math.fsum(partial)


def _as_functional(f: Union[str, Functional]) -> Functional:
    return lookup_functional(f) if isinstance(f, str) else f


def _field_map(inst: ComparisonInstance) -> np.ndarray:
    """Matrix ``M`` with ``[coupled; decoupled].ravel() = M @ w`` for the flat draw ``w``."""
    m, n = inst.m, inst.n
    X, Y = inst.xset.vectors, inst.yset.vectors
    nx, ny = inst.xset.norms, inst.yset.norms
    l1, l2 = X.shape[0], Y.shape[0]
    dim = _draw_dim(m, n)
    M = np.zeros((2, l1, l2, dim))
    # G entries, row-major (j, k): d coupled / d G_jk = y_j x_k
    M[0, :, :, :m * n] = np.einsum("pj,ik->ipjk", Y, X).reshape(l1, l2, m * n)
    M[0, :, :, m * n] = np.outer(nx, ny)
    M[1, :, :, m * n + 1:m * n + 1 + m] = nx[:, None, None] * Y[None, :, :]
    M[1, :, :, m * n + 1 + m:] = ny[None, :, None] * X[:, None, :]
    return M.reshape(2 * l1 * l2, dim)


def _range_basis(A: np.ndarray) -> np.ndarray:
    """``B`` with ``A @ w`` equal in law to ``B @ z``, ``z`` standard normal of rank size."""
    U, sv, _ = np.linalg.svd(A, full_matrices=False)
    rank = int(np.sum(sv > sv[0] * 1e-12)) if sv.size and sv[0] > 0 else 0
    return U[:, :rank] * sv[:rank]


def expect_quadrature(inst: ComparisonInstance, func: Union[str, Functional], t: float,
                      order: int = 40) -> float:
    """Deterministic ``E func`` at time ``t`` via a Gauss-Hermite tensor rule.

    Requires ``m*n + 1 + m + n <= MAX_DIM``.  The order is lowered if needed
    so the tensor grid stays within :data:`MAX_NODES` points.
    """
    func = _as_functional(func)
    dim = _draw_dim(inst.m, inst.n)
    if dim > MAX_DIM:
        raise ValueError(f"Gaussian dimension {dim} exceeds the quadrature budget {MAX_DIM}")
    if order < 2:
        raise ValueError("order must be >= 2")
    if func.interior and not 0.0 < t < 1.0:
        raise ValueError(f"functional {func.name!r} needs interior t")
    l1, l2 = inst.xset.count, inst.yset.count
    M = _field_map(inst)
    if func.needs_fields:
        B = _range_basis(M)

        def fn(z):
            flat = z @ B.T
            fields = Fields(flat[:, :l1 * l2].reshape(-1, l1, l2),
                            flat[:, l1 * l2:].reshape(-1, l1, l2))
            return func(workspace_from_fields(inst, fields, t), inst)
    else:
        half = l1 * l2
        Ft = math.sqrt(t) * M[:half] + math.sqrt(1.0 - t) * M[half:]
        B = _range_basis(Ft)

        def fn(z):
            F = (z @ B.T).reshape(-1, l1, l2)
            return func(workspace_from_field(F, inst.beta, inst.s, t), inst)

    rdim = B.shape[1]
    return _tensor_expectation(rdim, _capped_order(order, rdim), fn)


def expect_draw_quadrature(fn: Callable[[GaussianDraw], np.ndarray], m: int, n: int,
                           order: int = 8) -> float:
    """``E fn(draw)`` over the full draw space (no rank reduction).

    ``fn`` receives a stacked :class:`GaussianDraw` and returns one value per draw.
    """
    dim = _draw_dim(m, n)
    if dim > MAX_DIM:
        raise ValueError(f"Gaussian dimension {dim} exceeds the quadrature budget {MAX_DIM}")
    if order < 2:
        raise ValueError("order must be >= 2")
    mn = m * n

    def flat_fn(z):
        draw = GaussianDraw(z[:, :mn].reshape(-1, m, n), z[:, mn], z[:, mn + 1:mn + 1 + m],
                            z[:, mn + 1 + m:])
        return fn(draw)

    return _tensor_expectation(dim, _capped_order(order, dim), flat_fn)
