"""Log-domain evaluation of the interpolated bilinear field and partition sums.

For a draw ``(G, u4, u2, h)`` the field at interpolation time ``t`` is

    F[i1, i2] = sqrt(t) * coupled[i1, i2] + sqrt(1 - t) * decoupled[i1, i2]

with the t-independent parts

    coupled[i1, i2]   = y_i2' G x_i1 + |x_i1| |y_i2| u4
    decoupled[i1, i2] = |x_i1| y_i2' u2 + |y_i2| h' x_i1.

Everything downstream works with ``logC = logsumexp_i2(beta F)``,
``logZ = logsumexp_i1(s logC)`` and the two softmax weight arrays
``P = C**s / Z`` and ``Q = A / C``.  All functions accept stacked draws (a
leading batch shape) and broadcast over it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ComparisonInstance, GaussianDraw

__all__ = [
    "Fields",
    "SampleWorkspace",
    "f1h",
    "bilinear_fields",
    "workspace_from_fields",
    "workspace_from_field",
    "build_workspace",
    "psi_sample",
    "psistar_sample",
    "logsumexp",
]


def logsumexp(a: np.ndarray, axis: int = -1) -> np.ndarray:
    """Stable ``log(sum(exp(a)))`` along ``axis``; shift by the max."""
    amax = np.max(a, axis=axis, keepdims=True)
    out = np.log(np.sum(np.exp(a - amax), axis=axis)) + np.squeeze(amax, axis=axis)
    return out


def _check_t(t: float) -> float:
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    return t


def f1h(x, y, draw: GaussianDraw, t: float) -> float:
    """Interpolated bilinear field for a single pair of vectors."""
    t = _check_t(t)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if draw.batch_shape:
        raise ValueError("f1h expects a single draw")
    if x.shape != (draw.n,) or y.shape != (draw.m,):
        raise ValueError(
            f"dimension mismatch: x{x.shape}, y{y.shape} against G{draw.G.shape}"
        )
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    coupled = y @ draw.G @ x + nx * ny * draw.u4
    decoupled = nx * (y @ draw.u2) + ny * (draw.h @ x)
    return float(math.sqrt(t) * coupled + math.sqrt(1.0 - t) * decoupled)


@dataclass(frozen=True, eq=False)
class Fields:
    """The t-independent parts of the field, each ``(..., l1, l2)``."""

    coupled: np.ndarray
    decoupled: np.ndarray

    def at(self, t: float) -> np.ndarray:
        t = _check_t(t)
        return math.sqrt(t) * self.coupled + math.sqrt(1.0 - t) * self.decoupled


def bilinear_fields(inst: ComparisonInstance, draw: GaussianDraw) -> Fields:
    if draw.m != inst.m or draw.n != inst.n:
        raise ValueError(
            f"draw dimensions (m={draw.m}, n={draw.n}) do not match instance "
            f"(m={inst.m}, n={inst.n})"
        )
    X = inst.xset.vectors  # (l1, n)
    Y = inst.yset.vectors  # (l2, m)
    nx, ny = inst.xset.norms, inst.yset.norms
    GX = np.einsum("...jk,ik->...ji", draw.G, X)  # (..., m, l1)
    yGx = np.einsum("pj,...ji->...ip", Y, GX)  # (..., l1, l2)
    coupled = yGx + np.outer(nx, ny) * draw.u4[..., None, None]
    yu2 = draw.u2 @ Y.T  # (..., l2)
    hx = draw.h @ X.T  # (..., l1)
    decoupled = nx[:, None] * yu2[..., None, :] + hx[..., :, None] * ny[None, :]
    return Fields(coupled, decoupled)


@dataclass(frozen=True, eq=False)
class SampleWorkspace:
    """Per-draw log-domain quantities at one interpolation time.

    ``F``, ``Q``: ``(..., l1, l2)``; ``logC``, ``P``: ``(..., l1)``;
    ``logZ``: ``(...)``.  ``fields`` keeps the coupled/decoupled split needed
    by the standard derivative estimators (``None`` when the workspace was
    built from a bare field matrix).
    """

    F: np.ndarray
    logC: np.ndarray
    logZ: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    t: float
    beta: float
    s: float
    fields: Fields | None = None


def workspace_from_field(F: np.ndarray, beta: float, s: float, t: float,
                         fields: Fields | None = None) -> SampleWorkspace:
    logA = beta * F
    amax = np.max(logA, axis=-1, keepdims=True)
    Q = np.exp(logA - amax)
    total = np.sum(Q, axis=-1, keepdims=True)
    Q /= total
    logC = np.log(total[..., 0]) + amax[..., 0]
    slogC = s * logC
    logZ = logsumexp(slogC, axis=-1)
    P = np.exp(slogC - logZ[..., None])
    return SampleWorkspace(F=F, logC=logC, logZ=logZ, P=P, Q=Q, t=t, beta=beta, s=s,
                           fields=fields)


def workspace_from_fields(inst: ComparisonInstance, fields: Fields, t: float) -> SampleWorkspace:
    t = _check_t(t)
    return workspace_from_field(fields.at(t), inst.beta, inst.s, t, fields)


def build_workspace(inst: ComparisonInstance, draw: GaussianDraw, t: float) -> SampleWorkspace:
    ws = workspace_from_fields(inst, bilinear_fields(inst, draw), t)
    if not np.all(np.isfinite(ws.logZ)):
        raise FloatingPointError("log-partition overflowed; inputs are pathological")
    return ws


def psi_sample(ws: SampleWorkspace, n: int) -> np.ndarray:
    """Per-draw ``log Z / (beta |s| sqrt(n))``; ``n`` is the x-dimension."""
    return ws.logZ / (ws.beta * abs(ws.s) * math.sqrt(n))


def psistar_sample(ws: SampleWorkspace, c3: float) -> np.ndarray:
    """Per-draw lifted value ``Z**c3``."""
    if c3 in (0.0, 1.0):
        raise ValueError("c3 must differ from 0 and 1")
    with np.errstate(over="raise"):
        return np.exp(c3 * ws.logZ)
