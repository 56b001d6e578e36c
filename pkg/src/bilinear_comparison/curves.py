"""Reconstruct psi(t) from derivative estimates and check comparison inequalities."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import EstimatorResult
from .montecarlo import CurveResult

__all__ = [
    "ENDPOINT_RULES",
    "IntegrationScheme",
    "integrate_curve",
    "PointVerdict",
    "SandwichReport",
    "check_sandwich",
    "adjacent_violations",
]

ENDPOINT_RULES = ("closed-form-at-endpoints", "one-sided")
DIRECTIONS = ("non-increasing", "non-decreasing")


@dataclass(frozen=True)
class IntegrationScheme:
    """Interior grid ``t_1 < ... < t_K`` in (0, 1) plus how to close it at 0 and 1.

    With ``closed-form-at-endpoints`` the caller supplies derivative estimates
    at ``t = 0`` and ``t = 1`` (typically from the closed-form integrand, which
    is defined there).  ``one-sided`` extrapolates linearly from the two
    nearest interior points.
    """

    grid: tuple
    endpoint_rule: str = "closed-form-at-endpoints"
    step: Optional[float] = None

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=np.float64)
        if g.ndim != 1 or g.size < 2:
            raise ValueError("integration grid needs at least two interior points")
        if np.any(np.diff(g) <= 0):
            raise ValueError("integration grid must be strictly increasing")
        if g[0] <= 0.0 or g[-1] >= 1.0:
            raise ValueError("integration grid must lie strictly inside (0, 1)")
        if self.endpoint_rule not in ENDPOINT_RULES:
            raise ValueError(f"endpoint_rule must be one of {ENDPOINT_RULES}")
        if self.step is not None and not self.step > 0:
            raise ValueError("step must be positive")

    @classmethod
    def uniform(cls, step: float = 0.01, endpoint_rule: str = "closed-form-at-endpoints"):
        k = round(1.0 / step)
        if not math.isclose(k * step, 1.0, rel_tol=0, abs_tol=1e-9):
            raise ValueError(f"step {step} does not divide [0, 1]")
        grid = tuple(round(i * step, 12) for i in range(1, k))
        return cls(grid=grid, endpoint_rule=endpoint_rule, step=step)

    @property
    def nodes(self) -> tuple:
        """Full integration nodes ``(0, t_1, ..., t_K, 1)``."""
        return (0.0,) + tuple(self.grid) + (1.0,)


def _trapezoid_weights(nodes: np.ndarray) -> np.ndarray:
    """``W[k, j]``: weight of node ``j`` in the integral from ``nodes[0]`` to ``nodes[k]``."""
    h = np.diff(nodes)
    W = np.zeros((nodes.size, nodes.size))
    for k in range(1, nodes.size):
        W[k] = W[k - 1]
        W[k, k - 1] += h[k - 1] / 2
        W[k, k] += h[k - 1] / 2
    return W


def integrate_curve(psi0: EstimatorResult, deriv: CurveResult, scheme: IntegrationScheme,
                    name: Optional[str] = None,
                    endpoint_deriv: Optional[Sequence[EstimatorResult]] = None,
                    output_name: str = "psi_integrated") -> CurveResult:
    """Cumulative trapezoid ``psi(t_k) = psi(0) + int_0^{t_k} dpsi/dt``.

    ``deriv`` must be evaluated on ``scheme.grid``; ``name`` selects which of
    its functionals to integrate (optional when it holds only one).  The
    returned curve lives on ``scheme.nodes``.  Its standard errors treat the
    grid points as independent, which overstates them under common random
    numbers: read them as a conservative bound.
    """
    if name is None:
        if len(deriv.results) != 1:
            raise ValueError("deriv holds several functionals; pass name=")
        name = next(iter(deriv.results))
    if len(deriv.grid) != len(scheme.grid) or not np.allclose(deriv.grid, scheme.grid,
                                                               rtol=0, atol=1e-12):
        raise ValueError("derivative grid does not match the integration scheme")
    means = list(deriv.means(name))
    ses = list(deriv.std_errors(name))
    g = list(scheme.grid)
    if scheme.endpoint_rule == "closed-form-at-endpoints":
        if endpoint_deriv is None or len(endpoint_deriv) != 2:
            raise ValueError("closed-form-at-endpoints needs derivative estimates at t=0 and t=1")
        lo, hi = endpoint_deriv
        means = [lo.mean] + means + [hi.mean]
        ses = [lo.std_error] + ses + [hi.std_error]
    else:
        lo = means[0] + (means[0] - means[1]) * g[0] / (g[1] - g[0])
        hi = means[-1] + (means[-1] - means[-2]) * (1.0 - g[-1]) / (g[-1] - g[-2])
        means = [lo] + means + [hi]
        ses = [ses[0]] + ses + [ses[-1]]
    nodes = np.asarray(scheme.nodes)
    W = _trapezoid_weights(nodes)
    values = psi0.mean + W @ np.asarray(means)
    errors = np.sqrt(psi0.std_error ** 2 + (W ** 2) @ np.asarray(ses) ** 2)
    rows = [
        EstimatorResult(mean=float(v), std_error=float(e), n_samples=psi0.n_samples,
                        seed=psi0.seed, t=float(t))
        for v, e, t in zip(values, errors, nodes)
    ]
    return CurveResult(grid=tuple(float(t) for t in nodes), results={output_name: rows})


@dataclass(frozen=True)
class PointVerdict:
    t: float
    status: str  # "holds", "within-noise" or "violated"
    deficit: float  # worst amount by which the inequality fails (<= 0 when it holds)
    k_se: float  # deficit in units of the combined standard error


@dataclass(frozen=True)
class SandwichReport:
    direction: str
    points: tuple
    tolerance_se: float

    @property
    def passed(self) -> bool:
        return all(p.status != "violated" for p in self.points)

    @property
    def violations(self) -> list:
        return [p for p in self.points if p.status == "violated"]

    def summary(self) -> str:
        counts = {s: sum(p.status == s for p in self.points)
                  for s in ("holds", "within-noise", "violated")}
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict} {self.direction}: {counts['holds']} hold, "
                f"{counts['within-noise']} within {self.tolerance_se:g} SE, "
                f"{counts['violated']} violated")


def _in_se(deficit: float, se: float) -> float:
    if se > 0:
        return deficit / se
    return math.copysign(math.inf, deficit) if deficit else 0.0


def check_sandwich(psi_at_0: EstimatorResult, psi_curve: Sequence[EstimatorResult],
                   psi_at_1: EstimatorResult, direction: str = "non-increasing",
                   tolerance_se: float = 3.0) -> SandwichReport:
    """Verify ``psi(0) >= psi(t) >= psi(1)`` (or the reverse) at each curve point.

    A point whose worst deficit exceeds ``tolerance_se`` combined standard
    errors is a violation; smaller deficits are attributed to noise.
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    sign = 1.0 if direction == "non-increasing" else -1.0
    points = []
    for r in psi_curve:
        d_left = sign * (r.mean - psi_at_0.mean)
        se_left = math.hypot(r.std_error, psi_at_0.std_error)
        d_right = sign * (psi_at_1.mean - r.mean)
        se_right = math.hypot(r.std_error, psi_at_1.std_error)
        k_left, k_right = _in_se(d_left, se_left), _in_se(d_right, se_right)
        deficit, k = max((d_left, k_left), (d_right, k_right), key=lambda p: p[1])
        if deficit <= 0:
            status = "holds"
        elif k <= tolerance_se:
            status = "within-noise"
        else:
            status = "violated"
        points.append(PointVerdict(t=r.t, status=status, deficit=deficit, k_se=k))
    return SandwichReport(direction=direction, points=tuple(points), tolerance_se=tolerance_se)


def adjacent_violations(curve: Sequence[EstimatorResult], direction: str = "non-increasing",
                        tolerance_se: float = 1.0) -> int:
    """Number of adjacent pairs that move the wrong way by more than ``tolerance_se``."""
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    sign = 1.0 if direction == "non-increasing" else -1.0
    count = 0
    for a, b in zip(curve[:-1], curve[1:]):
        if sign * (b.mean - a.mean) > tolerance_se * math.hypot(a.std_error, b.std_error):
            count += 1
    return count
