"""Property suite: per-draw sign laws, sandwich, estimator agreement, degenerate sets.

Each check returns a :class:`CheckResult`; :func:`run_checks` collects them.
Zero-tolerance checks (signs, exact zeros) are evaluated on every draw.
Statistical checks compare means within a stated number of standard errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .curves import adjacent_violations, check_sandwich
from .estimators import dpsi_closed_sample, dpsistar_closed_sample, functional
from .kernel import bilinear_fields, workspace_from_fields
from .model import ComparisonInstance, VectorSet
from .montecarlo import LEAF, SamplerConfig, draw_block, estimate_curve, estimate_curves
from .quadrature import expect_quadrature

__all__ = [
    "CheckResult",
    "lifted_direction",
    "per_draw_values",
    "check_closed_sign",
    "check_lifted_sign",
    "check_sandwich_curve",
    "check_estimator_agreement",
    "check_degenerate",
    "check_quadrature_agreement",
    "tiny_instance",
    "run_checks",
]

SIGN_T = (0.1, 0.5, 0.9)
AGREEMENT_T = (0.1, 0.3, 0.5, 0.7, 0.9)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def lifted_direction(c3: float) -> str:
    """Monotonicity of the lifted curve: decreasing for ``0 < c3 < 1``."""
    return "non-increasing" if 0.0 < c3 < 1.0 else "non-decreasing"


def per_draw_values(inst: ComparisonInstance, fn: Callable, t: float, n_draws: int,
                    seed: int) -> np.ndarray:
    """``fn(ws, inst)`` on each of draws ``0 .. n_draws-1``, concatenated."""
    out = []
    for start in range(0, n_draws, LEAF):
        count = min(LEAF, n_draws - start)
        fields = bilinear_fields(inst, draw_block(seed, start, count, inst.m, inst.n))
        out.append(np.broadcast_to(fn(workspace_from_fields(inst, fields, t), inst), (count,)))
    return np.concatenate(out)


def _negated(fn: Callable) -> Callable:
    return lambda ws, inst: -fn(ws, inst)


def check_closed_sign(inst: ComparisonInstance, n_draws: int, seed: int,
                      ts: Sequence[float] = SIGN_T, negate: bool = False) -> CheckResult:
    fn = _negated(dpsi_closed_sample) if negate else dpsi_closed_sample
    bad, worst = 0, -math.inf
    for t in ts:
        vals = per_draw_values(inst, fn, t, n_draws, seed)
        bad += int(np.sum(vals > 0))
        worst = max(worst, float(np.max(vals)))
    detail = f"{bad} of {n_draws * len(ts)} draws positive (max {worst:.3g})"
    return CheckResult("closed-form derivative <= 0 per draw", bad == 0, detail)


def check_lifted_sign(inst: ComparisonInstance, c3: float, n_draws: int, seed: int,
                      ts: Sequence[float] = SIGN_T, negate: bool = False) -> CheckResult:
    direction = lifted_direction(c3)
    sign = -1.0 if direction == "non-increasing" else 1.0

    def fn(ws, inst_):
        v = dpsistar_closed_sample(ws, inst_, c3)
        return -v if negate else v

    bad = 0
    for t in ts:
        vals = per_draw_values(inst, fn, t, n_draws, seed)
        bad += int(np.sum(sign * vals < 0))
    rel = "<=" if sign < 0 else ">="
    detail = f"{direction} branch, {bad} of {n_draws * len(ts)} draws break {rel} 0"
    return CheckResult(f"lifted closed-form sign, c3={c3:g}", bad == 0, detail)


def check_sandwich_curve(inst: ComparisonInstance, cfg: SamplerConfig,
                         c3: Optional[float] = None, tolerance_se: float = 3.0,
                         max_adjacent: int = 1) -> CheckResult:
    """``psi(0) >= psi(t) >= psi(1)`` on ``t = 0.1 .. 0.9`` plus adjacent-pair monotonicity."""
    grid = tuple(round(0.1 * k, 12) for k in range(11))
    if c3 is None:
        name, direction = "psi", "non-increasing"
        f = functional("psi")
    else:
        name, direction = "psistar", lifted_direction(c3)
        f = functional("psistar", c3=c3)
    curve = estimate_curve(inst, [f], grid, cfg).results[name]
    report = check_sandwich(curve[0], curve[1:-1], curve[-1], direction, tolerance_se)
    adj = adjacent_violations(curve[1:-1], direction, 1.0)
    ok = report.passed and adj <= max_adjacent
    label = "sandwich" if c3 is None else f"lifted sandwich, c3={c3:g}"
    return CheckResult(label, ok, f"{report.summary()}; {adj} adjacent pairs off by > 1 SE")


def check_estimator_agreement(inst: ComparisonInstance, cfg: SamplerConfig,
                              ts: Sequence[float] = AGREEMENT_T, lifted: bool = False,
                              k_se: float = 3.0) -> CheckResult:
    """Standard and closed-form derivative means agree within ``k_se`` combined SE."""
    std, closed = ("dpsistar_standard", "dpsistar_closed") if lifted else (
        "dpsi_standard", "dpsi_closed")
    curves = estimate_curves(inst, [(std, ts), (closed, ts)], cfg)
    worst = 0.0
    for a, b in zip(curves[std].results[std], curves[closed].results[closed]):
        se = math.hypot(a.std_error, b.std_error)
        worst = max(worst, abs(a.mean - b.mean) / se if se > 0 else (
            0.0 if a.mean == b.mean else math.inf))
    label = "lifted estimator agreement" if lifted else "estimator agreement"
    return CheckResult(label, worst <= k_se, f"max |standard - closed| = {worst:.2f} SE")


def check_degenerate(inst: ComparisonInstance, cfg: SamplerConfig, n_draws: int = 4096,
                     negate: bool = False) -> list:
    """Exact zeros for a duplicated x-set and for single-vector sets."""
    fn = _negated(dpsi_closed_sample) if negate else dpsi_closed_sample
    x0 = inst.xset.vectors[0]
    dup = inst.with_params(xset=VectorSet(np.tile(x0, (inst.xset.count, 1))))
    vals = per_draw_values(dup, fn, 0.5, n_draws, cfg.seed)
    results = [CheckResult("duplicated x-set gives zero derivative", bool(np.all(vals == 0)),
                           f"max |value| {float(np.max(np.abs(vals))):.3g} on {n_draws} draws")]
    single = inst.with_params(xset=VectorSet(inst.xset.vectors[:1]),
                              yset=VectorSet(inst.yset.vectors[:1]))
    vals = per_draw_values(single, fn, 0.5, n_draws, cfg.seed)
    psi = estimate_curve(single, ["psi"], [0.5], cfg).results["psi"][0]
    zero = bool(np.all(vals == 0))
    near = abs(psi.mean) <= 3 * psi.std_error
    results.append(CheckResult(
        "single-vector sets", zero and near,
        f"closed-form max |value| {float(np.max(np.abs(vals))):.3g}; "
        f"psi mean {psi.mean:.4g} vs 0 ({abs(psi.mean) / psi.std_error:.2f} SE)"))
    return results


def tiny_instance(beta: float = 1.0, s: float = 1.0, y2: float = -0.5) -> ComparisonInstance:
    """One-dimensional two-point sets ``x in {1, -1}``, ``y in {1, y2}``."""
    return ComparisonInstance(VectorSet([[1.0], [-1.0]]), VectorSet([[1.0], [y2]]),
                              beta=beta, s=s)


def check_quadrature_agreement(cfg: SamplerConfig, beta: float = 1.0, s: float = 1.0,
                               ts: Sequence[float] = (0.0, 0.5, 1.0),
                               k_se: float = 3.0) -> CheckResult:
    """Monte Carlo ``psi`` on the tiny instance against Gauss-Hermite quadrature."""
    inst = tiny_instance(beta, s)
    mc = estimate_curve(inst, ["psi"], ts, cfg).results["psi"]
    worst = 0.0
    for r in mc:
        exact = expect_quadrature(inst, "psi", r.t, order=40)
        worst = max(worst, abs(r.mean - exact) / r.std_error)
    return CheckResult("quadrature agreement (tiny instance)", worst <= k_se,
                       f"max deviation {worst:.2f} SE over t = {', '.join(f'{t:g}' for t in ts)}")


def run_checks(inst: ComparisonInstance, cfg: SamplerConfig, sign_draws: int = 20_000,
               lifted_c3: Sequence[float] = (0.1, 2.0, -0.5),
               negate_closed: bool = False) -> list:
    """The full property suite on ``inst``.

    ``negate_closed`` flips the closed-form integrand: a negative control
    that must make the sign checks fail.
    """
    results = [check_closed_sign(inst, sign_draws, cfg.seed, negate=negate_closed)]
    c3_values = list(lifted_c3)
    if inst.c3 is not None and inst.c3 not in c3_values:
        c3_values.append(inst.c3)
    for c3 in c3_values:
        results.append(check_lifted_sign(inst, c3, sign_draws, cfg.seed, negate=negate_closed))
    results.append(check_sandwich_curve(inst, cfg))
    if inst.c3 is not None:
        results.append(check_sandwich_curve(inst, cfg, c3=inst.c3))
    results.append(check_estimator_agreement(inst, cfg))
    lifted_inst = inst if inst.c3 is not None else inst.with_params(c3=0.1)
    results.append(check_estimator_agreement(lifted_inst, cfg, lifted=True))
    results.extend(check_degenerate(inst, cfg, negate=negate_closed))
    results.append(check_quadrature_agreement(cfg, beta=inst.beta, s=inst.s))
    return results
