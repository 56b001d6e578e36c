"""Seeded Gaussian sampling and Monte Carlo estimation with common random numbers.

Draw ``i`` under ``seed`` is a pure function of ``(seed, i, m, n)``: it is read
from the Philox-4x64 counter block ``[i*K, (i+1)*K)`` keyed by ``seed``, where
``K = ceil(D / 4)`` and ``D = m*n + 1 + m + n``.  Each 64-bit word becomes an
open-interval uniform ``((w >> 11) + 0.5) * 2**-53`` and then a standard
normal through the inverse normal CDF.  Components are laid out as ``G``
(row-major), ``u4``, ``u2``, ``h``.

Sums are formed over fixed leaves of :data:`LEAF` consecutive indices and
leaf statistics are merged exactly (``math.fsum``), so the emitted numbers do
not depend on ``workers`` or ``batch``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Union

import numpy as np
from scipy.special import ndtri

from .estimators import Functional, functional as lookup_functional
from .kernel import bilinear_fields, workspace_from_fields
from .model import ComparisonInstance, EstimatorResult, GaussianDraw

__all__ = [
    "LEAF",
    "SamplerConfig",
    "CurveResult",
    "draw_gaussians",
    "draw_block",
    "estimate",
    "estimate_curve",
    "estimate_curves",
]

LEAF = 2048
_U64 = 1 << 64


@dataclass(frozen=True)
class SamplerConfig:
    seed: int = 2016
    n_samples: int = 50_000
    workers: int = 1
    batch: int = 8 * LEAF

    def __post_init__(self):
        if not 0 <= self.seed < _U64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")


@dataclass(frozen=True)
class CurveResult:
    """Estimates on a grid of ``t``; ``results[name][k]`` belongs to ``grid[k]``."""

    grid: tuple
    results: dict

    def __post_init__(self):
        for name, rows in self.results.items():
            if len(rows) != len(self.grid):
                raise ValueError(f"{name}: {len(rows)} results for a grid of {len(self.grid)}")

    def means(self, name: str) -> np.ndarray:
        return np.array([r.mean for r in self.results[name]])

    def std_errors(self, name: str) -> np.ndarray:
        return np.array([r.std_error for r in self.results[name]])


def _blocks_per_draw(m: int, n: int) -> int:
    return -(-(m * n + 1 + m + n) // 4)


def draw_block(seed: int, start: int, count: int, m: int, n: int) -> GaussianDraw:
    """Draws with indices ``start .. start+count-1`` stacked along axis 0."""
    k = _blocks_per_draw(m, n)
    counter = start * k
    if counter + count * k >= _U64:
        raise OverflowError("sample index exceeds the counter space")
    gen = np.random.Philox(key=seed, counter=[counter, 0, 0, 0])
    raw = gen.random_raw(4 * k * count).reshape(count, 4 * k)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
    z = ndtri(u)
    mn = m * n
    return GaussianDraw(
        G=z[:, :mn].reshape(count, m, n),
        u4=z[:, mn],
        u2=z[:, mn + 1:mn + 1 + m],
        h=z[:, mn + 1 + m:mn + 1 + m + n],
    )


def draw_gaussians(seed: int, index: int, m: int, n: int) -> GaussianDraw:
    """The single draw with the given index."""
    return draw_block(seed, index, 1, m, n)[0]


# ---------------------------------------------------------------------------
# leaf statistics
# ---------------------------------------------------------------------------


def _leaf_stats(values: np.ndarray) -> tuple[int, float, float]:
    if not np.all(np.isfinite(values)):
        raise FloatingPointError("non-finite integrand value")
    count = values.shape[0]
    mean = float(np.mean(values))
    m2 = float(np.sum((values - mean) ** 2))
    return count, mean, m2


def _merge(stats: Sequence[tuple[int, float, float]], seed: int, t: float) -> EstimatorResult:
    total = sum(c for c, _, _ in stats)
    mean = math.fsum(c * mu for c, mu, _ in stats) / total
    m2 = math.fsum(m2 for _, _, m2 in stats) + math.fsum(c * (mu - mean) ** 2 for c, mu, _ in stats)
    var = m2 / (total - 1) if total > 1 else 0.0
    return EstimatorResult(mean=mean, std_error=math.sqrt(max(var, 0.0) / total),
                           n_samples=total, seed=seed, t=t)


FunctionalLike = Union[str, Functional, Callable]


def _as_functional(f: FunctionalLike) -> Functional:
    if isinstance(f, Functional):
        return f
    if isinstance(f, str):
        return lookup_functional(f)
    if callable(f):
        return Functional(getattr(f, "__name__", "custom"), f)
    raise TypeError(f"not a functional: {f!r}")


def _run_leaves(inst: ComparisonInstance, requests: Sequence[tuple[Functional, tuple]],
                cfg: SamplerConfig) -> list:
    """Leaf statistics ``[leaf][request][k]`` for every leaf, in index order."""
    times = sorted({t for _, grid in requests for t in grid})
    plan = {t: [(j, grid.index(t)) for j, (_, grid) in enumerate(requests) if t in grid]
            for t in times}
    n_leaves = -(-cfg.n_samples // LEAF)
    leaves_per_unit = max(1, -(-cfg.batch // LEAF))

    def run_unit(first_leaf: int) -> list:
        out = []
        for leaf in range(first_leaf, min(first_leaf + leaves_per_unit, n_leaves)):
            start = leaf * LEAF
            count = min(LEAF, cfg.n_samples - start)
            draws = draw_block(cfg.seed, start, count, inst.m, inst.n)
            fields = bilinear_fields(inst, draws)
            stats = [[None] * len(grid) for _, grid in requests]
            for t in times:
                ws = workspace_from_fields(inst, fields, t)
                for j, k in plan[t]:
                    f = requests[j][0]
                    vals = np.broadcast_to(np.asarray(f(ws, inst), dtype=np.float64), (count,))
                    stats[j][k] = _leaf_stats(vals)
            out.append(stats)
        return out

    units = range(0, n_leaves, leaves_per_unit)
    if cfg.workers == 1:
        chunks = [run_unit(u) for u in units]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(run_unit, units))
    return [leaf for chunk in chunks for leaf in chunk]


def _check_grid(f: Functional, grid: tuple) -> None:
    for t in grid:
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"grid point {t} outside [0, 1]")
        if f.interior and not 0.0 < t < 1.0:
            raise ValueError(f"functional {f.name!r} needs interior t, got {t}")


def estimate_curves(inst: ComparisonInstance,
                    requests: Sequence[tuple[FunctionalLike, Sequence[float]]],
                    cfg: SamplerConfig) -> dict:
    """Estimate several functionals, each on its own grid, from one set of draws.

    Returns ``{name: CurveResult}``.  Draw ``i`` is generated once and shared
    by every functional and every ``t`` (common random numbers).
    """
    reqs = []
    for f, grid in requests:
        f = _as_functional(f)
        grid = tuple(float(t) for t in grid)
        _check_grid(f, grid)
        reqs.append((f, grid))
    names = [f.name for f, _ in reqs]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate functional names: {names}")
    leaves = _run_leaves(inst, reqs, cfg)
    out = {}
    for j, (f, grid) in enumerate(reqs):
        rows = [_merge([leaf[j][k] for leaf in leaves], cfg.seed, t) for k, t in enumerate(grid)]
        out[f.name] = CurveResult(grid=grid, results={f.name: rows})
    return out


def estimate(inst: ComparisonInstance, func: FunctionalLike, t: float,
             cfg: SamplerConfig) -> EstimatorResult:
    """Monte Carlo mean of one integrand over draws ``0 .. n_samples-1``."""
    curve = estimate_curve(inst, [func], [t], cfg)
    return next(iter(curve.results.values()))[0]


def estimate_curve(inst: ComparisonInstance, funcs: Iterable[FunctionalLike],
                   grid: Sequence[float], cfg: SamplerConfig) -> CurveResult:
    """Estimate every functional at every ``t`` in ``grid`` with common random numbers."""
    grid = tuple(float(t) for t in grid)
    curves = estimate_curves(inst, [(f, grid) for f in funcs], cfg)
    results = {name: c.results[name] for name, c in curves.items()}
    return CurveResult(grid=grid, results=results)
