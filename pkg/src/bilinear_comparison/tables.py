"""Preset table reproduction and the shared CSV writer.

A table holds, at ``t = 0.1, ..., 0.9``: the standard and closed-form
derivative estimates, the two integrated reconstructions of the curve, the
direct estimate and (for the high-``beta`` presets) the ``beta -> infinity``
limit.  Lifted presets additionally carry adjusted values mapping each lifted
column back to the ``psi`` scale.  Every column is computed from one set of
draws shared across all ``t`` and all functionals.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .curves import IntegrationScheme, integrate_curve
from .estimators import adjusted_value, functional
from .model import ComparisonInstance, VectorSet, builtin_sets
from .montecarlo import CurveResult, SamplerConfig, estimate_curves

__all__ = [
    "SCHEMA_VERSION",
    "TABLE_PRESETS",
    "TABLE_T",
    "TablePreset",
    "TableResult",
    "reproduce_table",
    "format_csv",
]

SCHEMA_VERSION = 1
TABLE_T = tuple(round(0.1 * k, 12) for k in range(1, 10))


@dataclass(frozen=True)
class TablePreset:
    beta: float
    s: float
    n_samples: int
    c3: Optional[float] = None
    c3s: Optional[float] = None
    with_limit: bool = False

    @property
    def lifted(self) -> bool:
        return self.c3 is not None


TABLE_PRESETS = {
    1: TablePreset(beta=3.0, s=1.0, n_samples=50_000),
    2: TablePreset(beta=3.0, s=-1.0, n_samples=50_000),
    3: TablePreset(beta=10.0, s=1.0, n_samples=50_000, with_limit=True),
    4: TablePreset(beta=10.0, s=-1.0, n_samples=50_000, with_limit=True),
    5: TablePreset(beta=10.0, s=1.0, n_samples=80_000, c3=0.1, c3s=1.0, with_limit=True),
    6: TablePreset(beta=10.0, s=-1.0, n_samples=50_000, c3=0.1, c3s=1.0, with_limit=True),
}


@dataclass(frozen=True)
class TableResult:
    """Rows of a reproduced table.

    ``values[col][k]`` and ``errors[col][k]`` belong to ``t[k]``; adjusted
    columns (suffix ``_adj``) carry no standard error.  ``curves`` keeps the
    full-resolution estimates the rows were read from.
    """

    table_id: int
    preset: TablePreset
    t: tuple
    columns: tuple
    values: dict
    errors: dict
    curves: dict
    config: dict

    def column(self, name: str) -> list:
        return list(self.values[name])

    def to_csv(self, precision: int = 6) -> str:
        header, rows = ["t"], []
        for col in self.columns:
            header.append(col)
            if col in self.errors:
                header.append(col + "_se")
        for k, t in enumerate(self.t):
            row = [t]
            for col in self.columns:
                row.append(self.values[col][k])
                if col in self.errors:
                    row.append(self.errors[col][k])
            rows.append(row)
        return format_csv(self.config, header, rows, precision)


def _index(grid: Sequence[float], t: float) -> int:
    for k, g in enumerate(grid):
        if math.isclose(g, t, rel_tol=0, abs_tol=1e-12):
            return k
    raise KeyError(t)


def reproduce_table(table_id: int, seed: int = 2016, n_samples: Optional[int] = None,
                    workers: int = 1, step: float = 0.01,
                    sets: Optional[tuple[VectorSet, VectorSet]] = None) -> TableResult:
    """Recompute one preset table with common random numbers.

    ``step`` is the spacing of the derivative grid used by the integrated
    columns.  ``sets`` replaces the built-in ``(X, Y)`` pair.
    """
    if table_id not in TABLE_PRESETS:
        raise ValueError(f"table must be one of {sorted(TABLE_PRESETS)}, got {table_id}")
    preset = TABLE_PRESETS[table_id]
    xset, yset = sets if sets is not None else builtin_sets()
    inst = ComparisonInstance(xset, yset, beta=preset.beta, s=preset.s, c3=preset.c3)
    cfg = SamplerConfig(seed=seed, n_samples=n_samples or preset.n_samples, workers=workers)
    scheme = IntegrationScheme.uniform(step)
    nodes = scheme.nodes

    if preset.lifted:
        names = dict(std="dpsistar_standard", closed="dpsistar_closed", direct="psistar",
                     limit="lifted_limit", prefix="psistar")
    else:
        names = dict(std="dpsi_standard", closed="dpsi_closed", direct="psi",
                     limit="limit", prefix="psi")
    sparse = (0.0,) + TABLE_T + (1.0,)
    requests = [
        (functional(names["std"]), scheme.grid),
        (functional(names["closed"]), nodes),
        (functional(names["direct"]), sparse),
    ]
    if preset.with_limit:
        requests.append((functional(names["limit"], c3s=preset.c3s), TABLE_T))
    curves = estimate_curves(inst, requests, cfg)

    closed = curves[names["closed"]]
    direct = curves[names["direct"]]
    psi0 = direct.results[names["direct"]][0]
    ends = [closed.results[names["closed"]][0], closed.results[names["closed"]][-1]]
    interior_closed = CurveResult(
        grid=scheme.grid, results={names["closed"]: closed.results[names["closed"]][1:-1]})
    integrated = {
        "std": integrate_curve(psi0, curves[names["std"]], scheme, endpoint_deriv=ends),
        "closed": integrate_curve(psi0, interior_closed, scheme, endpoint_deriv=ends),
    }

    p = names["prefix"]
    columns = [f"d{p}_standard", f"d{p}_closed", f"{p}_int_standard", f"{p}_int_closed",
               f"{p}_direct"]
    sources = [
        (curves[names["std"]], names["std"]),
        (closed, names["closed"]),
        (integrated["std"], "psi_integrated"),
        (integrated["closed"], "psi_integrated"),
        (direct, names["direct"]),
    ]
    if preset.with_limit:
        columns.append(f"{p}_limit")
        sources.append((curves[names["limit"]], names["limit"]))

    values, errors = {}, {}
    for col, (curve, key) in zip(columns, sources):
        rows = [curve.results[key][_index(curve.grid, t)] for t in TABLE_T]
        values[col] = [r.mean for r in rows]
        errors[col] = [r.std_error for r in rows]
    if preset.lifted:
        for col in columns[2:]:
            values[col + "_adj"] = [adjusted_value(v, inst.beta, inst.s, preset.c3, inst.n)
                                    for v in values[col]]
        columns += [col + "_adj" for col in columns[2:]]

    config = {
        "command": "table",
        "table": table_id,
        "beta": preset.beta,
        "s": preset.s,
        "c3": preset.c3,
        "c3s": preset.c3s,
        "seed": cfg.seed,
        "samples": cfg.n_samples,
        "step": step,
        "sets": "builtin" if sets is None else "custom",
    }
    return TableResult(table_id=table_id, preset=preset, t=TABLE_T, columns=tuple(columns),
                       values=values, errors=errors, curves=curves, config=config)


def _cell(v: float, precision: int) -> str:
    if not math.isfinite(v):
        raise FloatingPointError(f"refusing to emit non-finite value {v!r}")
    return f"{v:.{precision}g}"


def format_csv(config: dict, header: Sequence[str], rows: Sequence[Sequence[float]],
               precision: int = 6) -> str:
    """CSV text: one ``#`` line echoing ``config``, a header row, then data rows."""
    meta = {"schema": SCHEMA_VERSION, "columns": list(header), **config}
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        if len(row) != len(header):
            raise ValueError("row length does not match the header")
        buf.write(",".join(_cell(float(v), precision) for v in row) + "\n")
    return buf.getvalue()
