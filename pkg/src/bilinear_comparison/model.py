"""Domain types and vector-set ingestion.

A :class:`VectorSet` stores its vectors as rows of an ``(l, d)`` array even
though files and the built-in presets lay vectors out as *columns* of a
``d x l`` matrix; :attr:`VectorSet.matrix` gives the column layout back.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union

import numpy as np

__all__ = [
    "VectorSetError",
    "VectorSet",
    "ComparisonInstance",
    "GaussianDraw",
    "EstimatorResult",
    "load_vector_set",
    "dump_vector_set",
    "builtin_sets",
    "normalize_columns",
]


class VectorSetError(ValueError):
    """Raised when vector data cannot be parsed or violates the set invariants.

    ``row`` and ``column`` are 1-based positions in the source matrix layout
    (``None`` when not applicable).
    """

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[int] = None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class VectorSet:
    """Ordered collection of ``l`` real vectors of common dimension ``d``."""

    vectors: np.ndarray  # (l, d), one vector per row
    norms: np.ndarray = field(init=False)

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim == 1:
            v = v[None, :]
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise VectorSetError(f"expected a non-empty (count, dim) array, got shape {v.shape}")
        bad = np.argwhere(~np.isfinite(v))
        if bad.size:
            i, k = bad[0]
            raise VectorSetError("non-finite value", row=int(k) + 1, column=int(i) + 1)
        norms = np.linalg.norm(v, axis=1)
        zero = np.flatnonzero(norms == 0.0)
        if zero.size:
            raise VectorSetError("zero-norm vector", column=int(zero[0]) + 1)
        object.__setattr__(self, "vectors", _frozen(v))
        object.__setattr__(self, "norms", _frozen(norms))

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def matrix(self) -> np.ndarray:
        """Column layout (``dim x count``), one vector per column."""
        return self.vectors.T

    @cached_property
    def norm_gap(self) -> np.ndarray:
        """Matrix ``||a|| ||b|| - a.b`` over all pairs of vectors.

        Evaluated as ``0.5 ||a|| ||b|| |a/||a|| - b/||b|| |^2`` so every entry
        is non-negative in floating point and exactly zero for equal directions.
        """
        unit = self.vectors / self.norms[:, None]
        diff = unit[:, None, :] - unit[None, :, :]
        gap = 0.5 * np.outer(self.norms, self.norms) * np.einsum("ijk,ijk->ij", diff, diff)
        return _frozen(gap)

    def __len__(self) -> int:
        return self.count

    def __repr__(self) -> str:
        return f"VectorSet(count={self.count}, dim={self.dim})"


@dataclass(frozen=True, eq=False)
class ComparisonInstance:
    """Two vector sets plus the inverse temperature ``beta``, the outer exponent
    ``s`` and, for the lifted functional, the power ``c3``."""

    xset: VectorSet
    yset: VectorSet
    beta: float
    s: float
    c3: Optional[float] = None

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be positive and finite, got {self.beta}")
        if not math.isfinite(self.s) or self.s == 0:
            raise ValueError(f"s must be finite and nonzero, got {self.s}")
        if self.c3 is not None:
            if not math.isfinite(self.c3):
                raise ValueError(f"c3 must be finite, got {self.c3}")
            if self.c3 in (0.0, 1.0):
                raise ValueError(f"c3 must differ from 0 and 1, got {self.c3}")

    @property
    def n(self) -> int:
        """Dimension of the x-vectors (columns of G)."""
        return self.xset.dim

    @property
    def m(self) -> int:
        """Dimension of the y-vectors (rows of G)."""
        return self.yset.dim

    def with_params(self, **changes) -> "ComparisonInstance":
        params = dict(xset=self.xset, yset=self.yset, beta=self.beta, s=self.s, c3=self.c3)
        params.update(changes)
        return ComparisonInstance(**params)


@dataclass(frozen=True, eq=False)
class GaussianDraw:
    """Realization of ``(G, u4, u2, h)``.

    Arrays may carry a common leading batch shape, in which case the draw is a
    stack of independent realizations: ``G`` is ``(..., m, n)``, ``u4`` is
    ``(...)``, ``u2`` is ``(..., m)`` and ``h`` is ``(..., n)``.
    """

    G: np.ndarray
    u4: np.ndarray
    u2: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        G = np.asarray(self.G, dtype=np.float64)
        u4 = np.asarray(self.u4, dtype=np.float64)
        u2 = np.asarray(self.u2, dtype=np.float64)
        h = np.asarray(self.h, dtype=np.float64)
        if G.ndim < 2:
            raise ValueError("G must be at least two-dimensional")
        batch = G.shape[:-2]
        m, n = G.shape[-2:]
        if u4.shape != batch or u2.shape != batch + (m,) or h.shape != batch + (n,):
            raise ValueError(
                f"inconsistent draw shapes: G{G.shape}, u4{u4.shape}, u2{u2.shape}, h{h.shape}"
            )
        for name, a in (("G", G), ("u4", u4), ("u2", u2), ("h", h)):
            if not np.all(np.isfinite(a)):
                raise ValueError(f"non-finite entries in {name}")
            object.__setattr__(self, name, a)

    @property
    def m(self) -> int:
        return self.G.shape[-2]

    @property
    def n(self) -> int:
        return self.G.shape[-1]

    @property
    def batch_shape(self) -> tuple:
        return self.G.shape[:-2]

    def __getitem__(self, idx) -> "GaussianDraw":
        return GaussianDraw(self.G[idx], self.u4[idx], self.u2[idx], self.h[idx])

    @classmethod
    def zeros(cls, m: int, n: int) -> "GaussianDraw":
        return cls(np.zeros((m, n)), np.zeros(()), np.zeros(m), np.zeros(n))


@dataclass(frozen=True)
class EstimatorResult:
    mean: float
    std_error: float
    n_samples: int
    seed: int
    t: float

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if not self.std_error >= 0:
            raise ValueError("std_error must be non-negative")


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------


def _parse_float(cell: str) -> Optional[float]:
    try:
        return float(cell)
    except ValueError:
        return None


def _load_csv(text: str) -> VectorSet:
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    if not rows:
        raise VectorSetError("empty CSV input")
    first = [c.strip() for c in rows[0]]
    offset = 1
    if any(_parse_float(c) is None for c in first):
        rows = rows[1:]  # header row
        offset = 2
        if not rows:
            raise VectorSetError("CSV has a header but no data rows")
    width = len(rows[0])
    data = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise VectorSetError(
                f"ragged CSV: expected {width} cells, found {len(row)}", row=i + offset
            )
        for k, cell in enumerate(row):
            value = _parse_float(cell.strip())
            if value is None:
                raise VectorSetError(f"malformed cell {cell!r}", row=i + offset, column=k + 1)
            if not math.isfinite(value):
                raise VectorSetError("non-finite value", row=i + offset, column=k + 1)
            data[i, k] = value
    return VectorSet(data.T)


def _load_json(text: str) -> VectorSet:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise VectorSetError(f"invalid JSON: {exc.msg}", row=exc.lineno) from None
    vectors = doc.get("vectors") if isinstance(doc, dict) else None
    if not isinstance(vectors, list) or not vectors:
        raise VectorSetError('JSON input must be an object with a non-empty "vectors" list')
    dim = len(vectors[0]) if isinstance(vectors[0], list) else -1
    data = np.empty((len(vectors), max(dim, 0)))
    for i, vec in enumerate(vectors):
        if not isinstance(vec, list) or len(vec) != dim:
            raise VectorSetError(f"vector {i + 1} is not a list of length {dim}", column=i + 1)
        for k, value in enumerate(vec):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise VectorSetError(f"malformed entry {value!r}", row=k + 1, column=i + 1)
            if not math.isfinite(value):
                raise VectorSetError("non-finite value", row=k + 1, column=i + 1)
            data[i, k] = value
    return VectorSet(data)


def load_vector_set(source: Union[bytes, str, io.IOBase], format: str = "csv") -> VectorSet:
    """Parse a vector set from CSV (vectors as columns) or JSON (vectors as rows).

    ``source`` may be raw bytes, text, or a readable stream.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    fmt = format.lower()
    if fmt == "csv":
        return _load_csv(source)
    if fmt == "json":
        return _load_json(source)
    raise ValueError(f"unknown format {format!r}; expected 'csv' or 'json'")


def dump_vector_set(vs: VectorSet, format: str = "csv", precision: int = 6) -> str:
    """Canonical text form, ``precision`` significant digits per entry."""
    fmt = format.lower()
    cell = lambda v: f"{v:.{precision}g}"  # noqa: E731
    if fmt == "csv":
        return "".join(",".join(cell(v) for v in row) + "\n" for row in vs.matrix)
    if fmt == "json":
        rows = ", ".join("[" + ", ".join(cell(v) for v in vec) + "]" for vec in vs.vectors)
        return '{"vectors": [' + rows + "]}\n"
    raise ValueError(f"unknown format {format!r}; expected 'csv' or 'json'")


def normalize_columns(vs: VectorSet) -> VectorSet:
    """Rescale every vector to unit Euclidean norm."""
    return VectorSet(vs.vectors / vs.norms[:, None])


# 5 x 10 matrices; each column is one vector of the set.
_X_PLUS = np.array([
    [-0.7998, 0.1004, -0.7599, 0.6616, 0.5864, -0.4010, -0.0148, -0.8320, 0.3187, -0.4861],
    [0.1760, 0.0704, 0.1056, -0.1369, -0.6259, -0.5289, -0.3740, 0.3140, 0.6299, -0.5494],
    [0.0806, -0.9085, -0.3381, -0.1970, -0.1438, 0.4863, 0.5832, 0.0840, -0.2299, -0.2647],
    [0.5487, -0.3120, -0.5447, 0.5673, 0.4870, -0.5239, 0.0407, -0.2955, 0.3913, 0.5113],
    [-0.1476, 0.2497, -0.0208, 0.4276, 0.0808, -0.2202, -0.7198, 0.3389, 0.5438, -0.3611],
])

_Y_PLUS = np.array([
    [-0.4639, 0.7324, -0.4828, 0.0280, -0.4016, -0.6764, 0.6161, 0.4281, -0.3831, 0.0699],
    [0.0416, -0.3678, 0.0144, -0.4856, 0.4880, -0.6861, 0.1266, 0.5132, 0.0350, -0.0308],
    [-0.6522, 0.1775, 0.2449, -0.2417, -0.1255, 0.2355, 0.0859, -0.1498, 0.2410, -0.7208],
    [-0.5981, -0.1078, 0.4879, -0.3456, 0.5796, -0.0856, 0.6892, 0.1325, 0.8628, -0.1637],
    [-0.0037, 0.5340, 0.6846, 0.7652, -0.4989, -0.0946, -0.3492, -0.7165, -0.2225, -0.6692],
])


def builtin_sets() -> tuple[VectorSet, VectorSet]:
    """The X+ and Y+ preset sets (m = n = 5, ten vectors each), entries as printed."""
    return VectorSet(_X_PLUS.T), VectorSet(_Y_PLUS.T)
