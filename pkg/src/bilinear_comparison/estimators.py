"""Per-draw integrands for the derivative, lifted and limit functionals.

Every integrand takes a :class:`~bilinear_comparison.kernel.SampleWorkspace`
(possibly stacked over draws) and returns one value per draw.  The
:class:`Functional` wrapper gives each integrand a name so Monte Carlo and
quadrature drivers can evaluate several of them on shared workspaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .kernel import SampleWorkspace, psi_sample, psistar_sample
from .model import ComparisonInstance

__all__ = [
    "T_MIN",
    "Functional",
    "functional",
    "FUNCTIONAL_NAMES",
    "dpsi_standard_sample",
    "dpsi_closed_sample",
    "dpsistar_standard_sample",
    "dpsistar_closed_sample",
    "limit_sample",
    "lifted_limit_sample",
    "adjusted_value",
]

# The standard estimators carry 1/(2 sqrt(t)) and 1/(2 sqrt(1-t)) factors.
T_MIN = 1e-4


def _check_interior(t: float) -> None:
    if not T_MIN <= t <= 1.0 - T_MIN:
        raise ValueError(
            f"standard derivative estimators need t in [{T_MIN}, {1 - T_MIN}], got {t}"
        )


def _require_c3(inst: ComparisonInstance, c3: Optional[float]) -> float:
    c3 = inst.c3 if c3 is None else c3
    if c3 is None:
        raise ValueError("lifted functional requires c3")
    if c3 in (0.0, 1.0):
        raise ValueError("c3 must differ from 0 and 1")
    return float(c3)


def _standard_weighted_rate(ws: SampleWorkspace) -> np.ndarray:
    """``sum P Q dF/dt`` per draw."""
    if ws.fields is None:
        raise ValueError("standard estimators need a workspace built from a draw")
    _check_interior(ws.t)
    dF = (ws.fields.coupled / (2.0 * math.sqrt(ws.t))
          - ws.fields.decoupled / (2.0 * math.sqrt(1.0 - ws.t)))
    return np.einsum("...i,...ij,...ij->...", ws.P, ws.Q, dF)


def _closed_form_core(ws: SampleWorkspace, inst: ComparisonInstance) -> np.ndarray:
    """``sum_{i1,p1} P P (x-gap) (Q y-gap Q')``; non-negative term by term."""
    Dx = inst.xset.norm_gap
    Dy = inst.yset.norm_gap
    W = (ws.Q @ Dy) @ np.swapaxes(ws.Q, -1, -2)
    W *= Dx
    return np.einsum("...i,...i->...", (W @ ws.P[..., None])[..., 0], ws.P)


def dpsi_standard_sample(ws: SampleWorkspace, inst: ComparisonInstance) -> np.ndarray:
    """Direct t-derivative of the per-draw ``psi`` integrand (chain rule on ``log Z``)."""
    return math.copysign(1.0, inst.s) / math.sqrt(inst.n) * _standard_weighted_rate(ws)


def dpsi_closed_sample(ws: SampleWorkspace, inst: ComparisonInstance) -> np.ndarray:
    """Gaussian integration-by-parts form of the derivative; ``<= 0`` on every draw."""
    scale = abs(inst.s) * inst.beta / (2.0 * math.sqrt(inst.n))
    return -scale * _closed_form_core(ws, inst)


def dpsistar_standard_sample(ws: SampleWorkspace, inst: ComparisonInstance,
                             c3: Optional[float] = None) -> np.ndarray:
    c3 = _require_c3(inst, c3)
    rate = _standard_weighted_rate(ws)
    return inst.s * c3 * inst.beta * psistar_sample(ws, c3) * rate


def dpsistar_closed_sample(ws: SampleWorkspace, inst: ComparisonInstance,
                           c3: Optional[float] = None) -> np.ndarray:
    """Lifted closed form; its sign is ``-sign(c3 (1 - c3))`` on every draw."""
    c3 = _require_c3(inst, c3)
    scale = inst.s ** 2 * inst.beta ** 2 * c3 * (1.0 - c3) / 2.0
    return -scale * psistar_sample(ws, c3) * _closed_form_core(ws, inst)


def _maxmax(ws: SampleWorkspace, s: float) -> np.ndarray:
    return np.max(math.copysign(1.0, s) * np.max(ws.F, axis=-1), axis=-1)


def limit_sample(ws: SampleWorkspace, inst: ComparisonInstance) -> np.ndarray:
    """``max_i1 sign(s) max_i2 F / sqrt(n)``: the beta -> infinity limit of ``psi``."""
    return _maxmax(ws, inst.s) / math.sqrt(inst.n)


def lifted_limit_sample(ws: SampleWorkspace, inst: ComparisonInstance,
                        c3s: float) -> np.ndarray:
    """``exp(c3s * max_i1 sign(s) max_i2 F)``, the limit of ``Z**(c3s / beta)``."""
    if not c3s > 0:
        raise ValueError(f"c3s must be positive, got {c3s}")
    return np.exp(c3s * _maxmax(ws, inst.s))


def adjusted_value(v, beta: float, s: float, c3: float, n: int):
    """Map a lifted value back to the ``psi`` scale (exact for unit-norm sets).

    ``(log(v) / (beta |s| c3) - beta |s| c3 / 2) / sqrt(n)``
    """
    v = np.asarray(v, dtype=np.float64)
    if np.any(v <= 0):
        raise ValueError("adjusted value needs v > 0")
    k = beta * abs(s) * c3
    out = (np.log(v) / k - k / 2.0) / math.sqrt(n)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# named functionals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Functional:
    """A named per-draw integrand ``fn(ws, inst) -> values``.

    ``interior`` marks integrands that are only defined for ``0 < t < 1``;
    ``needs_fields`` marks those that need the coupled/decoupled split (and
    not just the field matrix ``F``).
    """

    name: str
    fn: Callable[[SampleWorkspace, ComparisonInstance], np.ndarray] = field(compare=False)
    interior: bool = False
    needs_fields: bool = False

    def __call__(self, ws: SampleWorkspace, inst: ComparisonInstance) -> np.ndarray:
        return self.fn(ws, inst)


def functional(name: str, *, c3: Optional[float] = None, c3s: Optional[float] = None) -> Functional:
    """Look up a named integrand.

    ``c3`` overrides the instance's lifting power for the lifted functionals.
    ``c3s`` is the lifted-limit exponent; it defaults to ``c3 * beta``.
    """
    if name == "psi":
        return Functional(name, lambda ws, inst: psi_sample(ws, inst.n))
    if name == "psistar":
        return Functional(name, lambda ws, inst: psistar_sample(ws, _require_c3(inst, c3)))
    if name == "dpsi_standard":
        return Functional(name, dpsi_standard_sample, interior=True, needs_fields=True)
    if name == "dpsi_closed":
        return Functional(name, dpsi_closed_sample)
    if name == "dpsistar_standard":
        return Functional(name, lambda ws, inst: dpsistar_standard_sample(ws, inst, c3),
                          interior=True, needs_fields=True)
    if name == "dpsistar_closed":
        return Functional(name, lambda ws, inst: dpsistar_closed_sample(ws, inst, c3))
    if name == "limit":
        return Functional(name, limit_sample)
    if name == "lifted_limit":
        def fn(ws, inst):
            k = c3s if c3s is not None else _require_c3(inst, c3) * inst.beta
            return lifted_limit_sample(ws, inst, k)
        return Functional(name, fn)
    raise KeyError(f"unknown functional {name!r}; choose from {', '.join(FUNCTIONAL_NAMES)}")


FUNCTIONAL_NAMES = (
    "psi",
    "psistar",
    "dpsi_standard",
    "dpsi_closed",
    "dpsistar_standard",
    "dpsistar_closed",
    "limit",
    "lifted_limit",
)
