"""Monte Carlo evaluation and verification of bilinear Gaussian comparison functionals."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    ComparisonInstance,
    EstimatorResult,
    GaussianDraw,
    VectorSet,
    VectorSetError,
    builtin_sets,
    dump_vector_set,
    load_vector_set,
    normalize_columns,
)
from .kernel import SampleWorkspace, bilinear_fields, build_workspace, f1h  # noqa: E402
from .estimators import FUNCTIONAL_NAMES, Functional, adjusted_value, functional  # noqa: E402
from .montecarlo import (  # noqa: E402
    CurveResult,
    SamplerConfig,
    draw_gaussians,
    estimate,
    estimate_curve,
    estimate_curves,
)
from .curves import IntegrationScheme, check_sandwich, integrate_curve  # noqa: E402
from .quadrature import expect_quadrature, hermite_rule  # noqa: E402
from .tables import TABLE_PRESETS, reproduce_table  # noqa: E402
