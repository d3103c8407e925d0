"""confdim: combinatorial modulus on hyperbolic fillings of sampled metric
spaces, with critical-exponent (conformal Assouad dimension) estimation,
doubling-measure construction, and visual quasi-metrics."""

from ._errors import *  # noqa: F401,F403
from .spaces import (  # noqa: F401
    MetricSpace,
    NetHierarchy,
    SpaceSpec,
    build_nets,
    covering_number,
    estimate_assouad,
    load_space_spec,
    make_space,
    normalize_diameter,
)

__version__ = "0.1.0"
