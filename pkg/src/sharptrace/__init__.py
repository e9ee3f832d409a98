"""Sharp Sobolev trace constants and boundary-concentration analysis.

The package computes the sharp constant of the critical half-space trace
inequality in closed form, expands the Rayleigh quotient of boundary-
concentrating test functions on curved model domains (with an adaptive
quadrature oracle checking every coefficient), classifies "good" boundary
points where concentration beats the flat constant, and solves the
associated Steklov-type eigenvalue and optimal-hole problems on 2-D
triangle meshes.
"""

__version__ = "0.1.0"

from .expansion import (
    BoundaryGeometry,
    ExpansionCoefficients,
    RegimeLabel,
    classify_regime,
    coefficients,
    constant_testfunction_bound,
    first_order_coefficient,
    is_good_point,
    rayleigh_expansion,
    second_order_E,
    simplified_coefficient_ratios,
)
from .extremal import (
    ExtremalParams,
    HalfSpacePoint,
    ProblemParams,
    extremal_boundary_norm,
    extremal_gradient,
    extremal_gradient_norm,
    extremal_rescaled,
    extremal_value,
    kp_inverse,
)
from .special import gamma, half_line_beta_integral, sphere_volume

__all__ = [
    "__version__",
    "BoundaryGeometry",
    "ExpansionCoefficients",
    "ExtremalParams",
    "HalfSpacePoint",
    "ProblemParams",
    "RegimeLabel",
    "classify_regime",
    "coefficients",
    "constant_testfunction_bound",
    "extremal_boundary_norm",
    "extremal_gradient",
    "extremal_gradient_norm",
    "extremal_rescaled",
    "extremal_value",
    "first_order_coefficient",
    "gamma",
    "half_line_beta_integral",
    "is_good_point",
    "kp_inverse",
    "rayleigh_expansion",
    "second_order_E",
    "simplified_coefficient_ratios",
    "sphere_volume",
]
