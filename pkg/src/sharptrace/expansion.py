"""Boundary-concentration expansion of the trace Rayleigh quotient.

Concentrating the rescaled extremal at a boundary point x0 (curvatures
lambda_1..lambda_{N-1}, potential value h0, concentration scale eps) makes
the three energy integrals blow up at known rates with known coefficients:

    gradient energy   A1 eps^{-e} + A2 eps^{1-e} + A3 eps^{2-e} + ...
    potential mass    D eps^{-(N-p^2)/(p-1)} + ...
    boundary energy   B1 eps^{-1-e} + B2 eps^{-e} + B3 eps^{1-e} + ...

with e = (N-p)/(p-1).  Combining them, the normalized quotient expands as

    1 - (N-p)(p-1)/(N-2p+1) H(x0) eps + [D/A1] eps^p + E eps^2 + remainder

in the generic regime, with logarithmic substitutes on the threshold
exponents.  The case structure in p is intricate; `classify_regime` owns
it, and every threshold equality (p = (N+3)/4, (N+2)/3, (N+1)/2, sqrt(N),
(-1+sqrt(4N+5))/2) is detected with an absolute tolerance of 1e-12 so the
logarithmic branches are reached deliberately, never by round-off.

The "good point" test turns the expansion into a verdict: at a one-sided
boundary point the quotient dips below the sharp half-space constant
whenever H > 0, or H = 0 and the listed curvature/potential conditions
hold.

A dual route exists for the coefficient ratios A2/A1, A3/A1, B2/B1,
B3/B1: Gamma-recurrence algebra collapses each to a rational expression in
(N, p) and the curvature sums.  `simplified_coefficient_ratios` exposes
those closed forms so tests can pin the Gamma-ratio evaluation against
them to near machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import DomainError, MethodRangeError, RegimeError
from .extremal import ProblemParams
from .special import gamma_ratio, sphere_volume

__all__ = [
    "BoundaryGeometry",
    "RegimeLabel",
    "ExpansionCoefficients",
    "classify_regime",
    "coefficients",
    "simplified_coefficient_ratios",
    "first_order_coefficient",
    "second_order_E",
    "rayleigh_expansion",
    "is_good_point",
    "constant_testfunction_bound",
]

# Threshold equalities in p are measure-zero branches; detect them with an
# absolute tolerance so they are only reached when asked for explicitly.
_P_TOL = 1e-12


@dataclass(frozen=True)
class BoundaryGeometry:
    """Local boundary data at the concentration point.

    lambdas    principal curvatures (length N-1, units 1/length)
    h0         potential value at the point
    one_sided  whether the domain lies locally on one side of the
               tangent plane (an input fact about the domain, not
               derivable from the curvatures alone)
    """

    lambdas: tuple
    h0: float
    one_sided: bool

    def __post_init__(self):
        object.__setattr__(self, "lambdas", tuple(float(c) for c in self.lambdas))

    @property
    def curvature_sum(self) -> float:
        return sum(self.lambdas)

    @property
    def curvature_square_sum(self) -> float:
        return sum(c * c for c in self.lambdas)

    @property
    def curvature_cross_sum(self) -> float:
        # sum_{i<j} l_i l_j; the identity S1^2 = S2 + 2*Scross is exact here
        return 0.5 * (self.curvature_sum**2 - self.curvature_square_sum)

    @property
    def mean_curvature(self) -> float:
        return self.curvature_sum / len(self.lambdas)


def _check_geometry(params: ProblemParams, geom: BoundaryGeometry) -> None:
    if len(geom.lambdas) != params.N - 1:
        raise DomainError(
            f"{len(geom.lambdas)} curvatures given, expected N-1={params.N - 1}"
        )


@dataclass(frozen=True)
class RegimeLabel:
    """Which branch of each estimate is active at (N, p).

    The combined label also carries the remainder order of the quotient
    expansion as metadata: the remainder is O(eps^remainder_exponent),
    times log(1/eps) when remainder_log is set.  Remainders are reported,
    never added numerically.
    """

    gradient_regime: str
    mass_regime: str
    boundary_regime: str
    combined_regime: str
    remainder_exponent: float
    remainder_log: bool


def _is_eq(p: float, threshold: float) -> bool:
    return abs(p - threshold) <= _P_TOL


def classify_regime(params: ProblemParams) -> RegimeLabel:
    """Resolve the active branch of each estimate, with exact thresholds."""
    N, p = params.N, params.p
    t_grad = (N + 3) / 4.0
    t_bdry = (N + 2) / 3.0
    t_crit = (N + 1) / 2.0
    t_mass = math.sqrt(N)
    t_mass_sub = (-1.0 + math.sqrt(4.0 * N + 5.0)) / 2.0
    e_grad = (N - p) / (p - 1.0)

    if _is_eq(p, t_crit):
        gradient = "leading_log"
    elif p > t_crit:
        gradient = "leading_only"
    elif _is_eq(p, t_grad):
        gradient = "cubic_log"
    elif p < t_grad:
        gradient = "cubic_remainder"
    else:
        gradient = "second_order"

    if _is_eq(p, t_mass):
        mass = "log_only"
    elif p > t_mass:
        mass = "bounded"
    elif _is_eq(p, t_mass_sub):
        mass = "decay_log_correction"
    elif p < t_mass_sub:
        mass = "decay_with_correction"
    else:
        mass = "decay_bounded_correction"

    if _is_eq(p, t_crit):
        boundary = "leading_log"
    elif p > t_crit:
        boundary = "leading_only"
    elif _is_eq(p, t_bdry):
        boundary = "cubic_log"
    elif p < t_bdry:
        boundary = "cubic_remainder"
    else:
        boundary = "second_order"

    if _is_eq(p, t_crit):
        combined, rem, rem_log = "critical_log", 1.0, True
    elif p > t_crit:
        combined, rem, rem_log = "supercritical", e_grad, False
    elif N <= 4:
        if _is_eq(p, t_mass):
            combined, rem, rem_log = "first_only_log", e_grad, True
        elif p < t_bdry and not _is_eq(p, t_bdry):
            combined, rem, rem_log = "first_mass_second", 1.0 + p, False
        elif p < t_mass:
            combined, rem, rem_log = "first_mass", e_grad, False
        else:
            combined, rem, rem_log = "first_only", e_grad, False
    else:
        if p < t_mass and not _is_eq(p, t_mass):
            combined = "first_second_mass"
            rem, rem_log = (2.0, False) if p <= 2.0 else (p, False)
        elif p < t_bdry and not _is_eq(p, t_bdry):
            combined, rem, rem_log = "first_second", 2.0, False
        else:
            combined, rem, rem_log = "first_only", 2.0, False

    return RegimeLabel(gradient, mass, boundary, combined, rem, rem_log)


@dataclass(frozen=True)
class ExpansionCoefficients:
    """The full coefficient record for one (params, geometry) pair.

    A field is None when the active regime excludes it.  B4 carries only
    the explicit part of its bracket (the expansion's own bookkeeping puts
    an o(1) inside it), so fits should treat B4 as approximate.
    """

    A1: float
    A2: Optional[float]
    A2prime: Optional[float]
    A3: Optional[float]
    B1: float
    B2: float
    B3: Optional[float]
    B4: Optional[float]
    D: Optional[float]
    E: Optional[float]
    cNp: float


def coefficients(params: ProblemParams, geom: BoundaryGeometry) -> ExpansionCoefficients:
    """Evaluate every coefficient active at (N, p), via the Gamma layer."""
    _check_geometry(params, geom)
    N, p = params.N, params.p
    regime = classify_regime(params)
    omega = sphere_volume(N - 1)
    S1 = geom.curvature_sum
    S2 = geom.curvature_square_sum
    X = geom.curvature_cross_sum
    H = geom.mean_curvature
    e2 = 2.0 * (p - 1.0)
    g_a = (N - 1) / 2.0
    g_b = (N - 1) / e2
    g_c = (N - 2.0 * p + 1.0) / e2
    g_g = p * (N - 1) / e2
    slope = (N - p) / (p - 1.0)

    A1 = 0.5 * slope ** (p - 1.0) * omega * gamma_ratio((g_a, g_b), g_g)
    B1 = 0.5 * omega * gamma_ratio((g_a, g_b), g_g)
    B2 = -(omega * S1 / 8.0) * (p * (N - 1) / (p - 1.0)) * gamma_ratio(
        (g_a, g_b), 1.0 + g_g
    )
    cNp = -(p * (N - 1) / (4.0 * (p - 1.0))) * (p * (N - 1) / e2 + 1.0)

    subcritical = p < (N + 1) / 2.0 and not _is_eq(p, (N + 1) / 2.0)
    critical = _is_eq(p, (N + 1) / 2.0)

    A2 = A3 = B3 = None
    if subcritical:
        A2 = -(H * omega / 4.0) * slope**p * gamma_ratio(((N + 1) / 2.0, g_c), g_g)
        A3 = (
            (omega / 16.0)
            * slope**p
            * gamma_ratio((g_a, g_c), g_g)
            * (1.5 * S2 + X)
        )
        B3 = (
            (omega / 32.0)
            * gamma_ratio((g_a, g_c), g_g)
            * (
                (1.0 + 3.0 * (N - 2.0 * p + 1.0) / (p - 1.0)) * S2
                + (-2.0 + 2.0 * (N - 2.0 * p + 1.0) / (p - 1.0)) * X
            )
        )

    A2prime = B4 = None
    if critical:
        A2prime = -(H * omega / 2.0) * slope**p
        B4 = (omega / 2.0) * (
            (1.0 / (N - 1) - p * (N - 1) / (4.0 * (p - 1.0))) * S2
            - (p * (N - 1) / e2) * X
        )

    D = None
    if regime.mass_regime in (
        "decay_with_correction",
        "decay_log_correction",
        "decay_bounded_correction",
    ):
        D = (
            geom.h0
            * ((p - 1.0) / (N - p * p))
            * (omega / 2.0)
            * gamma_ratio((g_a, (N - p * p + p - 1.0) / e2), p * (N - p) / e2)
        )

    E = None
    if subcritical and p < (N + 2) / 3.0 and not _is_eq(p, (N + 2) / 3.0):
        E = _second_order_value(N, p, S2, X)

    return ExpansionCoefficients(A1, A2, A2prime, A3, B1, B2, B3, B4, D, E, cNp)


def simplified_coefficient_ratios(params: ProblemParams, geom: BoundaryGeometry) -> dict:
    """Rational closed forms of A2/A1, A3/A1, B2/B1, B3/B1.

    Obtained from the coefficient formulas by the Gamma recurrence
    Gamma(z+1) = z Gamma(z); these are the independent check on the
    Gamma-ratio evaluation in `coefficients`.
    """
    _check_geometry(params, geom)
    N, p = params.N, params.p
    if not (p < (N + 1) / 2.0 and not _is_eq(p, (N + 1) / 2.0)):
        raise RegimeError(
            f"coefficient ratios need p < (N+1)/2, got p={p}, N={N}"
        )
    S1 = geom.curvature_sum
    S2 = geom.curvature_square_sum
    X = geom.curvature_cross_sum
    c = N - 2.0 * p + 1.0
    return {
        "A2_over_A1": -0.5 * (N - p) / c * S1,
        "A3_over_A1": 0.25 * (N - p) / c * (1.5 * S2 + X),
        "B2_over_B1": -0.5 * S1,
        "B3_over_B1": ((3.0 * N - 5.0 * p + 2.0) * S2 + 2.0 * (N - 3.0 * p + 2.0) * X)
        / (8.0 * c),
    }


def first_order_coefficient(params: ProblemParams, geom: BoundaryGeometry) -> float:
    """Coefficient of eps in the normalized quotient: -(N-p)(p-1)/(N-2p+1) H."""
    _check_geometry(params, geom)
    N, p = params.N, params.p
    if p >= (N + 1) / 2.0 - _P_TOL:
        raise RegimeError(
            f"first-order coefficient requires p < (N+1)/2, got p={p}, N={N}"
        )
    return -(N - p) * (p - 1.0) / (N - 2.0 * p + 1.0) * geom.mean_curvature


def _second_order_value(N: int, p: float, S2: float, X: float) -> float:
    return (
        (N - p)
        * (p - 1.0)
        / (4.0 * (N - 1) * (N - 2.0 * p + 1.0))
        * ((p + N - 2.0) / (N - 1) * S2 - 2.0 * X)
    )


def second_order_E(params: ProblemParams, geom: BoundaryGeometry) -> float:
    """Coefficient of eps^2 in the branch p < (N+2)/3.

    E = (N-p)(p-1)/(4(N-1)(N-2p+1)) * [ (p+N-2)/(N-1) sum l_i^2
                                        - 2 sum_{i<j} l_i l_j ].
    """
    _check_geometry(params, geom)
    N, p = params.N, params.p
    if not (p < (N + 2) / 3.0 and not _is_eq(p, (N + 2) / 3.0)):
        raise RegimeError(
            f"second-order coefficient requires p < (N+2)/3, got p={p}, N={N}"
        )
    return _second_order_value(N, p, geom.curvature_square_sum, geom.curvature_cross_sum)


def rayleigh_expansion(
    params: ProblemParams, geom: BoundaryGeometry, epsilon: float
) -> float:
    """Truncated prediction of the normalized quotient at scale eps.

    Sums exactly the terms the active regime states with explicit
    constants: 1 + first_order*eps, plus (D/A1) eps^p and/or E eps^2, or
    the logarithmic term -((N-1)/2) H eps log(1/eps) on the critical
    threshold.  The remainder order lives in `classify_regime` metadata
    and is never added numerically.
    """
    _check_geometry(params, geom)
    if epsilon <= 0.0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    N, p = params.N, params.p
    regime = classify_regime(params)
    label = regime.combined_regime

    if label == "supercritical":
        return 1.0
    if label == "critical_log":
        return 1.0 - 0.5 * (N - 1) * geom.mean_curvature * epsilon * math.log(
            1.0 / epsilon
        )

    value = 1.0 + first_order_coefficient(params, geom) * epsilon
    if "mass" in label:
        coeffs = coefficients(params, geom)
        value += coeffs.D / coeffs.A1 * epsilon**p
    if "second" in label:
        value += (
            _second_order_value(
                N, p, geom.curvature_square_sum, geom.curvature_cross_sum
            )
            * epsilon**2
        )
    if label in ("first_only", "first_only_log", "first_mass", "first_mass_second",
                 "first_second", "first_second_mass"):
        return value
    raise RegimeError(f"unsupported combined regime {label!r}")


def is_good_point(params: ProblemParams, geom: BoundaryGeometry):
    """Classify the boundary point; returns (verdict, triggering clause).

    A one-sided point is good when H > 0, or when H = 0 and the
    dimension/exponent-dependent curvature-potential condition holds.  Only
    meaningful in the method range 1 < p < (N+1)/2.
    """
    _check_geometry(params, geom)
    N, p = params.N, params.p
    if p >= (N + 1) / 2.0 - _P_TOL:
        raise MethodRangeError(
            f"good-point test is limited to 1 < p < (N+1)/2, got p={p}, N={N}"
        )

    if not geom.one_sided:
        return False, "domain does not lie on one side of the tangent plane"

    H = geom.mean_curvature
    scale = max(1.0, max(abs(c) for c in geom.lambdas) if geom.lambdas else 1.0)
    if H > _P_TOL * scale:
        return True, "positive mean curvature"
    if H < -_P_TOL * scale:
        return False, "negative mean curvature"

    S2 = geom.curvature_square_sum
    X = geom.curvature_cross_sum
    h0 = geom.h0
    if N <= 4:
        if p < math.sqrt(N) - _P_TOL and h0 < 0.0:
            return True, "flat mean curvature with negative potential (N <= 4, p < sqrt(N))"
        return False, "flat mean curvature criterion not met (N <= 4)"
    if _is_eq(p, 2.0):
        lhs = N / (N - 1.0) * S2 - 2.0 * X
        rhs = -8.0 * (N - 1) * h0 / ((N - 2.0) * (N - 4.0))
        if lhs < rhs:
            return True, "flat mean curvature with curvature-potential balance (p = 2)"
        return False, "flat mean curvature criterion not met (p = 2)"
    if p < 2.0:
        if h0 < 0.0:
            return True, "flat mean curvature with negative potential (N >= 5, p < 2)"
        return False, "flat mean curvature criterion not met (N >= 5, p < 2)"
    if p < (N + 2) / 3.0 - _P_TOL:
        if (p + N - 2.0) / (N - 1.0) * S2 - 2.0 * X < 0.0:
            return True, "flat mean curvature with negative second-order bracket (2 < p < (N+2)/3)"
        return False, "flat mean curvature criterion not met (2 < p < (N+2)/3)"
    return False, "flat mean curvature case has no criterion for this exponent"


def constant_testfunction_bound(
    volume: float, boundary_area: float, h_integral: float, params: ProblemParams
) -> float:
    """Quotient of the constant test function: h_integral / area^{p/p_*}.

    With h = 1 this is |Omega| / |bdry Omega|^{p/p_*}, an upper bound for
    the trace eigenvalue since the constant function is admissible.
    """
    if volume <= 0.0 or boundary_area <= 0.0:
        raise DomainError("volume and boundary area must be positive")
    return h_integral / boundary_area ** (params.p / params.p_star)
