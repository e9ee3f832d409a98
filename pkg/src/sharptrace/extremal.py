"""The half-space extremal family and the sharp trace constant.

On the upper half-space {(y, t) : y in R^{N-1}, t >= 0} the profile

    U(y, t) = [(t+1)^2 + |y|^2]^{-(N-p)/(2(p-1))}

minimizes the trace quotient int |grad u|^p / (int_boundary |u|^{p_*})^{p/p_*}
with the critical exponent p_* = p(N-1)/(N-p).  Its dilation/translation
orbit is

    U_{eps,y0}(y, t) = eps^{(N-p)/(p(p-1))} [(t+eps)^2 + |y-y0|^2]^{-(N-p)/(2(p-1))}
                     = eps^{-(N-p)/p} U((y-y0)/eps, t/eps).

Both norms of U and the resulting sharp constant are Gamma-ratio closed
forms; they are evaluated here through the overflow-safe log-Gamma layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .special import gamma_ratio

__all__ = [
    "ProblemParams",
    "HalfSpacePoint",
    "ExtremalParams",
    "extremal_value",
    "extremal_rescaled",
    "extremal_gradient",
    "extremal_boundary_norm",
    "extremal_gradient_norm",
    "kp_inverse",
]


@dataclass(frozen=True)
class ProblemParams:
    """Dimension N and exponent p with 1 < p < N."""

    N: int
    p: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise DomainError(f"N must be an integer >= 2, got {self.N}")
        if not (1.0 < self.p < self.N):
            raise DomainError(f"need 1 < p < N, got p={self.p}, N={self.N}")

    @property
    def p_star(self) -> float:
        """Critical boundary exponent p(N-1)/(N-p); always exceeds p."""
        return self.p * (self.N - 1) / (self.N - self.p)

    @property
    def decay_exponent(self) -> float:
        """(N-p)/(2(p-1)), the power governing the extremal's decay."""
        return (self.N - self.p) / (2.0 * (self.p - 1.0))


@dataclass(frozen=True)
class HalfSpacePoint:
    """Point (y, t) with tangential y in R^{N-1} and normal t >= 0."""

    y: tuple
    t: float

    def __post_init__(self):
        if self.t < 0.0:
            raise DomainError(f"normal coordinate must satisfy t >= 0, got t={self.t}")
        object.__setattr__(self, "y", tuple(float(c) for c in self.y))


@dataclass(frozen=True)
class ExtremalParams:
    """Concentration scale eps > 0 and boundary center y0."""

    epsilon: float
    y0: tuple

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")
        object.__setattr__(self, "y0", tuple(float(c) for c in self.y0))


def _check_point(params: ProblemParams, pt: HalfSpacePoint) -> None:
    if len(pt.y) != params.N - 1:
        raise DomainError(
            f"tangential coordinate has length {len(pt.y)}, expected N-1={params.N - 1}"
        )


def extremal_value(params: ProblemParams, pt: HalfSpacePoint) -> float:
    """U(y, t) = [(t+1)^2 + |y|^2]^{-(N-p)/(2(p-1))}."""
    _check_point(params, pt)
    d2 = (pt.t + 1.0) ** 2 + sum(c * c for c in pt.y)
    return d2 ** (-params.decay_exponent)


def extremal_rescaled(
    params: ProblemParams, extremal: ExtremalParams, pt: HalfSpacePoint
) -> float:
    """The concentrated profile U_{eps,y0} at (y, t).

    Equals eps^{-(N-p)/p} * U((y-y0)/eps, t/eps) by exact scaling.
    """
    _check_point(params, pt)
    if len(extremal.y0) != params.N - 1:
        raise DomainError("y0 has wrong length for this dimension")
    eps = extremal.epsilon
    d2 = (pt.t + eps) ** 2 + sum((c - c0) ** 2 for c, c0 in zip(pt.y, extremal.y0))
    exponent = (params.N - params.p) / (params.p * (params.p - 1.0))
    return eps**exponent * d2 ** (-params.decay_exponent)


def extremal_gradient(params: ProblemParams, pt: HalfSpacePoint) -> np.ndarray:
    """grad U = -(N-p)/(p-1) * (y, t+1) / [(t+1)^2 + |y|^2]^{(N-p)/(2(p-1)) + 1}."""
    _check_point(params, pt)
    d2 = (pt.t + 1.0) ** 2 + sum(c * c for c in pt.y)
    scale = -(params.N - params.p) / (params.p - 1.0) * d2 ** (-params.decay_exponent - 1.0)
    vec = np.append(np.asarray(pt.y, dtype=float), pt.t + 1.0)
    return scale * vec


def extremal_boundary_norm(params: ProblemParams) -> float:
    """int_{R^{N-1}} U(y, 0)^{p_*} dy, in closed form.

    Equals pi^{(N-1)/2} Gamma((N-1)/(2(p-1))) / Gamma(p(N-1)/(2(p-1))).
    """
    N, p = params.N, params.p
    return math.pi ** ((N - 1) / 2.0) * gamma_ratio(
        (N - 1) / (2.0 * (p - 1.0)), p * (N - 1) / (2.0 * (p - 1.0))
    )


def extremal_gradient_norm(params: ProblemParams) -> float:
    """int over the half-space of |grad U|^p, in closed form.

    Equals ((N-p)/(p-1))^{p-1} pi^{(N-1)/2}
    Gamma((N-1)/(2(p-1))) / Gamma(p(N-1)/(2(p-1))).
    """
    N, p = params.N, params.p
    return ((N - p) / (p - 1.0)) ** (p - 1.0) * extremal_boundary_norm(params)


def kp_inverse(params: ProblemParams) -> float:
    """The sharp half-space trace constant K_p^{-1}.

    K_p^{-1} = ((N-p)/(p-1))^{p-1} * pi^{(p-1)/2}
               * [Gamma((N-1)/(2(p-1))) / Gamma(p(N-1)/(2(p-1)))]^{(p-1)/(N-1)}

    and identically equals extremal_gradient_norm / extremal_boundary_norm^{p/p_*}.
    """
    N, p = params.N, params.p
    ratio = gamma_ratio((N - 1) / (2.0 * (p - 1.0)), p * (N - 1) / (2.0 * (p - 1.0)))
    return (
        ((N - p) / (p - 1.0)) ** (p - 1.0)
        * math.pi ** ((p - 1.0) / 2.0)
        * ratio ** ((p - 1.0) / (N - 1))
    )
