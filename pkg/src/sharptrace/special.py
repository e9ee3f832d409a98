"""Special-function primitives: Gamma, sphere areas, half-line beta integrals.

Every closed-form constant in this package reduces to ratios of Gamma
values.  Those ratios are computed in log space (``exp(lgamma(a) -
lgamma(b))``) because the individual Gamma values overflow already for
moderate dimensions while the ratios stay tame.

The three building blocks:

    gamma(x)                      Gamma(x), x > 0
    sphere_volume(N)              |S^{N-1}| = 2 pi^{N/2} / Gamma(N/2)
    half_line_beta_integral(a,b)  int_0^inf r^a (1+r^2)^{-b} dr
                                  = Gamma((a+1)/2) Gamma((2b-a-1)/2) / (2 Gamma(b))
"""

from __future__ import annotations

import math

from .errors import DivergentIntegralError, DomainError

__all__ = [
    "gamma",
    "log_gamma",
    "gamma_ratio",
    "sphere_volume",
    "half_line_beta_integral",
]


def log_gamma(x: float) -> float:
    """log Gamma(x) for x > 0."""
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"log_gamma requires x > 0, got x={x}")
    return math.lgamma(x)


def gamma(x: float) -> float:
    """Gamma(x) for x > 0, via log-Gamma and exponentiation."""
    return math.exp(log_gamma(x))


def gamma_ratio(numerators, denominators) -> float:
    """prod Gamma(a_i) / prod Gamma(b_j), evaluated in log space.

    Accepts scalars or iterables.  This is the overflow-safe workhorse for
    every coefficient formula in the package.
    """
    if isinstance(numerators, (int, float)):
        numerators = (numerators,)
    if isinstance(denominators, (int, float)):
        denominators = (denominators,)
    s = sum(log_gamma(a) for a in numerators)
    s -= sum(log_gamma(b) for b in denominators)
    return math.exp(s)


def sphere_volume(N: int) -> float:
    """Surface measure of the unit sphere S^{N-1} in R^N.

    omega_{N-1} = 2 pi^{N/2} / Gamma(N/2).  For N=1 this is 2 (the two
    points of S^0), for N=2 the circle length 2 pi, for N=3 the area 4 pi.
    """
    if N < 1 or int(N) != N:
        raise DomainError(f"sphere_volume requires integer N >= 1, got N={N}")
    return 2.0 * math.pi ** (N / 2.0) / gamma(N / 2.0)


def half_line_beta_integral(alpha: float, beta: float) -> float:
    """int_0^inf r^alpha / (1+r^2)^beta dr, convergent iff 2*beta - alpha > 1.

    Closed form: Gamma((alpha+1)/2) * Gamma((2*beta-alpha-1)/2) / (2*Gamma(beta)).
    """
    if alpha < 0.0:
        raise DomainError(f"half_line_beta_integral requires alpha >= 0, got {alpha}")
    if 2.0 * beta - alpha <= 1.0:
        raise DivergentIntegralError(
            f"half_line_beta_integral diverges: need 2*beta - alpha > 1, "
            f"got alpha={alpha}, beta={beta}"
        )
    return 0.5 * gamma_ratio(((alpha + 1.0) / 2.0, (2.0 * beta - alpha - 1.0) / 2.0), beta)
