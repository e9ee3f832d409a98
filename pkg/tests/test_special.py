import math

import numpy as np
import pytest
from scipy import integrate as scipy_integrate

from sharptrace.errors import DivergentIntegralError, DomainError
from sharptrace.special import (
    gamma,
    gamma_ratio,
    half_line_beta_integral,
    log_gamma,
    sphere_volume,
)


def quad_beta_integral(alpha, beta):
    """Independent oracle: adaptive quadrature of r^alpha / (1+r^2)^beta."""
    val, err = scipy_integrate.quad(
        lambda r: r**alpha / (1.0 + r * r) ** beta,
        0.0,
        np.inf,
        epsabs=1e-13,
        epsrel=1e-12,
        limit=400,
    )
    return val


def test_gamma_known_values():
    assert gamma(1.0) == pytest.approx(1.0, rel=1e-14)
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    assert gamma(5.0) == pytest.approx(24.0, rel=1e-14)


def test_gamma_domain_errors():
    for bad in (0.0, -1.0, -0.5, float("nan")):
        with pytest.raises(DomainError):
            gamma(bad)
    with pytest.raises(DomainError):
        log_gamma(-2.0)


def test_gamma_recurrence():
    xs = np.linspace(0.05, 40.0, 173)
    for x in xs:
        assert gamma(x + 1.0) == pytest.approx(x * gamma(x), rel=1e-12)


def test_gamma_duplication_identity():
    zs = np.linspace(0.05, 10.0, 97)
    for z in zs:
        lhs = gamma(z) * gamma(z + 0.5)
        rhs = 2.0 ** (1.0 - 2.0 * z) * math.sqrt(math.pi) * gamma(2.0 * z)
        assert abs(lhs - rhs) / gamma(2.0 * z) <= 1e-10


def test_gamma_ratio_matches_direct():
    assert gamma_ratio(3.0, 2.0) == pytest.approx(2.0, rel=1e-14)
    assert gamma_ratio((2.5, 3.0), (2.0, 3.5)) == pytest.approx(
        gamma(2.5) * gamma(3.0) / (gamma(2.0) * gamma(3.5)), rel=1e-13
    )


def test_gamma_ratio_survives_scales_that_overflow():
    # each factor overflows a float; the ratio must not
    big = 400.0
    val = gamma_ratio(big, big + 0.5)
    assert math.isfinite(val) and val > 0.0


def test_sphere_volume_values():
    assert sphere_volume(2) == pytest.approx(2.0 * math.pi, rel=1e-14)
    assert sphere_volume(3) == pytest.approx(4.0 * math.pi, rel=1e-14)
    assert sphere_volume(1) == pytest.approx(2.0, rel=1e-14)


def test_sphere_volume_domain_error():
    with pytest.raises(DomainError):
        sphere_volume(0)
    with pytest.raises(DomainError):
        sphere_volume(2.5)


def test_beta_integral_closed_values():
    assert half_line_beta_integral(0.0, 1.0) == pytest.approx(math.pi / 2.0, rel=1e-13)
    assert half_line_beta_integral(1.0, 2.0) == pytest.approx(0.5, rel=1e-13)
    # frozen from the quadrature oracle (arctan-family integral)
    assert half_line_beta_integral(2.0, 2.0) == pytest.approx(math.pi / 4.0, rel=1e-10)
    assert half_line_beta_integral(2.0, 2.0) == pytest.approx(
        quad_beta_integral(2.0, 2.0), rel=1e-10
    )


def test_beta_integral_divergence_errors():
    with pytest.raises(DivergentIntegralError):
        half_line_beta_integral(1.0, 1.0)
    with pytest.raises(DivergentIntegralError):
        half_line_beta_integral(3.0, 2.0)
    with pytest.raises(DomainError):
        half_line_beta_integral(-0.5, 2.0)


def test_beta_integral_vs_quadrature_grid():
    rng = np.random.default_rng(7)
    for _ in range(20):
        alpha = rng.uniform(0.0, 6.0)
        margin = rng.uniform(0.1, 19.0)
        beta = (alpha + 1.0 + margin) / 2.0
        closed = half_line_beta_integral(alpha, beta)
        assert closed == pytest.approx(quad_beta_integral(alpha, beta), rel=1e-8)
