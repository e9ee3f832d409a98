import math

import numpy as np
import pytest

from sharptrace.errors import DomainError
from sharptrace.extremal import (
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
from sharptrace.oracle import (
    extremal_boundary_norm_quadrature,
    extremal_gradient_fd_error,
    extremal_gradient_norm_quadrature,
)


def test_params_validation():
    ProblemParams(3, 1.5)
    with pytest.raises(DomainError):
        ProblemParams(3, 3.0)
    with pytest.raises(DomainError):
        ProblemParams(3, 1.0)
    with pytest.raises(DomainError):
        ProblemParams(1, 1.5)
    with pytest.raises(DomainError):
        HalfSpacePoint((0.0,), -0.1)
    with pytest.raises(DomainError):
        ExtremalParams(0.0, (0.0,))


def test_p_star():
    assert ProblemParams(3, 2.0).p_star == pytest.approx(4.0)
    assert ProblemParams(2, 1.5).p_star == pytest.approx(3.0)
    params = ProblemParams(5, 1.2)
    assert params.p_star > params.p


def test_profile_values():
    assert extremal_value(ProblemParams(4, 1.7), HalfSpacePoint((0.0, 0.0, 0.0), 0.0)) == 1.0
    assert extremal_value(ProblemParams(3, 2.0), HalfSpacePoint((0.0, 0.0), 1.0)) == pytest.approx(0.5)
    assert extremal_value(ProblemParams(4, 2.0), HalfSpacePoint((1.0, 0.0, 0.0), 0.0)) == pytest.approx(0.5)


def test_rescaled_identity_at_unit_scale():
    params = ProblemParams(3, 1.5)
    ext = ExtremalParams(1.0, (0.0, 0.0))
    for pt in (HalfSpacePoint((0.3, -0.2), 0.7), HalfSpacePoint((0.0, 0.0), 0.0)):
        assert extremal_rescaled(params, ext, pt) == pytest.approx(
            extremal_value(params, pt), rel=1e-15
        )


def test_rescaled_explicit_value():
    # 0.5^{1/2} * (0.25)^{-1/2} = sqrt(2), by direct substitution
    params = ProblemParams(3, 2.0)
    ext = ExtremalParams(0.5, (0.0, 0.0))
    val = extremal_rescaled(params, ext, HalfSpacePoint((0.0, 0.0), 0.0))
    assert val == pytest.approx(math.sqrt(2.0), rel=1e-12)


def test_rescaled_scaling_law():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(2, 6))
        p = float(rng.uniform(1.05, n - 0.05))
        params = ProblemParams(n, p)
        eps = float(rng.uniform(0.05, 5.0))
        y0 = tuple(rng.normal(size=n - 1))
        pt = HalfSpacePoint(tuple(rng.normal(size=n - 1)), float(rng.uniform(0, 3.0)))
        ext = ExtremalParams(eps, y0)
        lhs = extremal_rescaled(params, ext, pt)
        inner = HalfSpacePoint(
            tuple((c - c0) / eps for c, c0 in zip(pt.y, y0)), pt.t / eps
        )
        rhs = eps ** (-(n - p) / p) * extremal_value(params, inner)
        assert lhs == pytest.approx(rhs, rel=1e-12)


def test_gradient_at_origin():
    for n, p in ((3, 1.5), (4, 2.0), (5, 1.2)):
        params = ProblemParams(n, p)
        grad = extremal_gradient(params, HalfSpacePoint((0.0,) * (n - 1), 0.0))
        expected = np.zeros(n)
        expected[-1] = -(n - p) / (p - 1.0)
        assert np.allclose(grad, expected, atol=1e-14)


def test_gradient_explicit_value():
    # -(0, 0, 2)/4^{3/2} = (0, 0, -1/4) at (y=0, t=1) for N=3, p=2,
    # frozen from the central-difference oracle
    grad = extremal_gradient(ProblemParams(3, 2.0), HalfSpacePoint((0.0, 0.0), 1.0))
    assert np.allclose(grad, [0.0, 0.0, -0.25], atol=1e-15)
    step = 1e-6
    fd = (
        extremal_value(ProblemParams(3, 2.0), HalfSpacePoint((0.0, 0.0), 1.0 + step))
        - extremal_value(ProblemParams(3, 2.0), HalfSpacePoint((0.0, 0.0), 1.0 - step))
    ) / (2.0 * step)
    assert fd == pytest.approx(-0.25, abs=1e-9)


def test_gradient_finite_difference():
    for n, p in ((3, 1.5), (4, 2.0)):
        assert extremal_gradient_fd_error(ProblemParams(n, p), step=1e-5) <= 1e-6


def test_boundary_norm_closed_values():
    assert extremal_boundary_norm(ProblemParams(3, 2.0)) == pytest.approx(math.pi, rel=1e-13)
    assert extremal_boundary_norm(ProblemParams(5, 2.0)) == pytest.approx(
        math.pi**2 / 6.0, rel=1e-13
    )


def test_gradient_norm_closed_values():
    assert extremal_gradient_norm(ProblemParams(3, 2.0)) == pytest.approx(math.pi, rel=1e-13)
    assert extremal_gradient_norm(ProblemParams(5, 2.0)) == pytest.approx(
        math.pi**2 / 2.0, rel=1e-13
    )


def test_norms_match_quadrature():
    # tail-bounded direct integration vs the closed forms
    for n in (3, 4):
        for p in (1.3, 1.5, 2.0):
            params = ProblemParams(n, p)
            bq = extremal_boundary_norm_quadrature(params)
            gq = extremal_gradient_norm_quadrature(params)
            assert bq == pytest.approx(extremal_boundary_norm(params), rel=1e-5)
            assert gq == pytest.approx(extremal_gradient_norm(params), rel=1e-5)


def test_generic_norms_against_quadrature_tighter():
    params = ProblemParams(4, 1.5)
    assert extremal_boundary_norm_quadrature(params) == pytest.approx(
        extremal_boundary_norm(params), rel=1e-6
    )
    assert extremal_gradient_norm_quadrature(params) == pytest.approx(
        extremal_gradient_norm(params), rel=1e-5
    )


def test_kp_inverse_values():
    assert kp_inverse(ProblemParams(3, 2.0)) == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    expected = 2.0 * math.sqrt(math.pi) * (math.sqrt(math.pi) / 4.0) ** (1.0 / 3.0)
    assert kp_inverse(ProblemParams(4, 2.0)) == pytest.approx(expected, rel=1e-12)


def test_kp_inverse_ratio_identity():
    for n in range(3, 9):
        for p in (1.2, 1.5, 2.0, 2.5):
            if not (1.0 < p < n):
                continue
            params = ProblemParams(n, p)
            ratio = extremal_gradient_norm(params) / extremal_boundary_norm(params) ** (
                params.p / params.p_star
            )
            assert kp_inverse(params) == pytest.approx(ratio, rel=1e-12)


def test_kp_inverse_positive_finite():
    rng = np.random.default_rng(5)
    for n in range(2, 11):
        for _ in range(10):
            p = float(rng.uniform(1.0 + 1e-6, n - 1e-6))
            val = kp_inverse(ProblemParams(n, p))
            assert math.isfinite(val) and val > 0.0


def test_dimension_mismatch_rejected():
    params = ProblemParams(3, 1.5)
    with pytest.raises(DomainError):
        extremal_value(params, HalfSpacePoint((0.0,), 0.0))
