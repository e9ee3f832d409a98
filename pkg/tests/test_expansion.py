import math

import numpy as np
import pytest

from sharptrace.errors import DomainError, MethodRangeError, RegimeError
from sharptrace.expansion import (
    BoundaryGeometry,
    classify_regime,
    coefficients,
    constant_testfunction_bound,
    first_order_coefficient,
    is_good_point,
    rayleigh_expansion,
    second_order_E,
    simplified_coefficient_ratios,
)
from sharptrace.extremal import ProblemParams

FLAT2 = BoundaryGeometry((0.0, 0.0), 0.0, True)


def geom(lambdas, h0=0.0, one_sided=True):
    return BoundaryGeometry(tuple(lambdas), h0, one_sided)


# --------------------------------------------------------------------------
# regimes
# --------------------------------------------------------------------------

def test_regime_examples():
    assert classify_regime(ProblemParams(5, 3.0)).combined_regime == "critical_log"
    assert classify_regime(ProblemParams(5, 2.0)).combined_regime == "first_second_mass"
    assert classify_regime(ProblemParams(3, 2.5)).combined_regime == "supercritical"


def test_regime_threshold_equalities_map_to_log_branches():
    # p exactly on each threshold lands in the logarithmic case
    assert classify_regime(ProblemParams(5, 2.0)).gradient_regime == "cubic_log"  # (N+3)/4
    assert classify_regime(ProblemParams(7, 3.0)).boundary_regime == "cubic_log"  # (N+2)/3
    assert classify_regime(ProblemParams(5, 3.0)).gradient_regime == "leading_log"
    assert classify_regime(ProblemParams(4, 2.0)).mass_regime == "log_only"  # sqrt(N)
    n = 5
    r_n = (-1.0 + math.sqrt(4.0 * n + 5.0)) / 2.0
    assert classify_regime(ProblemParams(n, r_n)).mass_regime == "decay_log_correction"


def test_regime_mass_cases():
    assert classify_regime(ProblemParams(3, 1.8)).mass_regime == "bounded"  # p > sqrt(3)
    assert classify_regime(ProblemParams(3, 1.5)).mass_regime == "decay_with_correction"
    assert classify_regime(ProblemParams(5, 2.3)).mass_regime == "decay_bounded_correction"


def test_regime_every_branch_is_assigned():
    rng = np.random.default_rng(2)
    for _ in range(300):
        n = int(rng.integers(2, 9))
        p = float(rng.uniform(1.0 + 1e-4, n - 1e-4))
        label = classify_regime(ProblemParams(n, p))
        assert label.gradient_regime in {
            "cubic_remainder", "cubic_log", "second_order", "leading_log", "leading_only"
        }
        assert label.mass_regime in {
            "decay_with_correction", "decay_log_correction",
            "decay_bounded_correction", "log_only", "bounded",
        }
        assert label.boundary_regime in {
            "cubic_remainder", "cubic_log", "second_order", "leading_log", "leading_only"
        }
        assert label.combined_regime in {
            "supercritical", "critical_log", "first_mass_second", "first_mass",
            "first_only_log", "first_only", "first_second_mass", "first_second",
        }
        assert label.remainder_exponent > 0.0


# --------------------------------------------------------------------------
# coefficients
# --------------------------------------------------------------------------

def test_coefficient_ratio_examples():
    params = ProblemParams(5, 2.0)
    c = coefficients(params, geom((1.0, 1.0, 1.0, 1.0)))
    assert c.A2 / c.A1 == pytest.approx(-3.0, rel=1e-12)
    assert c.B2 / c.B1 == pytest.approx(-2.0, rel=1e-12)


def test_mass_coefficient_sign_follows_potential():
    c = coefficients(ProblemParams(5, 1.5), geom((0.0,) * 4, h0=-1.0))
    assert c.D is not None and c.D < 0.0
    c = coefficients(ProblemParams(5, 1.5), geom((0.0,) * 4, h0=2.0))
    assert c.D > 0.0


def test_mass_coefficient_p2_branch_value():
    # for p = 2 the mass-to-gradient ratio collapses to 2 h0 / ((N-3)(N-4))
    for n in (5, 6, 8):
        params = ProblemParams(n, 2.0)
        c = coefficients(params, geom((0.0,) * (n - 1), h0=1.3))
        assert c.D / c.A1 == pytest.approx(
            2.0 * 1.3 / ((n - 3.0) * (n - 4.0)), rel=1e-11
        )


def test_positivity_invariants():
    rng = np.random.default_rng(4)
    for _ in range(50):
        n = int(rng.integers(2, 9))
        p = float(rng.uniform(1.05, min(n - 0.05, (n + 1) / 2.0 - 0.05)))
        lams = tuple(rng.normal(size=n - 1))
        c = coefficients(ProblemParams(n, p), geom(lams, h0=rng.normal()))
        assert c.A1 > 0.0
        assert c.B1 > 0.0


def test_absent_coefficients_out_of_regime():
    # supercritical p: no curvature corrections, no mass blow-up
    c = coefficients(ProblemParams(3, 2.5), geom((1.0, 2.0), h0=1.0))
    assert c.A2 is None and c.A3 is None and c.B3 is None and c.E is None
    assert c.D is None  # p > sqrt(3)
    assert c.A2prime is None and c.B4 is None
    # exactly critical p: the log coefficients appear instead
    c = coefficients(ProblemParams(3, 2.0), geom((1.0, 2.0), h0=1.0))
    assert c.A2prime is not None and c.B4 is not None
    assert c.A2 is None


def test_critical_log_coefficient_value():
    # A2' = -H omega_{N-2} / 2 * ((N-p)/(p-1))^p with (N-p)/(p-1) = 1 at p=(N+1)/2
    params = ProblemParams(5, 3.0)
    g = geom((1.0, 1.0, 1.0, 1.0))
    c = coefficients(params, g)
    omega = 2.0 * math.pi**2  # sphere_volume(4)
    assert c.A2prime == pytest.approx(-omega / 2.0, rel=1e-12)


def test_ratio_identities_on_grid():
    rng = np.random.default_rng(9)
    count = 0
    for n in range(2, 9):
        for p in (1.2, 1.3, 1.5, 1.8, 2.0, 2.2, 2.6, 3.0):
            if not (1.0 < p < (n + 1) / 2.0 - 1e-9):
                continue
            lams = tuple(rng.uniform(-2.0, 2.0, size=n - 1))
            params = ProblemParams(n, p)
            g = geom(lams)
            c = coefficients(params, g)
            ratios = simplified_coefficient_ratios(params, g)
            assert c.A2 / c.A1 == pytest.approx(ratios["A2_over_A1"], rel=1e-10, abs=1e-12)
            assert c.A3 / c.A1 == pytest.approx(ratios["A3_over_A1"], rel=1e-10, abs=1e-12)
            assert c.B2 / c.B1 == pytest.approx(ratios["B2_over_B1"], rel=1e-10, abs=1e-12)
            assert c.B3 / c.B1 == pytest.approx(ratios["B3_over_B1"], rel=1e-10, abs=1e-12)
            count += 1
    assert count >= 20


# --------------------------------------------------------------------------
# first- and second-order coefficients
# --------------------------------------------------------------------------

def test_first_order_examples():
    assert first_order_coefficient(
        ProblemParams(5, 2.0), geom((1.0, 1.0, 1.0, 1.0))
    ) == pytest.approx(-1.5, rel=1e-13)
    assert first_order_coefficient(ProblemParams(3, 1.5), geom((0.0, 0.0))) == 0.0
    assert first_order_coefficient(ProblemParams(3, 1.5), geom((2.0,) * 2)) == pytest.approx(
        -1.5, rel=1e-13
    )


def test_first_order_gamma_ratio_consistency():
    # the closed form equals A2/A1 - (N-p)/(N-1) * B2/B1 computed via Gamma ratios
    rng = np.random.default_rng(13)
    for _ in range(40):
        n = int(rng.integers(2, 9))
        p = float(rng.uniform(1.05, (n + 1) / 2.0 - 0.05))
        if not 1.0 < p < n:
            continue
        lams = tuple(rng.uniform(-1.5, 1.5, size=n - 1))
        params = ProblemParams(n, p)
        g = geom(lams)
        c = coefficients(params, g)
        combo = c.A2 / c.A1 - (n - p) / (n - 1.0) * c.B2 / c.B1
        assert first_order_coefficient(params, g) == pytest.approx(
            combo, rel=1e-10, abs=1e-13
        )


def test_first_order_sign_and_vanishing():
    rng = np.random.default_rng(17)
    for _ in range(40):
        n = int(rng.integers(2, 9))
        p = float(rng.uniform(1.05, (n + 1) / 2.0 - 0.05))
        lams = rng.uniform(-1.0, 2.0, size=n - 1)
        g = geom(tuple(lams))
        fo = first_order_coefficient(ProblemParams(n, p), g)
        H = g.mean_curvature
        if abs(H) < 1e-14:
            assert fo == 0.0
        else:
            assert np.sign(fo) == -np.sign(H)


def test_first_order_regime_error():
    with pytest.raises(RegimeError):
        first_order_coefficient(ProblemParams(3, 2.0), FLAT2)
    with pytest.raises(RegimeError):
        first_order_coefficient(ProblemParams(3, 2.3), FLAT2)


def test_second_order_examples():
    params = ProblemParams(5, 2.0)
    assert second_order_E(params, geom((1.0, 1.0, 1.0, 1.0))) == pytest.approx(
        -21.0 / 32.0, rel=1e-13
    )
    assert second_order_E(params, geom((0.0, 0.0, 0.0, 0.0))) == 0.0
    assert second_order_E(params, geom((1.0, -1.0, 1.0, -1.0))) == pytest.approx(
        27.0 / 32.0, rel=1e-13
    )


def test_second_order_regime_error():
    with pytest.raises(RegimeError):
        second_order_E(ProblemParams(5, 7.0 / 3.0), geom((1.0,) * 4))
    with pytest.raises(RegimeError):
        second_order_E(ProblemParams(3, 1.8), geom((1.0, 1.0)))


# --------------------------------------------------------------------------
# the combined expansion
# --------------------------------------------------------------------------

def test_expansion_trivial_flat():
    for n, p in ((3, 1.5), (5, 2.0), (6, 1.3)):
        g = geom((0.0,) * (n - 1), h0=0.0)
        assert rayleigh_expansion(ProblemParams(n, p), g, 0.01) == 1.0


def test_expansion_critical_log_value():
    val = rayleigh_expansion(ProblemParams(5, 3.0), geom((1.0,) * 4), 0.01)
    assert val == pytest.approx(1.0 - 2.0 * 0.01 * math.log(100.0), rel=1e-12)
    assert val == pytest.approx(0.9079, abs=2e-4)


def test_expansion_second_order_composition():
    val = rayleigh_expansion(ProblemParams(5, 2.0), geom((1.0,) * 4, h0=0.0), 0.01)
    assert val == pytest.approx(1.0 - 1.5 * 0.01 - 0.65625 * 1e-4, rel=1e-12)
    assert val == pytest.approx(0.98493, abs=1e-5)


def test_expansion_includes_mass_term():
    params = ProblemParams(3, 1.5)
    g0 = geom((0.0, 0.0), h0=-1.0)
    c = coefficients(params, g0)
    eps = 0.01
    assert rayleigh_expansion(params, g0, eps) == pytest.approx(
        1.0 + c.D / c.A1 * eps**params.p, rel=1e-12
    )


def test_expansion_supercritical_is_one():
    assert rayleigh_expansion(ProblemParams(3, 2.4), geom((3.0, 1.0), h0=5.0), 0.01) == 1.0


def test_expansion_tends_to_one():
    configs = [
        (3, 1.5, (1.0, 1.0), -0.5),   # first_mass_second
        (3, 1.7, (1.0, 1.0), -0.5),   # first_mass
        (3, math.sqrt(3.0), (1.0, 1.0), 0.5),  # first_only_log
        (3, 1.9, (1.0, 1.0), 0.5),    # first_only
        (5, 2.0, (1.0,) * 4, 1.0),    # first_second_mass
        (6, 2.5, (1.0,) * 5, 1.0),    # first_second
        (7, 3.5, (1.0,) * 6, 1.0),    # first_only (N >= 5)
        (5, 3.0, (1.0,) * 4, 0.0),    # critical_log
        (3, 2.3, (1.0, 1.0), 0.0),    # supercritical
    ]
    for n, p, lams, h0 in configs:
        params = ProblemParams(n, p)
        g = geom(lams, h0)
        vals = [abs(rayleigh_expansion(params, g, eps) - 1.0) for eps in (1e-2, 1e-4, 1e-6)]
        assert vals[-1] <= 1e-5
        assert vals[-1] <= vals[0] + 1e-15


def test_expansion_rejects_bad_epsilon():
    with pytest.raises(DomainError):
        rayleigh_expansion(ProblemParams(3, 1.5), FLAT2, 0.0)


# --------------------------------------------------------------------------
# good points
# --------------------------------------------------------------------------

def test_good_point_positive_mean_curvature():
    rng = np.random.default_rng(23)
    for _ in range(30):
        n = int(rng.integers(2, 9))
        p = float(rng.uniform(1.05, (n + 1) / 2.0 - 0.05))
        lams = rng.uniform(0.1, 2.0, size=n - 1)
        good, reason = is_good_point(ProblemParams(n, p), geom(tuple(lams)))
        assert good and "positive mean curvature" in reason


def test_good_point_requires_one_sided():
    good, reason = is_good_point(ProblemParams(3, 1.5), geom((1.0, 1.0), one_sided=False))
    assert not good and "one side" in reason


def test_good_point_flat_low_dimension():
    good, _ = is_good_point(ProblemParams(3, 1.5), geom((0.0, 0.0), h0=-0.5))
    assert good
    good, _ = is_good_point(ProblemParams(3, 1.5), geom((0.0, 0.0), h0=0.0))
    assert not good
    # p >= sqrt(N) closes the low-dimension flat criterion
    good, _ = is_good_point(ProblemParams(3, 1.75), geom((0.0, 0.0), h0=-0.5))
    assert not good


def test_good_point_p2_balance():
    params = ProblemParams(5, 2.0)
    g1 = geom((1.0, -1.0, 1.0, -1.0), h0=-1.0)
    good, _ = is_good_point(params, g1)
    assert good  # LHS 9 < 32/3 * 1
    g2 = geom((1.0, -1.0, 1.0, -1.0), h0=0.0)
    good, _ = is_good_point(params, g2)
    assert not good


def test_good_point_negative_mean_curvature():
    good, reason = is_good_point(ProblemParams(3, 1.5), geom((-1.0, -1.0), h0=1.0))
    assert not good and "negative" in reason


def test_good_point_high_dim_branches():
    # N >= 5, p < 2: negative potential decides
    assert is_good_point(ProblemParams(6, 1.5), geom((0.0,) * 5, h0=-0.1))[0]
    assert not is_good_point(ProblemParams(6, 1.5), geom((0.0,) * 5, h0=0.1))[0]
    # N >= 5, 2 < p < (N+2)/3: bracket sign decides, matching sign of E
    params = ProblemParams(8, 2.5)
    balanced = geom((1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 0.0))
    good, _ = is_good_point(params, balanced)
    assert good == (second_order_E(params, balanced) < 0.0)


def test_good_point_second_order_link():
    # with H = 0 and 2 < p < (N+2)/3 the verdict is exactly sign(E) < 0
    rng = np.random.default_rng(31)
    checked = 0
    for _ in range(200):
        n = int(rng.integers(5, 10))
        if (n + 2) / 3.0 <= 2.0:
            continue
        p = float(rng.uniform(2.0 + 1e-6, (n + 2) / 3.0 - 1e-6))
        lams = rng.uniform(-2.0, 2.0, size=n - 1)
        lams[-1] = -np.sum(lams[:-1])  # force H = 0
        g = geom(tuple(lams), h0=rng.normal())
        params = ProblemParams(n, p)
        good, _ = is_good_point(params, g)
        assert good == (second_order_E(params, g) < 0.0)
        checked += 1
    assert checked >= 30


def test_good_point_method_range_error():
    with pytest.raises(MethodRangeError):
        is_good_point(ProblemParams(3, 2.0), FLAT2)
    with pytest.raises(MethodRangeError):
        is_good_point(ProblemParams(3, 2.4), FLAT2)


def test_theorem_consistency_on_truncated_model():
    # a good point forces the truncated prediction below 1 for small eps
    configs = [
        (3, 1.5, (1.0, 1.0), 0.0),
        (3, 1.5, (0.0, 0.0), -0.5),
        (5, 2.0, (1.0, 1.0, 1.0, 1.0), 0.0),
        (5, 2.0, (1.0, -1.0, 1.0, -1.0), -1.0),
        (5, 3.0, (1.0,) * 4, 0.0),
        (6, 1.5, (0.0,) * 5, -0.1),
    ]
    eps_grid = np.geomspace(1e-6, 1e-2, 25)
    for n, p, lams, h0 in configs:
        params = ProblemParams(n, p)
        g = geom(lams, h0)
        assert is_good_point(params, g)[0]
        values = [rayleigh_expansion(params, g, float(e)) for e in eps_grid]
        assert all(v < 1.0 for v in values)


# --------------------------------------------------------------------------
# the constant test function bound
# --------------------------------------------------------------------------

def test_constant_bound_square():
    params = ProblemParams(2, 1.5)
    assert constant_testfunction_bound(1.0, 4.0, 1.0, params) == pytest.approx(0.5)


def test_constant_bound_zero_mass():
    assert constant_testfunction_bound(1.0, 4.0, 0.0, ProblemParams(2, 1.5)) == 0.0


def test_constant_bound_disk():
    params = ProblemParams(2, 1.5)
    val = constant_testfunction_bound(math.pi, 2.0 * math.pi, math.pi, params)
    assert val == pytest.approx(math.pi / math.sqrt(2.0 * math.pi), rel=1e-12)
    assert val == pytest.approx(1.2533, abs=1e-4)


def test_constant_bound_validation():
    with pytest.raises(DomainError):
        constant_testfunction_bound(0.0, 1.0, 1.0, ProblemParams(2, 1.5))
