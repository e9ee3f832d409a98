"""Direct numerical integration of the concentrating test functions.

This module is the independent check on every closed form in the package:
it integrates the cutoff test function

    u_eps(y, t) = phi(|(y,t)|) * [(t+eps)^2 + |y|^2]^{-(N-p)/(2(p-1))}

over a curved model half-space patch {t > rho(y)} with
rho(y) = 1/2 sum lambda_i y_i^2 + cubic terms, evaluates the boundary
energy on the graph surface t = rho(y), and extracts expansion
coefficients from eps-sweeps by least squares.

Geometry handling: volume integrals use the graph substitution
t = rho(y) + s (s > 0), which turns the curved patch into a product domain
and avoids cut cells at the boundary.  When all curvatures are equal and
no cubic terms are present the integrands are radial in y and the
dimension collapses (volume terms to 2-D, the boundary term to 1-D);
otherwise a full tensor product over y is used.  Both paths share the
deterministic adaptive cubature driver.

The box-vs-ball shape of the patch only moves O(1) terms around; the
singular coefficients the fits target are cutoff-independent, which is
itself one of the checked invariants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cubature import QuadratureResult, integrate_adaptive
from .errors import ConditioningError, DomainError
from .extremal import ProblemParams, kp_inverse
from .special import sphere_volume

__all__ = [
    "CutoffProfile",
    "ModelDomain",
    "integrate_gradient_term",
    "integrate_mass_term",
    "integrate_boundary_term",
    "rayleigh_quotient_numeric",
    "flat_gradient_energy_ball",
    "ExpansionFit",
    "fit_expansion",
    "default_epsilon_grid",
    "extremal_boundary_norm_quadrature",
    "extremal_gradient_norm_quadrature",
]


@dataclass(frozen=True)
class CutoffProfile:
    """Radial cutoff: 1 on [0, inner], 0 beyond outer, quintic in between.

    The transition is the standard quintic smoothstep, C^2 with vanishing
    first and second derivatives at both plateaus.
    """

    inner: float
    outer: float

    def __post_init__(self):
        if not (0.0 < self.inner < self.outer):
            raise DomainError(
                f"cutoff needs 0 < inner < outer, got {self.inner}, {self.outer}"
            )

    def value(self, r: np.ndarray) -> np.ndarray:
        s = np.clip((r - self.inner) / (self.outer - self.inner), 0.0, 1.0)
        smooth = s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
        return 1.0 - smooth

    def derivative(self, r: np.ndarray) -> np.ndarray:
        s = np.clip((r - self.inner) / (self.outer - self.inner), 0.0, 1.0)
        dsmooth = 30.0 * s * s * (1.0 - s) ** 2 / (self.outer - self.inner)
        return -dsmooth


@dataclass(frozen=True)
class ModelDomain:
    """Curved half-space patch {t > rho(y)} over the disk |y| <= r.

    rho(y) = 1/2 sum lambda_i y_i^2 + sum c_ijk y_i y_j y_k.  For a
    one-sided (good-point) model rho must be nonnegative on the patch,
    which the caller guarantees by choice of curvatures.  cubic is an
    (N-1)^3 coefficient array or None.
    """

    r: float
    lambdas: tuple
    cubic: Optional[np.ndarray] = None
    cutoff: Optional[CutoffProfile] = None

    def __post_init__(self):
        if self.r <= 0.0:
            raise DomainError(f"patch radius must be positive, got {self.r}")
        object.__setattr__(self, "lambdas", tuple(float(c) for c in self.lambdas))
        if self.cutoff is None:
            object.__setattr__(self, "cutoff", CutoffProfile(self.r / 4.0, self.r / 2.0))
        if self.cubic is not None:
            m = len(self.lambdas)
            cubic = np.asarray(self.cubic, dtype=float)
            if cubic.shape != (m, m, m):
                raise DomainError(f"cubic coefficients must have shape {(m, m, m)}")
            object.__setattr__(self, "cubic", cubic)

    @property
    def is_radial(self) -> bool:
        flat_cubic = self.cubic is None or not np.any(self.cubic)
        return flat_cubic and len(set(self.lambdas)) == 1

    def rho(self, y: np.ndarray) -> np.ndarray:
        lam = np.asarray(self.lambdas)
        val = 0.5 * (y * y) @ lam
        if self.cubic is not None and np.any(self.cubic):
            val = val + np.einsum("ijk,ni,nj,nk->n", self.cubic, y, y, y)
        return val

    def grad_rho(self, y: np.ndarray) -> np.ndarray:
        lam = np.asarray(self.lambdas)
        grad = y * lam[None, :]
        if self.cubic is not None and np.any(self.cubic):
            sym = self.cubic + self.cubic.transpose(1, 2, 0) + self.cubic.transpose(2, 0, 1)
            grad = grad + np.einsum("ijk,nj,nk->ni", sym, y, y)
        return grad

    def _rho_lower_bound(self) -> float:
        # crude lower bound of rho on the cutoff support, for the s-window
        R = self.cutoff.outer
        bound = 0.5 * sum(min(0.0, c) for c in self.lambdas) * R * R
        if self.cubic is not None:
            bound -= float(np.sum(np.abs(self.cubic))) * R**3
        return bound


def _s_window(domain: ModelDomain) -> float:
    return domain.cutoff.outer - min(0.0, domain._rho_lower_bound())


def _volume_integrand(domain, params, epsilon, kind, h_value=0.0, h_gradient=None,
                      radial=None):
    """Build the vectorized integrand in graph coordinates.

    kind = 'gradient' integrates |grad u_eps|^p, kind = 'mass' integrates
    h * |u_eps|^p.  Points are (y..., s) in the tensor path or (|y|, s) in
    the radial path; the radial path multiplies by the sphere factor
    omega_{N-2} |y|^{N-2}.
    """
    N, p = params.N, params.p
    beta = params.decay_exponent
    cutoff = domain.cutoff
    if radial is None:
        radial = domain.is_radial
    omega = sphere_volume(N - 1)
    lam0 = domain.lambdas[0]

    def f(points):
        if radial:
            u = points[:, 0]
            s = points[:, 1]
            y2 = u * u
            rho = 0.5 * lam0 * y2
            surface = omega * u ** (N - 2)
            y = None
        else:
            y = points[:, :-1]
            s = points[:, -1]
            y2 = np.sum(y * y, axis=1)
            rho = domain.rho(y)
            surface = 1.0
        t = rho + s
        dist = np.sqrt(y2 + t * t)
        phi = cutoff.value(dist)
        core2 = (t + epsilon) ** 2 + y2
        if kind == "mass":
            h = h_value
            if h_gradient is not None:
                h = h_value + y @ np.asarray(h_gradient[:-1]) + h_gradient[-1] * t
            return surface * h * phi**p * core2 ** (-p * beta)
        # grad u = phi'(|x|) x/|x| v + phi grad v, with v the bare profile
        dphi = cutoff.derivative(dist)
        v = core2 ** (-beta)
        x_dot_gradv = -2.0 * beta * (y2 + t * (t + epsilon)) * core2 ** (-beta - 1.0)
        gradv2 = 4.0 * beta * beta * core2 ** (-2.0 * beta - 1.0)
        dphi_over_dist = np.where(dist > 0.0, dphi / np.maximum(dist, 1e-300), 0.0)
        grad2 = (
            dphi * dphi * v * v
            + 2.0 * phi * v * dphi_over_dist * x_dot_gradv
            + phi * phi * gradv2
        )
        return surface * np.maximum(grad2, 0.0) ** (p / 2.0)

    return f, radial


def _volume_bounds(domain, radial):
    outer = domain.cutoff.outer
    s_hi = _s_window(domain)
    if radial:
        return [(0.0, outer), (0.0, s_hi)], [0.0, 0.0]
    m = len(domain.lambdas)
    bounds = [(-outer, outer)] * m + [(0.0, s_hi)]
    feature = [0.0] * (m + 1)
    return bounds, feature


def integrate_gradient_term(
    domain: ModelDomain,
    params: ProblemParams,
    epsilon: float,
    *,
    rel_tol: float = 1e-8,
    max_cells: int = 200_000,
) -> QuadratureResult:
    """Gradient energy of u_eps over the curved patch."""
    _check_oracle_dims(domain, params)
    f, radial = _volume_integrand(domain, params, epsilon, "gradient")
    bounds, feature = _volume_bounds(domain, radial)
    return integrate_adaptive(
        f,
        bounds,
        rel_tol=rel_tol,
        max_cells=max_cells,
        feature_point=feature,
        feature_scale=epsilon,
    )


def integrate_mass_term(
    domain: ModelDomain,
    params: ProblemParams,
    h_value: float,
    epsilon: float,
    *,
    h_gradient=None,
    rel_tol: float = 1e-8,
    max_cells: int = 200_000,
) -> QuadratureResult:
    """Potential mass int h |u_eps|^p over the curved patch.

    h is the constant h_value plus an optional linear part h_gradient
    (length N, tangential components first).
    """
    _check_oracle_dims(domain, params)
    if h_value == 0.0 and h_gradient is None:
        return QuadratureResult(0.0, 0.0, 0)
    # a linear part in h breaks radial symmetry, so force the tensor path
    force_radial = False if h_gradient is not None else None
    f, radial = _volume_integrand(
        domain, params, epsilon, "mass",
        h_value=h_value, h_gradient=h_gradient, radial=force_radial,
    )
    bounds, feature = _volume_bounds(domain, radial)
    return integrate_adaptive(
        f,
        bounds,
        rel_tol=rel_tol,
        max_cells=max_cells,
        feature_point=feature,
        feature_scale=epsilon,
    )


def integrate_boundary_term(
    domain: ModelDomain,
    params: ProblemParams,
    epsilon: float,
    *,
    rel_tol: float = 1e-8,
    max_cells: int = 200_000,
) -> QuadratureResult:
    """Critical boundary energy of u_eps on the graph surface t = rho(y)."""
    _check_oracle_dims(domain, params)
    N, p = params.N, params.p
    gamma_exp = p * (N - 1) / (2.0 * (p - 1.0))
    p_star = params.p_star
    cutoff = domain.cutoff
    radial = domain.is_radial
    omega = sphere_volume(N - 1)
    lam0 = domain.lambdas[0]

    def f(points):
        if radial:
            u = points[:, 0]
            y2 = u * u
            rho = 0.5 * lam0 * y2
            grho2 = lam0 * lam0 * y2
            surface = omega * u ** (N - 2)
        else:
            y = points
            y2 = np.sum(y * y, axis=1)
            rho = domain.rho(y)
            grho = domain.grad_rho(y)
            grho2 = np.sum(grho * grho, axis=1)
            surface = 1.0
        phi = cutoff.value(np.sqrt(y2 + rho * rho))
        core = (epsilon + rho) ** 2 + y2
        return surface * phi**p_star * core ** (-gamma_exp) * np.sqrt(1.0 + grho2)

    if radial:
        bounds = [(0.0, domain.r)]
        feature = [0.0]
    else:
        m = len(domain.lambdas)
        bounds = [(-domain.r, domain.r)] * m
        feature = [0.0] * m
    return integrate_adaptive(
        f,
        bounds,
        rel_tol=rel_tol,
        max_cells=max_cells,
        feature_point=feature,
        feature_scale=epsilon,
    )


def rayleigh_quotient_numeric(
    domain: ModelDomain,
    params: ProblemParams,
    h_value: float,
    epsilon: float,
    *,
    rel_tol: float = 1e-8,
    max_cells: int = 200_000,
) -> float:
    """Normalized quotient of u_eps: tends to 1 as eps -> 0 on a flat patch.

    Computes (gradient + mass) / boundary^{p/p_*} from the three
    integrators and divides by the sharp half-space constant.
    """
    grad = integrate_gradient_term(
        domain, params, epsilon, rel_tol=rel_tol, max_cells=max_cells
    )
    mass = integrate_mass_term(
        domain, params, h_value, epsilon, rel_tol=rel_tol, max_cells=max_cells
    )
    bdry = integrate_boundary_term(
        domain, params, epsilon, rel_tol=rel_tol, max_cells=max_cells
    )
    quotient = (grad.value + mass.value) / bdry.value ** (params.p / params.p_star)
    return quotient / kp_inverse(params)


def _check_oracle_dims(domain: ModelDomain, params: ProblemParams) -> None:
    if len(domain.lambdas) != params.N - 1:
        raise DomainError(
            f"domain has {len(domain.lambdas)} curvatures, expected {params.N - 1}"
        )
    if params.N > 4:
        raise DomainError("the quadrature oracle is capped at N <= 4")


def flat_gradient_energy_ball(
    params: ProblemParams, epsilon: float, radius: float, *, rel_tol: float = 1e-9
) -> float:
    """Gradient energy of the bare profile over a half-ball, no cutoff.

    Used for the exact-scale-invariance sanity check: with radius
    proportional to eps the value times eps^{(N-p)/(p-1)} is constant.
    """
    N, p = params.N, params.p
    beta = params.decay_exponent
    omega = sphere_volume(N - 1)
    slope = ((N - p) / (p - 1.0)) ** p
    gamma_exp = p * (N - 1) / (2.0 * (p - 1.0))

    def f(points):
        u = points[:, 0]
        tau = points[:, 1]
        t_max = np.sqrt(np.maximum(radius * radius - u * u, 0.0))
        t = tau * t_max
        core2 = (t + epsilon) ** 2 + u * u
        return omega * u ** (N - 2) * slope * core2 ** (-gamma_exp) * t_max

    res = integrate_adaptive(
        f,
        [(0.0, radius), (0.0, 1.0)],
        rel_tol=rel_tol,
        feature_point=[0.0, 0.0],
        feature_scale=epsilon,
    )
    return res.value


def extremal_gradient_fd_error(
    params: ProblemParams, points=None, step: float = 1e-5
) -> float:
    """Max relative error of the closed-form extremal gradient vs central
    differences, over a default or supplied sample of half-space points."""
    from .extremal import HalfSpacePoint, extremal_gradient, extremal_value

    m = params.N - 1
    if points is None:
        base = [0.3, -0.7, 1.1, 0.2, -0.4, 0.9, 0.05, -1.3, 0.6]
        points = []
        for t in (0.0, 0.5, 1.5):
            for shift in range(3):
                y = tuple(base[(shift + k) % len(base)] for k in range(m))
                points.append(HalfSpacePoint(y, t))
    worst = 0.0
    for pt in points:
        grad = extremal_gradient(params, pt)
        coords = list(pt.y) + [pt.t]
        for k in range(params.N):
            lo = list(coords)
            hi = list(coords)
            lo[k] -= step
            hi[k] += step
            if k == params.N - 1 and lo[k] < 0.0:
                continue  # stay inside the closed half-space
            f_hi = extremal_value(params, HalfSpacePoint(tuple(hi[:m]), hi[m]))
            f_lo = extremal_value(params, HalfSpacePoint(tuple(lo[:m]), lo[m]))
            fd = (f_hi - f_lo) / (2.0 * step)
            scale = max(abs(grad[k]), 1e-12)
            worst = max(worst, abs(fd - grad[k]) / scale)
    return worst


@dataclass(frozen=True)
class ExpansionFit:
    """Least-squares fit of an eps-sweep against power (and log) columns."""

    exponents: tuple
    coefficients: tuple
    log_exponent: Optional[float]
    log_coefficient: Optional[float]
    residual: float
    condition_number: float

    def coefficient(self, exponent: float) -> float:
        for e, c in zip(self.exponents, self.coefficients):
            if e == exponent:
                return c
        raise KeyError(f"no column with exponent {exponent}")

    def predict(self, eps: np.ndarray) -> np.ndarray:
        eps = np.asarray(eps, dtype=float)
        out = np.zeros_like(eps)
        for e, c in zip(self.exponents, self.coefficients):
            out += c * eps**e
        if self.log_coefficient is not None:
            out += self.log_coefficient * eps**self.log_exponent * np.log(1.0 / eps)
        return out


def fit_expansion(
    samples,
    exponents,
    include_log: bool = False,
    log_exponent: float = 1.0,
    *,
    max_condition: float = 1e12,
) -> ExpansionFit:
    """Fit value ~ sum_k c_k eps^{e_k} (+ optional c_log eps^e log(1/eps)).

    Columns are normalized before solving so the conditioning diagnostic
    reflects the geometry of the fit, not the raw scale spread of the
    powers.  Needs at least two more samples than unknowns.
    """
    samples = [(float(e), float(v)) for e, v in samples]
    exponents = [float(e) for e in exponents]
    if len(set(exponents)) != len(exponents):
        raise DomainError("fit exponents must be distinct")
    n_unknowns = len(exponents) + (1 if include_log else 0)
    if len(samples) < n_unknowns + 2:
        raise DomainError(
            f"need at least {n_unknowns + 2} samples for {n_unknowns} unknowns, "
            f"got {len(samples)}"
        )
    eps = np.asarray([s[0] for s in samples])
    val = np.asarray([s[1] for s in samples])
    cols = [eps**e for e in exponents]
    if include_log:
        cols.append(eps**log_exponent * np.log(1.0 / eps))
    design = np.stack(cols, axis=1)
    scale = np.linalg.norm(design, axis=0)
    scale[scale == 0.0] = 1.0
    design_n = design / scale
    cond = float(np.linalg.cond(design_n))
    if cond > max_condition:
        raise ConditioningError(
            f"fit design matrix condition number {cond:.3e} exceeds {max_condition:.1e}",
            cond,
        )
    coef_n, _, _, _ = np.linalg.lstsq(design_n, val, rcond=None)
    coef = coef_n / scale
    resid = val - design @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    log_c = float(coef[-1]) if include_log else None
    power_coef = tuple(float(c) for c in (coef[:-1] if include_log else coef))
    return ExpansionFit(
        tuple(exponents),
        power_coef,
        log_exponent if include_log else None,
        log_c,
        rms,
        cond,
    )


def default_epsilon_grid(
    lo: float = 1e-3, hi: float = 1e-2, per_decade: int = 8
) -> np.ndarray:
    """Logarithmically spaced eps values, per_decade points per decade."""
    n = max(2, int(round(per_decade * math.log10(hi / lo))) )
    return np.geomspace(lo, hi, n)


def extremal_boundary_norm_quadrature(
    params: ProblemParams, *, rel_tol: float = 1e-9, tail_fraction: float = 1e-9
) -> float:
    """Boundary integral of the bare extremal profile, by direct quadrature.

    Integrates over |y| <= R and grows R until the analytic power-law tail
    bound drops below tail_fraction of the partial value.  Independent of
    the Gamma-ratio closed form it is used to check.
    """
    N, p = params.N, params.p
    gamma_exp = p * (N - 1) / (2.0 * (p - 1.0))
    omega = sphere_volume(N - 1)

    def f(points):
        u = points[:, 0]
        return omega * u ** (N - 2) * (1.0 + u * u) ** (-gamma_exp)

    R = 8.0
    while True:
        res = integrate_adaptive(f, [(0.0, R)], rel_tol=rel_tol, feature_scale=0.5)
        tail = omega * R ** (N - 1 - 2.0 * gamma_exp) / (2.0 * gamma_exp - (N - 1))
        if tail <= tail_fraction * abs(res.value):
            return res.value
        R *= 2.0


def extremal_gradient_norm_quadrature(
    params: ProblemParams, *, rel_tol: float = 1e-9, tail_fraction: float = 1e-9
) -> float:
    """Half-space gradient energy of the bare profile, by direct quadrature.

    Truncates to the box [0,R]^2 in (|y|, t); both tails are bounded by
    elementary comparisons with pure power laws.
    """
    N, p = params.N, params.p
    gamma_exp = p * (N - 1) / (2.0 * (p - 1.0))
    omega = sphere_volume(N - 1)
    slope = ((N - p) / (p - 1.0)) ** p

    def f(points):
        u = points[:, 0]
        t = points[:, 1]
        core = (1.0 + t) ** 2 + u * u
        return slope * omega * u ** (N - 2) * core ** (-gamma_exp)

    c_r = 1.0 / (N - 1) + 1.0 / (2.0 * gamma_exp - N + 1.0)
    c_t = 1.0 + 1.0 / (2.0 * gamma_exp - 1.0)
    R = 8.0
    while True:
        res = integrate_adaptive(
            f, [(0.0, R), (0.0, R)], rel_tol=rel_tol, feature_scale=0.5
        )
        tail_t = slope * omega * c_r * (1.0 + R) ** (N - 2.0 * gamma_exp) / (
            2.0 * gamma_exp - N
        )
        tail_r = slope * omega * c_t * R ** (N - 2.0 * gamma_exp) / (2.0 * gamma_exp - N)
        if tail_t + tail_r <= tail_fraction * abs(res.value):
            return res.value
        R *= 2.0
