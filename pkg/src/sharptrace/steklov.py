"""Discrete minimization of the trace Rayleigh quotient on triangle meshes.

Spatial dimension is fixed to N = 2 (so 1 < p < 2 and the critical
boundary exponent is p_* = p/(2-p)).  With continuous piecewise-linear
elements the quotient

    R(u) = [ sum_T area |grad u|^p + sum_T area <h |u|^p> ]
           / [ sum_E int_E |u|^q ds ]^{p/q}

uses element-wise constant gradients (|grad u|^p exact per triangle), the
three-midedge rule for the potential term (exact for piecewise-linear h
against quadratics), and 3-point Gauss per boundary edge for the trace
term (degree-5 exact, ample for |u|^q with q <= p_* < 6 at these p).

R is zero-homogeneous, so the minimizer is sought by projected descent on
the normalization manifold int_bdry |u|^q = 1: a gradient step followed by
renormalization, with Armijo backtracking (quotient never increases) and
Barzilai-Borwein step seeding for speed.  Stationarity of R is exactly the
weak Steklov-like system

    -div(|grad u|^{p-2} grad u) + h u^{p-1} = 0      in Omega
    |grad u|^{p-2} du/dnu = lambda u^{q-1}           on the boundary

with lambda equal to the quotient value, so the Euler-Lagrange residual in
the discrete dual norm doubles as the convergence certificate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, IterationError
from .extremal import ProblemParams, kp_inverse
from .mesh import Mesh

__all__ = [
    "PotentialField",
    "SolverOptions",
    "EigenSolution",
    "rayleigh_quotient",
    "rayleigh_quotient_many",
    "minimize",
    "el_residual",
    "criticality_check",
    "constant_dof_bound",
]

_GAUSS3_NODES = np.array(
    [0.5 - 0.5 * np.sqrt(0.6), 0.5, 0.5 + 0.5 * np.sqrt(0.6)]
)
_GAUSS3_WEIGHTS = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])


@dataclass(frozen=True)
class PotentialField:
    """The potential h sampled at mesh vertices."""

    values: np.ndarray

    @classmethod
    def constant(cls, mesh: Mesh, value: float = 1.0) -> "PotentialField":
        return cls(np.full(mesh.num_vertices, float(value)))

    @classmethod
    def from_callable(cls, mesh: Mesh, fn) -> "PotentialField":
        return cls(np.asarray([fn(x, y) for x, y in mesh.vertices], dtype=float))

    @property
    def coercive_witness(self) -> bool:
        """min h > 0 certifies discrete coercivity outright."""
        return bool(np.min(self.values) > 0.0)


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 5000
    tol: float = 1e-8  # relative quotient decrease
    residual_tol: float = 1e-6  # dual-norm Euler-Lagrange residual
    initial_step: float = 1.0
    restarts: int = 0
    seed: int = 0


@dataclass(frozen=True)
class EigenSolution:
    """Normalized discrete eigenpair with solver diagnostics.

    trace_conditioning reports (volume energy with h=1)^(1/p) of the
    normalized minimizer; a blow-up flags a minimizing sequence drifting
    toward zero boundary trace, which the normalization alone cannot
    exclude on coarse meshes.
    """

    lam: float
    dofs: np.ndarray
    exponent_q: float
    residual: float
    iterations: int
    converged: bool
    history: tuple = field(repr=False, default=())
    trace_conditioning: float = float("nan")


class _Forms:
    """Precomputed P1 structures for one (mesh, h, p, q) combination."""

    def __init__(self, mesh: Mesh, h: PotentialField, p: float, q: float):
        self.mesh = mesh
        self.p = p
        self.q = q
        self.tri = mesh.triangles
        verts = mesh.vertices
        a = verts[self.tri[:, 0]]
        b = verts[self.tri[:, 1]]
        c = verts[self.tri[:, 2]]
        self.area = 0.5 * np.cross(b - a, c - a)
        if np.any(self.area <= 0.0):
            raise DomainError("mesh has nonpositive triangle areas")
        # gradients of the three hat functions on each triangle
        def perp(v):
            return np.stack([v[:, 1], -v[:, 0]], axis=1)

        twoA = (2.0 * self.area)[:, None]
        self.grads = np.stack(
            [perp(c - b) / twoA, perp(a - c) / twoA, perp(b - a) / twoA], axis=1
        )
        hv = h.values
        # midedge values of h per triangle (3-point degree-2 volume rule)
        h0, h1, h2 = hv[self.tri[:, 0]], hv[self.tri[:, 1]], hv[self.tri[:, 2]]
        self.h_mid = 0.5 * np.stack([h0 + h1, h1 + h2, h2 + h0], axis=1)
        edges = mesh.boundary_edges
        self.edge = edges
        ev = verts[edges[:, 1]] - verts[edges[:, 0]]
        self.edge_len = np.linalg.norm(ev, axis=1)

    # --- energies -------------------------------------------------------
    def volume_energy(self, u: np.ndarray) -> float:
        ut = u[self.tri]
        g = np.einsum("tk,tkd->td", ut, self.grads)
        gnorm = np.sqrt(np.sum(g * g, axis=1))
        grad_part = np.sum(self.area * gnorm**self.p)
        um = 0.5 * np.stack(
            [ut[:, 0] + ut[:, 1], ut[:, 1] + ut[:, 2], ut[:, 2] + ut[:, 0]], axis=1
        )
        mass_part = np.sum(
            (self.area / 3.0)[:, None] * self.h_mid * np.abs(um) ** self.p
        )
        return float(grad_part + mass_part)

    def volume_energy_grad(self, u: np.ndarray) -> np.ndarray:
        ut = u[self.tri]
        g = np.einsum("tk,tkd->td", ut, self.grads)
        gnorm = np.sqrt(np.sum(g * g, axis=1))
        # d/du of area*|g|^p = area * p |g|^{p-2} (g . grad_hat); the factor
        # |g|^{p-2} g tends to 0 for p > 1 as g -> 0, so guard the division
        safe = np.where(gnorm > 0.0, gnorm, 1.0)
        flux = self.area * self.p * safe ** (self.p - 2.0) * (gnorm > 0.0)
        contrib = np.einsum("td,tkd->tk", flux[:, None] * g, self.grads)
        out = np.zeros_like(u)
        np.add.at(out, self.tri, contrib)
        um = 0.5 * np.stack(
            [ut[:, 0] + ut[:, 1], ut[:, 1] + ut[:, 2], ut[:, 2] + ut[:, 0]], axis=1
        )
        mass_core = (
            (self.area / 3.0)[:, None]
            * self.h_mid
            * self.p
            * np.abs(um) ** (self.p - 1.0)
            * np.sign(um)
        )
        mass_contrib = np.zeros_like(ut)
        mass_contrib[:, 0] = 0.5 * (mass_core[:, 0] + mass_core[:, 2])
        mass_contrib[:, 1] = 0.5 * (mass_core[:, 0] + mass_core[:, 1])
        mass_contrib[:, 2] = 0.5 * (mass_core[:, 1] + mass_core[:, 2])
        np.add.at(out, self.tri, mass_contrib)
        return out

    def boundary_energy(self, u: np.ndarray) -> float:
        ue = u[self.edge]
        xi = _GAUSS3_NODES[None, :]
        uq = (1.0 - xi) * ue[:, :1] + xi * ue[:, 1:]
        return float(
            np.sum(self.edge_len[:, None] * _GAUSS3_WEIGHTS[None, :] * np.abs(uq) ** self.q)
        )

    def boundary_energy_grad(self, u: np.ndarray) -> np.ndarray:
        ue = u[self.edge]
        xi = _GAUSS3_NODES[None, :]
        uq = (1.0 - xi) * ue[:, :1] + xi * ue[:, 1:]
        core = (
            self.edge_len[:, None]
            * _GAUSS3_WEIGHTS[None, :]
            * self.q
            * np.abs(uq) ** (self.q - 1.0)
            * np.sign(uq)
        )
        out = np.zeros_like(u)
        np.add.at(out, self.edge[:, 0], np.sum(core * (1.0 - xi), axis=1))
        np.add.at(out, self.edge[:, 1], np.sum(core * xi, axis=1))
        return out

    def descent_metric(self, u: np.ndarray) -> np.ndarray:
        """SPD metric for preconditioned descent at the current iterate.

        Kacanov-style linearization: stiffness weighted by the lagged
        diffusivity p |grad u|^{p-2} per triangle, a lumped mass diagonal
        p(p-1) h |u|^{p-2} (the term whose curvature blows up as u -> 0
        for p < 2, which is exactly what stalls unpreconditioned descent),
        and the boundary mass for definiteness.  Floors keep the weights
        finite near kinks.
        """
        n = self.mesh.num_vertices
        p = self.p
        M = np.zeros((n, n))
        ut = u[self.tri]
        g = np.einsum("tk,tkd->td", ut, self.grads)
        gnorm = np.sqrt(np.sum(g * g, axis=1))
        g_floor = 1e-6 * (np.mean(gnorm) + 1e-12)
        w_tri = p * np.maximum(gnorm, g_floor) ** (p - 2.0)
        for t_idx in range(len(self.tri)):
            idx = self.tri[t_idx]
            G = self.grads[t_idx]
            M[np.ix_(idx, idx)] += self.area[t_idx] * w_tri[t_idx] * (G @ G.T)
        lumped = np.zeros(n)
        np.add.at(lumped, self.tri, (self.area / 3.0)[:, None] * np.ones(3)[None, :])
        u_floor = 1e-6 * (np.mean(np.abs(u)) + 1e-12)
        hv = np.zeros(n)
        np.add.at(hv, self.tri, self.h_mid)
        counts = np.zeros(n)
        np.add.at(counts, self.tri, np.ones_like(self.h_mid))
        hv = np.where(counts > 0, hv / np.maximum(counts, 1.0), 0.0)
        diag = p * abs(p - 1.0) * np.abs(hv) * lumped * np.maximum(
            np.abs(u), u_floor
        ) ** (p - 2.0)
        M[np.arange(n), np.arange(n)] += diag
        for e_idx in range(len(self.edge)):
            i, j = self.edge[e_idx]
            L = self.edge_len[e_idx]
            M[i, i] += L / 3.0
            M[j, j] += L / 3.0
            M[i, j] += L / 6.0
            M[j, i] += L / 6.0
        return M


def _check_problem(mesh: Mesh, params: ProblemParams, q: float) -> None:
    if params.N != 2:
        raise DomainError("the mesh solver is limited to N = 2")
    if not (1.0 < q <= params.p_star + 1e-12):
        raise DomainError(
            f"boundary exponent must satisfy 1 < q <= p_* = {params.p_star}, got {q}"
        )


def rayleigh_quotient(
    mesh: Mesh, dofs: np.ndarray, params: ProblemParams, h: PotentialField, q: float
) -> float:
    """Discrete quotient of one dof vector; zero-homogeneous in the dofs."""
    _check_problem(mesh, params, q)
    forms = _Forms(mesh, h, params.p, q)
    dofs = np.asarray(dofs, dtype=float)
    denom = forms.boundary_energy(dofs)
    if denom <= 0.0:
        raise DomainError("dof vector has zero boundary trace")
    return forms.volume_energy(dofs) / denom ** (params.p / q)


def rayleigh_quotient_many(
    mesh: Mesh, dof_rows: np.ndarray, params: ProblemParams, h: PotentialField, q: float
) -> np.ndarray:
    """Quotient of each row; rows with zero boundary trace give +inf."""
    _check_problem(mesh, params, q)
    forms = _Forms(mesh, h, params.p, q)
    U = np.asarray(dof_rows, dtype=float)
    p = params.p
    ut = U[:, forms.tri]
    g = np.einsum("mtk,tkd->mtd", ut, forms.grads)
    gnorm2 = np.sum(g * g, axis=2)
    grad_part = np.sum(forms.area[None, :] * gnorm2 ** (p / 2.0), axis=1)
    um = 0.5 * np.stack(
        [
            ut[:, :, 0] + ut[:, :, 1],
            ut[:, :, 1] + ut[:, :, 2],
            ut[:, :, 2] + ut[:, :, 0],
        ],
        axis=2,
    )
    mass_part = np.sum(
        (forms.area / 3.0)[None, :, None] * forms.h_mid[None, :, :] * np.abs(um) ** p,
        axis=(1, 2),
    )
    ue = U[:, forms.edge]
    xi = _GAUSS3_NODES[None, None, :]
    uq = (1.0 - xi) * ue[:, :, :1] + xi * ue[:, :, 1:]
    denom = np.sum(
        forms.edge_len[None, :, None] * _GAUSS3_WEIGHTS[None, None, :] * np.abs(uq) ** q,
        axis=(1, 2),
    )
    out = np.full(U.shape[0], np.inf)
    ok = denom > 0.0
    out[ok] = (grad_part + mass_part)[ok] / denom[ok] ** (p / q)
    return out


def minimize(
    mesh: Mesh,
    params: ProblemParams,
    h: PotentialField,
    q: float,
    options: SolverOptions = SolverOptions(),
    *,
    free_mask: Optional[np.ndarray] = None,
    initial: Optional[np.ndarray] = None,
) -> EigenSolution:
    """Normalized descent on the quotient from u = 1 (plus optional restarts).

    The quotient history is non-increasing by construction (Armijo).
    Convergence requires the Euler-Lagrange residual below residual_tol;
    hitting max_iters first raises IterationError carrying the best
    iterate.
    """
    _check_problem(mesh, params, q)
    if np.min(h.values) <= 0.0:
        warnings.warn(
            "potential is not strictly positive; discrete coercivity is not certified",
            stacklevel=2,
        )
    forms = _Forms(mesh, h, params.p, q)
    p = params.p
    if free_mask is None:
        free_mask = np.ones(mesh.num_vertices, dtype=bool)

    def project(u):
        out = np.where(free_mask, u, 0.0)
        return out

    def normalize(u):
        d = forms.boundary_energy(u)
        if d <= 0.0:
            raise DomainError("iterate lost its boundary trace")
        return u / d ** (1.0 / q)

    starts = [np.ones(mesh.num_vertices)]
    if initial is not None:
        starts.append(np.asarray(initial, dtype=float))
    # minimizers at large q concentrate on the boundary, so restart from
    # bumps centered at randomly chosen boundary vertices
    rng = np.random.default_rng(options.seed)
    bvs = mesh.boundary_vertices()
    for _ in range(options.restarts):
        center = mesh.vertices[bvs[rng.integers(len(bvs))]]
        width = 0.25 * (1.0 + rng.random())
        d2 = np.sum((mesh.vertices - center) ** 2, axis=1)
        starts.append(np.exp(-d2 / width**2) + 0.05)

    free_idx = np.flatnonzero(free_mask)

    def precondition(g, u):
        metric = forms.descent_metric(u)
        z = np.zeros_like(g)
        z[free_idx] = np.linalg.solve(
            metric[np.ix_(free_idx, free_idx)], g[free_idx]
        )
        return z

    best: Optional[EigenSolution] = None
    best_converged: Optional[EigenSolution] = None
    for u0 in starts:
        try:
            sol = _descend(
                forms, params, q, project(u0), project, normalize, options,
                precondition,
            )
        except DomainError:
            continue  # this start lost its boundary trace; others may not
        if best is None or sol.lam < best.lam:
            best = sol
        if sol.converged and (best_converged is None or sol.lam < best_converged.lam):
            best_converged = sol
    if best is None:
        raise DomainError("every admissible start has zero boundary trace")
    if best_converged is None:
        raise IterationError(
            f"no convergence within {options.max_iters} iterations "
            f"(residual {best.residual:.3e} > {options.residual_tol:.1e})",
            best,
        )
    return best_converged


def _descend(
    forms, params, q, u0, project, normalize, options, precondition
) -> EigenSolution:
    # Extremals can be taken nonnegative (vertexwise |u| never increases the
    # quotient on non-obtuse meshes), so descend on the orthant u >= 0; that
    # removes the |u|^{p-1} sign kink that traps a plain gradient method.
    # First-order optimality is then the KKT residual, which coincides with
    # the smooth Euler-Lagrange residual at the strictly positive minimizer.
    p = params.p
    u = normalize(np.maximum(project(np.abs(u0)), 0.0))
    lam = forms.volume_energy(u)
    history = [lam]
    residual = np.inf
    iterations = 0
    converged = False
    for it in range(options.max_iters):
        iterations = it + 1
        g = forms.volume_energy_grad(u) - (p / q) * lam * forms.boundary_energy_grad(u)
        g = project(g)
        kkt = np.where(u > 0.0, g, np.minimum(g, 0.0))
        residual = float(np.linalg.norm(kkt)) / p
        if residual <= options.residual_tol:
            converged = True
            break
        d = precondition(g, u)
        t = options.initial_step
        accepted = False
        for _ in range(60):
            w = np.maximum(project(u - t * d), 0.0)
            move2 = float(np.dot(u - w, u - w))
            if move2 > 0.0 and forms.boundary_energy(w) > 0.0:
                trial = normalize(w)
                lam_try = forms.volume_energy(trial)
                if lam_try <= lam - 1e-4 / t * move2:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            break
        u, lam = trial, lam_try
        history.append(lam)
    trace_cond = (forms.volume_energy(u) + 0.0) ** (1.0 / p)
    return EigenSolution(
        lam=lam,
        dofs=u,
        exponent_q=q,
        residual=residual,
        iterations=iterations,
        converged=converged,
        history=tuple(history),
        trace_conditioning=trace_cond,
    )


def el_residual(
    mesh: Mesh,
    solution: EigenSolution,
    params: ProblemParams,
    h: PotentialField,
    q: float,
    *,
    free_mask: Optional[np.ndarray] = None,
) -> float:
    """Dual-norm residual of the weak Steklov-like system at the solution."""
    _check_problem(mesh, params, q)
    forms = _Forms(mesh, h, params.p, q)
    u = np.asarray(solution.dofs, dtype=float)
    r = forms.volume_energy_grad(u) / params.p - (
        solution.lam / q
    ) * forms.boundary_energy_grad(u)
    if free_mask is not None:
        r = np.where(free_mask, r, 0.0)
    return float(np.linalg.norm(r))


def criticality_check(solution: EigenSolution, params: ProblemParams):
    """Compare the discrete eigenvalue against the sharp constant.

    Returns ("below" | "above", margin) with margin = lambda - K_p^{-1};
    negative margin certifies the existence condition on this mesh.
    """
    threshold = kp_inverse(params)
    margin = solution.lam - threshold
    return ("below" if margin < 0.0 else "above"), margin


def constant_dof_bound(
    mesh: Mesh, params: ProblemParams, h: PotentialField, q: float
) -> float:
    """Discrete quotient of u = 1: integral of h over area / perimeter^{p/q}."""
    return rayleigh_quotient(mesh, np.ones(mesh.num_vertices), params, h, q)
