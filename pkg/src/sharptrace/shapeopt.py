"""Optimal-hole approximation: minimize the eigenvalue over holes of fixed area.

The continuous problem asks for a measurable set A of measure alpha
minimizing the constrained eigenvalue lambda_A (competitors vanish on A);
the optimal set is the zero set of its own extremal.  That fixed-point
characterization drives the discrete heuristic:

    solve unconstrained -> pick the alpha-measure sublevel set of |u|
    -> re-solve with dofs pinned to zero there -> repeat until the hole
    stabilizes.

Holes are element sets (area bookkeeping is exact on elements; the final
measure overshoots alpha by less than one element).  Re-solves accept a
hole only when the eigenvalue does not increase, so the recorded history
is non-increasing; a repeated hole ends the run, and a hash window guards
against longer cycles.  Local optimality is all that is claimed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InfeasibleHoleError
from .extremal import ProblemParams
from .mesh import Mesh
from .steklov import EigenSolution, PotentialField, SolverOptions, minimize

__all__ = [
    "HoleSet",
    "ShapeRunRecord",
    "solve_with_hole",
    "update_hole",
    "optimize_shape",
    "random_hole",
]


@dataclass(frozen=True)
class HoleSet:
    """A set of triangle indices and their summed area."""

    element_indices: tuple
    measure: float

    @classmethod
    def from_indices(cls, mesh: Mesh, indices) -> "HoleSet":
        idx = tuple(sorted(int(i) for i in indices))
        areas = mesh.triangle_areas()
        return cls(idx, float(np.sum(areas[list(idx)])) if idx else 0.0)

    @property
    def empty(self) -> bool:
        return not self.element_indices


@dataclass(frozen=True)
class ShapeRunRecord:
    """History of (hole, lambda) iterates plus the best pair found."""

    history: tuple  # ((HoleSet, lambda), ...), lambda non-increasing
    hole: HoleSet
    lambda_alpha: float
    solution: EigenSolution
    cycle_detected: bool = False
    stabilized: bool = False


def _hole_mask(mesh: Mesh, hole: HoleSet) -> np.ndarray:
    """Free-dof mask: every vertex of a hole element is pinned to zero."""
    mask = np.ones(mesh.num_vertices, dtype=bool)
    if hole.element_indices:
        pinned = np.unique(mesh.triangles[list(hole.element_indices)])
        mask[pinned] = False
    return mask


def solve_with_hole(
    mesh: Mesh,
    hole: HoleSet,
    params: ProblemParams,
    h: PotentialField,
    q: float,
    options: SolverOptions = SolverOptions(),
    *,
    initial=None,
) -> EigenSolution:
    """Constrained eigenpair with dofs vanishing on the hole elements."""
    mask = _hole_mask(mesh, hole)
    if not np.any(mask[mesh.boundary_vertices()]):
        raise InfeasibleHoleError("hole pins every boundary vertex to zero")
    return minimize(mesh, params, h, q, options, free_mask=mask, initial=initial)


def update_hole(mesh: Mesh, solution: EigenSolution, alpha: float) -> HoleSet:
    """Greedy sublevel-set hole: smallest element-averaged |u| first.

    Elements are added (deterministic tie-break by index) until the
    cumulative area reaches alpha, so the result overshoots by less than
    one element.
    """
    if alpha <= 0.0:
        raise InfeasibleHoleError(f"alpha must be positive, got {alpha}")
    areas = mesh.triangle_areas()
    total = float(np.sum(areas))
    if alpha >= total:
        raise InfeasibleHoleError(f"alpha={alpha} is not below the mesh area {total}")
    score = np.mean(np.abs(np.asarray(solution.dofs))[mesh.triangles], axis=1)
    order = np.lexsort((np.arange(len(score)), score))
    chosen = []
    measure = 0.0
    for e in order:
        if measure >= alpha:
            break
        chosen.append(int(e))
        measure += float(areas[e])
    return HoleSet.from_indices(mesh, chosen)


def random_hole(mesh: Mesh, alpha: float, rng: np.random.Generator,
                protect: Optional[np.ndarray] = None) -> HoleSet:
    """Equal-measure baseline hole: random elements until alpha is covered."""
    areas = mesh.triangle_areas()
    order = rng.permutation(len(areas))
    chosen = []
    measure = 0.0
    for e in order:
        if protect is not None and protect[e]:
            continue
        if measure >= alpha:
            break
        chosen.append(int(e))
        measure += float(areas[e])
    return HoleSet.from_indices(mesh, chosen)


def optimize_shape(
    mesh: Mesh,
    alpha: float,
    params: ProblemParams,
    h: PotentialField,
    q: float,
    options: SolverOptions = SolverOptions(),
    *,
    max_outer: int = 20,
    protect_boundary: bool = False,
) -> ShapeRunRecord:
    """Alternate eigen-solve and hole update until the hole stabilizes.

    An alpha below the smallest element area cannot contain any element;
    the run then reports the hole-free eigenvalue with an empty hole (the
    measure defect is still below one element).  With protect_boundary
    set, elements touching the boundary are never selected, preserving a
    free boundary arc for the existence criterion.
    """
    areas = mesh.triangle_areas()
    if alpha >= float(np.sum(areas)):
        raise InfeasibleHoleError(f"alpha={alpha} must be below the mesh area")
    free_solution = minimize(mesh, params, h, q, options)
    if alpha < float(np.min(areas)):
        hole = HoleSet.from_indices(mesh, ())
        return ShapeRunRecord(
            history=((hole, free_solution.lam),),
            hole=hole,
            lambda_alpha=free_solution.lam,
            solution=free_solution,
            stabilized=True,
        )

    protect = None
    if protect_boundary:
        on_boundary = np.zeros(mesh.num_vertices, dtype=bool)
        on_boundary[mesh.boundary_vertices()] = True
        protect = np.any(on_boundary[mesh.triangles], axis=1)

    def pick(solution):
        if protect is None:
            return update_hole(mesh, solution, alpha)
        score = np.mean(np.abs(np.asarray(solution.dofs))[mesh.triangles], axis=1)
        order = np.lexsort((np.arange(len(score)), score))
        chosen = []
        measure = 0.0
        for e in order:
            if protect[e]:
                continue
            if measure >= alpha:
                break
            chosen.append(int(e))
            measure += float(areas[e])
        return HoleSet.from_indices(mesh, chosen)

    history = []
    seen: list = []
    cycle = False
    stabilized = False
    best_pair = None
    hole = pick(free_solution)
    solution = free_solution
    for _ in range(max_outer):
        sol = solve_with_hole(
            mesh, hole, params, h, q, options, initial=solution.dofs
        )
        if history and sol.lam > history[-1][1]:
            break  # the update stopped improving; keep the best iterate
        history.append((hole, sol.lam))
        if best_pair is None or sol.lam <= best_pair[1]:
            best_pair = (hole, sol.lam, sol)
        key = hole.element_indices
        if key in seen:
            cycle = True
            break
        seen.append(key)
        if len(seen) > 10:
            seen.pop(0)
        next_hole = pick(sol)
        solution = sol
        if next_hole.element_indices == hole.element_indices:
            stabilized = True
            break
        hole = next_hole

    hole_best, lam_best, sol_best = best_pair
    return ShapeRunRecord(
        history=tuple(history),
        hole=hole_best,
        lambda_alpha=lam_best,
        solution=sol_best,
        cycle_detected=cycle,
        stabilized=stabilized,
    )
