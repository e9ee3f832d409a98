"""Conforming triangle meshes for the 2-D trace-eigenvalue solvers.

Shapes: unit square, unit disk, annulus (radii 1/2 and 1).  Resolution k+1
is the uniform red refinement of resolution k (every triangle into four),
with new boundary vertices projected back onto the curved boundary where
there is one, so vertex sets are nested across resolutions.

Orientation conventions: triangles are counterclockwise, boundary edges
are oriented with the domain on their left (outer loops counterclockwise,
inner hole loops clockwise), so the outward normal of edge (i, j) is the
edge direction rotated by -90 degrees.

Text format, used by the CLI:
    line 1: "N_vertices N_triangles N_boundary_edges"
    then vertex lines "x y", triangle lines "i j k" (0-based),
    boundary edge lines "i j".
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Mesh",
    "generate_mesh",
    "uniform_refine",
    "audit_mesh",
    "read_mesh",
    "write_mesh",
    "write_solution_csv",
]


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray  # (nv, 2) float
    triangles: np.ndarray  # (nt, 3) int, counterclockwise
    boundary_edges: np.ndarray  # (nb, 2) int, domain on the left

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    def triangle_areas(self) -> np.ndarray:
        a = self.vertices[self.triangles[:, 0]]
        b = self.vertices[self.triangles[:, 1]]
        c = self.vertices[self.triangles[:, 2]]
        return 0.5 * np.cross(b - a, c - a)

    def area(self) -> float:
        return float(np.sum(self.triangle_areas()))

    def boundary_lengths(self) -> np.ndarray:
        a = self.vertices[self.boundary_edges[:, 0]]
        b = self.vertices[self.boundary_edges[:, 1]]
        return np.linalg.norm(b - a, axis=1)

    def boundary_length(self) -> float:
        return float(np.sum(self.boundary_lengths()))

    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.boundary_edges)


def _mesh_from_lists(vertices, triangles) -> Mesh:
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=int)
    # orient all triangles counterclockwise
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    flip = np.cross(b - a, c - a) < 0.0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]
    return Mesh(vertices, triangles, _boundary_edges(triangles))


def _boundary_edges(triangles: np.ndarray) -> np.ndarray:
    """Edges used by exactly one triangle, in that triangle's orientation."""
    seen = {}
    for tri in triangles:
        for k in range(3):
            i, j = int(tri[k]), int(tri[(k + 1) % 3])
            seen[(i, j)] = seen.get((i, j), 0) + 1
    edges = [
        (i, j) for (i, j), n in sorted(seen.items()) if n == 1 and (j, i) not in seen
    ]
    return np.asarray(edges, dtype=int)


def _square_coarse() -> Mesh:
    vertices = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    triangles = [(0, 1, 2), (0, 2, 3)]
    return _mesh_from_lists(vertices, triangles)


def _disk_coarse() -> Mesh:
    n = 8
    vertices = [(0.0, 0.0)]
    for k in range(n):
        th = 2.0 * math.pi * k / n
        vertices.append((math.cos(th), math.sin(th)))
    triangles = [(0, 1 + k, 1 + (k + 1) % n) for k in range(n)]
    return _mesh_from_lists(vertices, triangles)


def _annulus_coarse() -> Mesh:
    n = 8
    r_in, r_out = 0.5, 1.0
    vertices = []
    for r in (r_in, r_out):
        for k in range(n):
            th = 2.0 * math.pi * k / n
            vertices.append((r * math.cos(th), r * math.sin(th)))
    triangles = []
    for k in range(n):
        k2 = (k + 1) % n
        inner0, inner1 = k, k2
        outer0, outer1 = n + k, n + k2
        triangles.append((inner0, outer0, outer1))
        triangles.append((inner0, outer1, inner1))
    return _mesh_from_lists(vertices, triangles)


def _circle_projector(radius: float):
    def project(xy):
        nrm = math.hypot(xy[0], xy[1])
        return (radius * xy[0] / nrm, radius * xy[1] / nrm)

    return project


def _boundary_projection(shape: str):
    """Map a boundary vertex position to the exact boundary curve."""
    if shape == "disk":
        proj = _circle_projector(1.0)
        return lambda xy: proj(xy)
    if shape == "annulus":
        inner = _circle_projector(0.5)
        outer = _circle_projector(1.0)

        def project(xy):
            r = math.hypot(xy[0], xy[1])
            return inner(xy) if r < 0.75 else outer(xy)

        return project
    return None


def uniform_refine(mesh: Mesh, project=None) -> Mesh:
    """Red refinement; optional projection snaps new boundary midpoints."""
    vertices = [tuple(v) for v in mesh.vertices]
    boundary_pairs = {tuple(sorted(e)) for e in mesh.boundary_edges.tolist()}
    midpoint_index: dict = {}

    def midpoint(i: int, j: int) -> int:
        key = (min(i, j), max(i, j))
        if key not in midpoint_index:
            a = mesh.vertices[i]
            b = mesh.vertices[j]
            m = ((a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0)
            if project is not None and key in boundary_pairs:
                m = project(m)
            midpoint_index[key] = len(vertices)
            vertices.append(m)
        return midpoint_index[key]

    triangles = []
    for i, j, k in mesh.triangles.tolist():
        a, b, c = midpoint(i, j), midpoint(j, k), midpoint(k, i)
        triangles.extend([(i, a, c), (a, j, b), (c, b, k), (a, b, c)])
    return _mesh_from_lists(vertices, triangles)


def generate_mesh(shape: str, resolution: int) -> Mesh:
    """Nested meshes of the requested shape; resolution 1 is the coarsest."""
    if resolution < 1 or int(resolution) != resolution:
        raise ValueError(f"resolution must be an integer >= 1, got {resolution}")
    builders = {"square": _square_coarse, "disk": _disk_coarse, "annulus": _annulus_coarse}
    if shape not in builders:
        raise ValueError(f"unknown shape {shape!r}; choose from {sorted(builders)}")
    mesh = builders[shape]()
    project = _boundary_projection(shape)
    for _ in range(resolution - 1):
        mesh = uniform_refine(mesh, project)
    return mesh


def audit_mesh(mesh: Mesh) -> None:
    """Raise AssertionError unless the mesh invariants hold."""
    areas = mesh.triangle_areas()
    assert np.all(areas > 0.0), "found nonpositive triangle areas"
    recomputed = _boundary_edges(mesh.triangles)
    got = {tuple(e) for e in mesh.boundary_edges.tolist()}
    expect = {tuple(e) for e in recomputed.tolist()}
    assert got == expect, "boundary edges do not match the triangulation"
    # closed loops: every boundary vertex has exactly one inbound and one
    # outbound boundary edge
    outs = {}
    ins = {}
    for i, j in mesh.boundary_edges.tolist():
        outs[i] = outs.get(i, 0) + 1
        ins[j] = ins.get(j, 0) + 1
    assert all(v == 1 for v in outs.values()), "boundary is not a disjoint union of loops"
    assert all(v == 1 for v in ins.values()), "boundary is not a disjoint union of loops"
    assert set(outs) == set(ins), "boundary loops are not closed"


def write_mesh(path, mesh: Mesh) -> None:
    lines = [f"{mesh.num_vertices} {len(mesh.triangles)} {len(mesh.boundary_edges)}"]
    for x, y in mesh.vertices:
        lines.append(f"{x:.17g} {y:.17g}")
    for i, j, k in mesh.triangles:
        lines.append(f"{i} {j} {k}")
    for i, j in mesh.boundary_edges:
        lines.append(f"{i} {j}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path) -> Mesh:
    with open(path) as fh:
        tokens = fh.read().split("\n")
    header = tokens[0].split()
    nv, nt, nb = int(header[0]), int(header[1]), int(header[2])
    vertices = [tuple(map(float, tokens[1 + i].split())) for i in range(nv)]
    triangles = [tuple(map(int, tokens[1 + nv + i].split())) for i in range(nt)]
    edges = [tuple(map(int, tokens[1 + nv + nt + i].split())) for i in range(nb)]
    mesh = Mesh(
        np.asarray(vertices, dtype=float),
        np.asarray(triangles, dtype=int),
        np.asarray(edges, dtype=int),
    )
    audit_mesh(mesh)
    return mesh


def write_solution_csv(path, mesh: Mesh, dofs: np.ndarray, header_lines=()) -> None:
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("vertex_index,x,y,u\n")
        for i, ((x, y), u) in enumerate(zip(mesh.vertices, dofs)):
            fh.write(f"{i},{x:.15g},{y:.15g},{u:.15g}\n")
