"""Mesh generator for the Y-shaped conduit inside the unit square.

The conduit polygon ABCDEFGH is free flow; the rest of the square is porous.
Points are placed on every polygon segment at spacing ``h`` and on a
triangular lattice elsewhere, keeping lattice points away from the segments
so that each boundary subsegment is a Delaunay edge.
"""

import numpy as np
from scipy.spatial import Delaunay

from ..mesh import MeshError, Subdomain, _assemble, validate

CORNERS = {
    "A": (0.0, 0.25), "B": (0.4, 0.3), "C": (0.3, 0.0), "D": (0.5, 0.0),
    "E": (0.6, 0.35), "F": (1.0, 0.5), "G": (1.0, 0.75), "H": (0.0, 0.5),
}
FLUID_POLYGON = "ABCDEFGH"
INLETS = ("HA", "CD")
OUTLET = "FG"
POROUS_LABEL = "porous_outer"
WALL_LABEL = "fluid_wall"


def _segment_points(p, q, h):
    p, q = np.asarray(p, float), np.asarray(q, float)
    n = max(1, int(np.ceil(np.linalg.norm(q - p) / h)))
    s = np.arange(n)[:, None] / n
    return p + s * (q - p)


def _point_segment_distance(pts, p, q):
    p, q = np.asarray(p, float), np.asarray(q, float)
    d = q - p
    s = np.clip(((pts - p) @ d) / (d @ d), 0.0, 1.0)
    return np.linalg.norm(pts - (p + s[:, None] * d), axis=1)


def _inside(pts, poly):
    """Even-odd point-in-polygon test."""
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    for (x0, y0), (x1, y1) in zip(poly, np.roll(poly, -1, axis=0)):
        crosses = (y0 > y) != (y1 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xi = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (x < xi)
    return inside


def _laplace(pts, tri, nfix, segs, clearance):
    """One Laplacian sweep of the free points; moves that come closer than
    ``clearance`` to a segment are rejected."""
    n = len(pts)
    edges = np.vstack([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    acc = np.zeros_like(pts)
    cnt = np.zeros(n)
    for a, b in ((edges[:, 0], edges[:, 1]), (edges[:, 1], edges[:, 0])):
        np.add.at(acc, a, pts[b])
        np.add.at(cnt, a, 1.0)
    new = pts.copy()
    new[nfix:] = acc[nfix:] / cnt[nfix:, None]
    d = np.min([_point_segment_distance(new[nfix:], p, q) for _, p, q in segs], axis=0)
    moved = new[nfix:]
    moved[d < clearance] = pts[nfix:][d < clearance]
    new[nfix:] = moved
    return new


def _segments():
    poly = [CORNERS[c] for c in FLUID_POLYGON]
    segs = [(FLUID_POLYGON[i] + FLUID_POLYGON[(i + 1) % 8], poly[i], poly[(i + 1) % 8])
            for i in range(8)]
    square = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    segs += [("square", square[i], square[(i + 1) % 4]) for i in range(4)]
    return np.array(poly), segs


def build_yshape(h=1.0 / 32.0, smoothing=8):
    """Conforming fluid/porous triangulation of the Y-shape configuration.

    Boundary labels: ``HA``, ``CD`` and ``FG`` on the conduit openings and
    ``porous_outer`` on the rest of the square's boundary.
    """
    if not 0 < h <= 0.1:
        raise MeshError("h must lie in (0, 0.1]")
    poly, segs = _segments()
    bpts = np.vstack([_segment_points(p, q, h) for _, p, q in segs])
    bpts = np.unique(np.round(bpts, 12), axis=0)

    dy = h * np.sqrt(3.0) / 2.0
    rows = []
    for j in range(int(np.ceil(1.0 / dy)) + 1):
        xs = np.arange(0.0, 1.0 + h, h) + (0.5 * h if j % 2 else 0.0)
        rows.append(np.column_stack([xs, np.full_like(xs, j * dy)]))
    lattice = np.vstack(rows)
    keep = np.all((lattice > 0) & (lattice < 1), axis=1)
    lattice = lattice[keep]
    dmin = np.min([_point_segment_distance(lattice, p, q) for _, p, q in segs], axis=0)
    lattice = lattice[dmin > 0.75 * h]

    pts = np.vstack([bpts, lattice])
    nfix = len(bpts)
    for _ in range(smoothing):
        tri = Delaunay(pts).simplices
        pts = _laplace(pts, tri, nfix, segs, 0.5 * h)
    tri = Delaunay(pts).simplices
    a, b, c = pts[tri[:, 0]], pts[tri[:, 1]], pts[tri[:, 2]]
    area = 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                  - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
    tri = tri[np.abs(area) > 1e-14]
    flip = area[np.abs(area) > 1e-14] < 0
    tri[flip] = tri[flip][:, [0, 2, 1]]
    centroids = pts[tri].mean(axis=1)
    sub = np.where(_inside(centroids, poly), Subdomain.FLUID, Subdomain.POROUS)

    openings = {name: (np.array(CORNERS[name[0]]), np.array(CORNERS[name[1]]))
                for name in INLETS + (OUTLET,)}

    def label_of(i, j, t):
        mid = 0.5 * (pts[i] + pts[j])
        for name, (p, q) in openings.items():
            if _point_segment_distance(mid[None], p, q)[0] < 1e-9:
                return name
        return WALL_LABEL if sub[t] == Subdomain.FLUID else POROUS_LABEL

    mesh = _assemble(pts, tri, sub, label_of)
    problems = validate(mesh)
    if problems:
        raise MeshError("Y-shape mesh failed validation: " + "; ".join(problems))
    expected = sum(np.linalg.norm(np.subtract(CORNERS[s[1]], CORNERS[s[0]]))
                   for s, _, _ in segs[:8] if s not in INLETS + (OUTLET,))
    if abs(mesh.interface_length() - expected) > 1e-9:
        raise MeshError("interface segments were not recovered by the triangulation")
    return mesh


if __name__ == "__main__":
    import sys

    from ..io import export_msh

    target = sys.argv[1] if len(sys.argv) > 1 else "yshape.msh"
    size = float(sys.argv[2]) if len(sys.argv) > 2 else 1.0 / 36.0
    export_msh(build_yshape(size), target)
