"""Conforming triangulations of a fluid region and a porous region.

A single :class:`Mesh` covers both subdomains; every triangle carries a
subdomain tag, so the two sides always match along the interface.
"""

from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property
from typing import Callable, Optional

import numpy as np


class Subdomain(IntEnum):
    FLUID = 0
    POROUS = 1


OUTER_FLUID = "OUTER_FLUID"
OUTER_POROUS = "OUTER_POROUS"


class MeshError(ValueError):
    """Invalid geometry or mesh arguments."""


class MeshFormatError(MeshError):
    """Malformed mesh file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangulation of the fluid and porous regions.

    Attributes
    ----------
    vertices : (n, 2) float array
    triangles : (m, 3) int array, counter-clockwise
    subdomain : (m,) int array of :class:`Subdomain` values
    boundary_edges : (b, 2) int array of outer boundary edges
    boundary_labels : (b,) str array, one segment label per boundary edge
    interface_edges : (i, 2) int array; each edge is oriented so that its
        fluid triangle lies on the left
    interface_normals : (i, 2) unit normals pointing out of the fluid side
    """

    vertices: np.ndarray
    triangles: np.ndarray
    subdomain: np.ndarray
    boundary_edges: np.ndarray
    boundary_labels: np.ndarray
    interface_edges: np.ndarray
    interface_normals: np.ndarray

    def __post_init__(self):
        for name in ("vertices", "triangles", "subdomain", "boundary_edges",
                     "boundary_labels", "interface_edges", "interface_normals"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @cached_property
    def areas(self):
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def centroids(self):
        return self.vertices[self.triangles].mean(axis=1)

    @cached_property
    def _edge_data(self):
        # local edge i is opposite local vertex i
        t = self.triangles
        local = np.stack([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]], axis=1)
        keys = np.sort(local.reshape(-1, 2), axis=1)
        edges, inverse = np.unique(keys, axis=0, return_inverse=True)
        return edges, inverse.reshape(-1, 3)

    @property
    def edges(self):
        """(ne, 2) unique edges with sorted vertex indices."""
        return self._edge_data[0]

    @property
    def triangle_edges(self):
        """(m, 3) edge index of local edge i (opposite vertex i)."""
        return self._edge_data[1]

    def edge_index(self, pairs):
        """Look up global edge numbers for an (k, 2) array of vertex pairs."""
        pairs = np.sort(np.asarray(pairs, dtype=np.int64).reshape(-1, 2), axis=1)
        n = self.n_vertices
        codes = self.edges[:, 0].astype(np.int64) * n + self.edges[:, 1]
        wanted = pairs[:, 0] * n + pairs[:, 1]
        pos = np.searchsorted(codes, wanted)
        if np.any(pos >= len(codes)) or np.any(codes[np.minimum(pos, len(codes) - 1)] != wanted):
            raise MeshError("vertex pair is not an edge of the mesh")
        return pos

    def triangles_in(self, which):
        return np.flatnonzero(self.subdomain == which)

    def labels(self):
        """Distinct boundary labels in order of first appearance."""
        seen = []
        for lab in self.boundary_labels:
            if lab not in seen:
                seen.append(str(lab))
        return seen

    def boundary_edges_with(self, labels):
        if isinstance(labels, str):
            labels = [labels]
        mask = np.isin(self.boundary_labels, list(labels))
        return self.boundary_edges[mask]

    def boundary_side(self):
        """Subdomain of the single triangle owning each boundary edge."""
        owner = _edge_owners(self)
        ids = self.edge_index(self.boundary_edges)
        return np.array([self.subdomain[owner[i][0]] for i in ids], dtype=int)

    @cached_property
    def interface_owners(self):
        """(i, 2) array of (fluid triangle, porous triangle) per interface edge."""
        ids = self.edge_index(self.interface_edges)
        owners = _edge_owners(self)
        out = np.empty((len(ids), 2), dtype=np.int64)
        for k, e in enumerate(ids):
            own = owners[e]
            if len(own) != 2:
                raise MeshError(f"interface edge {k} does not have two triangles")
            f = own[0] if self.subdomain[own[0]] == Subdomain.FLUID else own[1]
            out[k] = (f, own[0] + own[1] - f)
        return out

    def interface_length(self):
        d = self.vertices[self.interface_edges[:, 1]] - self.vertices[self.interface_edges[:, 0]]
        return float(np.hypot(d[:, 0], d[:, 1]).sum())


@dataclass(frozen=True, eq=False)
class RegionMap:
    """Piecewise-constant hydraulic conductivity, one value per triangle."""

    k: np.ndarray

    @classmethod
    def uniform(cls, mesh, k):
        return cls(np.full(mesh.n_triangles, float(k)))

    @classmethod
    def from_function(cls, mesh, fn: Callable):
        """``fn(x, y)`` evaluated at triangle centroids."""
        c = mesh.centroids
        return cls(np.asarray(fn(c[:, 0], c[:, 1]), dtype=float) * np.ones(mesh.n_triangles))

    def check(self, mesh):
        por = mesh.subdomain == Subdomain.POROUS
        if len(self.k) != mesh.n_triangles:
            raise MeshError("conductivity array does not match the mesh")
        if np.any(~(self.k[por] > 0)):
            raise MeshError("hydraulic conductivity must be positive on porous triangles")


def _edge_owners(mesh):
    owners = [[] for _ in range(len(mesh.edges))]
    for t, row in enumerate(mesh.triangle_edges):
        for e in row:
            owners[e].append(t)
    return owners


def _interface_from_owners(vertices, triangles, subdomain, edges, tri_edges, owners):
    iface, normals = [], []
    for e, own in enumerate(owners):
        if len(own) != 2:
            continue
        s0, s1 = subdomain[own[0]], subdomain[own[1]]
        if s0 == s1:
            continue
        tf = own[0] if s0 == Subdomain.FLUID else own[1]
        loc = int(np.flatnonzero(tri_edges[tf] == e)[0])
        tri = triangles[tf]
        a, b = tri[(loc + 1) % 3], tri[(loc + 2) % 3]
        d = vertices[b] - vertices[a]
        L = np.hypot(d[0], d[1])
        iface.append((a, b))
        normals.append((d[1] / L, -d[0] / L))
    return (np.array(iface, dtype=np.int64).reshape(-1, 2),
            np.array(normals, dtype=float).reshape(-1, 2))


def _assemble(vertices, triangles, subdomain, label_of: Optional[Callable] = None):
    """Derive boundary and interface edges for a tagged triangulation."""
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64)
    subdomain = np.asarray(subdomain, dtype=np.int8)
    probe = Mesh(vertices, triangles, subdomain, np.zeros((0, 2), int),
                 np.zeros(0, dtype="<U1"), np.zeros((0, 2), int), np.zeros((0, 2)))
    owners = _edge_owners(probe)
    edges, tri_edges = probe.edges, probe.triangle_edges
    bnd, labels = [], []
    for e, own in enumerate(owners):
        if len(own) == 1:
            t = own[0]
            loc = int(np.flatnonzero(tri_edges[t] == e)[0])
            tri = triangles[t]
            a, b = tri[(loc + 1) % 3], tri[(loc + 2) % 3]
            bnd.append((a, b))
            lab = label_of(a, b, t) if label_of is not None else None
            if lab is None:
                lab = OUTER_FLUID if subdomain[t] == Subdomain.FLUID else OUTER_POROUS
            labels.append(lab)
    iface, normals = _interface_from_owners(vertices, triangles, subdomain,
                                            edges, tri_edges, owners)
    return Mesh(vertices, triangles, subdomain,
                np.array(bnd, dtype=np.int64).reshape(-1, 2),
                np.array(labels, dtype=object).astype(str),
                iface, normals)


def build_rect_coupled(fluid_box, porous_box, nx, ny_f, ny_p):
    """Structured mesh of two stacked rectangles sharing a horizontal edge.

    Boxes are ``(x0, x1, y0, y1)``. Each cell is split along its lower-left
    to upper-right diagonal. Boundary edges are labelled
    ``"<fluid|porous>_<bottom|top|left|right>"``.
    """
    for n, name in ((nx, "nx"), (ny_f, "ny_f"), (ny_p, "ny_p")):
        if int(n) != n or n < 1:
            raise MeshError(f"{name} must be a positive integer, got {n!r}")
    nx, ny_f, ny_p = int(nx), int(ny_f), int(ny_p)
    fx0, fx1, fy0, fy1 = map(float, fluid_box)
    px0, px1, py0, py1 = map(float, porous_box)
    if not (fx1 > fx0 and fy1 > fy0 and px1 > px0 and py1 > py0):
        raise MeshError("boxes must have positive extent")
    if fx0 != px0 or fx1 != px1:
        raise MeshError("boxes must share one full horizontal edge")
    if fy0 == py1:
        lower, upper, n_low, n_up = (py0, py1), (fy0, fy1), ny_p, ny_f
        fluid_upper = True
    elif fy1 == py0:
        lower, upper, n_low, n_up = (fy0, fy1), (py0, py1), ny_f, ny_p
        fluid_upper = False
    else:
        raise MeshError("boxes must share one full horizontal edge")

    xs = np.linspace(fx0, fx1, nx + 1)
    ys = np.concatenate([np.linspace(lower[0], lower[1], n_low + 1),
                         np.linspace(upper[0], upper[1], n_up + 1)[1:]])
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    # pin the shared row exactly to the interface coordinate
    vertices[n_low * (nx + 1):(n_low + 1) * (nx + 1), 1] = lower[1]

    def vid(i, j):
        return j * (nx + 1) + i

    tris, tags = [], []
    for j in range(n_low + n_up):
        in_lower = j < n_low
        tag = Subdomain.POROUS if in_lower == fluid_upper else Subdomain.FLUID
        for i in range(nx):
            v00, v10, v01, v11 = vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)
            tris += [(v00, v10, v11), (v00, v11, v01)]
            tags += [tag, tag]

    boxes = {Subdomain.FLUID: (fx0, fx1, fy0, fy1), Subdomain.POROUS: (px0, px1, py0, py1)}

    def label_of(a, b, t):
        sub = Subdomain(tags[t])
        x0, x1, y0, y1 = boxes[sub]
        mid = 0.5 * (vertices[a] + vertices[b])
        prefix = "fluid" if sub == Subdomain.FLUID else "porous"
        if np.isclose(mid[1], y0) and vertices[a][1] == vertices[b][1]:
            return prefix + "_bottom"
        if np.isclose(mid[1], y1) and vertices[a][1] == vertices[b][1]:
            return prefix + "_top"
        if np.isclose(mid[0], x0):
            return prefix + "_left"
        return prefix + "_right"

    return _assemble(vertices, tris, tags, label_of)


def validate(mesh):
    """Return a list of invariant violations; empty when the mesh is valid."""
    report = []
    areas = mesh.areas
    for t in np.flatnonzero(~(areas > 0)):
        report.append(f"triangle {t}: non-positive signed area {areas[t]:.3e}")
    if len(mesh.subdomain) != mesh.n_triangles:
        report.append("subdomain tag count differs from triangle count")
        return report
    owners = _edge_owners(mesh)
    for k, (a, b) in enumerate(mesh.boundary_edges):
        try:
            e = mesh.edge_index([[a, b]])[0]
        except MeshError:
            report.append(f"boundary edge {k} ({a}, {b}) is not a mesh edge")
            continue
        if len(owners[e]) != 1:
            report.append(f"boundary edge {k} ({a}, {b}) belongs to {len(owners[e])} triangles")
    listed = set()
    for k, ((a, b), n) in enumerate(zip(mesh.interface_edges, mesh.interface_normals)):
        try:
            e = mesh.edge_index([[a, b]])[0]
        except MeshError:
            report.append(f"interface edge {k} ({a}, {b}) is not a mesh edge")
            continue
        listed.add(int(e))
        own = owners[e]
        tags = sorted(int(mesh.subdomain[t]) for t in own)
        if tags != [Subdomain.FLUID, Subdomain.POROUS]:
            report.append(f"interface edge {k} ({a}, {b}) is not shared by one FLUID "
                          f"and one POROUS triangle (tags {tags})")
            continue
        if not np.isclose(np.hypot(*n), 1.0, atol=1e-12):
            report.append(f"interface edge {k}: normal is not unit length")
        tf = own[0] if mesh.subdomain[own[0]] == Subdomain.FLUID else own[1]
        mid = 0.5 * (mesh.vertices[a] + mesh.vertices[b])
        if np.dot(n, mesh.centroids[tf] - mid) >= 0:
            report.append(f"interface edge {k}: normal does not point out of the fluid triangle")
    for e, own in enumerate(owners):
        if len(own) > 2:
            report.append(f"edge {tuple(mesh.edges[e])} shared by {len(own)} triangles")
        elif (len(own) == 2 and mesh.subdomain[own[0]] != mesh.subdomain[own[1]]
              and e not in listed):
            report.append(f"edge {tuple(mesh.edges[e])} separates the subdomains "
                          f"but is not listed as an interface edge")
    return report


# --- Gmsh MSH 2.2 ASCII --------------------------------------------------

_SUBDOMAIN_NAMES = {"FLUID": Subdomain.FLUID, "POROUS": Subdomain.POROUS}


def _sections(lines):
    out = {}
    i = 0
    while i < len(lines):
        s = lines[i].strip()
        if s.startswith("$") and not s.startswith("$End"):
            name = s[1:]
            start = i
            j = i + 1
            while j < len(lines) and lines[j].strip() != "$End" + name:
                j += 1
            if j == len(lines):
                raise MeshFormatError(f"section ${name} is not terminated", start + 1)
            out[name] = (start + 1, lines[i + 1:j])
            i = j + 1
        elif s:
            raise MeshFormatError(f"unexpected content {s[:40]!r}", i + 1)
        else:
            i += 1
    return out


def import_msh(text):
    """Parse a Gmsh MSH 2.2 ASCII mesh.

    Triangles take their subdomain from the physical name ``FLUID`` or
    ``POROUS`` (falling back to physical tags 1 and 2 when no names are
    given). Labelled line elements name boundary segments; interface edges
    are detected from the triangle tags. Clockwise triangles are reoriented.
    """
    lines = text.splitlines()
    sec = _sections(lines)
    if "MeshFormat" not in sec:
        raise MeshFormatError("missing $MeshFormat section", 1)
    ln, body = sec["MeshFormat"]
    head = body[0].split() if body else []
    if not head:
        raise MeshFormatError("empty $MeshFormat section", ln)
    if head[0] != "2.2":
        raise MeshFormatError(f"unsupported MSH version {head[0]} (need 2.2)", ln + 1)
    if len(head) > 1 and head[1] != "0":
        raise MeshFormatError("binary MSH files are not supported", ln + 1)

    names = {}
    if "PhysicalNames" in sec:
        ln, body = sec["PhysicalNames"]
        for k, row in enumerate(body[1:], start=ln + 2):
            parts = row.split(maxsplit=2)
            if len(parts) != 3:
                raise MeshFormatError("malformed physical name", k)
            names[(int(parts[0]), int(parts[1]))] = parts[2].strip().strip('"')

    if "Nodes" not in sec:
        raise MeshFormatError("missing $Nodes section", None)
    ln, body = sec["Nodes"]
    try:
        n_nodes = int(body[0])
    except (IndexError, ValueError):
        raise MeshFormatError("bad node count", ln + 1) from None
    if len(body) - 1 != n_nodes:
        raise MeshFormatError(f"expected {n_nodes} nodes, found {len(body) - 1}", ln + 1)
    node_index, coords = {}, []
    for k, row in enumerate(body[1:], start=ln + 2):
        parts = row.split()
        if len(parts) < 3:
            raise MeshFormatError("malformed node", k)
        node_index[int(parts[0])] = len(coords)
        coords.append((float(parts[1]), float(parts[2])))

    if "Elements" not in sec:
        raise MeshFormatError("missing $Elements section", None)
    ln, body = sec["Elements"]
    try:
        n_el = int(body[0])
    except (IndexError, ValueError):
        raise MeshFormatError("bad element count", ln + 1) from None
    if len(body) - 1 != n_el:
        raise MeshFormatError(f"expected {n_el} elements, found {len(body) - 1}", ln + 1)

    tris, tags, tri_lines, line_labels = [], [], [], {}
    for k, row in enumerate(body[1:], start=ln + 2):
        parts = [int(v) for v in row.split()]
        etype, ntags = parts[1], parts[2]
        phys = parts[3] if ntags > 0 else 0
        nodes = parts[3 + ntags:]
        try:
            idx = [node_index[n] for n in nodes]
        except KeyError as exc:
            raise MeshFormatError(f"element references unknown node {exc.args[0]}", k) from None
        if etype == 2:
            if len(idx) != 3:
                raise MeshFormatError("triangle must have 3 nodes", k)
            name = names.get((2, phys))
            if name is not None:
                if name.upper() not in _SUBDOMAIN_NAMES:
                    raise MeshFormatError(f"surface physical name {name!r} is not FLUID or POROUS", k)
                sub = _SUBDOMAIN_NAMES[name.upper()]
            elif phys in (1, 2):
                sub = Subdomain(phys - 1)
            else:
                raise MeshFormatError(f"triangle has no FLUID/POROUS physical tag ({phys})", k)
            tris.append(idx)
            tags.append(sub)
            tri_lines.append(k)
        elif etype == 1:
            if len(idx) != 2:
                raise MeshFormatError("line must have 2 nodes", k)
            label = names.get((1, phys), f"line{phys}" if phys else None)
            if label is not None:
                line_labels[tuple(sorted(idx))] = label
        elif etype == 15:
            continue
        else:
            raise MeshFormatError(f"unsupported element type {etype}", k)
    if not tris:
        raise MeshFormatError("mesh contains no triangles", ln)

    verts = np.array(coords, dtype=float)
    tris = np.array(tris, dtype=np.int64)
    p = verts[tris]
    d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    signed = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    for t in np.flatnonzero(signed == 0):
        raise MeshFormatError("degenerate triangle", tri_lines[t])
    flip = signed < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]

    # drop unused nodes (e.g. geometry points) while keeping file order
    used = np.unique(tris)
    if len(used) != len(verts):
        remap = -np.ones(len(verts), dtype=np.int64)
        remap[used] = np.arange(len(used))
        verts = verts[used]
        tris = remap[tris]
        line_labels = {tuple(sorted((remap[a], remap[b]))): v
                       for (a, b), v in line_labels.items() if remap[a] >= 0 and remap[b] >= 0}

    def label_of(a, b, t):
        return line_labels.get(tuple(sorted((int(a), int(b)))))

    mesh = _assemble(verts, tris, tags, label_of)
    _check_conformity(mesh, tri_lines)
    return mesh


def _check_conformity(mesh, tri_lines):
    """Reject hanging nodes along the fluid/porous boundary."""
    owners = _edge_owners(mesh)
    ids = mesh.edge_index(mesh.boundary_edges)
    side = np.array([mesh.subdomain[owners[e][0]] for e in ids])
    E = mesh.vertices[mesh.boundary_edges]
    f, p = E[side == Subdomain.FLUID], E[side == Subdomain.POROUS]
    f_own = [owners[e][0] for e, s in zip(ids, side) if s == Subdomain.FLUID]
    if len(f) == 0 or len(p) == 0:
        return
    a, b = f[:, None, 0, :], f[:, None, 1, :]
    c, d = p[None, :, 0, :], p[None, :, 1, :]
    u = b - a
    L2 = (u ** 2).sum(-1)

    def cross(v, w):
        return v[..., 0] * w[..., 1] - v[..., 1] * w[..., 0]

    scale = np.sqrt(L2)
    col = (np.abs(cross(u, c - a)) <= 1e-10 * L2) & (np.abs(cross(u, d - a)) <= 1e-10 * L2)
    s1 = ((c - a) * u).sum(-1) / L2
    s2 = ((d - a) * u).sum(-1) / L2
    lo, hi = np.minimum(s1, s2), np.maximum(s1, s2)
    overlap = np.minimum(hi, 1.0) - np.maximum(lo, 0.0)
    bad = col & (overlap * scale > 1e-10 * scale)
    if np.any(bad):
        i = int(np.argwhere(bad)[0, 0])
        raise MeshFormatError("non-conforming interface: fluid and porous edges overlap "
                              "without sharing vertices", tri_lines[f_own[i]])


def read_msh(path):
    with open(path) as fh:
        return import_msh(fh.read())
