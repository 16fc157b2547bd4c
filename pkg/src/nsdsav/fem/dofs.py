"""Degree-of-freedom numbering for the velocity, pressure and head spaces."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..mesh import Subdomain


class FieldKind(Enum):
    VELOCITY = "velocity"   # vector P2 on fluid triangles
    PRESSURE = "pressure"   # scalar P1 on fluid triangles
    HEAD = "head"           # scalar P2 on porous triangles


_LAYOUT = {
    FieldKind.VELOCITY: (Subdomain.FLUID, 2, 2),
    FieldKind.PRESSURE: (Subdomain.FLUID, 1, 1),
    FieldKind.HEAD: (Subdomain.POROUS, 2, 1),
}


class DofError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DofMap:
    """Nodal numbering of one Lagrange space on one subdomain.

    Scalar nodes are numbered vertices first (increasing global vertex id),
    then edge midpoints (increasing global edge id). A vector space stores
    component ``c`` of node ``i`` at ``c * n_nodes + i``.
    """

    kind: FieldKind
    subdomain: Subdomain
    degree: int
    ncomp: int
    cells: np.ndarray        # global triangle ids
    cell_nodes: np.ndarray   # (n_cells, 3 or 6) scalar node ids
    node_coords: np.ndarray  # (n_nodes, 2)
    vertex_node: np.ndarray  # global vertex -> node, -1 if absent
    edge_node: np.ndarray    # global edge -> node, -1 if absent

    @property
    def n_nodes(self):
        return len(self.node_coords)

    @property
    def size(self):
        return self.ncomp * self.n_nodes

    @property
    def nloc(self):
        return self.cell_nodes.shape[1]

    def cell_dofs(self, comp=0):
        return self.cell_nodes + comp * self.n_nodes

    def edge_nodes(self, mesh, pairs):
        """Scalar nodes on each edge (a, b): ``[a, b]`` or ``[a, b, mid]``."""
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        out = [self.vertex_node[pairs[:, 0]], self.vertex_node[pairs[:, 1]]]
        if self.degree == 2:
            out.append(self.edge_node[mesh.edge_index(pairs)])
        out = np.stack(out, axis=1)
        if np.any(out < 0):
            raise DofError(f"edge not covered by the {self.kind.value} space")
        return out

    def interpolate(self, fn, t=None):
        """Nodal interpolant of ``fn(x, y[, t])``.

        Vector spaces expect ``fn`` to return a pair of arrays.
        """
        x, y = self.node_coords[:, 0], self.node_coords[:, 1]
        vals = fn(x, y) if t is None else fn(x, y, t)
        if self.ncomp == 1:
            return np.broadcast_to(np.asarray(vals, dtype=float), x.shape).copy()
        return np.concatenate([np.broadcast_to(np.asarray(v, dtype=float), x.shape)
                               for v in vals])

    def split(self, vec):
        """View a vector field as ``(ncomp, n_nodes)``."""
        return np.asarray(vec).reshape(self.ncomp, self.n_nodes)

    def vertex_values(self, vec, mesh):
        """Sample at mesh vertices; (n_vertices, ncomp), NaN off the subdomain."""
        comps = self.split(vec)
        out = np.full((mesh.n_vertices, self.ncomp), np.nan)
        has = self.vertex_node >= 0
        out[has] = comps[:, self.vertex_node[has]].T
        return out


def build_dofmap(mesh, kind):
    sub, degree, ncomp = _LAYOUT[kind]
    cells = mesh.triangles_in(sub)
    tri = mesh.triangles[cells]
    verts = np.unique(tri)
    vertex_node = -np.ones(mesh.n_vertices, dtype=np.int64)
    vertex_node[verts] = np.arange(len(verts))
    coords = [mesh.vertices[verts]]
    edge_node = -np.ones(len(mesh.edges), dtype=np.int64)
    cell_nodes = vertex_node[tri]
    if degree == 2:
        tedges = mesh.triangle_edges[cells]
        used = np.unique(tedges)
        edge_node[used] = len(verts) + np.arange(len(used))
        e = mesh.edges[used]
        coords.append(0.5 * (mesh.vertices[e[:, 0]] + mesh.vertices[e[:, 1]]))
        cell_nodes = np.hstack([cell_nodes, edge_node[tedges]])
    return DofMap(kind, sub, degree, ncomp, cells, cell_nodes,
                  np.vstack(coords), vertex_node, edge_node)


class Dirichlet:
    """Dirichlet constraints on a set of boundary segments.

    ``segments`` is an ordered list of ``(labels, fn)``; where segments meet,
    the later one wins. ``fn(x, y, t)`` returns a scalar array for scalar
    spaces and a pair of arrays for the velocity.
    """

    def __init__(self, mesh, dofmap, segments):
        self.dofmap = dofmap
        owner = -np.ones(dofmap.n_nodes, dtype=np.int64)
        self._fns = []
        for k, (labels, fn) in enumerate(segments):
            edges = mesh.boundary_edges_with(labels)
            if len(edges) == 0:
                raise DofError(f"no boundary edges labelled {labels!r}")
            nodes = np.unique(dofmap.edge_nodes(mesh, edges))
            owner[nodes] = k
            self._fns.append(fn)
        self.nodes = np.flatnonzero(owner >= 0)
        self._owner = owner[self.nodes]
        n = dofmap.n_nodes
        self.dofs = np.concatenate([self.nodes + c * n for c in range(dofmap.ncomp)])
        self._homogeneous = all(fn is None for fn in self._fns)

    @classmethod
    def empty(cls, dofmap):
        obj = cls.__new__(cls)
        obj.dofmap = dofmap
        obj._fns = []
        obj.nodes = np.zeros(0, dtype=np.int64)
        obj._owner = np.zeros(0, dtype=np.int64)
        obj.dofs = np.zeros(0, dtype=np.int64)
        obj._homogeneous = True
        return obj

    def values(self, t):
        """Boundary values aligned with ``self.dofs``."""
        ncomp = self.dofmap.ncomp
        out = np.zeros((ncomp, len(self.nodes)))
        for k, fn in enumerate(self._fns):
            if fn is None:
                continue
            sel = self._owner == k
            xy = self.dofmap.node_coords[self.nodes[sel]]
            vals = fn(xy[:, 0], xy[:, 1], t)
            if ncomp == 1:
                out[0, sel] = vals
            else:
                out[0, sel] = vals[0]
                out[1, sel] = vals[1]
        return out.ravel()

    def free_mask(self):
        mask = np.ones(self.dofmap.size, dtype=bool)
        mask[self.dofs] = False
        return mask
