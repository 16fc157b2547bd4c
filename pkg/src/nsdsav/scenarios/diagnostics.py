"""Derived fields and scalar diagnostics: global velocity, fluxes, profiles."""

from dataclasses import dataclass

import numpy as np

from ..fem import elements
from ..fem.quadrature import LINE4
from ..mesh import Subdomain


@dataclass
class GlobalVelocity:
    """Vertex-sampled ``U``: fluid velocity in the fluid, ``-k grad(phi)``
    in the porous region.

    Interface vertices carry both one-sided values; ``U`` takes the fluid one.
    """

    U: np.ndarray             # (n_vertices, 2)
    fluid_side: np.ndarray    # (n_vertices, 2), NaN off the fluid
    porous_side: np.ndarray   # (n_vertices, 2), NaN off the porous region
    on_interface: np.ndarray  # (n_vertices,) bool


def _darcy_cell_gradients(disc, phi, points):
    """grad(phi) at reference ``points`` of every porous cell: (e, q, 2)."""
    dm = disc.spaces.head
    mesh = disc.mesh
    _, _, _, invJT = elements.element_geometry(mesh.vertices, mesh.triangles[dm.cells])
    dphi = elements.physical_gradients(elements.p2_ref_gradients(points), invJT)
    return np.einsum("eqjd,ej->eqd", dphi, phi[dm.cell_nodes])


def global_velocity(disc, state):
    mesh = disc.mesh
    nv = mesh.n_vertices
    fluid = disc.spaces.velocity.vertex_values(state.u, mesh)
    porous = np.full((nv, 2), np.nan)
    dm = disc.spaces.head
    if len(dm.cells):
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        grads = _darcy_cell_gradients(disc, state.phi, verts)          # (e, 3, 2)
        k = disc.assembler.regions.k[dm.cells]
        flux = -k[:, None, None] * grads
        acc = np.zeros((nv, 2))
        cnt = np.zeros(nv)
        tri = mesh.triangles[dm.cells]
        np.add.at(acc, tri.ravel(), flux.reshape(-1, 2))
        np.add.at(cnt, tri.ravel(), 1.0)
        has = cnt > 0
        porous[has] = acc[has] / cnt[has, None]
    on_iface = np.zeros(nv, dtype=bool)
    on_iface[mesh.interface_edges.ravel()] = True
    U = np.where(np.isnan(fluid), porous, fluid)
    return GlobalVelocity(U, fluid, porous, on_iface)


def locate(mesh, points, prefer=Subdomain.FLUID, tol=1e-10):
    """Triangle and reference coordinates for each point.

    Points on shared edges go to a triangle of subdomain ``prefer`` when one
    contains them. Raises if a point lies outside the mesh.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    x0, J, detJ, _ = elements.element_geometry(mesh.vertices, mesh.triangles)
    invJ = np.linalg.inv(J)
    cells = np.empty(len(points), dtype=np.int64)
    refs = np.empty((len(points), 2))
    for i, p in enumerate(points):
        xi = np.einsum("eij,ej->ei", invJ, p - x0)
        lam = np.column_stack([1 - xi.sum(1), xi])
        inside = np.flatnonzero(np.all(lam >= -tol, axis=1))
        if len(inside) == 0:
            raise ValueError(f"point {p} is outside the mesh")
        pick = inside[mesh.subdomain[inside] == prefer]
        c = pick[0] if len(pick) else inside[0]
        cells[i] = c
        refs[i] = xi[c]
    return cells, refs


def evaluate_global_velocity(disc, state, points, prefer=Subdomain.FLUID):
    """Point values of ``U`` (velocity in the fluid, Darcy flux in the porous part)."""
    mesh = disc.mesh
    cells, refs = locate(mesh, points, prefer)
    out = np.zeros((len(cells), 2))
    vel, head = disc.spaces.velocity, disc.spaces.head
    vloc = -np.ones(mesh.n_triangles, dtype=np.int64)
    vloc[vel.cells] = np.arange(len(vel.cells))
    hloc = -np.ones(mesh.n_triangles, dtype=np.int64)
    hloc[head.cells] = np.arange(len(head.cells))
    comps = vel.split(state.u)
    k = disc.assembler.regions.k
    for i, (c, xi) in enumerate(zip(cells, refs)):
        if mesh.subdomain[c] == Subdomain.FLUID:
            shape = elements.p2_values(xi[None])[0]
            nodes = vel.cell_nodes[vloc[c]]
            out[i] = comps[:, nodes] @ shape
        else:
            _, _, _, invJT = elements.element_geometry(mesh.vertices, mesh.triangles[[c]])
            g = elements.physical_gradients(elements.p2_ref_gradients(xi[None]), invJT)[0, 0]
            out[i] = -k[c] * (g.T @ state.phi[head.cell_nodes[hloc[c]]])
    return out


def centerline_profiles(disc, state, n=65):
    """``U1`` along x = 0.5 (y from -1 to 1) and ``U2`` along y = 0.5 (x from 0 to 1)."""
    ys = np.linspace(-1.0, 1.0, n)
    xs = np.linspace(0.0, 1.0, n)
    vert = evaluate_global_velocity(disc, state, np.column_stack([np.full(n, 0.5), ys]))
    horiz = evaluate_global_velocity(disc, state, np.column_stack([xs, np.full(n, 0.5)]))
    return (ys, vert[:, 0]), (xs, horiz[:, 1])


def _edge_flux(disc, u, edges, normals):
    """Sum over edges of ``int u . n`` with P2 traces."""
    if len(edges) == 0:
        return 0.0
    vel = disc.spaces.velocity
    nodes = vel.edge_nodes(disc.mesh, edges)
    comps = vel.split(u)
    d = disc.mesh.vertices[edges[:, 1]] - disc.mesh.vertices[edges[:, 0]]
    length = np.hypot(d[:, 0], d[:, 1])
    phi = elements.p2_edge_values(LINE4.points)
    w = LINE4.weights
    mean = np.einsum("q,qa,cia->ic", w, phi, comps[:, nodes])      # edge mean of u
    return float(np.sum(length * np.einsum("ic,ic->i", mean, normals)))


def boundary_flux(disc, u, labels):
    """Outward flux of the fluid velocity through the labelled segments."""
    edges = disc.mesh.boundary_edges_with(labels)
    d = disc.mesh.vertices[edges[:, 1]] - disc.mesh.vertices[edges[:, 0]]
    n = np.column_stack([d[:, 1], -d[:, 0]]) / np.hypot(d[:, 0], d[:, 1])[:, None]
    return _edge_flux(disc, u, edges, n)


def interface_flux(disc, u):
    """``int_Gamma u . n_f``: free flow leaving into the porous region."""
    mesh = disc.mesh
    return _edge_flux(disc, u, mesh.interface_edges, np.asarray(mesh.interface_normals))


def mass_balance(disc, u):
    """Fluid-region balance: outer boundary fluxes plus the interface flux.

    Returns ``(fluxes, imbalance, relative)`` with per-label outward fluxes.
    """
    mesh = disc.mesh
    sides = dict(zip(mesh.boundary_labels, mesh.boundary_side()))
    fluxes = {lab: boundary_flux(disc, u, lab) for lab, s in sides.items()
              if s == Subdomain.FLUID}
    fluxes["interface"] = interface_flux(disc, u)
    total = sum(fluxes.values())
    scale = sum(abs(v) for v in fluxes.values())
    return fluxes, total, (abs(total) / scale if scale > 0 else 0.0)


def prescribed_flux(mesh, labels, fn, t=0.0):
    """Outward flux of a boundary function through labelled segments (exact
    for data that is linear along each edge)."""
    edges = mesh.boundary_edges_with(labels)
    a, b = mesh.vertices[edges[:, 0]], mesh.vertices[edges[:, 1]]
    d = b - a
    n = np.column_stack([d[:, 1], -d[:, 0]])
    total = 0.0
    for s, w in zip(LINE4.points, LINE4.weights):
        p = a + s * d
        v1, v2 = fn(p[:, 0], p[:, 1], t)
        total += w * np.sum(np.asarray(v1) * n[:, 0] + np.asarray(v2) * n[:, 1])
    return float(total)


def block_speed_ratio(disc, state, blocks):
    """Mean Darcy speed inside the rectangular ``blocks`` over the mean in
    the rest of the porous region (area-weighted cell means)."""
    mesh = disc.mesh
    dm = disc.spaces.head
    centroid = mesh.centroids[dm.cells]
    grads = _darcy_cell_gradients(disc, state.phi, np.array([[1 / 3, 1 / 3]]))[:, 0, :]
    k = disc.assembler.regions.k[dm.cells]
    speed = k * np.hypot(grads[:, 0], grads[:, 1])
    area = mesh.areas[dm.cells]
    inside = np.zeros(len(dm.cells), dtype=bool)
    for x0, x1, y0, y1 in blocks:
        inside |= ((centroid[:, 0] > x0) & (centroid[:, 0] < x1)
                   & (centroid[:, 1] > y0) & (centroid[:, 1] < y1))
    if not inside.any() or inside.all():
        raise ValueError("blocks must cover some, but not all, porous cells")
    m_in = float(np.sum(speed[inside] * area[inside]) / np.sum(area[inside]))
    m_out = float(np.sum(speed[~inside] * area[~inside]) / np.sum(area[~inside]))
    return m_in, m_out, (m_in / m_out if m_out > 0 else np.inf)
