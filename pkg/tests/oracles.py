"""Independent reference computations for the element-level tests.

Basis functions come from a physical-coordinate Vandermonde solve, volume
integrals from a collapsed Gauss rule and edge integrals from numpy's
Gauss-Legendre nodes, so nothing here reuses the package's shape functions
or production quadrature.
"""

import numpy as np

from nsdsav.fem.quadrature import collapsed_gauss

RULE = collapsed_gauss(8)   # exact to degree 14
EDGE_X, EDGE_W = np.polynomial.legendre.leggauss(8)


def local_nodes(p, degree):
    """Physical node positions in the package's local order."""
    if degree == 1:
        return p
    mids = [0.5 * (p[1] + p[2]), 0.5 * (p[2] + p[0]), 0.5 * (p[0] + p[1])]
    return np.vstack([p, mids])


def _monomials(x, y, degree):
    one = np.ones_like(x)
    if degree == 1:
        return np.stack([one, x, y], -1)
    return np.stack([one, x, y, x * x, x * y, y * y], -1)


def _monomial_grads(x, y, degree):
    z, one = np.zeros_like(x), np.ones_like(x)
    if degree == 1:
        return np.stack([z, one, z], -1), np.stack([z, z, one], -1)
    gx = np.stack([z, one, z, 2 * x, y, z], -1)
    gy = np.stack([z, z, one, z, x, 2 * y], -1)
    return gx, gy


class LocalBasis:
    """Nodal Lagrange basis on one physical triangle."""

    def __init__(self, p, degree):
        self.p = np.asarray(p, float)
        self.degree = degree
        nodes = local_nodes(self.p, degree)
        V = _monomials(nodes[:, 0], nodes[:, 1], degree)
        self.coef = np.linalg.solve(V, np.eye(len(nodes)))

    def values(self, x, y):
        return _monomials(x, y, self.degree) @ self.coef

    def grads(self, x, y):
        gx, gy = _monomial_grads(x, y, self.degree)
        return gx @ self.coef, gy @ self.coef

    def quadrature(self):
        a, b, c = self.p
        J = np.column_stack([b - a, c - a])
        xy = a + RULE.points @ J.T
        return xy[:, 0], xy[:, 1], RULE.weights * abs(np.linalg.det(J))


def element_mass(p, degree, coef=1.0):
    B = LocalBasis(p, degree)
    x, y, w = B.quadrature()
    phi = B.values(x, y)
    return coef * np.einsum("q,qi,qj->ij", w, phi, phi)


def element_stiffness(p, degree, coef=1.0):
    B = LocalBasis(p, degree)
    x, y, w = B.quadrature()
    gx, gy = B.grads(x, y)
    return coef * (np.einsum("q,qi,qj->ij", w, gx, gx) + np.einsum("q,qi,qj->ij", w, gy, gy))


def element_divergence(p):
    """(3, 2, 6): entry [q, c, j] = int psi_q d(phi_j)/dx_c."""
    P1, P2 = LocalBasis(p, 1), LocalBasis(p, 2)
    x, y, w = P2.quadrature()
    q = P1.values(x, y)
    gx, gy = P2.grads(x, y)
    return np.stack([np.einsum("q,qa,qj->aj", w, q, gx), np.einsum("q,qa,qj->aj", w, q, gy)], 1)


def dense_global(mesh, dm, local_fn):
    """Scatter element matrices into a dense matrix using ``dm``'s numbering."""
    n = dm.n_nodes
    A = np.zeros((n, n))
    for cell, nodes in zip(dm.cells, dm.cell_nodes):
        A[np.ix_(nodes, nodes)] += local_fn(mesh.vertices[mesh.triangles[cell]])
    return A


def edge_points(a, b):
    s = 0.5 * (EDGE_X + 1.0)
    pts = a + s[:, None] * (b - a)
    return pts, 0.5 * EDGE_W * np.linalg.norm(b - a)


def trilinear_dense(mesh, dm, u, v, w, normals=None):
    """a_N(u, v, w) by element loops, with the interface correction."""
    comps = [c.reshape(2, dm.n_nodes) for c in (u, v, w)]
    total = 0.0
    for cell, nodes in zip(dm.cells, dm.cell_nodes):
        B = LocalBasis(mesh.vertices[mesh.triangles[cell]], 2)
        x, y, wq = B.quadrature()
        phi = B.values(x, y)
        gx, gy = B.grads(x, y)
        uq = comps[0][:, nodes] @ phi.T
        wv = comps[2][:, nodes] @ phi.T
        for c in range(2):
            dvx = gx @ comps[1][c, nodes]
            dvy = gy @ comps[1][c, nodes]
            total += np.sum(wq * (uq[0] * dvx + uq[1] * dvy) * wv[c])
    total -= 0.5 * interface_integral(mesh, dm, lambda U, V, W, n: (U * V).sum(0) * (W * n[:, None]).sum(0),
                                      u, v, w)
    return total


def interface_integral(mesh, dm, integrand, *fields):
    """Sum over interface edges of int integrand(traces..., normal)."""
    total = 0.0
    owners = mesh.interface_owners
    for (a, b), n, (tf, _) in zip(mesh.interface_edges, mesh.interface_normals, owners):
        pa, pb = mesh.vertices[a], mesh.vertices[b]
        pts, wts = edge_points(pa, pb)
        B = LocalBasis(mesh.vertices[mesh.triangles[tf]], dm.degree)
        phi = B.values(pts[:, 0], pts[:, 1])
        loc = np.flatnonzero(dm.cells == tf)[0]
        nodes = dm.cell_nodes[loc]
        traces = [f.reshape(dm.ncomp, dm.n_nodes)[:, nodes] @ phi.T for f in fields]
        total += np.sum(wts * integrand(*traces, np.asarray(n)))
    return total


def interface_matrices(mesh, asm):
    """Dense slip (T) and coupling (C) matrices edge by edge."""
    vdm, hdm = asm.spaces.velocity, asm.spaces.head
    T = np.zeros((vdm.size, vdm.size))
    C = np.zeros((vdm.size, hdm.size))
    k = asm.regions.k
    for (a, b), n, (tf, tp) in zip(mesh.interface_edges, mesh.interface_normals,
                                   mesh.interface_owners):
        pts, w = edge_points(mesh.vertices[a], mesh.vertices[b])
        fb = LocalBasis(mesh.vertices[mesh.triangles[tf]], 2).values(pts[:, 0], pts[:, 1])
        pb = LocalBasis(mesh.vertices[mesh.triangles[tp]], 2).values(pts[:, 0], pts[:, 1])
        vn = vdm.cell_nodes[np.flatnonzero(vdm.cells == tf)[0]]
        hn = hdm.cell_nodes[np.flatnonzero(hdm.cells == tp)[0]]
        tau = np.array([-n[1], n[0]])
        eta = asm.params.alpha * np.sqrt(asm.params.nu * asm.params.g / (2 * k[tp]))
        base = np.einsum("q,qi,qj->ij", w, fb, fb)
        cross = np.einsum("q,qi,qj->ij", w, fb, pb)
        for c in range(2):
            C[np.ix_(vn + c * vdm.n_nodes, hn)] += asm.params.g * n[c] * cross
            for d in range(2):
                T[np.ix_(vn + c * vdm.n_nodes, vn + d * vdm.n_nodes)] += eta * tau[c] * tau[d] * base
    return T, C
