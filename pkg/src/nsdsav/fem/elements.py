"""Lagrange P1/P2 shape functions on the reference triangle.

Local P2 ordering: the three vertices, then the three edge midpoints with
edge ``i`` opposite vertex ``i``.
"""

import numpy as np

# local edges, edge i opposite vertex i
LOCAL_EDGES = np.array([[1, 2], [2, 0], [0, 1]])


def _barycentric(points):
    x, y = points[:, 0], points[:, 1]
    return np.stack([1.0 - x - y, x, y], axis=1)


# d(lambda_i)/d(x_ref, y_ref)
_DLAMBDA = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


def p1_values(points):
    """(n_points, 3) array of P1 shape function values."""
    return _barycentric(np.asarray(points, dtype=float))


def p1_ref_gradients(points):
    """(n_points, 3, 2) reference gradients (constant)."""
    n = len(points)
    return np.broadcast_to(_DLAMBDA, (n, 3, 2)).copy()


def p2_values(points):
    lam = _barycentric(np.asarray(points, dtype=float))
    out = np.empty((len(lam), 6))
    out[:, :3] = lam * (2.0 * lam - 1.0)
    for i, (j, k) in enumerate(LOCAL_EDGES):
        out[:, 3 + i] = 4.0 * lam[:, j] * lam[:, k]
    return out


def p2_ref_gradients(points):
    lam = _barycentric(np.asarray(points, dtype=float))
    out = np.empty((len(lam), 6, 2))
    for i in range(3):
        out[:, i, :] = (4.0 * lam[:, i] - 1.0)[:, None] * _DLAMBDA[i]
    for i, (j, k) in enumerate(LOCAL_EDGES):
        out[:, 3 + i, :] = 4.0 * (lam[:, k, None] * _DLAMBDA[j]
                                  + lam[:, j, None] * _DLAMBDA[k])
    return out


def p2_edge_values(s):
    """Quadratic traces on an edge parametrised by s in [0, 1].

    Columns: start vertex, end vertex, midpoint.
    """
    s = np.asarray(s, dtype=float)
    return np.stack([(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0),
                     4.0 * s * (1.0 - s)], axis=-1)


def element_geometry(vertices, triangles):
    """Jacobians, determinants and inverse-transpose maps per triangle.

    Returns ``(x0, J, detJ, invJT)`` with ``J[e] = [p1 - p0, p2 - p0]`` as
    columns, so that ``x = x0 + J @ xi``.
    """
    p = vertices[triangles]
    x0 = p[:, 0, :]
    J = np.stack([p[:, 1, :] - x0, p[:, 2, :] - x0], axis=2)
    detJ = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    invJ = np.empty_like(J)
    invJ[:, 0, 0] = J[:, 1, 1]
    invJ[:, 1, 1] = J[:, 0, 0]
    invJ[:, 0, 1] = -J[:, 0, 1]
    invJ[:, 1, 0] = -J[:, 1, 0]
    invJ /= detJ[:, None, None]
    return x0, J, detJ, np.transpose(invJ, (0, 2, 1))


def physical_gradients(ref_grads, invJT):
    """Map reference gradients (q, n, 2) to physical ones (e, q, n, 2)."""
    return np.einsum("eij,qnj->eqni", invJT, ref_grads)
