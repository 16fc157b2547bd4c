"""Quadrature rules on the reference triangle and the unit interval."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TriangleRule:
    """Quadrature on the reference triangle {(x, y): x, y >= 0, x + y <= 1}.

    ``points`` are reference coordinates, ``weights`` sum to the reference
    area 1/2.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int


@dataclass(frozen=True)
class LineRule:
    """Quadrature on [0, 1]; weights sum to 1."""

    points: np.ndarray
    weights: np.ndarray
    degree: int


def _orbit3(a, b):
    # barycentric permutations of (a, b, b)
    return [(a, b, b), (b, a, b), (b, b, a)]


def _orbit6(a, b, c):
    return [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]


def dunavant6():
    """12-point, degree-6 symmetric rule (Dunavant 1985)."""
    groups = [
        (0.116786275726379, _orbit3(0.501426509658179, 0.249286745170910)),
        (0.050844906370207, _orbit3(0.873821971016996, 0.063089014491502)),
        (0.082851075618374,
         _orbit6(0.053145049844817, 0.310352451033784, 0.636502499121399)),
    ]
    bary, w = [], []
    for weight, pts in groups:
        for p in pts:
            bary.append(p)
            w.append(weight)
    bary = np.array(bary)
    # barycentric (l0, l1, l2) -> reference (x, y) = (l1, l2)
    points = bary[:, 1:]
    weights = 0.5 * np.array(w)
    return TriangleRule(points, weights, 6)


def collapsed_gauss(n):
    """Tensor Gauss-Legendre rule mapped onto the triangle by the Duffy map.

    Exact for polynomials of total degree ``2 * n - 2`` (the Jacobian adds one
    degree in the collapsed direction). Used as a high-order reference rule.
    """
    x, w = np.polynomial.legendre.leggauss(n)
    s = 0.5 * (x + 1.0)
    ws = 0.5 * w
    S, T = np.meshgrid(s, s, indexing="ij")
    WS, WT = np.meshgrid(ws, ws, indexing="ij")
    px = S.ravel()
    py = (T * (1.0 - S)).ravel()
    weights = (WS * WT * (1.0 - S)).ravel()
    return TriangleRule(np.column_stack([px, py]), weights, 2 * n - 2)


def gauss_line(n=4):
    """n-point Gauss-Legendre rule on [0, 1], exact to degree 2n - 1."""
    x, w = np.polynomial.legendre.leggauss(n)
    return LineRule(0.5 * (x + 1.0), 0.5 * w, 2 * n - 1)


TRI6 = dunavant6()
LINE4 = gauss_line(4)
