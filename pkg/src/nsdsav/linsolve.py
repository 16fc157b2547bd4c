"""Factor-once / solve-many sparse direct solves.

Every system matrix in the time-stepping schemes is constant in time, so a
factorization is computed once per run and reused for every right-hand side.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

RESIDUAL_TOL = 1e-10


class SolverError(RuntimeError):
    pass


class SingularMatrixError(SolverError):
    def __init__(self, message, pivot=None):
        self.pivot = pivot
        super().__init__(message)


class Factorization:
    """Sparse LU of a square matrix (SuperLU, COLAMD ordering).

    The object is immutable after construction; :meth:`solve` may be called
    concurrently.
    """

    def __init__(self, A, pivot_rtol=1e-13):
        A = sp.csc_matrix(A, dtype=float)
        if A.shape[0] != A.shape[1]:
            raise SolverError(f"matrix must be square, got {A.shape}")
        self.shape = A.shape
        self.matrix = A
        try:
            self._lu = spla.splu(A, permc_spec="COLAMD")
        except RuntimeError as exc:
            raise SingularMatrixError(f"factorization failed: {exc}", pivot=0.0) from None
        udiag = np.abs(self._lu.U.diagonal())
        scale = abs(A).max() if A.nnz else 0.0
        self.min_pivot = float(udiag.min()) if len(udiag) else 0.0
        if len(udiag) and (scale == 0.0 or self.min_pivot <= pivot_rtol * scale):
            raise SingularMatrixError(
                f"near-singular pivot {self.min_pivot:.3e} (matrix scale {scale:.3e})",
                pivot=self.min_pivot)
        self.perm_c = self._lu.perm_c

    def residual(self, x, b):
        r = self.matrix @ x - b
        nb = np.linalg.norm(b)
        return float(np.linalg.norm(r) / nb) if nb > 0 else float(np.linalg.norm(r))

    def solve(self, b, refine=True):
        """Solve ``A x = b``; one step of iterative refinement when the
        relative residual exceeds ``RESIDUAL_TOL``."""
        b = np.asarray(b, dtype=float)
        if b.shape != (self.shape[0],):
            raise SolverError(f"right-hand side of shape {b.shape} does not match {self.shape}")
        x = self._lu.solve(b)
        if refine and self.residual(x, b) > RESIDUAL_TOL:
            x = x + self._lu.solve(b - self.matrix @ x)
        return x


def factorize(A):
    return Factorization(A)


def solve(F, rhs):
    return F.solve(rhs)
