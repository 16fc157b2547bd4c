import numpy as np
import pytest
import scipy.sparse as sp

from nsdsav.linsolve import Factorization, SingularMatrixError, SolverError, factorize, solve


def test_solves_spd_system(rng):
    n = 40
    Q = sp.random(n, n, density=0.1, random_state=1)
    A = (Q @ Q.T + sp.eye(n)).tocsr()
    b = rng.standard_normal(n)
    F = factorize(A)
    x = solve(F, b)
    assert F.residual(x, b) < 1e-12
    np.testing.assert_allclose(x, np.linalg.solve(A.toarray(), b), rtol=1e-10)


def test_saddle_point_system(unit_mesh):
    from nsdsav.fem import PhysicalParams, build_spaces, Assembler, Dirichlet, ConstrainedOperator

    asm = Assembler(build_spaces(unit_mesh), PhysicalParams())
    K = asm.form("M_u") + asm.form("A_u")
    B = asm.form("B")
    S = sp.bmat([[K, -B.T], [-B, None]], format="csr")
    bc = Dirichlet(unit_mesh, asm.spaces.velocity, [(("fluid_left", "fluid_right", "fluid_top"), None)])
    op = ConstrainedOperator(S, bc.dofs)
    F = Factorization(op.matrix)
    b = op.rhs(np.r_[np.ones(K.shape[0]), np.zeros(B.shape[0])])
    x = F.solve(b)
    assert F.residual(x, b) < 1e-12


def test_factor_once_many_right_hand_sides(rng):
    A = sp.diags([1.0, 4.0, 2.0, 8.0]).tocsr() + sp.eye(4, k=1) * 0.5
    F = Factorization(A)
    for _ in range(5):
        b = rng.standard_normal(4)
        np.testing.assert_allclose(A @ F.solve(b), b, atol=1e-14)


def test_singular_matrix_detected():
    A = sp.csr_matrix(np.array([[1.0, 2.0], [2.0, 4.0]]))
    with pytest.raises(SingularMatrixError) as err:
        Factorization(A)
    assert err.value.pivot is not None


def test_zero_matrix_and_shape_errors():
    with pytest.raises(SingularMatrixError):
        Factorization(sp.csr_matrix((3, 3)))
    with pytest.raises(SolverError):
        Factorization(sp.csr_matrix(np.ones((2, 3))))
    F = Factorization(sp.eye(3))
    with pytest.raises(SolverError):
        F.solve(np.ones(4))


def test_badly_scaled_rows_still_solve(rng):
    n = 30
    base = sp.diags([-1.0, 4.0, -1.0], [-1, 0, 1], shape=(n, n))
    A = (sp.diags(np.logspace(0, -8, n)) @ base).tocsr()
    x_true = rng.standard_normal(n)
    b = A @ x_true
    F = Factorization(A)
    np.testing.assert_allclose(F.solve(b), x_true, rtol=1e-8)
