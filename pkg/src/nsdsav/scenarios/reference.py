"""Fully implicit backward-Euler comparator with Picard iteration.

Every step solves the coupled system in one block, with convection
linearized about the previous iterate and the interface coupling implicit.
"""

from dataclasses import dataclass, field
from typing import List

import numpy as np
import scipy.sparse as sp

from ..fem.assembly import ConstrainedOperator
from ..linsolve import Factorization, SolverError
from ..stepper import Discretization, State


class PicardDivergence(SolverError):
    def __init__(self, message, residual):
        self.residual = residual
        super().__init__(message)


@dataclass
class ReferenceTrajectory:
    dt: float
    states: List[State] = field(default_factory=list)
    iterations: List[int] = field(default_factory=list)
    changes: List[float] = field(default_factory=list)

    @property
    def final(self):
        return self.states[-1]


def implicit_step(disc, state, dt, picard_tol=1e-10, picard_max=50):
    """One coupled backward-Euler step; returns ``(state, iterations, change)``."""
    t1 = state.t + dt
    n_u, n_p = disc.n_u, disc.n_p
    Ku = disc.M_u / dt + disc.A_u + disc.T_gamma
    Kphi = disc.porous_matrix(1.0 / dt)
    rhs = np.concatenate([disc.momentum_load(t1) + disc.M_u @ state.u / dt, np.zeros(n_p),
                          disc.darcy_load(t1) + disc.M_phi @ state.phi / dt])
    fixed = np.concatenate([disc.velocity_bc.dofs, n_u + n_p + disc.head_bc.dofs])
    values = np.concatenate([disc.velocity_bc.values(t1), disc.head_bc.values(t1)])
    x = np.concatenate([state.u, state.p, state.phi])
    change = np.inf
    for it in range(1, picard_max + 1):
        N = disc.assembler.convection_matrix(x[:n_u])
        K = sp.bmat([[Ku + N, -disc.B.T, disc.C],
                     [-disc.B, None, None],
                     [-disc.Ct, None, Kphi]], format="csr")
        op = ConstrainedOperator(K, fixed)
        x_new = Factorization(op.matrix).solve(op.rhs(rhs, values))
        size = np.linalg.norm(x_new)
        change = np.linalg.norm(x_new - x) / size if size > 0 else np.linalg.norm(x_new - x)
        x = x_new
        if change <= picard_tol:
            break
    else:
        raise PicardDivergence(f"Picard iteration stalled at relative change {change:.3e} "
                               f"after {picard_max} iterations", change)
    u, p, phi = x[:n_u], x[n_u:n_u + n_p], x[n_u + n_p:]
    # the comparator has no auxiliary variable; r is carried unchanged
    return State(u.copy(), p.copy(), phi.copy(), state.r, t1), it, float(change)


def reference_implicit_solve(scenario, dt, n_steps, picard_tol=1e-10, picard_max=50,
                             mesh=None, disc=None, stride=1, callback=None):
    """Run the implicit comparator; ``disc`` may be shared with a SAV run."""
    if not picard_tol > 0:
        raise ValueError("picard_tol must be positive")
    if disc is None:
        disc = Discretization(scenario, mesh if mesh is not None else scenario.mesh())
    state = disc.initial_state()
    traj = ReferenceTrajectory(dt, [state.copy()])
    for n in range(n_steps):
        state, its, change = implicit_step(disc, state, dt, picard_tol, picard_max)
        traj.iterations.append(its)
        traj.changes.append(change)
        if callback is not None:
            callback(state, None)
        if (n + 1) % stride == 0 or n + 1 == n_steps:
            traj.states.append(state.copy())
    return traj
