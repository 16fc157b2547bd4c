"""Linear, decoupled SAV time stepping for the coupled free-flow / Darcy system.

Each step solves two fluid and two porous systems with fixed matrices and
closes one scalar ``S = r^{n+1} / exp(-t^{n+1}/T)``; the unknowns are then
``u = u_bar + S u_tilde`` and likewise for pressure and head.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional

import numpy as np
import scipy.sparse as sp

from .fem.assembly import Assembler, ConstrainedOperator, build_spaces
from .fem.dofs import Dirichlet, FieldKind
from .linsolve import Factorization, SolverError


class Scheme(str, Enum):
    BE_SAV = "be-sav"
    BDF2_SAV = "bdf2-sav"


class SingularClosureError(SolverError):
    """The scalar closure denominator vanished."""


CLOSURE_GUARD = 1e-12


@dataclass
class State:
    u: np.ndarray
    p: np.ndarray
    phi: np.ndarray
    r: float
    t: float

    def copy(self):
        return State(self.u.copy(), self.p.copy(), self.phi.copy(), float(self.r), float(self.t))


@dataclass
class StepReport:
    step: int
    t: float
    S: float
    A: float
    B: float
    r: float
    r_error: float
    solve_residuals: dict
    energy_residual: Optional[float] = None
    energy_terms: Optional[dict] = None


class Discretization:
    """Spaces, constant operators, boundary data and loads for one scenario
    on one mesh."""

    def __init__(self, scenario, mesh):
        scenario.check(mesh)
        self.scenario = scenario
        self.mesh = mesh
        self.params = scenario.params
        self.spaces = build_spaces(mesh)
        self.assembler = Assembler(self.spaces, scenario.params)
        asm = self.assembler
        self.M_u = asm.form("M_u")
        self.A_u = asm.form("A_u")
        self.T_gamma = asm.form("T_gamma")
        self.B = asm.form("B")
        self.M_phi = asm.form("M_phi")
        self.A_phi = asm.form("A_phi")
        self.C = asm.form("C_gamma")
        self.Ct = sp.csr_matrix(self.C.T)
        self.n_u = self.spaces.velocity.size
        self.n_p = self.spaces.pressure.size
        self.n_phi = self.spaces.head.size
        self.velocity_bc = Dirichlet(mesh, self.spaces.velocity, scenario.velocity_bc)
        if scenario.head_bc:
            self.head_bc = Dirichlet(mesh, self.spaces.head, scenario.head_bc)
        else:
            self.head_bc = Dirichlet.empty(self.spaces.head)
        self._bjs = scenario.interface_traction()
        self._factors = {}
        self.n_factorizations = 0

    # -- constant systems ---------------------------------------------------

    def fluid_matrix(self, coef):
        """Saddle matrix ``[[coef M + A + T, -B^T], [-B, 0]]``."""
        K = coef * self.M_u + self.A_u + self.T_gamma
        return sp.bmat([[K, -self.B.T], [-self.B, None]], format="csr")

    def porous_matrix(self, coef):
        return sp.csr_matrix(coef * self.M_phi + self.A_phi)

    def systems(self, coef):
        """Constrained fluid and porous operators with their factorizations,
        built once per time-derivative coefficient."""
        key = float(coef)
        if key not in self._factors:
            fluid = ConstrainedOperator(self.fluid_matrix(coef), self.velocity_bc.dofs)
            porous = ConstrainedOperator(self.porous_matrix(coef), self.head_bc.dofs)
            self._factors[key] = (fluid, Factorization(fluid.matrix),
                                  porous, Factorization(porous.matrix))
            self.n_factorizations += 2
        return self._factors[key]

    # -- time-dependent data -------------------------------------------------

    def momentum_load(self, t):
        sc = self.scenario
        b = self.assembler.load(sc.f1, t, FieldKind.VELOCITY)
        if self._bjs is not None:
            b = b + self.assembler.interface_frame_load(self._bjs, t)
        return b

    def darcy_load(self, t):
        return self.assembler.load(self.scenario.f2, t, FieldKind.HEAD)

    def initial_state(self):
        sc = self.scenario
        vel, head = self.spaces.velocity, self.spaces.head
        u = vel.interpolate(sc.u0) if sc.u0 is not None else np.zeros(self.n_u)
        phi = head.interpolate(sc.phi0) if sc.phi0 is not None else np.zeros(self.n_phi)
        return State(u, np.zeros(self.n_p), phi, 1.0, 0.0)

    def split(self, x):
        return x[:self.n_u], x[self.n_u:]

    # -- energy pieces ---------------------------------------------------------

    def norm2(self, M, x):
        return float(x @ (M @ x))


def init(scenario, mesh):
    """Discretization and the interpolated initial state."""
    disc = Discretization(scenario, mesh)
    return disc, disc.initial_state()


def _closure(coef, T, E, rterm, N, Cphi, Ctu, bar, tilde):
    """Scalar ``S = B / A`` from the discrete r-equation."""
    ub, phib = bar
    ut, phit = tilde
    A = (coef + 1.0 / T) * E * E - N @ ut - ut @ Cphi + Ctu @ phit
    B = E * rterm + N @ ub + ub @ Cphi - Ctu @ phib
    if not np.isfinite(A) or abs(A) <= CLOSURE_GUARD * (coef + 1.0 / T) * E * E:
        raise SingularClosureError(f"closure denominator {A:.3e} below guard")
    return float(A), float(B), float(B / A)


def _sav_step(disc, coef, T, t1, hist_u, hist_phi, rterm, u_x, phi_x, step):
    """Shared solve sequence.

    ``hist_*`` are the mass-weighted history vectors (``M u^n / dt`` for BE),
    ``rterm`` the r history over ``exp(-t1/T)``, and ``u_x`` / ``phi_x``
    the explicit velocity and head.
    """
    fluid, F_f, porous, F_p = disc.systems(coef)
    E = np.exp(-t1 / T)
    n_u = disc.n_u

    N = disc.assembler.trilinear(u_x, u_x)
    Cphi = disc.C @ phi_x
    Ctu = disc.Ct @ u_x

    g_u = disc.velocity_bc.values(t1)
    g_phi = disc.head_bc.values(t1)

    b_bar = np.concatenate([disc.momentum_load(t1) + hist_u, np.zeros(disc.n_p)])
    b_bar = fluid.rhs(b_bar, g_u)
    b_til = fluid.rhs(np.concatenate([-N - Cphi, np.zeros(disc.n_p)]))
    x_bar, x_til = F_f.solve(b_bar), F_f.solve(b_til)

    c_bar = porous.rhs(disc.darcy_load(t1) + hist_phi, g_phi)
    c_til = porous.rhs(Ctu)
    phi_bar, phi_til = F_p.solve(c_bar), F_p.solve(c_til)

    A, B, S = _closure(coef, T, E, rterm, N, Cphi, Ctu,
                       (x_bar[:n_u], phi_bar), (x_til[:n_u], phi_til))
    x = x_bar + S * x_til
    phi = phi_bar + S * phi_til
    r = S * E
    state = State(x[:n_u].copy(), x[n_u:].copy(), phi, r, t1)
    res = {"fluid_bar": F_f.residual(x_bar, b_bar), "fluid_tilde": F_f.residual(x_til, b_til),
           "porous_bar": F_p.residual(phi_bar, c_bar), "porous_tilde": F_p.residual(phi_til, c_til)}
    report = StepReport(step=step, t=t1, S=S, A=A, B=B, r=r, r_error=abs(r - E),
                        solve_residuals=res)
    return state, report


def step_algorithm1(disc, state, dt, T, step=None):
    """One backward-Euler SAV step from ``state``."""
    coef = 1.0 / dt
    t1 = state.t + dt
    step = step if step is not None else int(round(t1 / dt))
    return _sav_step(disc, coef, T, t1,
                     coef * (disc.M_u @ state.u), coef * (disc.M_phi @ state.phi),
                     state.r / dt, state.u, state.phi, step)


def step_algorithm2(disc, state, prev, dt, T, step=None):
    """One BDF2 SAV step from ``(prev, state)`` = levels n-1, n."""
    coef = 1.5 / dt
    t1 = state.t + dt
    step = step if step is not None else int(round(t1 / dt))
    hu = disc.M_u @ (4.0 * state.u - prev.u) / (2.0 * dt)
    hphi = disc.M_phi @ (4.0 * state.phi - prev.phi) / (2.0 * dt)
    rterm = (4.0 * state.r - prev.r) / (2.0 * dt)
    return _sav_step(disc, coef, T, t1, hu, hphi, rterm,
                     2.0 * state.u - prev.u, 2.0 * state.phi - prev.phi, step)


# -- diagnostics ---------------------------------------------------------------


def _bdf2_diff(a, b, c, sq):
    """``(3a - 4b + c, a)`` expanded: |a|^2 - |b|^2 + |2a-b|^2 - |2b-c|^2 + |a-2b+c|^2."""
    return sq(a) - sq(b) + sq(2 * a - b) - sq(2 * b - c) + sq(a - 2 * b + c)


def energy_terms(disc, new, old, dt, T, scheme=Scheme.BE_SAV, prev=None):
    """Individual terms of the tested-equation identity at one step."""
    scheme = Scheme(scheme)
    su = lambda v: disc.norm2(disc.M_u, v)
    sphi = lambda v: disc.norm2(disc.M_phi, v)
    sr = lambda v: float(v * v)
    if scheme == Scheme.BE_SAV:
        kin = (su(new.u) - su(old.u) + su(new.u - old.u)) / (2 * dt)
        stor = (sphi(new.phi) - sphi(old.phi) + sphi(new.phi - old.phi)) / (2 * dt)
        aux = (sr(new.r) - sr(old.r) + sr(new.r - old.r)) / (2 * dt)
    else:
        if prev is None:
            raise ValueError("the BDF2 identity needs three consecutive states")
        kin = _bdf2_diff(new.u, old.u, prev.u, su) / (4 * dt)
        stor = _bdf2_diff(new.phi, old.phi, prev.phi, sphi) / (4 * dt)
        aux = _bdf2_diff(new.r, old.r, prev.r, sr) / (4 * dt)
    return {
        "kinetic": kin,
        "viscous": disc.norm2(disc.A_u, new.u),
        "slip": disc.norm2(disc.T_gamma, new.u),
        "storage": stor,
        "conduction": disc.norm2(disc.A_phi, new.phi),
        "auxiliary": aux,
        "damping": sr(new.r) / T,
    }


def forcing_pairing(disc, new):
    """``(f1, u) + g (f2, phi)`` plus the interface load, at ``new.t``."""
    return float(disc.momentum_load(new.t) @ new.u + disc.darcy_load(new.t) @ new.phi)


def energy_identity_residual(disc, new, old, dt, T, scheme=Scheme.BE_SAV, prev=None,
                             forced=None):
    """Normalized imbalance of the discrete energy identity.

    Returns ``(residual, terms)``. For forced problems the load pairing is
    moved to the right-hand side; ``forced=None`` decides from the scenario.
    """
    terms = energy_terms(disc, new, old, dt, T, scheme, prev)
    sc = disc.scenario
    if forced is None:
        forced = sc.f1 is not None or sc.f2 is not None or disc._bjs is not None
    rhs = forcing_pairing(disc, new) if forced else 0.0
    terms["forcing"] = rhs
    lhs = sum(v for k, v in terms.items() if k != "forcing")
    scale = sum(abs(v) for v in terms.values())
    if scale == 0.0:
        return 0.0, terms
    return float((lhs - rhs) / scale), terms


def monolithic_residual(disc, new, old, dt, T, scheme=Scheme.BE_SAV, prev=None):
    """Relative residual of the coupled scheme equations for ``new``.

    The unknowns (u, p, phi, S) are assembled into one linear system,
    independent of the bar/tilde splitting, and the split solution is
    substituted.
    """
    scheme = Scheme(scheme)
    t1 = new.t
    E = np.exp(-t1 / T)
    if scheme == Scheme.BE_SAV:
        coef = 1.0 / dt
        hu, hphi = coef * (disc.M_u @ old.u), coef * (disc.M_phi @ old.phi)
        rterm = old.r / dt
        ux, phix = old.u, old.phi
    else:
        coef = 1.5 / dt
        hu = disc.M_u @ (4 * old.u - prev.u) / (2 * dt)
        hphi = disc.M_phi @ (4 * old.phi - prev.phi) / (2 * dt)
        rterm = (4 * old.r - prev.r) / (2 * dt)
        ux, phix = 2 * old.u - prev.u, 2 * old.phi - prev.phi
    N = disc.assembler.trilinear(ux, ux)
    Cphi = disc.C @ phix
    Ctu = disc.Ct @ ux
    Ku = coef * disc.M_u + disc.A_u + disc.T_gamma
    Kphi = disc.porous_matrix(coef)
    nu_, np_, nphi = disc.n_u, disc.n_p, disc.n_phi

    col_u = (N + Cphi)[:, None]
    row_r_u = -(N + Cphi)[None, :]
    row_r_phi = Ctu[None, :]
    K = sp.bmat([
        [Ku, -disc.B.T, None, sp.csr_matrix(col_u)],
        [-disc.B, None, None, None],
        [None, None, Kphi, sp.csr_matrix(-Ctu[:, None])],
        [sp.csr_matrix(row_r_u), None, sp.csr_matrix(row_r_phi),
         sp.csr_matrix([[(coef + 1.0 / T) * E * E]])],
    ], format="lil")
    rhs = np.concatenate([disc.momentum_load(t1) + hu, np.zeros(np_),
                          disc.darcy_load(t1) + hphi, [E * rterm]])
    fixed = np.concatenate([disc.velocity_bc.dofs, nu_ + np_ + disc.head_bc.dofs])
    vals = np.concatenate([disc.velocity_bc.values(t1), disc.head_bc.values(t1)])
    K[fixed, :] = 0.0
    K[fixed, fixed] = 1.0
    rhs[fixed] = vals
    K = K.tocsr()
    S = new.r / E
    x = np.concatenate([new.u, new.p, new.phi, [S]])
    res = K @ x - rhs
    scale = np.abs(K) @ np.abs(x) + np.abs(rhs)
    denom = np.linalg.norm(scale)
    return float(np.linalg.norm(res) / denom) if denom > 0 else float(np.linalg.norm(res))


# -- time loop -------------------------------------------------------------------


@dataclass
class Trajectory:
    scheme: Scheme
    dt: float
    T: float
    states: List[State] = field(default_factory=list)
    reports: List[StepReport] = field(default_factory=list)
    stability_lhs: List[float] = field(default_factory=list)
    stability_rhs: float = 0.0
    energy: List[float] = field(default_factory=list)
    n_factorizations: int = 0

    @property
    def final(self):
        return self.states[-1]


def run(disc, scheme=Scheme.BE_SAV, dt=0.01, n_steps=None, stride=1, initial=None,
        callback: Optional[Callable] = None, monitor_energy=False, T=None):
    """Time loop with factor-once matrices.

    The final time is ``T = n_steps * dt``; it also sets the auxiliary decay
    ``exp(-t/T)``. ``callback(state, report)`` is called after every step.
    Keeps every ``stride``-th state plus the last one, and the running
    stability sum (kinetic, dissipation and auxiliary terms).
    """
    scheme = Scheme(scheme)
    if n_steps is None:
        n_steps = int(round(disc.scenario.final_time / dt))
    if n_steps < 0 or not dt > 0:
        raise ValueError("need dt > 0 and n_steps >= 0")
    T = T if T is not None else (n_steps * dt if n_steps > 0 else dt)
    state = initial.copy() if initial is not None else disc.initial_state()
    traj = Trajectory(scheme, dt, T)
    traj.states.append(state.copy())
    before = disc.n_factorizations

    def energy(s):
        return disc.norm2(disc.M_u, s.u) + disc.norm2(disc.M_phi, s.phi) + s.r ** 2

    traj.energy.append(energy(state))
    traj.stability_rhs = (energy(state) + dt * disc.norm2(disc.T_gamma, state.u))
    acc = 0.0
    prev = None
    for n in range(n_steps):
        if scheme == Scheme.BDF2_SAV and prev is not None:
            new, rep = step_algorithm2(disc, state, prev, dt, T, step=n + 1)
        else:
            new, rep = step_algorithm1(disc, state, dt, T, step=n + 1)
        if monitor_energy:
            used = Scheme.BDF2_SAV if (scheme == Scheme.BDF2_SAV and prev is not None) else Scheme.BE_SAV
            rep.energy_residual, rep.energy_terms = energy_identity_residual(
                disc, new, state, dt, T, used, prev)
        acc += (disc.norm2(disc.M_u, new.u - state.u) + disc.norm2(disc.M_phi, new.phi - state.phi)
                + (new.r - state.r) ** 2
                + dt * (disc.norm2(disc.A_u, new.u) + disc.norm2(disc.A_phi, new.phi))
                + 2 * dt / T * new.r ** 2)
        traj.stability_lhs.append(acc + energy(new) + dt * disc.norm2(disc.T_gamma, new.u))
        traj.energy.append(energy(new))
        traj.reports.append(rep)
        if callback is not None:
            callback(new, rep)
        prev, state = state, new
        if (n + 1) % stride == 0 or n + 1 == n_steps:
            traj.states.append(new.copy())
    traj.n_factorizations = disc.n_factorizations - before
    return traj
