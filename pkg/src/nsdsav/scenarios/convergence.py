"""Space-time error tables for the manufactured problem."""

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..stepper import Discretization, Scheme, run
from .library import manufactured


@dataclass
class ConvergenceRow:
    dt: float
    h: float
    err_u: float
    err_p: float
    err_phi: float
    rate_u: Optional[float] = None
    rate_p: Optional[float] = None
    rate_phi: Optional[float] = None
    r_error: Optional[float] = None


@dataclass
class ConvergenceTable:
    scheme: str
    rows: List[ConvergenceRow] = field(default_factory=list)

    def add(self, row):
        if self.rows:
            prev = self.rows[-1]
            ratio = math.log(prev.dt / row.dt)
            row.rate_u = _rate(prev.err_u, row.err_u, ratio)
            row.rate_p = _rate(prev.err_p, row.err_p, ratio)
            row.rate_phi = _rate(prev.err_phi, row.err_phi, ratio)
        self.rows.append(row)

    def rates(self, column):
        return [getattr(r, "rate_" + column) for r in self.rows[1:]]


def _rate(e_prev, e_cur, log_ratio):
    if not (e_prev > 0 and e_cur > 0) or log_ratio == 0:
        return None
    return math.log(e_prev / e_cur) / log_ratio


def default_h(scheme, dt):
    """``h^2 = dt`` for the first-order scheme and ``h = dt`` for BDF2."""
    return math.sqrt(dt) if Scheme(scheme) == Scheme.BE_SAV else dt


class ErrorAccumulator:
    """Per-step callback collecting the composite time norms."""

    def __init__(self, disc):
        self.disc = disc
        self.sum_u = 0.0
        self.sum_phi = 0.0
        self.max_p = 0.0
        self.max_r = 0.0
        self.T = None

    def __call__(self, state, report):
        d, ex, t = self.disc, self.disc.scenario.exact, state.t
        asm, sp_ = d.assembler, d.spaces
        eu = asm.norm(sp_.velocity, state.u, lambda x, y: ex.u(x, y, t),
                      lambda x, y: ex.grad_u(x, y, t), kind="H1")
        ep = asm.norm(sp_.pressure, state.p, lambda x, y: ex.p(x, y, t), kind="L2")
        ephi = asm.norm(sp_.head, state.phi, lambda x, y: ex.phi(x, y, t),
                        lambda x, y: ex.grad_phi(x, y, t), kind="H1")
        self.sum_u += eu ** 2
        self.sum_phi += ephi ** 2
        self.max_p = max(self.max_p, ep)
        if report is not None:
            self.max_r = max(self.max_r, report.r_error)

    def errors(self, dt):
        return math.sqrt(dt * self.sum_u), self.max_p, math.sqrt(dt * self.sum_phi)


def run_level(scenario, scheme, dt, h=None, T=None):
    """Errors of one (dt, h) level; returns a :class:`ConvergenceRow`."""
    T = scenario.final_time if T is None else T
    h = default_h(scheme, dt) if h is None else h
    n_steps = int(round(T / dt))
    if abs(n_steps * dt - T) > 1e-12:
        raise ValueError(f"dt={dt} does not divide the final time {T}")
    disc = Discretization(scenario, scenario.mesh(h))
    acc = ErrorAccumulator(disc)
    run(disc, scheme, dt, n_steps, stride=max(n_steps, 1), callback=acc, T=T)
    eu, ep, ephi = acc.errors(dt)
    return ConvergenceRow(dt=dt, h=h, err_u=eu, err_p=ep, err_phi=ephi, r_error=acc.max_r)


def convergence_study(scheme, dt_list, coupling=None, scenario=None, h_list=None):
    """Error table over a decreasing sequence of time steps.

    ``coupling`` is ``"h2=dt"`` or ``"h=dt"``; the default follows the
    scheme order. ``h_list`` overrides the coupling.
    """
    scheme = Scheme(scheme)
    scenario = scenario if scenario is not None else manufactured()
    if scenario.exact is None:
        raise ValueError("convergence studies need a scenario with an exact solution")
    if any(b >= a for a, b in zip(dt_list, dt_list[1:])):
        raise ValueError("dt_list must be decreasing")
    if coupling is None:
        coupling = "h2=dt" if scheme == Scheme.BE_SAV else "h=dt"
    if coupling not in ("h2=dt", "h=dt"):
        raise ValueError(f"unknown coupling {coupling!r}")
    table = ConvergenceTable(scheme.value)
    for i, dt in enumerate(dt_list):
        if h_list is not None:
            h = h_list[i]
        else:
            h = math.sqrt(dt) if coupling == "h2=dt" else dt
        table.add(run_level(scenario, scheme, dt, h))
    return table
