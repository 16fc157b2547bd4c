"""The built-in experiments."""

from pathlib import Path

import numpy as np

from ..fem.assembly import PhysicalParams
from .base import ExactSolution, FileGeometry, GeneratedGeometry, RectGeometry, Scenario
from .yshape_mesh import INLETS, OUTLET, POROUS_LABEL, build_yshape

PI = np.pi

UNIT_FLUID_LABELS = ("fluid_left", "fluid_right", "fluid_top")
UNIT_POROUS_LABELS = ("porous_left", "porous_right", "porous_bottom")

# low-conductivity inclusions of the filter, (x0, x1, y0, y1)
FILTER_BLOCKS = ((0.5, 1.5, 1.0, 1.125), (0.75, 1.25, 0.5, 0.625))
FILTER_K_LOW = 1e-6

YSHAPE_MESH = Path(__file__).resolve().parent.parent / "data" / "yshape.msh"
YSHAPE_H = 1.0 / 36.0


def manufactured_exact(c=0.01, nu=1e-3, k=0.1, S0=1.0):
    """Closed-form fields and the forcing that makes them a solution."""

    def tp(t):
        return t ** 4

    def dtp(t):
        return 4.0 * t ** 3

    def u_shape(x, y):
        return (np.sin(PI * x) ** 2 * np.sin(2 * PI * y),
                -np.sin(2 * PI * x) * np.sin(PI * y) ** 2)

    def u(x, y, t):
        a, b = u_shape(x, y)
        return c * a * tp(t), c * b * tp(t)

    def u_t(x, y, t):
        a, b = u_shape(x, y)
        return c * a * dtp(t), c * b * dtp(t)

    def grad_u(x, y, t):
        s = c * tp(t)
        s2x, s2y = np.sin(2 * PI * x), np.sin(2 * PI * y)
        return ((s * PI * s2x * s2y, s * 2 * PI * np.sin(PI * x) ** 2 * np.cos(2 * PI * y)),
                (-s * 2 * PI * np.cos(2 * PI * x) * np.sin(PI * y) ** 2, -s * PI * s2x * s2y))

    def lap_u(x, y, t):
        s = c * tp(t)
        l1 = 2 * PI ** 2 * np.sin(2 * PI * y) * (np.cos(2 * PI * x) - 2 * np.sin(PI * x) ** 2)
        l2 = 2 * PI ** 2 * np.sin(2 * PI * x) * (2 * np.sin(PI * y) ** 2 - np.cos(2 * PI * y))
        return s * l1, s * l2

    def p(x, y, t):
        return c * y * np.cos(PI * x) * tp(t)

    def grad_p(x, y, t):
        return -c * PI * y * np.sin(PI * x) * tp(t), c * np.cos(PI * x) * tp(t)

    def phi(x, y, t):
        return c * np.sin(PI * x) * np.sin(PI * y) ** 2 * tp(t)

    def phi_t(x, y, t):
        return c * np.sin(PI * x) * np.sin(PI * y) ** 2 * dtp(t)

    def grad_phi(x, y, t):
        s = c * tp(t)
        return (s * PI * np.cos(PI * x) * np.sin(PI * y) ** 2,
                s * PI * np.sin(PI * x) * np.sin(2 * PI * y))

    def lap_phi(x, y, t):
        s = c * tp(t)
        return s * PI ** 2 * np.sin(PI * x) * (2 * np.cos(2 * PI * y) - np.sin(PI * y) ** 2)

    def f1(x, y, t):
        (a11, a12), (a21, a22) = grad_u(x, y, t)
        u1, u2 = u(x, y, t)
        du1, du2 = u_t(x, y, t)
        l1, l2 = lap_u(x, y, t)
        px, py = grad_p(x, y, t)
        return (du1 - nu * l1 + u1 * a11 + u2 * a12 + px,
                du2 - nu * l2 + u1 * a21 + u2 * a22 + py)

    def f2(x, y, t):
        return S0 * phi_t(x, y, t) - k * lap_phi(x, y, t)

    exact = ExactSolution(u=u, grad_u=grad_u, p=p, phi=phi, grad_phi=grad_phi,
                          u_t=u_t, phi_t=phi_t)
    return exact, f1, f2


def manufactured(c=0.01, nu=1e-3, k=0.1, alpha=1.0, S0=1.0, g=1.0, T=1.0,
                 bjs_compensation=True):
    """Smooth solution on [0,1]^2 over [0,1] x [-1,0] with a t^4 profile."""
    exact, f1, f2 = manufactured_exact(c, nu, k, S0)
    params = PhysicalParams(nu=nu, g=g, S0=S0, alpha=alpha, k=k)
    return Scenario(
        name="manufactured",
        geometry=RectGeometry(),
        params=params,
        velocity_bc=[(UNIT_FLUID_LABELS, exact.u)],
        head_bc=[(UNIT_POROUS_LABELS, exact.phi)],
        f1=f1, f2=f2,
        u0=lambda x, y: exact.u(x, y, 0.0),
        phi0=lambda x, y: exact.phi(x, y, 0.0),
        exact=exact,
        bjs_compensation=bjs_compensation,
        final_time=T,
    )


def quiescent(nu=1.0, k=1.0, alpha=1.0, S0=1.0, g=1.0, T=1.0):
    """Unforced problem with homogeneous data on the unit square pair."""
    return Scenario(
        name="quiescent",
        geometry=RectGeometry(),
        params=PhysicalParams(nu=nu, g=g, S0=S0, alpha=alpha, k=k),
        velocity_bc=[(UNIT_FLUID_LABELS, None)],
        head_bc=[(UNIT_POROUS_LABELS, None)],
        final_time=T,
    )


def _lid(x, y, t):
    return np.ones_like(x), np.zeros_like(x)


def cavity(T=0.5, dt=0.01, h=1.0 / 64.0):
    """Lid-driven cavity above a porous block; all coefficients 1."""
    return Scenario(
        name="cavity",
        geometry=RectGeometry(),
        params=PhysicalParams(),
        # the lid comes last so it owns the two top corners
        velocity_bc=[(("fluid_left", "fluid_right"), None), (("fluid_top",), _lid)],
        head_bc=[(UNIT_POROUS_LABELS, None)],
        final_time=T, dt=dt, h=h,
    )


def filter_conductivity(blocks=FILTER_BLOCKS, k_low=FILTER_K_LOW, k_high=1.0):
    def k(x, y):
        out = np.full(np.shape(x), k_high, dtype=float)
        for x0, x1, y0, y1 in blocks:
            out[(x > x0) & (x < x1) & (y > y0) & (y < y1)] = k_low
        return out
    return k


def _filter_inflow(x, y, t):
    return np.zeros_like(x), x * (x - 2.0)


def filtration(T=0.5, dt=0.01, h=1.0 / 32.0, blocks=FILTER_BLOCKS, k_low=FILTER_K_LOW):
    """Flow pushed from the top through a filter with two impermeable blocks."""
    return Scenario(
        name="filtration",
        geometry=RectGeometry((0.0, 2.0, 1.5, 2.0), (0.0, 2.0, 0.0, 1.5)),
        params=PhysicalParams(k=filter_conductivity(blocks, k_low)),
        velocity_bc=[(("fluid_left", "fluid_right"), None), (("fluid_top",), _filter_inflow)],
        head_bc=[(("porous_bottom",), None)],
        head_natural=("porous_left", "porous_right"),
        final_time=T, dt=dt, h=h,
        extras={"blocks": tuple(blocks)},
    )


def yshape(mesh_path=None, omega1=0.5, omega2=1.0, k=1.0, T=0.5, dt=0.01):
    """Karst conduit: inflow on HA and CD, outflow on FG.

    ``mesh_path=None`` uses the packaged mesh; ``"generate"`` builds one.
    """
    def inflow_x(x, y, t):
        return np.full_like(x, omega1), np.zeros_like(x)

    def inflow_y(x, y, t):
        return np.zeros_like(x), np.full_like(x, omega1)

    def outflow(x, y, t):
        return np.full_like(x, omega2), np.zeros_like(x)

    if mesh_path == "generate":
        geometry = GeneratedGeometry(build_yshape, YSHAPE_H)
    else:
        geometry = FileGeometry(str(mesh_path if mesh_path is not None else YSHAPE_MESH))
    ha, cd = INLETS
    return Scenario(
        name="yshape",
        geometry=geometry,
        params=PhysicalParams(k=k),
        velocity_bc=[((ha,), inflow_x), ((cd,), inflow_y), ((OUTLET,), outflow)],
        head_bc=[((POROUS_LABEL,), None)],
        final_time=T, dt=dt,
        extras={"omega1": omega1, "omega2": omega2},
    )


SCENARIOS = {
    "manufactured": manufactured,
    "cavity": cavity,
    "filtration": filtration,
    "yshape": yshape,
    "quiescent": quiescent,
}
