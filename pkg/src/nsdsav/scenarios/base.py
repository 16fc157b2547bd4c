"""Scenario description: geometry, coefficients, boundary data and forcing."""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from ..fem.assembly import PhysicalParams
from ..mesh import Subdomain, build_rect_coupled, read_msh


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class RectGeometry:
    """Stacked fluid and porous rectangles, boxes given as (x0, x1, y0, y1)."""

    fluid_box: Tuple[float, float, float, float] = (0.0, 1.0, 0.0, 1.0)
    porous_box: Tuple[float, float, float, float] = (0.0, 1.0, -1.0, 0.0)

    def mesh(self, h):
        if h is None or not h > 0:
            raise ScenarioError("a rectangle geometry needs a mesh size h > 0")
        fx0, fx1, fy0, fy1 = self.fluid_box
        px0, px1, py0, py1 = self.porous_box
        nx = max(1, int(round((fx1 - fx0) / h)))
        ny_f = max(1, int(round((fy1 - fy0) / h)))
        ny_p = max(1, int(round((py1 - py0) / h)))
        return build_rect_coupled(self.fluid_box, self.porous_box, nx, ny_f, ny_p)


@dataclass(frozen=True)
class FileGeometry:
    """Mesh read from a Gmsh MSH 2.2 file; ``h`` is ignored."""

    path: str

    def mesh(self, h=None):
        p = Path(self.path)
        if not p.is_file():
            raise ScenarioError(f"mesh file not found: {self.path}")
        return read_msh(p)


@dataclass(frozen=True)
class GeneratedGeometry:
    """Mesh produced by a generator ``factory(h)``."""

    factory: Callable
    default_h: float

    def mesh(self, h=None):
        return self.factory(self.default_h if h is None else h)


@dataclass(frozen=True)
class ExactSolution:
    """Closed-form fields, each a function of ``(x, y, t)``.

    ``grad_u`` returns ``((du1/dx, du1/dy), (du2/dx, du2/dy))`` and
    ``grad_phi`` returns ``(dphi/dx, dphi/dy)``.
    """

    u: Callable
    grad_u: Callable
    p: Callable
    phi: Callable
    grad_phi: Callable
    u_t: Callable
    phi_t: Callable


BoundarySpec = Sequence[Tuple[Tuple[str, ...], Optional[Callable]]]


@dataclass(frozen=True)
class Scenario:
    """One experiment.

    ``velocity_bc`` and ``head_bc`` are ordered ``(labels, fn)`` lists of
    Dirichlet segments (``fn=None`` means zero); where segments share an
    endpoint the later entry wins. ``head_natural`` lists zero-flux labels.
    Forcing terms are ``f1(x, y, t) -> (f1x, f1y)`` and ``f2(x, y, t)``.
    """

    name: str
    geometry: object
    params: PhysicalParams
    velocity_bc: BoundarySpec
    head_bc: BoundarySpec = ()
    head_natural: Tuple[str, ...] = ()
    f1: Optional[Callable] = None
    f2: Optional[Callable] = None
    u0: Optional[Callable] = None
    phi0: Optional[Callable] = None
    exact: Optional[ExactSolution] = None
    bjs_compensation: bool = False
    final_time: float = 1.0
    dt: Optional[float] = None
    h: Optional[float] = None
    extras: dict = field(default_factory=dict)

    def mesh(self, h=None):
        return self.geometry.mesh(self.h if h is None else h)

    def with_options(self, **changes):
        return replace(self, **changes)

    def check(self, mesh):
        """Every boundary label gets exactly one condition on the right side."""
        side = dict(zip(mesh.boundary_labels, mesh.boundary_side()))
        fluid_labels = [lab for lab, _ in self.velocity_bc for lab in lab]
        head_labels = [lab for labs, _ in self.head_bc for lab in labs] + list(self.head_natural)
        for labels, where in ((fluid_labels, "velocity"), (head_labels, "head")):
            dup = {lab for lab in labels if labels.count(lab) > 1}
            if dup:
                raise ScenarioError(f"{where} conditions repeat labels {sorted(dup)}")
        for lab, sub in side.items():
            want = fluid_labels if sub == Subdomain.FLUID else head_labels
            if lab not in want:
                kind = "velocity" if sub == Subdomain.FLUID else "head"
                raise ScenarioError(f"boundary segment {lab!r} has no {kind} condition")
        unknown = set(fluid_labels + head_labels) - set(side)
        if unknown:
            raise ScenarioError(f"conditions name unknown segments {sorted(unknown)}")
        if self.params.nu <= 0:
            raise ScenarioError("nu must be positive")
        return True

    def interface_traction(self):
        """BJS compensation density ``h(x, y, t)`` paired with ``v . tau``.

        The manufactured fields do not satisfy the slip law; adding
        ``int_Gamma h (v . tau)`` to the momentum load restores consistency.
        Returns ``None`` when the correction is switched off.
        """
        if not (self.bjs_compensation and self.exact is not None):
            return None
        ex, prm = self.exact, self.params
        return _BJSDensity(ex, prm)


class _BJSDensity:
    """``eta (u . tau) + nu tau . (grad u) n_f`` with the interface frame
    supplied per quadrature point by the assembler."""

    def __init__(self, exact, params):
        self.exact = exact
        self.params = params

    def __call__(self, x, y, t, normal, eta):
        n1, n2 = normal[..., 0], normal[..., 1]
        t1, t2 = -n2, n1
        u1, u2 = self.exact.u(x, y, t)
        (a11, a12), (a21, a22) = self.exact.grad_u(x, y, t)
        dudn1 = a11 * n1 + a12 * n2
        dudn2 = a21 * n1 + a22 * n2
        return eta * (u1 * t1 + u2 * t2) + self.params.nu * (t1 * dudn1 + t2 * dudn2)


def _zero_vec(x, y, t=None):
    z = np.zeros_like(np.asarray(x, dtype=float))
    return z, z.copy()
