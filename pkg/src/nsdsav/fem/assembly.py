"""Sparse assembly of the coupled free-flow / porous-media weak forms.

Velocity vectors use the component-blocked layout of
:class:`~nsdsav.fem.dofs.DofMap`; operators are ``scipy.sparse`` CSR
matrices with sorted column indices.
"""

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp

from ..mesh import Mesh, RegionMap
from . import elements
from .dofs import DofMap, FieldKind, build_dofmap
from .quadrature import LINE4, TRI6

SYMMETRIC_FORMS = ("M_u", "A_u", "T_gamma", "M_phi", "A_phi")
FORMS = SYMMETRIC_FORMS + ("B", "C_gamma", "C_gamma_head")


class AssemblyError(ValueError):
    pass


@dataclass(frozen=True)
class PhysicalParams:
    """Physical coefficients; ``k`` is a constant or ``k(x, y)`` evaluated
    per triangle at its centroid."""

    nu: float = 1.0
    g: float = 1.0
    S0: float = 1.0
    alpha: float = 1.0
    k: Union[float, Callable] = 1.0

    def __post_init__(self):
        for name in ("nu", "g", "S0", "alpha"):
            if not getattr(self, name) > 0:
                raise AssemblyError(f"{name} must be positive")
        if not callable(self.k) and not self.k > 0:
            raise AssemblyError("k must be positive")

    def regions(self, mesh):
        if callable(self.k):
            rm = RegionMap.from_function(mesh, self.k)
        else:
            rm = RegionMap.uniform(mesh, self.k)
        rm.check(mesh)
        return rm

    def eta(self, k):
        """BJS slip coefficient for conductivity ``k`` (tr K = 2k in 2D)."""
        return self.alpha * np.sqrt(self.nu * self.g / (2.0 * np.asarray(k, dtype=float)))


@dataclass(frozen=True, eq=False)
class Spaces:
    mesh: Mesh
    velocity: DofMap
    pressure: DofMap
    head: DofMap


def build_spaces(mesh):
    return Spaces(mesh, build_dofmap(mesh, FieldKind.VELOCITY),
                  build_dofmap(mesh, FieldKind.PRESSURE),
                  build_dofmap(mesh, FieldKind.HEAD))


def _coo(rows, cols, vals, shape):
    A = sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=shape).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


class _VolumeData:
    """Quadrature data on the triangles of one subdomain."""

    def __init__(self, mesh, cells, rule=TRI6):
        x0, J, detJ, invJT = elements.element_geometry(mesh.vertices, mesh.triangles[cells])
        self.rule = rule
        self.wdet = rule.weights[None, :] * np.abs(detJ)[:, None]
        self.xq = x0[:, None, :] + np.einsum("eij,qj->eqi", J, rule.points)
        self.p1 = elements.p1_values(rule.points)
        self.p2 = elements.p2_values(rule.points)
        self.dp2 = elements.physical_gradients(elements.p2_ref_gradients(rule.points), invJT)
        self.dp1 = elements.physical_gradients(elements.p1_ref_gradients(rule.points), invJT)

    def basis(self, degree):
        return (self.p2, self.dp2) if degree == 2 else (self.p1, self.dp1)


class _InterfaceData:
    """Edge quadrature data along the interface."""

    def __init__(self, spaces, params, regions, rule=LINE4):
        mesh = spaces.mesh
        E = mesh.interface_edges
        a, b = mesh.vertices[E[:, 0]], mesh.vertices[E[:, 1]]
        d = b - a
        self.length = np.hypot(d[:, 0], d[:, 1])
        self.normal = np.asarray(mesh.interface_normals)
        # tangent = normal rotated counter-clockwise by 90 degrees
        self.tangent = np.column_stack([-self.normal[:, 1], self.normal[:, 0]])
        self.vel_nodes = spaces.velocity.edge_nodes(mesh, E) if len(E) else np.zeros((0, 3), int)
        self.head_nodes = spaces.head.edge_nodes(mesh, E) if len(E) else np.zeros((0, 3), int)
        self.phi = elements.p2_edge_values(rule.points)            # (q, 3)
        self.wlen = rule.weights[None, :] * self.length[:, None]   # (i, q)
        self.xq = a[:, None, :] + rule.points[None, :, None] * d[:, None, :]
        porous_tri = mesh.interface_owners[:, 1] if len(E) else np.zeros(0, int)
        self.eta = params.eta(regions.k[porous_tri])


class Assembler:
    """Assembles operators, loads, trilinear terms and norms for one mesh."""

    def __init__(self, spaces, params, regions=None):
        self.spaces = spaces
        self.mesh = spaces.mesh
        self.params = params
        self.regions = regions if regions is not None else params.regions(spaces.mesh)
        self.fluid = _VolumeData(self.mesh, spaces.velocity.cells)
        self.porous = _VolumeData(self.mesh, spaces.head.cells)
        self.iface = _InterfaceData(spaces, params, self.regions)

    # -- bilinear forms -------------------------------------------------

    def form(self, name):
        if name not in FORMS:
            raise AssemblyError(f"unknown form {name!r}")
        return getattr(self, "_" + name)()

    def _scalar_mass(self, vol, dm, coef=1.0):
        phi, _ = vol.basis(dm.degree)
        loc = np.einsum("eq,qi,qj->eij", vol.wdet * coef, phi, phi)
        return loc

    def _scalar_stiff(self, vol, dm, coef=1.0):
        _, dphi = vol.basis(dm.degree)
        c = np.broadcast_to(np.asarray(coef, dtype=float), (vol.wdet.shape[0],))
        return np.einsum("eq,e,eqid,eqjd->eij", vol.wdet, c, dphi, dphi)

    def _scatter(self, loc, rdofs, cdofs, shape):
        return self._gather([(loc, rdofs, cdofs)], shape)

    @staticmethod
    def _gather(parts, shape):
        """One COO assembly from several (local, row dofs, col dofs) blocks,
        so the pattern keeps every structurally coupled pair."""
        rows, cols, vals = [], [], []
        for loc, rdofs, cdofs in parts:
            rows.append(np.broadcast_to(rdofs[:, :, None], loc.shape).ravel())
            cols.append(np.broadcast_to(cdofs[:, None, :], loc.shape).ravel())
            vals.append(loc.ravel())
        if not rows:
            return sp.csr_matrix(shape)
        return _coo(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), shape)

    def _vector_block(self, loc):
        dm = self.spaces.velocity
        return self._gather([(loc, dm.cell_dofs(c), dm.cell_dofs(c)) for c in range(2)],
                            (dm.size, dm.size))

    def _M_u(self):
        return self._vector_block(self._scalar_mass(self.fluid, self.spaces.velocity))

    def _A_u(self):
        return self._vector_block(self.params.nu * self._scalar_stiff(self.fluid, self.spaces.velocity))

    def _M_phi(self):
        dm = self.spaces.head
        p = self.params
        loc = self._scalar_mass(self.porous, dm, p.g * p.S0)
        return self._scatter(loc, dm.cell_nodes, dm.cell_nodes, (dm.size, dm.size))

    def _A_phi(self):
        dm = self.spaces.head
        k = self.regions.k[dm.cells]
        loc = self._scalar_stiff(self.porous, dm, self.params.g * k)
        return self._scatter(loc, dm.cell_nodes, dm.cell_nodes, (dm.size, dm.size))

    def _B(self):
        """Rows: pressure tests q; columns: velocity; value (div u, q)."""
        vdm, pdm = self.spaces.velocity, self.spaces.pressure
        vol = self.fluid
        parts = [(np.einsum("eq,qi,eqj->eij", vol.wdet, vol.p1, vol.dp2[..., c]),
                  pdm.cell_nodes, vdm.cell_dofs(c)) for c in range(2)]
        return self._gather(parts, (pdm.size, vdm.size))

    def _T_gamma(self):
        it = self.iface
        n = self.spaces.velocity.n_nodes
        size = self.spaces.velocity.size
        base = np.einsum("iq,i,qa,qb->iab", it.wlen, it.eta, it.phi, it.phi)
        parts = [(base * (it.tangent[:, c] * it.tangent[:, d])[:, None, None],
                  it.vel_nodes + c * n, it.vel_nodes + d * n)
                 for c in range(2) for d in range(2)]
        return self._gather(parts, (size, size))

    def _C_gamma(self):
        """Rows: velocity tests v; columns: head; value g int psi (v . n_f)."""
        it = self.iface
        vdm, hdm = self.spaces.velocity, self.spaces.head
        base = self.params.g * np.einsum("iq,qa,qb->iab", it.wlen, it.phi, it.phi)
        parts = [(base * it.normal[:, c][:, None, None], it.vel_nodes + c * vdm.n_nodes,
                  it.head_nodes) for c in range(2)]
        return self._gather(parts, (vdm.size, hdm.size))

    def _C_gamma_head(self):
        """Same coupling assembled with head test functions as rows."""
        it = self.iface
        vdm, hdm = self.spaces.velocity, self.spaces.head
        parts = [(self.params.g * np.einsum("iq,qa,qb,i->iab", it.wlen, it.phi, it.phi,
                                            it.normal[:, c]),
                  it.head_nodes, it.vel_nodes + c * vdm.n_nodes) for c in range(2)]
        return self._gather(parts, (hdm.size, vdm.size))

    # -- trilinear form ---------------------------------------------------

    def _vel_at_quad(self, vec):
        dm = self.spaces.velocity
        comps = dm.split(vec)
        loc = comps[:, dm.cell_nodes]                      # (2, e, 6)
        vals = np.einsum("qj,cej->ceq", self.fluid.p2, loc)
        grads = np.einsum("eqjd,cej->ceqd", self.fluid.dp2, loc)
        return vals, grads

    def _vel_on_iface(self, vec):
        comps = self.spaces.velocity.split(vec)
        return np.einsum("qa,cia->ciq", self.iface.phi, comps[:, self.iface.vel_nodes])

    def trilinear(self, u, v):
        """Vector ``w -> a_N(u, v, w)`` over all velocity test functions."""
        dm = self.spaces.velocity
        _check_size(u, dm)
        _check_size(v, dm)
        uq, _ = self._vel_at_quad(u)
        _, gv = self._vel_at_quad(v)
        conv = np.einsum("deq,ceqd->ceq", uq, gv)           # ((u.grad) v)_c
        out = np.zeros((2, dm.n_nodes))
        for c in range(2):
            loc = np.einsum("eq,eq,qi->ei", self.fluid.wdet, conv[c], self.fluid.p2)
            np.add.at(out[c], dm.cell_nodes, loc)
        it = self.iface
        if len(it.length):
            ui, vi = self._vel_on_iface(u), self._vel_on_iface(v)
            uv = (ui * vi).sum(axis=0)                       # (i, q)
            for c in range(2):
                loc = -0.5 * np.einsum("iq,iq,qa,i->ia", it.wlen, uv, it.phi, it.normal[:, c])
                np.add.at(out[c], it.vel_nodes, loc)
        return out.ravel()

    def convection_matrix(self, w):
        """Sparse ``N`` with ``N @ v == trilinear(w, v)``."""
        dm = self.spaces.velocity
        _check_size(w, dm)
        wq, _ = self._vel_at_quad(w)
        adv = np.einsum("deq,eqjd->eqj", wq, self.fluid.dp2)  # w . grad(phi_j)
        loc = np.einsum("eq,qi,eqj->eij", self.fluid.wdet, self.fluid.p2, adv)
        parts = [(loc, dm.cell_dofs(c), dm.cell_dofs(c)) for c in range(2)]
        it = self.iface
        if len(it.length):
            wi = self._vel_on_iface(w)
            n = dm.n_nodes
            for c in range(2):
                for cp in range(2):
                    edge = -0.5 * np.einsum("iq,iq,qa,qb,i->iab", it.wlen, wi[cp], it.phi,
                                            it.phi, it.normal[:, c])
                    parts.append((edge, it.vel_nodes + c * n, it.vel_nodes + cp * n))
        return self._gather(parts, (dm.size, dm.size))

    # -- loads ------------------------------------------------------------

    def load(self, f, t, kind):
        """``(f, basis)`` on the velocity space or ``g (f, basis)`` on the head."""
        if kind == FieldKind.VELOCITY:
            dm, vol, scale = self.spaces.velocity, self.fluid, 1.0
        elif kind == FieldKind.HEAD:
            dm, vol, scale = self.spaces.head, self.porous, self.params.g
        else:
            raise AssemblyError("loads are defined on the velocity and head spaces")
        out = np.zeros((dm.ncomp, dm.n_nodes))
        if f is None:
            return out.ravel()
        x, y = vol.xq[..., 0], vol.xq[..., 1]
        vals = f(x, y, t)
        vals = [vals] if dm.ncomp == 1 else list(vals)
        for c in range(dm.ncomp):
            fc = np.broadcast_to(np.asarray(vals[c], dtype=float), x.shape)
            loc = np.einsum("eq,eq,qi->ei", vol.wdet, fc, vol.p2)
            np.add.at(out[c], dm.cell_nodes, scale * loc)
        return out.ravel()

    def interface_tangential_load(self, h, t):
        """Vector ``v -> int_Gamma h(x, y, t) (v . tau) ds``."""
        it = self.iface
        if not len(it.length):
            return np.zeros(self.spaces.velocity.size)
        return self._tau_pairing(h(it.xq[..., 0], it.xq[..., 1], t))

    def interface_frame_load(self, h, t):
        """As :meth:`interface_tangential_load` for a density
        ``h(x, y, t, normal, eta)`` that also needs the local frame."""
        it = self.iface
        if not len(it.length):
            return np.zeros(self.spaces.velocity.size)
        shape = it.wlen.shape
        normal = np.broadcast_to(it.normal[:, None, :], shape + (2,))
        eta = np.broadcast_to(it.eta[:, None], shape)
        return self._tau_pairing(h(it.xq[..., 0], it.xq[..., 1], t, normal, eta))

    def _tau_pairing(self, hv):
        it = self.iface
        dm = self.spaces.velocity
        hv = np.broadcast_to(np.asarray(hv, dtype=float), it.wlen.shape)
        out = np.zeros((2, dm.n_nodes))
        for c in range(2):
            loc = np.einsum("iq,iq,qa,i->ia", it.wlen, hv, it.phi, it.tangent[:, c])
            np.add.at(out[c], it.vel_nodes, loc)
        return out.ravel()

    # -- norms ------------------------------------------------------------

    def norm(self, dm, coeffs=None, exact=None, exact_grad=None, kind="L2"):
        """L2 / H1-seminorm / H1 norm of ``exact - coeffs`` on ``dm``'s subdomain.

        Either argument may be omitted. ``exact(x, y)`` and
        ``exact_grad(x, y)`` return per-component arrays; gradients are
        ``(ncomp, 2)`` nested sequences.
        """
        if kind not in ("L2", "H1-seminorm", "H1"):
            raise AssemblyError(f"unknown norm kind {kind!r}")
        vol = self.fluid if dm.subdomain == self.spaces.velocity.subdomain else self.porous
        if coeffs is not None:
            _check_size(coeffs, dm)
        phi, dphi = vol.basis(dm.degree)
        x, y = vol.xq[..., 0], vol.xq[..., 1]
        val2 = np.zeros_like(vol.wdet)
        grad2 = np.zeros_like(vol.wdet)
        need_grad = kind != "L2"
        if exact is not None:
            ev = exact(x, y)
            ev = [ev] if dm.ncomp == 1 else list(ev)
        if need_grad and exact_grad is not None:
            eg = exact_grad(x, y)
            eg = [eg] if dm.ncomp == 1 else list(eg)
        elif need_grad and exact is not None:
            raise AssemblyError("gradient norms of an exact field need exact_grad")
        for c in range(dm.ncomp):
            v = np.zeros_like(x)
            gx = np.zeros_like(x)
            gy = np.zeros_like(x)
            if exact is not None:
                v = v + np.broadcast_to(np.asarray(ev[c], dtype=float), x.shape)
                if need_grad:
                    gx = gx + np.broadcast_to(np.asarray(eg[c][0], dtype=float), x.shape)
                    gy = gy + np.broadcast_to(np.asarray(eg[c][1], dtype=float), x.shape)
            if coeffs is not None:
                loc = dm.split(coeffs)[c][dm.cell_nodes]
                v = v - np.einsum("qj,ej->eq", phi, loc)
                if need_grad:
                    g = np.einsum("eqjd,ej->eqd", dphi, loc)
                    gx = gx - g[..., 0]
                    gy = gy - g[..., 1]
            val2 += v * v
            grad2 += gx * gx + gy * gy
        total = 0.0
        if kind in ("L2", "H1"):
            total += float((vol.wdet * val2).sum())
        if kind in ("H1-seminorm", "H1"):
            total += float((vol.wdet * grad2).sum())
        return np.sqrt(total)


def _sorted(A):
    A = A.tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def _check_size(vec, dm):
    if np.shape(vec) != (dm.size,):
        raise AssemblyError(f"vector of length {np.shape(vec)} does not match "
                            f"{dm.kind.value} space of size {dm.size}")


def assemble_form(form, mesh, maps=None, params=None):
    """Assemble one named bilinear form.

    Form ids: ``M_u``, ``A_u``, ``B``, ``T_gamma``, ``M_phi``, ``A_phi``,
    ``C_gamma`` (velocity rows) and ``C_gamma_head`` (head rows).
    """
    maps = maps if maps is not None else build_spaces(mesh)
    if maps.mesh is not mesh:
        raise AssemblyError("dof maps belong to a different mesh")
    return Assembler(maps, params if params is not None else PhysicalParams()).form(form)


def time_norm(values, dt, m=2):
    """Discrete-in-time composite: ``(dt * sum |v^n|^m)^(1/m)`` or max for m=inf."""
    values = np.asarray(values, dtype=float)
    if np.isinf(m):
        return float(values.max()) if values.size else 0.0
    return float((dt * np.sum(values ** m)) ** (1.0 / m))


class ConstrainedOperator:
    """A square operator with Dirichlet rows/columns eliminated symmetrically.

    Constrained rows and columns become identity; :meth:`rhs` applies the
    lifting ``b - A[:, c] g`` and writes ``g`` into the constrained entries.
    """

    def __init__(self, A, dofs):
        A = sp.csr_matrix(A)
        n = A.shape[0]
        if A.shape[0] != A.shape[1]:
            raise AssemblyError("operator must be square")
        self.dofs = np.asarray(dofs, dtype=np.int64)
        keep = np.ones(n)
        keep[self.dofs] = 0.0
        D = sp.diags(keep)
        self.lift = A[:, self.dofs].tocsc()
        fix = np.zeros(n)
        fix[self.dofs] = 1.0
        self.matrix = _sorted(D @ A @ D + sp.diags(fix))
        self.original = A

    def rhs(self, b, values=None):
        b = np.array(b, dtype=float)
        if values is None or len(self.dofs) == 0:
            b[self.dofs] = 0.0 if values is None else values
            return b
        values = np.asarray(values, dtype=float)
        if values.shape != self.dofs.shape:
            raise AssemblyError("one boundary value is required per constrained dof")
        b -= self.lift @ values
        b[self.dofs] = values
        return b


def apply_dirichlet(A, b, dofs, values=None):
    """Symmetric elimination of Dirichlet dofs; returns ``(A_c, b_c)``."""
    op = ConstrainedOperator(A, dofs)
    return op.matrix, op.rhs(b, values)
