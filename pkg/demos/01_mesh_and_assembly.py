"""
Meshes and assembled operators
==============================

Build the coupled unit-square mesh, look at its interface, assemble the
Taylor-Hood and Darcy operators and check a few of their invariants.
"""

import numpy as np

from nsdsav.fem import Assembler, PhysicalParams, build_spaces
from nsdsav.mesh import build_rect_coupled, read_msh, validate
from nsdsav.scenarios.library import YSHAPE_MESH

# A fluid box stacked on a porous box, 8 cells across and 8 cells per side.
mesh = build_rect_coupled((0, 1, 0, 1), (0, 1, -1, 0), 8, 8, 8)
validate(mesh)
print("vertices", mesh.n_vertices, "triangles", mesh.n_triangles)
print("boundary labels", mesh.labels())

# Interface normals point from the fluid into the porous region.
print("interface edges", len(mesh.interface_edges), "first normal", mesh.interface_normals[0])

# P2 velocity, P1 pressure, P2 head.
spaces = build_spaces(mesh)
asm = Assembler(spaces, PhysicalParams(nu=1.0, k=1.0))
print("dofs: velocity", spaces.velocity.size, "pressure", spaces.pressure.size,
      "head", spaces.head.size)

# The velocity mass matrix integrates one over the fluid box twice (two components).
M = asm.form("M_u")
ones = np.ones(spaces.velocity.size)
print("1' M_u 1 =", ones @ M @ ones)

# The divergence of a constant field is zero, and stiffness kills constants.
print("|B 1| =", np.abs(asm.form("B") @ ones).max())
print("|A_phi 1| =", np.abs(asm.form("A_phi") @ np.ones(spaces.head.size)).max())

# The coupling form paired with ones gives g times the interface length.
C = asm.form("C_gamma")
n_f = np.concatenate([np.zeros(spaces.velocity.n_nodes), -np.ones(spaces.velocity.n_nodes)])
print("c_Gamma(1, (0,-1)) =", n_f @ C @ np.ones(spaces.head.size))

# The packaged Y-shape mesh reads from Gmsh MSH 2.2.
ymesh = read_msh(YSHAPE_MESH)
print("Y-shape:", ymesh.n_triangles, "triangles, labels", ymesh.labels())
