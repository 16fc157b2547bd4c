"""Finite element kernel: quadrature, Lagrange spaces and assembly."""

from .assembly import (Assembler, AssemblyError, ConstrainedOperator, PhysicalParams, Spaces,
                       apply_dirichlet, assemble_form, build_spaces, time_norm)
from .dofs import Dirichlet, DofMap, FieldKind, build_dofmap

__all__ = [
    "Assembler", "AssemblyError", "ConstrainedOperator", "Dirichlet", "DofMap", "FieldKind",
    "PhysicalParams", "Spaces", "apply_dirichlet", "assemble_form", "build_dofmap",
    "build_spaces", "time_norm",
]
