"""C0 interior penalty discretization of the clamped biharmonic problem on the
unit square, with a BDDC preconditioner for its interface Schur complement."""

from .assembly import (
    assemble_global,
    assemble_load,
    assemble_subdomain,
    edge_coupling,
    element_stiffness,
    energy_seminorm,
)
from .bddc import BDDCPreconditioner, FullPreconditioner, build_preconditioners
from .grid import build_decomposition, build_mesh, classify_edges, classify_nodes
from .krylov import SolveReport, extreme_eigs, factor_spd, pcg
from .modified_q2 import ModifiedQ2Space, build_space
from .splitting import SplitOperators, SubspaceSplit

__version__ = "0.1.0"

__all__ = [
    "BDDCPreconditioner",
    "FullPreconditioner",
    "ModifiedQ2Space",
    "SolveReport",
    "SplitOperators",
    "SubspaceSplit",
    "assemble_global",
    "assemble_load",
    "assemble_subdomain",
    "build_decomposition",
    "build_mesh",
    "build_preconditioners",
    "build_space",
    "classify_edges",
    "classify_nodes",
    "edge_coupling",
    "element_stiffness",
    "energy_seminorm",
    "extreme_eigs",
    "factor_spd",
    "pcg",
]
