"""Finite-difference Landau-Lifshitz-Gilbert micromagnetics on regular grids."""
__version__ = "0.1.0"

from .demag import DemagKernel, brute_force_demag, build_demag_tensor, demag_field
from .dynamics import (NumericalAbort, SimState, effective_field, euler_step, llg_rhs,
                       relax, run, total_energy)
from .io import SimConfig, parse_input
from .local_fields import FieldSchedule, anisotropy_field, exchange_field, external_field
from .mesh import (Grid, MaterialParams, VectorField, average_magnetization, create_grid,
                   renormalize)

__all__ = [
    "DemagKernel", "FieldSchedule", "Grid", "MaterialParams", "NumericalAbort", "SimConfig",
    "SimState", "VectorField", "anisotropy_field", "average_magnetization", "brute_force_demag",
    "build_demag_tensor", "create_grid", "demag_field", "effective_field", "euler_step",
    "exchange_field", "external_field", "llg_rhs", "parse_input", "relax", "renormalize", "run",
    "total_energy",
]
