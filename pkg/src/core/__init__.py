"""
Core functionality package: model assembly, reduction and equilibria
"""
from .equilibrium import EquilibriumPoint, XYSystem, find_equilibrium, solve_equilibrium
from .errors import FTSimError
from .model import GeneratorParams, NetworkTopology, StageSystem, assemble_stage, stages_from_document
from .reduction import ReducedSystem, TrigMatrixFamily, reduce
from .state import SystemState

__all__ = [
    "EquilibriumPoint",
    "FTSimError",
    "GeneratorParams",
    "NetworkTopology",
    "ReducedSystem",
    "StageSystem",
    "SystemState",
    "TrigMatrixFamily",
    "XYSystem",
    "assemble_stage",
    "find_equilibrium",
    "reduce",
    "solve_equilibrium",
    "stages_from_document",
]
