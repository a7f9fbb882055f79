"""
Time integrators: structure-preserving Runge-Kutta and predictor-corrector.
"""
from typing import Iterable, Union

from ..core.model import StageSystem
from ..core.reduction import ReducedSystem
from ..core.state import SystemState
from .base import BaseIntegrator, IntegrationResult, IntegrationStats, Observer
from .port_hamiltonian import PHSystem
from .predictor_corrector import PredictorCorrectorIntegrator, pc_step
from .structure_preserving import (
    IMPLICIT_EULER,
    IMPLICIT_MIDPOINT,
    NewtonSettings,
    RKTableau,
    StructurePreservingIntegrator,
    dirac_residual,
    rk_step,
)

METHODS = ("sp-euler", "sp-midpoint", "pc-beta1", "pc-beta0.5")
TABLEAUX = {"sp-euler": IMPLICIT_EULER, "sp-midpoint": IMPLICIT_MIDPOINT}
PC_BETAS = {"pc-beta1": 1.0, "pc-beta0.5": 0.5}


def create_integrator(
    method: str,
    system: Union[StageSystem, ReducedSystem],
    h: float,
    newton: NewtonSettings = NewtonSettings()
) -> BaseIntegrator:
    """
    Factory function to create an integrator for one stage.

    Structure-preserving methods integrate whatever provider they are given
    (reduced or full); predictor-corrector methods always run on the full
    stage coordinates.

    Args:
        method: One of METHODS
        system: Stage or reduced system
        h: Step size (s)
        newton: Stage Newton settings for structure-preserving methods

    Returns:
        BaseIntegrator: Configured integrator

    Raises:
        ValueError: If the method is unknown
    """
    if method in TABLEAUX:
        integrator = StructurePreservingIntegrator(PHSystem(system), h, TABLEAUX[method], newton, name=method)
        integrator.reduced = isinstance(system, ReducedSystem)
        return integrator
    if method in PC_BETAS:
        stage = system.stage if isinstance(system, ReducedSystem) else system
        return PredictorCorrectorIntegrator(stage, h, PC_BETAS[method], name=method)
    raise ValueError(f"Unsupported integration method '{method}'; choose one of {', '.join(METHODS)}")


def integrate(
    system: Union[StageSystem, ReducedSystem],
    x0: SystemState,
    h: float,
    t_end: float,
    method: str,
    observers: Iterable[Observer] = (),
    decimation: int = 1,
    newton: NewtonSettings = NewtonSettings()
) -> IntegrationResult:
    """Create an integrator for ``method`` and run it from x0 to t_end."""
    return create_integrator(method, system, h, newton).integrate(x0, t_end, observers, decimation)


__all__ = [
    "BaseIntegrator",
    "IntegrationResult",
    "IntegrationStats",
    "IMPLICIT_EULER",
    "IMPLICIT_MIDPOINT",
    "METHODS",
    "NewtonSettings",
    "PHSystem",
    "PredictorCorrectorIntegrator",
    "RKTableau",
    "StructurePreservingIntegrator",
    "create_integrator",
    "dirac_residual",
    "integrate",
    "pc_step",
    "rk_step",
]
