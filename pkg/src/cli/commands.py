"""
Command implementations behind the equilibrium, simulate, cct and compare subcommands.

Every command takes a RunConfig and returns a process exit code:
0 ok, 1 configuration error, 2 equilibrium failure, 3 step failure,
4 bracketing failure.
"""
import json
import logging
from typing import Dict, Optional, Sequence, Tuple

import pandas as pd

from models.results import BaseResultStore, CsvResultStore
from ..config.settings import RunConfig
from ..core.equilibrium import ACCEPT_TOL, XYSystem, equilibrium_state, find_equilibrium
from ..core.errors import BracketError, ConfigError, EquilibriumError, ModelError, ReductionError
from ..core.model import electrical_label, stages_from_document
from ..core.reduction import ReducedSystem
from ..scenario.cct import find_cct
from ..scenario.orchestrator import ScenarioModel, compare, run_three_stage

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_EQUILIBRIUM = 2
EXIT_STEP = 3
EXIT_BRACKET = 4


def _store(config: RunConfig) -> BaseResultStore:
    return CsvResultStore(config.output.out_dir)


def _build_model(config: RunConfig) -> ScenarioModel:
    return ScenarioModel.from_document(config.resolved_model())


def dump_reduction(reduced: Dict[str, ReducedSystem], store: BaseResultStore) -> Dict[str, Dict[str, str]]:
    """Write the A₀ and Ñ coefficient matrices of every stage."""
    paths = {}
    for name, system in reduced.items():
        paths[f"{name}_A0"] = store.write_family(f"reduction_{name}_A0", system.A_fam.members())
        paths[f"{name}_N"] = store.write_family(f"reduction_{name}_N", system.N_fam.members())
    return paths


def _resolve_stage(names: Sequence[str], stage: Optional[str]) -> str:
    if stage is None:
        return names[0]
    if stage in names:
        return stage
    if stage.isdigit() and 1 <= int(stage) <= len(names):
        return names[int(stage) - 1]
    raise ConfigError(f"Unknown stage '{stage}'; choose one of {', '.join(names)} or 1..{len(names)}")


def cmd_equilibrium(config: RunConfig, stage: Optional[str] = None) -> int:
    """
    Solve and print the operating point of one stage in xy and αβ coordinates.

    Args:
        config: Run configuration
        stage: Stage name or 1-based index (defaults to the first stage)

    Returns:
        int: Exit code
    """
    try:
        stages = stages_from_document(config.resolved_model())
        names = list(stages)
        name = _resolve_stage(names, stage)
        guess = None
        if name != names[0]:
            guess = find_equilibrium(XYSystem(stages[names[0]])).delta
        xy = XYSystem(stages[name])
        point = find_equilibrium(xy, guess)
    except (ConfigError, ModelError) as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG
    except EquilibriumError as e:
        logger.error(f"Equilibrium solve failed: {e} (residual={e.residual:.3e})")
        return EXIT_EQUILIBRIUM

    stage_system = stages[name]
    state = equilibrium_state(xy, point, 0.0)
    labels = [electrical_label(i, stage_system.topology.n) for i in stage_system.origin]
    table = pd.DataFrame({
        "component": labels,
        "phi_xy": point.phi,
        "psi_dot": state.psi_dot,
        "psi": state.psi,
    })
    angles = pd.DataFrame({
        "mass": list(range(1, len(point.delta) + 1)),
        "delta": point.delta,
        "theta": state.theta,
        "theta_dot": state.theta_dot,
    })
    summary = {
        "stage": name,
        "power_angle_deg": point.power_angle_deg,
        "residual": point.residual_norm,
        "iterations": point.iterations,
        "residual_history": list(point.residual_history),
        "components": labels,
        "phi": point.phi.tolist(),
        "delta": point.delta.tolist(),
        "psi_dot": state.psi_dot.tolist(),
        "psi": state.psi.tolist(),
        "theta": state.theta.tolist(),
        "theta_dot": state.theta_dot.tolist(),
        "config": config.to_dict(),
    }
    store = _store(config)
    store.write_table(f"equilibrium_{name}_electrical", table)
    store.write_table(f"equilibrium_{name}_mechanical", angles)
    store.write_summary(f"equilibrium_{name}", summary)
    print(json.dumps({k: v for k, v in summary.items() if k != "config"}, indent=2))

    if point.residual_norm > ACCEPT_TOL:
        logger.error(f"Equilibrium residual {point.residual_norm:.3e} above tolerance")
        return EXIT_EQUILIBRIUM
    return EXIT_OK


def cmd_simulate(config: RunConfig) -> int:
    """
    Run the three-stage scenario and write its trajectory and summary.

    Partial outputs are written when a step fails.
    """
    try:
        model = _build_model(config)
    except (ConfigError, ModelError, ReductionError) as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG
    except EquilibriumError as e:
        logger.error(f"Equilibrium solve failed: {e}")
        return EXIT_EQUILIBRIUM

    store = _store(config)
    if config.output.dump_reduction:
        dump_reduction(model.reduced, store)
    result = run_three_stage(config.scenario, model, config.newton)
    name = config.scenario.method
    if "csv" in config.output.formats:
        store.write_trajectory(name, result.trajectory)
    summary = result.summary(model)
    summary["config"] = config.to_dict()
    if "json" in config.output.formats:
        store.write_summary(name, summary)
    print(json.dumps(summary["verdict"], indent=2))

    if result.failure is not None:
        logger.error(f"Simulation aborted: {result.failure}")
        return EXIT_STEP
    return EXIT_OK


def cmd_cct(config: RunConfig, bracket: Optional[Tuple[float, float]] = None, tol: Optional[float] = None) -> int:
    """Search the critical clearing time and write the probe log."""
    bracket = bracket or config.cct.bracket
    tol = tol or config.cct.tol
    try:
        model = _build_model(config)
    except (ConfigError, ModelError, ReductionError) as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG
    except EquilibriumError as e:
        logger.error(f"Equilibrium solve failed: {e}")
        return EXIT_EQUILIBRIUM

    try:
        result = find_cct(
            model,
            config.scenario,
            bracket,
            tol,
            newton=config.newton,
            jobs=config.cct.jobs,
            model_doc=config.resolved_model(),
        )
    except BracketError as e:
        logger.error(f"CCT search failed: {e}")
        return EXIT_BRACKET

    store = _store(config)
    probes = pd.DataFrame([probe.to_dict() for probe in result.probes])
    store.write_table("cct_probes", probes)
    summary = result.to_dict()
    summary["config"] = config.to_dict()
    store.write_summary("cct", summary)
    print(f"CCT interval: [{result.interval[0]:.6g}, {result.interval[1]:.6g}] s")
    print(probes.to_string(index=False))
    return EXIT_OK


def cmd_compare(config: RunConfig, method_a: str, method_b: str) -> int:
    """Run two methods on one scenario and write paired trajectories plus error norms."""
    try:
        model = _build_model(config)
    except (ConfigError, ModelError, ReductionError) as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG
    except EquilibriumError as e:
        logger.error(f"Equilibrium solve failed: {e}")
        return EXIT_EQUILIBRIUM

    result = compare(config.scenario, model, method_a, method_b, config.newton)
    store = _store(config)
    store.write_trajectory(f"compare_{method_a}", result.first.trajectory)
    store.write_trajectory(f"compare_{method_b}", result.second.trajectory)
    store.write_table(f"compare_{method_a}_vs_{method_b}_errors", result.errors)
    store.write_summary(f"compare_{method_a}_vs_{method_b}", {
        method_a: result.first.summary(model),
        method_b: result.second.summary(model),
        "max_error_norm": float(result.errors["error_norm"].max()) if len(result.errors) else 0.0,
        "config": config.to_dict(),
    })
    print(f"Max flux difference {method_a} vs {method_b}: {result.errors['error_norm'].max():.6e}")
    if result.first.failure is not None or result.second.failure is not None:
        return EXIT_STEP
    return EXIT_OK
