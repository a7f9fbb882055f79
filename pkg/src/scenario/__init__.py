"""
Fault scenarios: stage switching, diagnostics, verdicts and CCT search
"""
from .cct import CCTResult, ProbeRecord, find_cct
from .orchestrator import ScenarioConfig, ScenarioModel, ScenarioResult, compare, run_three_stage
from .stability import StabilityCriteria, Verdict, stability_verdict
from .switching import switch_state

__all__ = [
    "CCTResult",
    "ProbeRecord",
    "ScenarioConfig",
    "ScenarioModel",
    "ScenarioResult",
    "StabilityCriteria",
    "Verdict",
    "compare",
    "find_cct",
    "run_three_stage",
    "stability_verdict",
    "switch_state",
]
