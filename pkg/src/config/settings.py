"""
Configuration settings, run documents and environment variable management.
"""
import copy
import json
import logging
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from dotenv import load_dotenv

from ..core.errors import ConfigError
from ..integrators.structure_preserving import NewtonSettings
from ..scenario.orchestrator import ScenarioConfig

logger = logging.getLogger(__name__)

PRESET_DIR = Path(__file__).parent / "presets"
DEFAULT_PRESET = "first-benchmark"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass
class Settings:
    """Process-level settings read from the environment."""
    log_level: str = "INFO"
    out_dir: str = "outputs"
    jobs: int = 1


def load_settings() -> Settings:
    """
    Load settings from environment variables (and a .env file if present).

    Returns:
        Settings: Configuration settings object

    Raises:
        ValueError: If an environment variable holds an invalid value
    """
    load_dotenv()

    log_level = os.getenv("FTSIM_LOG", "INFO").upper()
    if log_level not in LOG_LEVELS:
        raise ValueError(f"FTSIM_LOG must be one of {', '.join(LOG_LEVELS)}, got '{log_level}'")

    jobs_raw = os.getenv("FTSIM_JOBS", "1")
    try:
        jobs = int(jobs_raw)
    except ValueError:
        raise ValueError(f"FTSIM_JOBS must be an integer, got '{jobs_raw}'") from None
    if jobs < 1:
        raise ValueError("FTSIM_JOBS must be at least 1")

    return Settings(
        log_level=log_level,
        out_dir=os.getenv("FTSIM_OUT_DIR", "outputs"),
        jobs=jobs,
    )


def load_preset(name: str) -> Dict[str, Any]:
    """
    Load a built-in model document by name, without its provenance notes.

    Raises:
        ConfigError: If the preset does not exist
    """
    path = PRESET_DIR / f"{name.replace('-', '_')}.json"
    if not path.exists():
        available = sorted(p.stem.replace("_", "-") for p in PRESET_DIR.glob("*.json"))
        raise ConfigError(f"Unknown preset '{name}'; available: {', '.join(available)}")
    with open(path, "r") as f:
        doc = json.load(f)
    doc.pop("_provenance", None)
    return doc


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def resolve_model(model_doc: Dict[str, Any]) -> Dict[str, Any]:
    """Expand a ``{"preset": name, ...}`` model document; inline documents pass through."""
    if "preset" not in model_doc:
        return copy.deepcopy(model_doc)
    overrides = {k: v for k, v in model_doc.items() if k != "preset"}
    return _deep_merge(load_preset(model_doc["preset"]), overrides)


@dataclass
class OutputSettings:
    """Where and how results are written."""
    out_dir: str = "outputs"
    formats: Tuple[str, ...] = ("csv", "json")
    dump_reduction: bool = False

    def __post_init__(self):
        self.formats = tuple(self.formats)
        unknown = set(self.formats) - {"csv", "json"}
        if unknown:
            raise ConfigError(f"Unsupported output formats: {sorted(unknown)}")


@dataclass
class CCTSettings:
    """Bracket, tolerance and worker count of the clearing-time search."""
    bracket: Tuple[float, float] = (0.5, 1.0)
    tol: float = 0.01
    jobs: int = 1

    def __post_init__(self):
        self.bracket = tuple(float(t) for t in self.bracket)
        if len(self.bracket) != 2 or not self.bracket[0] < self.bracket[1]:
            raise ConfigError(f"CCT bracket must be [t_lo, t_hi] with t_lo < t_hi, got {self.bracket}")
        if not self.tol > 0:
            raise ConfigError("CCT tolerance must be positive")
        if self.jobs < 1:
            raise ConfigError("CCT jobs must be at least 1")


@dataclass
class RunConfig:
    """
    Complete run document: model, scenario, Newton settings, output and CCT search.

    ``model`` keeps the document as written (a preset reference or an inline
    model); ``resolved_model()`` expands it.
    """
    model: Dict[str, Any] = field(default_factory=lambda: {"preset": DEFAULT_PRESET})
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    newton: NewtonSettings = field(default_factory=NewtonSettings)
    output: OutputSettings = field(default_factory=OutputSettings)
    cct: CCTSettings = field(default_factory=CCTSettings)

    def resolved_model(self) -> Dict[str, Any]:
        return resolve_model(self.model)

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "RunConfig":
        """
        Validate and build a run configuration.

        Raises:
            ConfigError: If any section is malformed
        """
        if not isinstance(doc, dict):
            raise ConfigError("A run document must be a JSON object")
        unknown = set(doc) - {"model", "scenario", "newton", "output", "cct"}
        if unknown:
            raise ConfigError(f"Unknown run document sections: {sorted(unknown)}")
        try:
            output_doc = dict(doc.get("output", {}))
            scenario_doc = dict(doc.get("scenario", {}))
            if "decimation" in output_doc:
                scenario_doc["decimation"] = output_doc.pop("decimation")
            return cls(
                model=copy.deepcopy(doc.get("model", {"preset": DEFAULT_PRESET})),
                scenario=ScenarioConfig.from_dict(scenario_doc),
                newton=NewtonSettings.from_dict(doc.get("newton", {})),
                output=OutputSettings(**output_doc),
                cct=CCTSettings(**doc.get("cct", {})),
            )
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid run document: {e}") from e

    def to_dict(self) -> Dict[str, Any]:
        output = asdict(self.output)
        output["formats"] = list(self.output.formats)
        output["decimation"] = self.scenario.decimation
        cct = asdict(self.cct)
        cct["bracket"] = list(self.cct.bracket)
        return {
            "model": copy.deepcopy(self.model),
            "scenario": self.scenario.to_dict(),
            "newton": self.newton.to_dict(),
            "output": output,
            "cct": cct,
        }


SCENARIO_OVERRIDES = ("method", "h", "t_break", "t_fault", "stage3_duration", "decimation")


def load_run_config(
    path: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
    settings: Optional[Settings] = None
) -> RunConfig:
    """
    Build the run configuration: defaults < environment < file < overrides.

    Args:
        path: Optional JSON run document
        overrides: Flat command-line overrides; None values are ignored
        settings: Environment settings (loaded when omitted)

    Returns:
        RunConfig: Validated configuration

    Raises:
        ConfigError: If the file cannot be read or the result is invalid
    """
    settings = settings or load_settings()
    doc: Dict[str, Any] = {"output": {"out_dir": settings.out_dir}, "cct": {"jobs": settings.jobs}}
    if path is not None:
        try:
            with open(path, "r") as f:
                doc = _deep_merge(doc, json.load(f))
        except OSError as e:
            raise ConfigError(f"Cannot read run document {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"Malformed JSON in {path}: {e}") from e
        if not isinstance(doc, dict):
            raise ConfigError(f"{path} does not contain a JSON object")

    config = RunConfig.from_dict(doc)
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    scenario_changes = {k: overrides[k] for k in SCENARIO_OVERRIDES if k in overrides}
    try:
        if scenario_changes:
            config.scenario = ScenarioConfig.from_dict({**config.scenario.to_dict(), **scenario_changes})
        if "out_dir" in overrides:
            config.output = replace(config.output, out_dir=overrides["out_dir"])
        if "dump_reduction" in overrides:
            config.output = replace(config.output, dump_reduction=bool(overrides["dump_reduction"]))
        if "jobs" in overrides:
            config.cct = replace(config.cct, jobs=int(overrides["jobs"]))
        if "bracket" in overrides:
            config.cct = replace(config.cct, bracket=tuple(overrides["bracket"]))
        if "tol" in overrides:
            config.cct = replace(config.cct, tol=float(overrides["tol"]))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid command-line override: {e}") from e
    logger.debug(f"Run configuration: {json.dumps(config.to_dict(), sort_keys=True)}")
    return config
