"""
Configuration Package
"""
from .settings import RunConfig, Settings, load_preset, load_run_config, load_settings, resolve_model

__all__ = ["RunConfig", "Settings", "load_preset", "load_run_config", "load_settings", "resolve_model"]
