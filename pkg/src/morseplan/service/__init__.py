"""Operational shell: config files, persistence, CLI, HTTP service."""

from .archive import SurfaceArchive
from .config import ConfigError, PlanConfig, load_config, parse_config

__all__ = ["SurfaceArchive", "ConfigError", "PlanConfig", "load_config", "parse_config"]
