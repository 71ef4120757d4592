"""Command-line harness: configuration, experiment registry, CSV output and replay."""

from .cli import main, run
from .config import ConfigError, ExperimentConfig, load_config, manifest_text, parse_manifest

__all__ = ["main", "run", "ConfigError", "ExperimentConfig", "load_config", "manifest_text",
           "parse_manifest"]
