"""Configuration loading and experiment orchestration.

The entry point lives in :mod:`rydecho.cli.main`.
"""
from .config import RunConfig, dump_config, load_config, loads_config

__all__ = ["RunConfig", "dump_config", "load_config", "loads_config"]
