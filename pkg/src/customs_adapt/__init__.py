"""Adaptive exploration-ratio control for customs fraud selection."""

from .core import ConfigError, DataError, SimConfig, WeekBatch, make_rng

__all__ = ["ConfigError", "DataError", "SimConfig", "WeekBatch", "make_rng"]
__version__ = "0.1.0"
