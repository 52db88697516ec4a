"""Simulation and Monte Carlo diagnostics for a generalized random directed
forest: coalescing, crossing, non-Markovian walks on the planar lattice."""

from .environment import EnvConfig, Environment, OverrideEnvironment, Site
from .errors import (
    ConfigError,
    EmptySetError,
    GrdfError,
    HorizonExhausted,
    InsufficientData,
    OutOfRange,
    SearchCapExceeded,
)

__version__ = "0.1.0"

__all__ = [
    "EnvConfig",
    "Environment",
    "OverrideEnvironment",
    "Site",
    "ConfigError",
    "EmptySetError",
    "GrdfError",
    "HorizonExhausted",
    "InsufficientData",
    "OutOfRange",
    "SearchCapExceeded",
    "__version__",
]
