"""Semiclassical broadcasting of measurement statistics into thermal memories.

Submodules:
    qcore      dense operator algebra and entropic functionals
    thermal    Hamiltonians, Gibbs states, pointer sectors, c_max
    interact   measurement interactions and their defect measures
    infotherm  entropy production, Holevo bounds, broadcast classification
    broadcast  memory arrays, protocol runs, witnesses, reconstruction
    cli        command line entry point
"""

from . import broadcast, config, infotherm, interact, qcore, thermal
from .errors import (
    ConfigError,
    DegenerateOutcomeWarning,
    DimensionBudgetExceeded,
    DimensionMismatch,
    IndexOutOfRange,
    InvalidBlocks,
    InvalidCut,
    InvalidFactorIndex,
    InvalidOperator,
    NonPositiveMemoryEntropy,
    NotInvertible,
    SemibroadcastError,
    SupportViolation,
    WrongKind,
)

__version__ = "0.1.0"

__all__ = [
    "broadcast",
    "config",
    "infotherm",
    "interact",
    "qcore",
    "thermal",
    "ConfigError",
    "DegenerateOutcomeWarning",
    "DimensionBudgetExceeded",
    "DimensionMismatch",
    "IndexOutOfRange",
    "InvalidBlocks",
    "InvalidCut",
    "InvalidFactorIndex",
    "InvalidOperator",
    "NonPositiveMemoryEntropy",
    "NotInvertible",
    "SemibroadcastError",
    "SupportViolation",
    "WrongKind",
    "__version__",
]
