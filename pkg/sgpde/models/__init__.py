"""
Pydantic schemas for kernels, run configurations and artifacts.
"""

from sgpde.models.config import (
    DiagnosticsConfig,
    GNConfig,
    HyperoptGrid,
    InitKind,
    KernelConfig,
    Method,
    ProblemName,
    RunConfig,
    SweepPoint,
    load_run_config,
    parse_run_config,
)
from sgpde.models.kernel import KernelSpec, KernelType
from sgpde.models.summary import (
    SCHEMA_VERSION,
    BatchRow,
    GridCell,
    HyperoptSummary,
    RunSummary,
    SeedOutcome,
)

__all__ = [
    "KernelSpec",
    "KernelType",
    "KernelConfig",
    "ProblemName",
    "Method",
    "InitKind",
    "GNConfig",
    "HyperoptGrid",
    "DiagnosticsConfig",
    "SweepPoint",
    "RunConfig",
    "load_run_config",
    "parse_run_config",
    "SCHEMA_VERSION",
    "RunSummary",
    "GridCell",
    "HyperoptSummary",
    "BatchRow",
    "SeedOutcome",
]
