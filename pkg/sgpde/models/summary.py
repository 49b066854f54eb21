"""
Artifact schemas: run summaries, hyperparameter grid cells and batch rows.
"""

from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

SCHEMA_VERSION = "1.0"


class RunSummary(BaseModel):
    """Contents of run_summary.json."""

    schema_version: str = SCHEMA_VERSION
    problem: str
    method: str
    n: int = Field(..., serialization_alias="N")
    m: int = Field(..., serialization_alias="M")
    seed: int
    gamma: float
    eta: float
    eta_used: float
    kernel: Dict[str, Any]
    iterations: int
    converged: bool
    final_loss: float
    non_monotone: bool = False
    linf_error: Optional[float] = None
    constraint_residual: float = 0.0
    pde_residual: Optional[float] = Field(
        default=None,
        description="Sum of squared soft PDE residuals (MFG)"
    )
    lambda_value: Optional[float] = Field(default=None, description="Ergodic constant (MFG)")
    elbo: Optional[float] = None
    nystrom_error: Optional[float] = None
    nystrom_converged: Optional[bool] = None
    wall_time_s: float = 0.0
    created_at: str = Field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds")
    )

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, indent=2)


class GridCell(BaseModel):
    """One lengthscale of a hyperparameter grid search."""

    sigma: float
    elbo: Optional[float] = None
    iterations: Optional[int] = None
    linf_error: Optional[float] = None
    status: str = "ok"
    message: Optional[str] = Field(default=None, exclude=True)

    @property
    def ok(self) -> bool:
        return self.status == "ok"


class HyperoptSummary(BaseModel):
    """Contents of hyperopt_summary.json."""

    schema_version: str = SCHEMA_VERSION
    problem: str
    n: int = Field(..., serialization_alias="N")
    m: int = Field(..., serialization_alias="M")
    seed: int
    best_sigma: float
    best_elbo: float
    cells: int
    failed_cells: int

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, indent=2)


class BatchRow(BaseModel):
    """Aggregate over seeds for one (N, M) cell."""

    n: int = Field(..., serialization_alias="N")
    m: int = Field(..., serialization_alias="M")
    seeds: int
    failed: int
    mean_linf: Optional[float] = None
    std_linf: Optional[float] = None
    mean_iterations: float
    mean_wall_time_s: float


class SeedOutcome(BaseModel):
    """Per-seed result row of a batch run."""

    n: int = Field(..., serialization_alias="N")
    m: int = Field(..., serialization_alias="M")
    seed: int
    status: str = "ok"
    message: Optional[str] = None
    summary: Optional[RunSummary] = None

    @property
    def ok(self) -> bool:
        return self.status == "ok" and self.summary is not None


def rows_to_records(rows: List[BaseModel]) -> List[Dict[str, Any]]:
    """Rows as JSON-ready dicts keyed by their serialized names."""
    return [row.model_dump(by_alias=True, mode="json") for row in rows]
