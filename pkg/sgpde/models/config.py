"""
Run configuration schema.

A run configuration is one JSON (or YAML) document. Fields left out fall back
to per-problem defaults, so the minimal document is {"problem": ..., "N": ...,
"M": ...}.
"""

import json
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from sgpde.errors import InvalidConfigurationError
from sgpde.models.kernel import KernelSpec, KernelType

# Run configs embed the kernel spec directly.
KernelConfig = KernelSpec


class ProblemName(str, Enum):
    """Benchmark problems."""
    ELLIPTIC = "elliptic"
    BURGERS = "burgers"
    PARABOLIC = "parabolic"
    MFG = "mfg"


class Method(str, Enum):
    """Solution method."""
    SGP = "sgp"
    GP = "gp"


class InitKind(str, Enum):
    """Initial free vector for Gauss-Newton."""
    ZEROS = "zeros"
    NORMAL = "normal"


class GNConfig(BaseModel):
    """Gauss-Newton settings."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    max_iter: int = Field(default=20, ge=1, description="Maximum number of applied steps")
    step_tol: float = Field(
        default=1e-5,
        gt=0.0,
        alias="tol",
        description="Stop when the sup-norm of a step falls below this value"
    )
    step_size: float = Field(default=1.0, gt=0.0, le=1.0, description="Damping factor")
    ridge: float = Field(default=1e-10, ge=0.0, description="Ridge added to the normal matrix")
    init: InitKind = Field(default=InitKind.ZEROS, description="Initial free vector")


class HyperoptGrid(BaseModel):
    """Lengthscale grid, either a range or an explicit list of values."""

    model_config = ConfigDict(frozen=True)

    low: float = Field(default=0.01, gt=0.0)
    high: float = Field(default=1.0, gt=0.0)
    step: float = Field(default=0.01, gt=0.0)
    values: Optional[List[float]] = Field(
        default=None,
        description="Explicit grid; overrides low/high/step"
    )

    @field_validator("values")
    @classmethod
    def _positive_values(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is not None:
            if not value:
                raise ValueError("hyperopt grid must not be empty")
            if any(not math.isfinite(v) or v <= 0.0 for v in value):
                raise ValueError("hyperopt grid values must be positive")
        return value

    @model_validator(mode="after")
    def _ordered(self) -> "HyperoptGrid":
        if self.values is None and self.high < self.low:
            raise ValueError(f"hyperopt high {self.high} is below low {self.low}")
        return self

    def grid(self) -> List[float]:
        """Grid values in increasing order."""
        if self.values is not None:
            return sorted(set(float(v) for v in self.values))
        count = int(math.floor((self.high - self.low) / self.step + 1e-9)) + 1
        return [round(self.low + k * self.step, 12) for k in range(count)]


class DiagnosticsConfig(BaseModel):
    """Optional diagnostics."""

    model_config = ConfigDict(frozen=True)

    nystrom: bool = Field(default=False, description="Compute the Nystrom spectral error")
    max_psi: Optional[int] = Field(
        default=None,
        ge=1,
        description="Guard on |psi| for dense K(psi, psi); defaults to settings"
    )


class SweepPoint(BaseModel):
    """One (N, M) cell of a batch sweep."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    n: int = Field(..., ge=4, alias="N")
    m: int = Field(..., ge=1, alias="M")


# exp(-dt^2 / 0.3^2 - dx^2 / 0.05^2) written in the exp(-d^2 / (2 sigma^2)) convention
TIME_SPACE_SIGMA = (0.3 / math.sqrt(2.0), 0.05 / math.sqrt(2.0))

PROBLEM_DEFAULTS: Dict[ProblemName, Dict[str, Any]] = {
    ProblemName.ELLIPTIC: {
        "interior_ratio": 0.75,
        "kernel": {"type": "gaussian_iso", "sigma": 0.2, "dim": 2},
        "gamma": 1e-12,
        "eta": 1e-12,
    },
    ProblemName.BURGERS: {
        "interior_ratio": 5.0 / 6.0,
        "kernel": {"type": "gaussian_aniso", "sigma": list(TIME_SPACE_SIGMA)},
        "gamma": 1e-6,
        "eta": 1e-6,
        "nu": 0.02,
    },
    ProblemName.PARABOLIC: {
        "interior_ratio": 6.0 / 7.0,
        "kernel": {"type": "gaussian_aniso", "sigma": list(TIME_SPACE_SIGMA)},
        "gamma": 1e-10,
        "eta": 1e-10,
    },
    ProblemName.MFG: {
        "interior_ratio": 1.0,
        "kernel": {"type": "periodic_exp", "sigma": 1.0, "dim": 2, "period": 1.0},
        "gamma": 1e-10,
        "eta": 1e-4,
        "nu": 0.1,
    },
}


class RunConfig(BaseModel):
    """
    A complete run description.

    Per-problem defaults fill interior_ratio, kernel, gamma, eta and nu when
    they are omitted.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True, extra="forbid")

    problem: ProblemName
    method: Method = Method.SGP
    n: int = Field(..., ge=4, alias="N", description="Number of collocation points")
    m: int = Field(..., ge=1, alias="M", description="Number of inducing points")
    interior_ratio: Optional[float] = Field(default=None, gt=0.0, le=1.0)
    kernel: Optional[KernelConfig] = None
    gamma: Optional[float] = Field(default=None, gt=0.0)
    eta: Optional[float] = Field(default=None, ge=0.0)
    nu: Optional[float] = Field(default=None, gt=0.0, description="Viscosity (burgers, mfg)")
    coefficient: float = Field(default=1.0, description="Elliptic nonlinearity coefficient")
    seed: int = Field(default=0, ge=0)
    seeds: Optional[List[int]] = None
    sweep: Optional[List[SweepPoint]] = None
    gn: GNConfig = Field(default_factory=GNConfig)
    grid_resolution: int = Field(default=60, ge=2)
    hyperopt: HyperoptGrid = Field(default_factory=HyperoptGrid)
    diagnostics: DiagnosticsConfig = Field(default_factory=DiagnosticsConfig)
    elbo_half_quadratic: bool = Field(
        default=False,
        description="Use 1/2 z^T Sigma^-1 z in the ELBO instead of the full quadratic"
    )
    reference_file: Optional[str] = None
    output_dir: str = "output"

    @field_validator("seeds")
    @classmethod
    def _nonempty_seeds(cls, value: Optional[List[int]]) -> Optional[List[int]]:
        if value is not None:
            if not value:
                raise ValueError("seeds must contain at least one seed")
            if any(s < 0 for s in value):
                raise ValueError("seeds must be non-negative")
        return value

    @model_validator(mode="before")
    @classmethod
    def _apply_defaults(cls, data: Any) -> Any:
        if not isinstance(data, dict) or "problem" not in data:
            return data
        try:
            problem = ProblemName(data["problem"])
        except ValueError:
            return data
        merged = dict(data)
        for key, value in PROBLEM_DEFAULTS[problem].items():
            if merged.get(key) is None:
                merged[key] = value
        return merged

    @model_validator(mode="after")
    def _check_counts(self) -> "RunConfig":
        if self.m > self.n:
            raise ValueError(f"M={self.m} exceeds N={self.n}")
        if self.problem != ProblemName.MFG and self.interior_ratio == 1.0:
            raise ValueError("interior_ratio must be below 1 on domains with a boundary")
        if self.kernel is not None and self.kernel.axes != 2:
            raise ValueError("all benchmark problems are two-dimensional")
        if self.problem in (ProblemName.BURGERS, ProblemName.PARABOLIC):
            if self.kernel is not None and self.kernel.type == KernelType.PERIODIC_EXP:
                raise ValueError(f"{self.problem.value} needs a non-periodic kernel")
        return self

    @property
    def seed_list(self) -> List[int]:
        return list(self.seeds) if self.seeds else [self.seed]

    @property
    def sweep_points(self) -> List[SweepPoint]:
        return list(self.sweep) if self.sweep else [SweepPoint(n=self.n, m=self.m)]

    def resolved_kernel(self) -> KernelSpec:
        assert self.kernel is not None
        return self.kernel

    def with_overrides(self, **updates: Any) -> "RunConfig":
        """Copy with updated fields, re-validated."""
        data = self.model_dump(by_alias=True, mode="json")
        data.update(updates)
        return RunConfig.model_validate(data)


def load_run_config(path: Union[str, Path]) -> RunConfig:
    """
    Load and validate a run configuration file.

    Files ending in .yaml or .yml are parsed as YAML, anything else as JSON.

    Raises:
        InvalidConfigurationError: If the file is unreadable or fails validation
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InvalidConfigurationError(f"cannot read config {path}: {e}") from e

    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise InvalidConfigurationError(f"cannot parse config {path}: {e}") from e

    return parse_run_config(data)


def parse_run_config(data: Any) -> RunConfig:
    """Validate an already-parsed configuration document."""
    if not isinstance(data, dict):
        raise InvalidConfigurationError("config must be a mapping")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise InvalidConfigurationError(f"invalid config: {e}") from e
