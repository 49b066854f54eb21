"""
Kernel specification model.

A KernelSpec names one of the supported positive-definite base kernels and its
lengthscales. It is the serialized form used in run configurations and in
solution model files.
"""

import math
from enum import Enum
from typing import Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class KernelType(str, Enum):
    """Supported base kernels."""
    GAUSSIAN_ISO = "gaussian_iso"
    GAUSSIAN_ANISO = "gaussian_aniso"
    PERIODIC_EXP = "periodic_exp"


class KernelSpec(BaseModel):
    """
    A separable positive-definite kernel with eval(x, x) = 1.

    - gaussian_iso:   exp(-|x - y|^2 / (2 sigma^2))
    - gaussian_aniso: exp(-sum_i (x_i - y_i)^2 / (2 sigma_i^2))
    - periodic_exp:   exp(sum_i (cos(2 pi (x_i - y_i) / period) - 1) / sigma_i^2)

    For periodic_exp, sigma is the lengthscale of the exponent; sigma = 1 with
    period = 1 gives exp(cos(2 pi dx1) + cos(2 pi dx2) - 2).
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True, use_enum_values=False)

    type: KernelType = Field(..., description="Kernel family")
    sigma: Union[float, Tuple[float, ...]] = Field(
        default=1.0,
        description="Lengthscale, scalar or one per axis"
    )
    dim: Optional[int] = Field(
        default=None,
        ge=1,
        description="Number of axes; inferred from a per-axis sigma when omitted"
    )
    period: float = Field(default=1.0, gt=0.0, description="Period of periodic_exp")

    @field_validator("sigma")
    @classmethod
    def _positive_sigma(
        cls, value: Union[float, Tuple[float, ...]]
    ) -> Union[float, Tuple[float, ...]]:
        values = value if isinstance(value, tuple) else (value,)
        if not values:
            raise ValueError("sigma must not be empty")
        for item in values:
            if not math.isfinite(item) or item <= 0.0:
                raise ValueError(f"lengthscales must be finite and positive, got {item}")
        return value

    @model_validator(mode="after")
    def _check_axes(self) -> "KernelSpec":
        if isinstance(self.sigma, tuple):
            if self.type == KernelType.GAUSSIAN_ISO and len(set(self.sigma)) > 1:
                raise ValueError("gaussian_iso takes a single lengthscale")
            if self.dim is not None and self.dim != len(self.sigma) and len(self.sigma) > 1:
                raise ValueError(
                    f"sigma has {len(self.sigma)} entries but dim is {self.dim}"
                )
        return self

    @property
    def axes(self) -> int:
        """Number of coordinate axes the kernel acts on."""
        if self.dim is not None:
            return self.dim
        if isinstance(self.sigma, tuple) and len(self.sigma) > 1:
            return len(self.sigma)
        return 2

    @property
    def lengthscales(self) -> Tuple[float, ...]:
        """Per-axis lengthscales."""
        if isinstance(self.sigma, tuple):
            if len(self.sigma) == 1:
                return self.sigma * self.axes
            return self.sigma
        return (float(self.sigma),) * self.axes

    def scaled(self, multiplier: float) -> "KernelSpec":
        """
        Copy with every lengthscale multiplied by a shared factor.

        Args:
            multiplier: Positive factor

        Returns:
            New KernelSpec
        """
        if isinstance(self.sigma, tuple):
            sigma: Union[float, Tuple[float, ...]] = tuple(s * multiplier for s in self.sigma)
        else:
            sigma = self.sigma * multiplier
        return self.model_copy(update={"sigma": sigma})

    def with_sigma(self, sigma: float) -> "KernelSpec":
        """Copy with a single scalar lengthscale."""
        return self.model_copy(update={"sigma": float(sigma), "dim": self.axes})
