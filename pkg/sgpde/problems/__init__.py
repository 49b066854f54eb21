"""
Benchmark problems and the config-driven factory.
"""

import logging
from typing import Callable, Dict, Optional, Tuple

from sgpde.diagnostics.reference import ingest_reference_grid
from sgpde.models.config import ProblemName, RunConfig
from sgpde.models.kernel import KernelSpec
from sgpde.problems.base import EliminationMap, FieldMap, ProblemSpec
from sgpde.problems.burgers import burgers_problem
from sgpde.problems.elliptic import elliptic_problem
from sgpde.problems.mfg import MfgModel, mfg_problem
from sgpde.problems.parabolic import parabolic_problem

logger = logging.getLogger(__name__)

ProblemBuilder = Callable[..., Tuple[ProblemSpec, EliminationMap]]


def _elliptic(
    config: RunConfig, n: int, m: int, seed: int, kernel: KernelSpec
) -> Tuple[ProblemSpec, EliminationMap]:
    return elliptic_problem(
        n, m, ratio=config.interior_ratio, seed=seed, coefficient=config.coefficient, kernel=kernel
    )


def _burgers(
    config: RunConfig, n: int, m: int, seed: int, kernel: KernelSpec
) -> Tuple[ProblemSpec, EliminationMap]:
    return burgers_problem(n, m, nu=config.nu, seed=seed, ratio=config.interior_ratio, kernel=kernel)


def _parabolic(
    config: RunConfig, n: int, m: int, seed: int, kernel: KernelSpec
) -> Tuple[ProblemSpec, EliminationMap]:
    return parabolic_problem(n, m, seed=seed, ratio=config.interior_ratio, kernel=kernel)


def _mfg(
    config: RunConfig, n: int, m: int, seed: int, kernel: KernelSpec
) -> Tuple[ProblemSpec, EliminationMap]:
    return mfg_problem(n, m, nu=config.nu, seed=seed, gamma=config.gamma, kernel=kernel)


BUILDERS: Dict[ProblemName, ProblemBuilder] = {
    ProblemName.ELLIPTIC: _elliptic,
    ProblemName.BURGERS: _burgers,
    ProblemName.PARABOLIC: _parabolic,
    ProblemName.MFG: _mfg,
}


def build_problem(
    config: RunConfig,
    seed: Optional[int] = None,
    n: Optional[int] = None,
    m: Optional[int] = None,
    kernel: Optional[KernelSpec] = None,
) -> Tuple[ProblemSpec, EliminationMap]:
    """
    Instantiate the configured problem.

    Args:
        config: Validated run configuration
        seed: Seed override (batch runs)
        n: Sample count override (sweeps)
        m: Inducing count override (sweeps)
        kernel: Kernel override (grid search)

    Returns:
        (ProblemSpec, EliminationMap); a configured reference_file replaces
        the built-in reference
    """
    builder = BUILDERS[config.problem]
    spec, elimination = builder(
        config,
        config.n if n is None else n,
        config.m if m is None else m,
        config.seed if seed is None else seed,
        kernel or config.resolved_kernel(),
    )
    if config.reference_file:
        spec.reference = ingest_reference_grid(config.reference_file)
    return spec, elimination


__all__ = [
    "EliminationMap",
    "FieldMap",
    "ProblemSpec",
    "MfgModel",
    "elliptic_problem",
    "burgers_problem",
    "parabolic_problem",
    "mfg_problem",
    "build_problem",
]
