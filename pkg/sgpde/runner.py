"""
Configuration-driven runs: solve, batch, hyperopt and diagnose.

Each run writes its artifacts under the output directory (SGPDE_OUTPUT_DIR
takes precedence over the config's output_dir). Errors propagate as SGPDEError
subclasses; main() maps them to exit codes.
"""

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from sgpde.config import get_settings
from sgpde.diagnostics.nystrom import nystrom_error
from sgpde.diagnostics.reference import linf_on_grid, write_error_grid
from sgpde.errors import InvalidConfigurationError, NumericalFailureError, SGPDEError
from sgpde.models.config import Method, RunConfig, parse_run_config
from sgpde.models.kernel import KernelSpec, KernelType
from sgpde.models.summary import (
    BatchRow,
    GridCell,
    HyperoptSummary,
    RunSummary,
    SeedOutcome,
    rows_to_records,
)
from sgpde.problems import build_problem
from sgpde.problems.base import EliminationMap, ProblemSpec
from sgpde.solver.gauss_newton import initial_free_vector
from sgpde.solver.gram_assembly import dump_matrices
from sgpde.solver.hyper_elbo import grid_search, outcome_elbo
from sgpde.solver.pipeline import SolveOutcome, SolverPipeline
from sgpde.solver.woodbury import LowRankInverse

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def resolve_output_dir(config: RunConfig, override: Optional[str] = None) -> Path:
    """Explicit override, then SGPDE_OUTPUT_DIR, then the config's output_dir."""
    directory = override or get_settings().output_dir or config.output_dir
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, payload: Any) -> Path:
    if isinstance(payload, str):
        path.write_text(payload + "\n", encoding="utf-8")
    else:
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return path


def _write_csv(path: Path, frame: pd.DataFrame) -> Path:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def _solve_instance(
    config: RunConfig,
    seed: int,
    n: Optional[int] = None,
    m: Optional[int] = None,
    kernel: Optional[KernelSpec] = None,
    include_dense_psi: bool = False,
    problem: Optional[Tuple[ProblemSpec, EliminationMap]] = None,
) -> SolveOutcome:
    if problem is None:
        problem = build_problem(config, seed=seed, n=n, m=m, kernel=kernel)
    spec, elimination = problem
    pipeline = SolverPipeline(
        gamma=config.gamma,
        eta=config.eta,
        gn=config.gn,
        method=config.method,
        include_dense_psi=include_dense_psi,
    )
    w0 = initial_free_vector(elimination, config.gn, seed)
    return pipeline.run(spec, elimination, w0)


def _grid_error(
    outcome: SolveOutcome, resolution: int
) -> Tuple[Optional[float], Optional[np.ndarray]]:
    spec = outcome.spec
    if spec.reference is None:
        return None, None
    return linf_on_grid(outcome.primary_model.evaluate_batch, spec.reference, spec.domain, resolution)


def _soft_residual(elimination: EliminationMap, w: np.ndarray) -> Optional[float]:
    if elimination.residual is None:
        return None
    r = elimination.residual(w)
    return float(r @ r)


def summarize(
    config: RunConfig,
    outcome: SolveOutcome,
    seed: int,
    wall_time_s: float,
    linf_error: Optional[float] = None,
) -> RunSummary:
    """Run summary for one solved instance."""
    spec: ProblemSpec = outcome.spec
    result = outcome.result
    soft = _soft_residual(outcome.elimination, result.w_star)
    return RunSummary(
        problem=spec.name,
        method=config.method.value,
        n=spec.n,
        m=spec.m,
        seed=seed,
        gamma=config.gamma,
        eta=config.eta,
        eta_used=outcome.eta_used,
        kernel=spec.kernel.model_dump(mode="json"),
        iterations=result.iterations,
        converged=result.converged,
        final_loss=result.final_loss,
        non_monotone=result.non_monotone,
        linf_error=linf_error,
        constraint_residual=spec.constraint_residual(outcome.reduced),
        pde_residual=soft,
        lambda_value=float(result.w_star[-1]) if soft is not None else None,
        elbo=outcome_elbo(outcome, config.elbo_half_quadratic),
        wall_time_s=wall_time_s,
    )


def write_solve_artifacts(
    directory: Path,
    outcome: SolveOutcome,
    summary: RunSummary,
    error_grid: Optional[np.ndarray],
) -> List[Path]:
    """Write the artifacts of one solve into directory."""
    directory.mkdir(parents=True, exist_ok=True)
    spec = outcome.spec
    written = [_write_json(directory / "run_summary.json", summary.to_json())]

    history = outcome.result.loss_history
    written.append(
        _write_csv(
            directory / "loss_history.csv",
            pd.DataFrame({"iteration": np.arange(len(history)), "loss": history}),
        )
    )
    if error_grid is not None:
        written.append(
            write_error_grid(directory / "error_grid.csv", spec.domain, error_grid, spec.axis_names)
        )

    written.append(_write_json(directory / "model.json", outcome.primary_model.to_dict()))
    for label, model in outcome.models.items():
        if label != spec.primary_field:
            written.append(_write_json(directory / f"model_{label}.json", model.to_dict()))

    written.append(
        _write_json(
            directory / "samples.json",
            {"samples": spec.samples.to_dict(), "inducing": spec.inducing.to_dict()},
        )
    )
    if get_settings().debug_dump_matrices and outcome.blocks is not None:
        written.extend(Path(p) for p in dump_matrices(outcome.blocks, str(directory / "matrices")))

    logger.info(f"Wrote {len(written)} artifacts to {directory}")
    return written


def solve_and_record(
    config: RunConfig,
    directory: Path,
    seed: Optional[int] = None,
    n: Optional[int] = None,
    m: Optional[int] = None,
) -> RunSummary:
    """Solve one instance, write its artifacts and return the summary."""
    seed = config.seed if seed is None else seed
    start = time.perf_counter()
    outcome = _solve_instance(config, seed, n=n, m=m)
    linf, grid = _grid_error(outcome, config.grid_resolution)
    wall = time.perf_counter() - start
    summary = summarize(config, outcome, seed, wall, linf_error=linf)
    write_solve_artifacts(directory, outcome, summary, grid)
    logger.info(
        f"Solved {summary.problem} seed={seed}: iterations={summary.iterations}, "
        f"loss={summary.final_loss:.6e}, linf={summary.linf_error}"
    )
    return summary


def run_solve(config: RunConfig, output_dir: Optional[str] = None) -> RunSummary:
    """
    Single solve.

    Writes run_summary.json, loss_history.csv, error_grid.csv (when a
    reference exists), model.json (plus model_<field>.json for the other
    unknowns) and samples.json.

    Raises:
        NumericalFailureError: On factorization failure or divergence
    """
    return solve_and_record(config, resolve_output_dir(config, output_dir))


def _batch_task(config_data: Dict[str, Any], n: int, m: int, seed: int, directory: str) -> SeedOutcome:
    """One (N, M, seed) solve; failures are returned, not raised."""
    config = parse_run_config(config_data)
    try:
        summary = solve_and_record(config, Path(directory), seed=seed, n=n, m=m)
        return SeedOutcome(n=n, m=m, seed=seed, summary=summary)
    except SGPDEError as e:
        logger.warning(f"Batch seed {seed} at N={n}, M={m} failed: {e}")
        return SeedOutcome(n=n, m=m, seed=seed, status="failed", message=str(e))


def aggregate(outcomes: List[SeedOutcome]) -> List[BatchRow]:
    """
    Mean/std over seeds per (N, M) cell.

    Seeds are reduced in increasing order so the aggregate does not depend on
    the order they were listed or finished in.
    """
    cells: Dict[Tuple[int, int], List[SeedOutcome]] = {}
    for outcome in outcomes:
        cells.setdefault((outcome.n, outcome.m), []).append(outcome)

    rows = []
    for (n, m), group in cells.items():
        group = sorted(group, key=lambda o: o.seed)
        ok = [o.summary for o in group if o.ok]
        linf = [s.linf_error for s in ok if s.linf_error is not None]
        rows.append(
            BatchRow(
                n=n,
                m=m,
                seeds=len(group),
                failed=len(group) - len(ok),
                mean_linf=float(np.mean(linf)) if linf else None,
                std_linf=float(np.std(linf)) if linf else None,
                mean_iterations=float(np.mean([s.iterations for s in ok])) if ok else float("nan"),
                mean_wall_time_s=float(np.mean([s.wall_time_s for s in ok])) if ok else float("nan"),
            )
        )
    return rows


def run_batch(config: RunConfig, output_dir: Optional[str] = None) -> List[BatchRow]:
    """
    Seeds x sweep cells, each written to N<n>_M<m>/seed_<seed>/.

    Writes batch_seeds.csv (one row per seed) and batch_summary.csv (one row
    per (N, M)).

    Raises:
        NumericalFailureError: If every seed failed
    """
    root = resolve_output_dir(config, output_dir)
    tasks = [
        (point.n, point.m, seed, str(root / f"N{point.n}_M{point.m}" / f"seed_{seed}"))
        for point in config.sweep_points
        for seed in config.seed_list
    ]
    config_data = config.model_dump(by_alias=True, mode="json")
    workers = get_settings().batch_workers
    logger.info(f"Batch of {len(tasks)} solves with {workers} worker(s)")

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_batch_task, config_data, *task) for task in tasks]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [_batch_task(config_data, *task) for task in tasks]

    outcomes.sort(key=lambda o: (o.n, o.m, o.seed))
    seed_rows = [
        {
            "N": o.n,
            "M": o.m,
            "seed": o.seed,
            "status": o.status,
            "linf_error": o.summary.linf_error if o.summary else None,
            "iterations": o.summary.iterations if o.summary else None,
            "wall_time_s": o.summary.wall_time_s if o.summary else None,
            "message": o.message or "",
        }
        for o in outcomes
    ]
    _write_csv(root / "batch_seeds.csv", pd.DataFrame(seed_rows))

    rows = aggregate(outcomes)
    _write_csv(root / "batch_summary.csv", pd.DataFrame(rows_to_records(rows)))

    if not any(o.ok for o in outcomes):
        raise NumericalFailureError(f"all {len(outcomes)} batch seeds failed")
    return rows


def _cell_kernel(base: KernelSpec, sigma: float) -> KernelSpec:
    if base.type == KernelType.GAUSSIAN_ANISO:
        return base.scaled(sigma)
    return base.with_sigma(sigma)


def run_hyperopt(config: RunConfig, output_dir: Optional[str] = None) -> HyperoptSummary:
    """
    ELBO grid search over the kernel lengthscale.

    Anisotropic kernels scale all lengthscales by the grid value. Writes
    hyperopt_grid.csv and hyperopt_summary.json.

    Raises:
        NumericalFailureError: If every grid cell failed
    """
    root = resolve_output_dir(config, output_dir)
    base = config.resolved_kernel()

    def factory(sigma: float) -> SolveOutcome:
        return _solve_instance(config, config.seed, kernel=_cell_kernel(base, sigma))

    def error_of(outcome: SolveOutcome) -> Optional[float]:
        return _grid_error(outcome, config.grid_resolution)[0]

    grid = config.hyperopt.grid()
    logger.info(f"Hyperopt over {len(grid)} lengthscales in [{grid[0]}, {grid[-1]}]")
    best_sigma, cells = grid_search(factory, grid, config.elbo_half_quadratic, error_of)
    _write_cells(root / "hyperopt_grid.csv", cells)

    best = next(c for c in cells if c.sigma == best_sigma)
    summary = HyperoptSummary(
        problem=config.problem.value,
        n=config.n,
        m=config.m,
        seed=config.seed,
        best_sigma=best_sigma,
        best_elbo=best.elbo,
        cells=len(cells),
        failed_cells=sum(1 for c in cells if not c.ok),
    )
    _write_json(root / "hyperopt_summary.json", summary.to_json())
    return summary


def _write_cells(path: Path, cells: List[GridCell]) -> Path:
    return _write_csv(path, pd.DataFrame(rows_to_records(cells))[
        ["sigma", "elbo", "iterations", "linf_error", "status"]
    ])


def run_diagnose(config: RunConfig, output_dir: Optional[str] = None) -> RunSummary:
    """
    Solve with the dense K(psi, psi) kept, then record the Nystrom error and
    the constraint residual.

    Raises:
        InvalidConfigurationError: If |psi| exceeds the dense guard
    """
    root = resolve_output_dir(config, output_dir)
    limit = config.diagnostics.max_psi or get_settings().diagnose_max_psi
    problem = build_problem(config)
    spec = problem[0]
    if len(spec.psi) > limit:
        raise InvalidConfigurationError(
            f"diagnose guard: |psi|={len(spec.psi)} exceeds the dense limit {limit}"
        )

    start = time.perf_counter()
    outcome = _solve_instance(config, config.seed, include_dense_psi=True, problem=problem)
    linf, grid = _grid_error(outcome, config.grid_resolution)
    summary = summarize(config, outcome, config.seed, time.perf_counter() - start, linf)

    if config.method == Method.SGP and isinstance(outcome.inverse, LowRankInverse):
        diagnostic = nystrom_error(outcome.dense_psi, outcome.inverse)
        summary = summary.model_copy(
            update={"nystrom_error": diagnostic.value, "nystrom_converged": diagnostic.converged}
        )
    else:
        # the full-GP covariance is exact
        summary = summary.model_copy(update={"nystrom_error": 0.0, "nystrom_converged": True})

    logger.info(
        f"Diagnose: nystrom_error={summary.nystrom_error:.3e}, "
        f"constraint_residual={summary.constraint_residual:.3e}"
    )
    write_solve_artifacts(root, outcome, summary, grid)
    return summary


__all__ = [
    "aggregate",
    "resolve_output_dir",
    "run_batch",
    "run_diagnose",
    "run_hyperopt",
    "run_solve",
    "solve_and_record",
    "summarize",
    "write_solve_artifacts",
]
