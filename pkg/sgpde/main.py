"""
Command-line entry point.

    sgpde solve --config run.json
    sgpde batch --config batch.json
    sgpde hyperopt --config grid.yaml
    sgpde diagnose --config small.json
"""

import argparse
import logging
import sys
from typing import Callable, Dict, List, Optional

from sgpde import __version__
from sgpde.config import get_settings, setup_logging
from sgpde.errors import EXIT_OK, SGPDEError
from sgpde.models.config import RunConfig, load_run_config
from sgpde.runner import run_batch, run_diagnose, run_hyperopt, run_solve

logger = logging.getLogger(__name__)

COMMANDS: Dict[str, Callable[..., object]] = {
    "solve": run_solve,
    "batch": run_batch,
    "hyperopt": run_hyperopt,
    "diagnose": run_diagnose,
}

HELP = {
    "solve": "Solve one problem instance and write its artifacts",
    "batch": "Solve over seeds (and an optional (N, M) sweep) and aggregate",
    "hyperopt": "Select the kernel lengthscale by ELBO grid search",
    "diagnose": "Solve and report the Nystrom error and constraint residual",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sgpde",
        description="Sparse Gaussian process collocation solver for nonlinear PDEs",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub = subparsers.add_parser(name, help=HELP[name])
        sub.add_argument("--config", required=True, help="Run configuration (JSON or YAML)")
        sub.add_argument("--output-dir", default=None, help="Artifact directory override")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run a subcommand.

    Returns:
        0 on success, 2 on configuration or guard errors, 3 on numerical failure
    """
    args = build_parser().parse_args(argv)
    setup_logging(get_settings())

    try:
        config: RunConfig = load_run_config(args.config)
        COMMANDS[args.command](config, args.output_dir)
    except SGPDEError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code

    logger.info(f"{args.command} finished")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
