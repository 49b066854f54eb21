"""
Reference solutions, grid errors and the Nystrom diagnostic.
"""

from sgpde.diagnostics.nystrom import NystromError, nystrom_error
from sgpde.diagnostics.reference import (
    ReferenceGrid,
    cole_hopf_burgers,
    evaluation_grid,
    ingest_reference_grid,
    linf_on_grid,
    write_error_grid,
)

__all__ = [
    "NystromError",
    "nystrom_error",
    "ReferenceGrid",
    "cole_hopf_burgers",
    "evaluation_grid",
    "ingest_reference_grid",
    "linf_on_grid",
    "write_error_grid",
]
