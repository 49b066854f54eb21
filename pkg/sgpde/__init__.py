"""
SGPDE - sparse Gaussian process collocation for nonlinear PDEs.

Solves nonlinear PDEs by kernel collocation in the RKHS generated by a small set
of inducing functionals, using a Woodbury-stabilized low-rank inverse and
eliminated-variable Gauss-Newton.
"""

__version__ = "0.1.0"
__author__ = "SGPDE Team"
__license__ = "MIT"

from sgpde.config import get_settings

__all__ = ["get_settings", "__version__"]
