"""One- and two-time distributions of the Airy process.

Three independent routes: the Hastings-McLeod solution of Painleve II
(``painleve``), Fredholm determinants of the extended Airy kernel
(``airy_fredholm``) and Monte Carlo on coupled Gaussian Hermitian matrices
(``matrix_mc``).  ``asymptotics`` holds the large-t expansion and
``pde_check`` the finite-difference PDE and hierarchy checks.
"""

from .airy_fredholm import KernelSpec, airy_ai, airy_ai_prime, joint_cdf, joint_cdf_grid
from .asymptotics import c_constant, covariance_exact, joint_series, phi
from .painleve import default_solution, solve_hastings_mcleod

__version__ = "0.1.0"

__all__ = [
    "KernelSpec",
    "airy_ai",
    "airy_ai_prime",
    "joint_cdf",
    "joint_cdf_grid",
    "joint_series",
    "phi",
    "c_constant",
    "covariance_exact",
    "default_solution",
    "solve_hastings_mcleod",
]
