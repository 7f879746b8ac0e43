"""Numerical laboratory for Cauchy integral commutators on Morrey spaces."""
from .grid import CellSet, GridFunction, Interval, integrate, lp_norm, rearrangement_value, translate
from .curve import LipschitzCurve, cauchy_kernel, eval_A, verify_kernel_estimates
from .operators import (
    TruncationLattice,
    adjoint_cauchy,
    commutator,
    hl_maximal,
    maximal_truncated,
    pv_cauchy,
    truncated_cauchy,
)
from .spaces import (
    IntervalLattice,
    MorreyParams,
    bmo_norm,
    cmo_profile,
    h_norm_upper,
    is_block,
    local_mean_oscillation,
    mean_oscillation,
    median,
    morrey_norm,
)

__version__ = "0.1.0"
