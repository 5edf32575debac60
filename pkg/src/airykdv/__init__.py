"""Weighted-Airy-kernel Fredholm determinants and their KdV-side observables.

The package computes log-determinants of trace-class perturbations of the
Airy kernel (weighted by a distribution-function-like profile), the derived
quantities u, p and the associated eigenfunction, finite-difference residuals
of the exact identities these objects satisfy, a Painlevé II cross-check, and
small-time asymptotic comparisons.  See the README for the CLI.
"""

from .specfun import CONSTANTS, airy_ai, airy_ai_prime, airy_kernel, bessel_i0
from .sigma import (
    SigmaWeight,
    integrate_dsigma,
    make_fermi,
    make_kpz,
    make_piecewise,
    make_step,
    make_tanh,
    make_zero,
    sigma_from_json,
    sigma_gap_integral,
)
from .quadrature import QuadratureRule, composite_rule, gauss_legendre, truncation_bounds
from .fredholm import (
    DiscretizedOperator,
    NumericalError,
    Resolution,
    build_operator,
    log_q_value,
)
from .observables import Engine, FDScheme, ObservableSet, observe
from .painleve2 import (
    P2Solution,
    f_tw,
    log_f_tw,
    p2_tail_integral,
    solve_hm,
    tw_left_tail_constant,
    y_sq_from_determinant,
)
from .residuals import (
    RESIDUAL_NAMES,
    ResidualReport,
    cyl_consistency_gap,
    cyl_kdv_residual,
    evolution_residual,
    idpii_residual,
    kdv_residual,
    mkdv_residual,
    phi_identity_gap,
    schrodinger_residual,
)
from .asymptotics import (
    VEstimate,
    default_t_ladder,
    classify,
    deep_tail_rate,
    kpz_deep_tail,
    kpz_laplace,
    limiting_level,
    log_q_regime_i,
    log_q_regime_iii,
    regime_i_u,
    regime_ii_u,
    regime_iii_v_small_x,
    v_estimate,
)

__all__ = [
    "CONSTANTS",
    "airy_ai",
    "airy_ai_prime",
    "airy_kernel",
    "bessel_i0",
    "SigmaWeight",
    "integrate_dsigma",
    "make_fermi",
    "make_kpz",
    "make_piecewise",
    "make_step",
    "make_tanh",
    "make_zero",
    "sigma_from_json",
    "sigma_gap_integral",
    "QuadratureRule",
    "composite_rule",
    "gauss_legendre",
    "truncation_bounds",
    "DiscretizedOperator",
    "NumericalError",
    "Resolution",
    "build_operator",
    "log_q_value",
    "Engine",
    "FDScheme",
    "ObservableSet",
    "observe",
    "P2Solution",
    "f_tw",
    "log_f_tw",
    "p2_tail_integral",
    "solve_hm",
    "tw_left_tail_constant",
    "y_sq_from_determinant",
    "RESIDUAL_NAMES",
    "ResidualReport",
    "cyl_consistency_gap",
    "cyl_kdv_residual",
    "evolution_residual",
    "idpii_residual",
    "kdv_residual",
    "mkdv_residual",
    "phi_identity_gap",
    "schrodinger_residual",
    "VEstimate",
    "default_t_ladder",
    "classify",
    "deep_tail_rate",
    "kpz_deep_tail",
    "kpz_laplace",
    "limiting_level",
    "log_q_regime_i",
    "log_q_regime_iii",
    "regime_i_u",
    "regime_ii_u",
    "regime_iii_v_small_x",
    "v_estimate",
]

__version__ = "0.1.0"
