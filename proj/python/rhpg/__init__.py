"""Receding-horizon policy gradient for the linear quadratic regulator.

Thin Python surface over the C++ core: stationary Riccati solves, the
finite-horizon recursion, surrogate costs and gradients, the one-point
gradient estimator, full solver runs, and the verification suites.
"""

from ._core import (
    cell_seed,
    condition_number,
    exact_surrogate_cost,
    exact_surrogate_gradient,
    gain_from_value,
    horizon_simple,
    induced_norm,
    one_point_gradient_estimate,
    pd_sqrt,
    riccati_operator,
    riemannian_distance,
    run_rhpg,
    solve_are,
    solve_rde,
    spectral_radius,
    suite_names,
    verify_suite,
)

__all__ = [
    "cell_seed",
    "condition_number",
    "exact_surrogate_cost",
    "exact_surrogate_gradient",
    "gain_from_value",
    "horizon_simple",
    "induced_norm",
    "one_point_gradient_estimate",
    "pd_sqrt",
    "riccati_operator",
    "riemannian_distance",
    "run_rhpg",
    "solve_are",
    "solve_rde",
    "spectral_radius",
    "suite_names",
    "verify_suite",
]
