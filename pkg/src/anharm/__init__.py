"""Large-order perturbation theory for one-dimensional even anharmonic oscillators."""

from __future__ import annotations

from .density import (
    green_function_asymptotic,
    matrix_element_asymptotic,
    matrix_element_exact,
    rho_diagonal_asymptotic,
    rho_order_exact,
    rho_saddle,
)
from .euclidean import (
    euclidean_constants,
    exponent_A,
    point_of,
    prefactor_M,
    wave_asymptotic,
)
from .fixed_point import (
    build_ladder,
    energy_asymptotic,
    eval_ladder,
    eval_ladder_normalized,
    wave_fixed_x_asymptotic,
)
from .potential import potential_from_config, quartic_potential, validate_potential
from .recursion import (
    compute_series,
    convergence_profile_A,
    convergence_profile_M,
    fixed_x_profile,
    oscillator_oracle,
)
from .verify import run_battery

__version__ = "0.1.0"

__all__ = [
    "build_ladder",
    "compute_series",
    "convergence_profile_A",
    "convergence_profile_M",
    "energy_asymptotic",
    "euclidean_constants",
    "eval_ladder",
    "eval_ladder_normalized",
    "exponent_A",
    "fixed_x_profile",
    "green_function_asymptotic",
    "matrix_element_asymptotic",
    "matrix_element_exact",
    "oscillator_oracle",
    "point_of",
    "potential_from_config",
    "prefactor_M",
    "quartic_potential",
    "rho_diagonal_asymptotic",
    "rho_order_exact",
    "rho_saddle",
    "run_battery",
    "validate_potential",
    "wave_asymptotic",
    "wave_fixed_x_asymptotic",
    "__version__",
]
