"""Concentration analysis for -eps^2 div(J grad u) + V u = u^p.

Thin python surface over the C++ core: the concentration function Gamma,
the radial limit profile, penalized solves and the reduced landscape.
"""

from concentra._concentra import (  # noqa: F401
    Box,
    ConfigError,
    DiffusionField,
    DomainError,
    GridDomain,
    GridFunction,
    LandscapeSample,
    PenaltyConfig,
    PotentialField,
    RadialProfile,
    SolverError,
    Transform,
    build_grid,
    diagonalizing_transform,
    find_gamma_critical_points,
    gamma_eval,
    make_diffusion,
    make_penalty,
    make_potential,
    penalized_nonlinearity,
    penalty_threshold,
    run_subcommand,
    sigma_c1,
    sigma_closed_form,
    solve_radial_ground_state,
)

__all__ = [
    "Box",
    "ConfigError",
    "DiffusionField",
    "DomainError",
    "GridDomain",
    "GridFunction",
    "LandscapeSample",
    "PenaltyConfig",
    "PotentialField",
    "RadialProfile",
    "SolverError",
    "Transform",
    "build_grid",
    "diagonalizing_transform",
    "find_gamma_critical_points",
    "gamma_eval",
    "make_diffusion",
    "make_penalty",
    "make_potential",
    "penalized_nonlinearity",
    "penalty_threshold",
    "run_subcommand",
    "sigma_c1",
    "sigma_closed_form",
    "solve_radial_ground_state",
]
