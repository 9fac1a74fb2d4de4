"""Rental-market simulation: static equilibrium, dynamics, synthetic panels."""

from .dynamics import CONTRACT_MONTHS, DynamicConfig, DynamicPath, solve_dynamic_path
from .market import (
    EquilibriumSolution,
    MarketPrimitives,
    comparative_static,
    endogenous_shares_response,
    linearized_response,
    perturbed_income_elasticities,
    solve_equilibrium,
)
from .synthetic import (
    SyntheticPanel,
    SyntheticPanelConfig,
    default_adoption_pattern,
    generate_synthetic_panel,
    spawn_seeds,
)

__all__ = [
    "CONTRACT_MONTHS",
    "DynamicConfig",
    "DynamicPath",
    "EquilibriumSolution",
    "MarketPrimitives",
    "SyntheticPanel",
    "SyntheticPanelConfig",
    "comparative_static",
    "default_adoption_pattern",
    "endogenous_shares_response",
    "generate_synthetic_panel",
    "linearized_response",
    "perturbed_income_elasticities",
    "solve_dynamic_path",
    "solve_equilibrium",
    "spawn_seeds",
]
