"""Panel estimators, inference, reweighting, and diagnostics."""

from .balance import entropy_balance_weights
from .binscatter import binned_residual_scatter, equal_count_bins
from .estimate import (
    Design,
    IVSpec,
    RegressionResult,
    RegressionSpec,
    build_design,
    estimate_iv_lagged_dep,
    estimate_ols,
    event_study,
    heterogeneity_spec,
    wald_test,
)
from .inference import (
    AutocorrelationTest,
    WaldTest,
    autocorrelation_test,
    cluster_robust_vcov,
    restrictions_to_matrix,
    wald_test_matrix,
)
from .panel import add_month_index, find_gaps, first_difference
from .stacking import StackedEvent, StackedSample, build_stacked_sample

__all__ = [
    "AutocorrelationTest",
    "Design",
    "IVSpec",
    "RegressionResult",
    "RegressionSpec",
    "StackedEvent",
    "StackedSample",
    "WaldTest",
    "add_month_index",
    "autocorrelation_test",
    "binned_residual_scatter",
    "build_design",
    "build_stacked_sample",
    "cluster_robust_vcov",
    "entropy_balance_weights",
    "equal_count_bins",
    "estimate_iv_lagged_dep",
    "estimate_ols",
    "event_study",
    "find_gaps",
    "first_difference",
    "heterogeneity_spec",
    "restrictions_to_matrix",
    "wald_test",
    "wald_test_matrix",
]
