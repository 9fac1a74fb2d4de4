"""Cluster-robust covariance, Wald tests, and the FD autocorrelation check."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from ..errors import SchemaError


def cluster_robust_vcov(
    X: np.ndarray,
    residuals: np.ndarray,
    clusters,
    *,
    weights: np.ndarray | None = None,
    small_sample: bool = True,
    k_params: int | None = None,
) -> np.ndarray:
    """Sandwich covariance allowing arbitrary correlation within clusters.

    With every observation its own cluster this reduces to the HC1
    heteroskedasticity-robust estimator (including its small-sample factor).
    ``k_params`` is the model degrees of freedom used in the correction; it
    defaults to the column count of ``X`` but callers absorbing fixed
    effects should pass the full parameter count.
    """
    X = np.asarray(X, dtype=float)
    u = np.asarray(residuals, dtype=float)
    n, k = X.shape
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    codes, uniques = pd.factorize(np.asarray(clusters), sort=True)
    n_clusters = len(uniques)
    if n_clusters < 2:
        raise SchemaError("cluster-robust vcov requires at least 2 clusters")

    bread = np.linalg.pinv((X * w[:, None]).T @ X)
    scores = X * (w * u)[:, None]
    # per-cluster score sums, then the outer-product meat
    sums = np.zeros((n_clusters, k))
    np.add.at(sums, codes, scores)
    meat = sums.T @ sums
    vcov = bread @ meat @ bread
    if small_sample:
        k_used = k if k_params is None else k_params
        if n - k_used <= 0:
            raise SchemaError("zero degrees of freedom in small-sample correction")
        vcov *= (n_clusters / (n_clusters - 1)) * ((n - 1) / (n - k_used))
    return vcov


@dataclass(frozen=True)
class WaldTest:
    statistic: float
    df: int
    p_value: float


def wald_test_matrix(
    theta: np.ndarray, vcov: np.ndarray, R: np.ndarray, value: np.ndarray
) -> WaldTest:
    """Chi-square Wald test of R theta = value."""
    R = np.atleast_2d(np.asarray(R, dtype=float))
    value = np.broadcast_to(np.asarray(value, dtype=float), (R.shape[0],))
    diff = R @ np.asarray(theta, dtype=float) - value
    rvr = R @ vcov @ R.T
    if diff @ diff == 0.0:
        # restriction holds exactly; statistic is zero regardless of RVR'
        return WaldTest(0.0, R.shape[0], 1.0)
    try:
        solved = np.linalg.solve(rvr, diff)
    except np.linalg.LinAlgError as exc:
        raise SchemaError("singular restriction covariance in Wald test") from exc
    stat = float(diff @ solved)
    df = int(np.linalg.matrix_rank(R))
    return WaldTest(stat, df, float(stats.chi2.sf(stat, df)))


def restrictions_to_matrix(
    restrictions: Mapping[str, float] | Sequence[Mapping[str, float]],
    names: Sequence[str],
) -> np.ndarray:
    """Rows of named coefficient weights into a restriction matrix."""
    if isinstance(restrictions, Mapping):
        restrictions = [restrictions]
    index = {name: i for i, name in enumerate(names)}
    R = np.zeros((len(restrictions), len(names)))
    for r, row in enumerate(restrictions):
        for name, weight in row.items():
            if name not in index:
                raise SchemaError(f"unknown coefficient {name!r} in restriction")
            R[r, index[name]] = weight
    return R


@dataclass(frozen=True)
class AutocorrelationTest:
    phi_hat: float
    p_value: float
    n_obs: int


def autocorrelation_test(
    fd_residuals: pd.DataFrame,
    *,
    resid_col: str = "resid",
    cluster_col: str | None = None,
) -> AutocorrelationTest:
    """Regress FD residuals on their first lag and test phi = -1/2.

    A levels model with serially uncorrelated errors implies the residuals
    of the first-differenced model follow an MA(1) with lag-one
    autocorrelation exactly -1/2; rejecting that value is evidence the
    levels error was autocorrelated and first-differencing was the right
    call. Needs zip and t (or month) columns.
    """
    df = fd_residuals.copy()
    if "t" not in df.columns:
        from .panel import add_month_index

        df = add_month_index(df)
    df = df.sort_values(["zip", "t"], kind="stable")
    df["_lag"] = df.groupby("zip", sort=False)[resid_col].shift(1)
    df = df.dropna(subset=[resid_col, "_lag"])
    per_zip = df.groupby("zip").size()
    if len(df) == 0 or per_zip.max() < 2:
        raise SchemaError("autocorrelation test needs at least 3 periods per zip")

    y = df[resid_col].to_numpy(dtype=float)
    X = np.column_stack([np.ones(len(df)), df["_lag"].to_numpy(dtype=float)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    clusters = df[cluster_col] if cluster_col else df["zip"]
    vcov = cluster_robust_vcov(X, resid, clusters)
    test = wald_test_matrix(coef, vcov, np.array([[0.0, 1.0]]), np.array([-0.5]))
    return AutocorrelationTest(float(coef[1]), test.p_value, len(df))
