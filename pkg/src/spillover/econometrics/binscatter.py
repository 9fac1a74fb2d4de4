"""Binned residual scatter of log rents against one MW measure.

Both rents and the chosen measure are residualized on ZIP indicators plus
equal-count indicator bins of the other measure; the cleaned x is then cut
into equal-count bins whose means trace the conditional relationship. All
bin assignments break ties by stable (zip, month) order, so the output is
deterministic under permuted input.
"""

from __future__ import annotations

import numpy as np
import pandas as pd

from ..errors import SchemaError
from .estimate import _demean
from .panel import add_month_index

CHANGE_TOL = 1e-12


def equal_count_bins(values: np.ndarray, n_bins: int) -> np.ndarray:
    """Equal-count bin index per value; ties broken by position."""
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n < n_bins:
        raise SchemaError(f"cannot form {n_bins} bins from {n} observations")
    order = np.argsort(values, kind="stable")
    ranks = np.empty(n, dtype=int)
    ranks[order] = np.arange(n)
    return (ranks * n_bins) // n


def binned_residual_scatter(
    panel: pd.DataFrame,
    measure: str = "wkp",
    n_bins: int = 30,
    other_measure_bins: int = 100,
    restrict_to_change_months: bool = True,
) -> pd.DataFrame:
    """Per-bin means of residualized measure and log rents.

    With ``restrict_to_change_months`` the sample keeps only CBSA-months in
    which some ZIP's statutory MW increased that month, where the measures
    actually move. Returns columns bin, x_mean, y_mean, count.
    """
    if measure not in ("res", "wkp"):
        raise SchemaError("measure must be 'res' or 'wkp'")
    x_col = f"mw_{measure}"
    other_col = "mw_wkp" if measure == "res" else "mw_res"

    df = add_month_index(panel)
    df = df.sort_values(["zip", "t"], kind="stable").reset_index(drop=True)
    if restrict_to_change_months:
        if "cbsa_id" not in df.columns:
            raise SchemaError("restriction to change months requires cbsa_id")
        d_res = df.groupby("zip", sort=False)["mw_res"].diff()
        increased = df.loc[d_res > CHANGE_TOL, ["cbsa_id", "t"]].drop_duplicates()
        df = df.merge(increased, on=["cbsa_id", "t"], how="inner")
        df = df.sort_values(["zip", "t"], kind="stable").reset_index(drop=True)

    df = df.dropna(subset=["r", x_col, other_col]).reset_index(drop=True)
    if len(df) < n_bins:
        raise SchemaError(f"only {len(df)} observations for {n_bins} bins")

    other_bins = equal_count_bins(df[other_col].to_numpy(), min(other_measure_bins, len(df)))
    zip_codes, _ = pd.factorize(df["zip"], sort=True)
    codes = [zip_codes, other_bins]
    levels = [zip_codes.max() + 1, other_bins.max() + 1]
    weights = np.ones(len(df))

    stacked = np.column_stack(
        [df["r"].to_numpy(dtype=float), df[x_col].to_numpy(dtype=float)]
    )
    resid = _demean(stacked, codes, levels, weights)
    y_resid, x_resid = resid[:, 0], resid[:, 1]

    bins = equal_count_bins(x_resid, n_bins)
    out = pd.DataFrame({"bin": bins, "x_mean": x_resid, "y_mean": y_resid})
    result = out.groupby("bin", as_index=False).agg(
        x_mean=("x_mean", "mean"), y_mean=("y_mean", "mean"), count=("x_mean", "size")
    )
    return result
