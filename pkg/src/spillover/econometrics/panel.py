"""Panel layout conventions and the first-difference transform.

Panels are pandas DataFrames with one row per (zip, month). ``month`` is a
"YYYY-MM" label or plain integer period; an integer ``t`` column derived
from it drives contiguity checks and lead/lag shifts. Identifier columns
and cross-sectional moderators pass through transforms unchanged.
"""

from __future__ import annotations

import numpy as np
import pandas as pd

from ..errors import SchemaError
from ..months import month_index

ID_COLUMNS = ("zip", "month", "t", "cluster_id", "cbsa_id", "entry_cohort", "event_id")
STATIC_COLUMNS = ("weight", "mw_worker_share", "median_hh_income", "public_housing_share")


def add_month_index(panel: pd.DataFrame) -> pd.DataFrame:
    """Attach integer period column ``t`` derived from ``month``."""
    if "month" not in panel.columns:
        raise SchemaError("panel must have a 'month' column")
    out = panel.copy()
    codes, uniques = pd.factorize(out["month"])
    lookup = np.asarray([month_index(m) for m in uniques], dtype=np.int64)
    out["t"] = lookup[codes]
    return out


def unit_columns(panel: pd.DataFrame) -> list[str]:
    """Panel unit: plain zips, or (event, zip) blocks in stacked samples."""
    return ["event_id", "zip"] if "event_id" in panel.columns else ["zip"]


def check_unique_cells(panel: pd.DataFrame) -> None:
    units = unit_columns(panel)
    dup = panel.duplicated([*units, "t"])
    if dup.any():
        row = panel.loc[dup, [*units, "month"]].iloc[0]
        raise SchemaError(
            f"duplicate cell: ({', '.join(str(row[c]) for c in [*units, 'month'])})"
        )


def find_gaps(panel: pd.DataFrame) -> list[tuple[str, object]]:
    """(zip, month-after-gap) pairs where the month sequence skips."""
    units = unit_columns(panel)
    df = panel.sort_values([*units, "t"], kind="stable")
    if len(units) == 1:
        keys = pd.factorize(df["zip"])[0]
    else:
        codes = [pd.factorize(df[c])[0] for c in units]
        keys = codes[0] * (codes[1].max() + 1) + codes[1]
    ts = df["t"].to_numpy()
    same = keys[1:] == keys[:-1]
    jump = (ts[1:] - ts[:-1]) > 1
    after = df.iloc[1:][same & jump]
    return list(zip(after["zip"], after["month"]))


def first_difference(
    panel: pd.DataFrame,
    columns: list[str] | None = None,
    static: tuple[str, ...] = STATIC_COLUMNS,
) -> pd.DataFrame:
    """Month-over-month differences within zip; first month per zip dropped.

    Differences every numeric column except identifiers and ``static``
    passthroughs unless ``columns`` names them explicitly. Month gaps are an
    error: differencing across a gap would silently mix horizons.
    """
    df = add_month_index(panel) if "t" not in panel.columns else panel.copy()
    check_unique_cells(df)
    gaps = find_gaps(df)
    if gaps:
        shown = ", ".join(f"({z}, {m})" for z, m in gaps[:10])
        raise SchemaError(f"month gaps in panel at {shown}" + (" ..." if len(gaps) > 10 else ""))

    if columns is None:
        skip = set(ID_COLUMNS) | set(static)
        columns = [
            c
            for c in df.columns
            if c not in skip and pd.api.types.is_numeric_dtype(df[c])
        ]
    units = unit_columns(df)
    df = df.sort_values([*units, "t"], kind="stable")
    grouped = df.groupby(units, sort=False)
    first_rows = grouped.cumcount() == 0
    for col in columns:
        df[col] = grouped[col].diff()
    return df.loc[~first_rows].reset_index(drop=True)
