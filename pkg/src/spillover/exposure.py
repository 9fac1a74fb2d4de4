"""Commuting shares and the shift-share workplace MW measure.

The workplace measure of an origin ZIP is the commuting-share-weighted
average of log statutory MWs across the ZIPs its residents work in. Shares
come from origin-destination job counts and are fixed within a measure
variant; the shocks are the statutory MW changes at destinations.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import MissingPolicyError, SchemaError
from .months import month_year
from .policy_panel import ZipMonthPolicy

CATEGORIES = ("all", "low_income", "young")

SHARE_SUM_TOL = 1e-12


@dataclass(frozen=True)
class CommutingMatrix:
    """Origin-destination job counts for one year and worker category."""

    year: int
    category: str
    entries: tuple[tuple[str, str, float], ...]

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise SchemaError(f"unknown commuting category {self.category!r}")
        seen = set()
        for origin, dest, jobs in self.entries:
            if jobs < 0:
                raise SchemaError(f"negative job count for {origin}->{dest}")
            if (origin, dest) in seen:
                raise SchemaError(f"duplicate pair {origin}->{dest}")
            seen.add((origin, dest))

    def origins(self) -> list[str]:
        return sorted({o for o, _, j in self.entries if j > 0})


@dataclass(frozen=True)
class ExposureWeights:
    """Normalized commuting shares of one origin ZIP over its destinations."""

    origin_zip: str
    weights: dict[str, float] = field(hash=False)

    def __post_init__(self):
        if not self.weights:
            raise SchemaError(f"{self.origin_zip}: empty weight map")
        if any(w < 0 for w in self.weights.values()):
            raise SchemaError(f"{self.origin_zip}: negative share")
        if abs(sum(self.weights.values()) - 1.0) > SHARE_SUM_TOL:
            raise SchemaError(f"{self.origin_zip}: shares do not sum to 1")

    def destinations(self) -> list[str]:
        return sorted(self.weights)


def compute_shares(matrix: CommutingMatrix, origin_zip: str) -> ExposureWeights:
    """Shares over destinations with positive jobs; errors on zero totals."""
    counts = {d: j for o, d, j in matrix.entries if o == origin_zip and j > 0}
    total = sum(counts.values())
    if total <= 0:
        raise SchemaError(f"no resident workers in origin {origin_zip}")
    return ExposureWeights(origin_zip, {d: j / total for d, j in counts.items()})


def workplace_mw(
    weights: ExposureWeights,
    policies: dict[tuple[str, str], ZipMonthPolicy] | list[ZipMonthPolicy],
    month: str,
) -> float:
    """Shift-share workplace measure: sum of shares times destination log MW.

    Every destination must have a policy row for ``month``; a missing
    destination is a hard error rather than a silent renormalization, which
    would change what the measure means.
    """
    if not isinstance(policies, dict):
        policies = {(p.zip, p.month): p for p in policies}
    missing = [d for d in weights.weights if (d, month) not in policies]
    if missing:
        raise MissingPolicyError(missing, month)
    return sum(w * policies[(d, month)].mw_res for d, w in weights.weights.items())


def _matrix_for_year(matrices: list[CommutingMatrix], year: int, category: str):
    """Latest matrix of the category with matrix year <= year."""
    candidates = [m for m in matrices if m.category == category and m.year <= year]
    if not candidates:
        raise SchemaError(f"no {category} commuting matrix at or before year {year}")
    return max(candidates, key=lambda m: m.year)


def build_measure_panel(
    matrices: list[CommutingMatrix] | CommutingMatrix,
    policies: list[ZipMonthPolicy],
    months: list[str],
    fixed_year: int | None = 2017,
    category: str = "all",
) -> pd.DataFrame:
    """Residence and workplace measures for every (origin ZIP, month).

    With ``fixed_year`` set, shares come from that year's matrix for all
    months; with ``fixed_year=None`` each month uses the latest matrix whose
    year does not exceed the month's calendar year. Origins without resident
    workers are skipped; missing destination policies raise.

    Returns a DataFrame with columns zip, month, mw_res, mw_wkp.
    """
    if isinstance(matrices, CommutingMatrix):
        matrices = [matrices]
    pol = pd.DataFrame(
        {
            "zip": [p.zip for p in policies],
            "month": [p.month for p in policies],
            "mw_res": [p.mw_res for p in policies],
        }
    )
    if pol.duplicated(["zip", "month"]).any():
        raise SchemaError("duplicate (zip, month) policy rows")

    if fixed_year is not None:
        years_needed = {fixed_year}
        if not any(m.category == category and m.year == fixed_year for m in matrices):
            raise SchemaError(f"no {category} commuting matrix for year {fixed_year}")
        year_of = {m: fixed_year for m in months}
    else:
        year_of = {m: month_year(m) for m in months}
        years_needed = set(year_of.values())

    share_frames = {}
    for year in years_needed:
        mat = (
            _matrix_for_year(matrices, year, category)
            if fixed_year is None
            else next(m for m in matrices if m.category == category and m.year == fixed_year)
        )
        rows = [(o, d, j) for o, d, j in mat.entries if j > 0]
        dead = {o for o, _, _ in mat.entries} - {o for o, _, _ in rows}
        if dead:
            warnings.warn(
                f"{len(dead)} origin(s) with no resident workers excluded "
                f"from year {mat.year}: {sorted(dead)[:5]}",
                stacklevel=2,
            )
        df = pd.DataFrame(rows, columns=["zip", "dest", "jobs"])
        totals = df.groupby("zip")["jobs"].transform("sum")
        df["share"] = df["jobs"] / totals
        share_frames[year] = df[["zip", "dest", "share"]]

    out = []
    month_frame = pd.DataFrame({"month": months})
    month_frame["share_year"] = month_frame["month"].map(year_of)
    for year, group in month_frame.groupby("share_year"):
        shares = share_frames[year]
        expanded = shares.merge(group[["month"]], how="cross")
        merged = expanded.merge(
            pol.rename(columns={"zip": "dest", "mw_res": "dest_mw_res"}),
            on=["dest", "month"],
            how="left",
        )
        missing = merged[merged["dest_mw_res"].isna()]
        if len(missing):
            first_month = missing["month"].min()
            raise MissingPolicyError(
                missing.loc[missing["month"] == first_month, "dest"].unique(), first_month
            )
        merged["contrib"] = merged["share"] * merged["dest_mw_res"]
        wkp = merged.groupby(["zip", "month"], as_index=False)["contrib"].sum()
        out.append(wkp.rename(columns={"contrib": "mw_wkp"}))

    panel = pd.concat(out, ignore_index=True).merge(pol, on=["zip", "month"], how="left")
    if panel["mw_res"].isna().any():
        bad = panel.loc[panel["mw_res"].isna(), ["zip", "month"]].iloc[0]
        raise MissingPolicyError([bad["zip"]], bad["month"])
    panel = panel.sort_values(["zip", "month"], kind="stable").reset_index(drop=True)
    return panel[["zip", "month", "mw_res", "mw_wkp"]]


@dataclass(frozen=True)
class RankDiagnostic:
    """Identification diagnostic for the two MW measures."""

    min_singular_value: float
    pairwise_corr: float
    collinear: bool


def rank_condition_check(
    measure_panel: pd.DataFrame,
    controls: pd.DataFrame | None = None,
    rel_tol: float = 1e-10,
) -> RankDiagnostic:
    """Check that the first-differenced measures vary independently.

    Both measures are first-differenced within ZIP, residualized on month
    dummies (plus any controls), and stacked into a two-column matrix; the
    design is collinear when its smallest singular value is negligible
    relative to its norm. With everyone working where they live the two
    columns are identical and the check fails.
    """
    df = measure_panel.sort_values(["zip", "month"], kind="stable").copy()
    if controls is not None:
        df = df.merge(controls, on=["zip", "month"], how="left")
    control_cols = [] if controls is None else [c for c in controls.columns if c not in ("zip", "month")]

    for col in ["mw_res", "mw_wkp"] + control_cols:
        df[f"d_{col}"] = df.groupby("zip")[col].diff()
    df = df.dropna(subset=[f"d_{c}" for c in ["mw_res", "mw_wkp"] + control_cols])
    if len(df) < 2:
        return RankDiagnostic(0.0, float("nan"), True)

    def residualize(col):
        resid = df[col] - df.groupby("month")[col].transform("mean")
        return resid.to_numpy(dtype=float)

    y = np.column_stack([residualize("d_mw_res"), residualize("d_mw_wkp")])
    if control_cols:
        x = np.column_stack([residualize(f"d_{c}") for c in control_cols])
        coef, *_ = np.linalg.lstsq(x, y, rcond=None)
        y = y - x @ coef

    svals = np.linalg.svd(y, compute_uv=False)
    norm = float(svals.max()) if svals.size else 0.0
    min_sv = float(svals.min()) if svals.size else 0.0
    collinear = norm == 0.0 or min_sv < rel_tol * norm
    sd = y.std(axis=0)
    if sd.min() > 0:
        corr = float(np.corrcoef(y[:, 0], y[:, 1])[0, 1])
    else:
        corr = float("nan")
    return RankDiagnostic(float(min_sv), corr, bool(collinear))
