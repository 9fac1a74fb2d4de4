"""Hypothetical MW policies and the rent incidence on landlords.

A scenario overrides jurisdiction MW levels on top of the statutory
schedule at a base month. The binding counterfactual MW is formed at the
census-block level (the max of old components and overrides, so a policy
can be partially binding within a ZIP), aggregated to ZIPs, and pushed
through the commuting weights to produce counterfactual changes in both
measures. Rent and wage-income responses follow the estimated
elasticities; the share pocketed by landlords is their ratio scaled by the
local housing expenditure share.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import SchemaError, SpilloverError
from .exposure import ExposureWeights, workplace_mw
from .policy_panel import (
    LEVELS,
    BlockRecord,
    PolicySchedule,
    ZipMonthPolicy,
    binding_mw_for_block,
)

DEFAULT_BETA = 0.0685
DEFAULT_GAMMA = -0.0219
DEFAULT_EPSILON = 0.1
WAGE_THRESHOLD = 0.001


@dataclass(frozen=True)
class PolicyScenario:
    """A named set of jurisdiction MW overrides plus response elasticities."""

    name: str
    base_month: str
    overrides: tuple[tuple[str, str, float], ...]
    beta: float = DEFAULT_BETA
    gamma: float = DEFAULT_GAMMA
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        for level, region, mw in self.overrides:
            if level not in LEVELS:
                raise SchemaError(f"override has unknown level {level!r}")
            if mw <= 0:
                raise SchemaError(f"override for {region!r} must be positive")
        for value in (self.beta, self.gamma, self.epsilon):
            if not math.isfinite(value):
                raise SchemaError("scenario elasticities must be finite")


@dataclass(frozen=True)
class IncidenceResult:
    """Per-ZIP changes and shares pocketed, with the aggregate incidence."""

    per_zip: pd.DataFrame = field(hash=False)
    rho_total: float = float("nan")
    excluded_cbsas: tuple[str, ...] = ()
    undefined_rho_zips: tuple[str, ...] = ()


def _validate_override_regions(
    overrides: Sequence[tuple[str, str, float]],
    schedules: Sequence[PolicySchedule],
    blocks: Sequence[BlockRecord],
) -> None:
    known = {(s.level, s.region_code) for s in schedules}
    for block in blocks:
        known.add(("state", block.state))
        known.add(("county", block.county))
        if block.place:
            known.add(("place", block.place))
    for level, region, _ in overrides:
        if level == "federal":
            continue
        if (level, region) not in known:
            raise SchemaError(f"unknown override region ({level}, {region!r})")


def apply_scenario(
    blocks: Sequence[BlockRecord],
    schedules: Sequence[PolicySchedule],
    scenario: PolicyScenario,
) -> dict[str, ZipMonthPolicy]:
    """Counterfactual ZIP policies at the scenario's base month.

    Every block takes the max of its statutory components in force at the
    base month and any override that reaches it; block values aggregate to
    ZIPs by housing units, so a ZIP straddling the override boundary moves
    only partially.
    """
    _validate_override_regions(scenario.overrides, schedules, blocks)
    by_zip: dict[str, list[BlockRecord]] = {}
    for block in blocks:
        by_zip.setdefault(block.zip, []).append(block)

    out = {}
    for zip_, zblocks in sorted(by_zip.items()):
        mws = []
        for block in zblocks:
            mw = binding_mw_for_block(block, scenario.base_month, schedules)
            for level, region, ov_mw in scenario.overrides:
                applies = level == "federal" or region == {
                    "state": block.state,
                    "county": block.county,
                    "place": block.place,
                }[level]
                if applies:
                    mw = max(mw, ov_mw)
            mws.append(mw)
        total_units = sum(b.housing_units for b in zblocks)
        if total_units > 0:
            value = sum(b.housing_units * m for b, m in zip(zblocks, mws)) / total_units
        else:
            value = sum(mws) / len(mws)
        out[zip_] = ZipMonthPolicy.from_mw(zip_, scenario.base_month, value)
    return out


def baseline_policies(
    blocks: Sequence[BlockRecord],
    schedules: Sequence[PolicySchedule],
    base_month: str,
) -> dict[str, ZipMonthPolicy]:
    """ZIP policies at the base month with no overrides applied."""
    empty = PolicyScenario(name="baseline", base_month=base_month, overrides=())
    return apply_scenario(blocks, schedules, empty)


def measure_changes(
    blocks: Sequence[BlockRecord],
    schedules: Sequence[PolicySchedule],
    weights_by_zip: Mapping[str, ExposureWeights],
    scenario: PolicyScenario,
) -> pd.DataFrame:
    """Per-ZIP counterfactual changes in the residence and workplace measures.

    Only origins with exposure weights get rows; all their destinations must
    be covered by the block universe.
    """
    base = baseline_policies(blocks, schedules, scenario.base_month)
    counter = apply_scenario(blocks, schedules, scenario)
    base_cells = {(p.zip, p.month): p for p in base.values()}
    counter_cells = {(p.zip, p.month): p for p in counter.values()}
    rows = []
    for zip_ in sorted(weights_by_zip):
        if zip_ not in base:
            raise SchemaError(f"origin {zip_} has no blocks in the policy universe")
        w = weights_by_zip[zip_]
        wkp_base = workplace_mw(w, base_cells, scenario.base_month)
        wkp_cf = workplace_mw(w, counter_cells, scenario.base_month)
        rows.append(
            {
                "zip": zip_,
                "d_mw_res": counter[zip_].mw_res - base[zip_].mw_res,
                "d_mw_wkp": wkp_cf - wkp_base,
            }
        )
    return pd.DataFrame(rows)


def predict_changes(d_mw_res, d_mw_wkp, scenario: PolicyScenario):
    """Predicted (d log rent, d log wage income) for measure changes."""
    d_mw_res = np.asarray(d_mw_res, dtype=float)
    d_mw_wkp = np.asarray(d_mw_wkp, dtype=float)
    d_r = scenario.beta * d_mw_wkp + scenario.gamma * d_mw_res
    d_y = scenario.epsilon * d_mw_wkp
    if d_r.ndim == 0:
        return float(d_r), float(d_y)
    return d_r, d_y


def share_pocketed(
    s_i: float, d_mw_res: float, d_mw_wkp: float, scenario: PolicyScenario
) -> float:
    """Share of policy-generated wage income absorbed by rent increases.

    Undefined when the workplace measure does not move: the denominator
    wage response is exactly zero and the ratio carries no information.
    """
    if d_mw_wkp == 0:
        raise SpilloverError("undefined incidence: no wage change")
    d_r, d_y = predict_changes(d_mw_res, d_mw_wkp, scenario)
    return s_i * math.expm1(d_r) / math.expm1(d_y)


def total_incidence(
    safmr_rents: Sequence[float],
    wages_per_household: Sequence[float],
    d_mw_res: Sequence[float],
    d_mw_wkp: Sequence[float],
    scenario: PolicyScenario,
) -> float:
    """Aggregate rent change over aggregate wage change across a ZIP set."""
    rents = np.asarray(safmr_rents, dtype=float)
    wages = np.asarray(wages_per_household, dtype=float)
    d_res = np.asarray(d_mw_res, dtype=float)
    d_wkp = np.asarray(d_mw_wkp, dtype=float)
    if len(rents) == 0:
        raise SchemaError("total incidence needs at least one ZIP")
    num = float(np.sum(rents * np.expm1(scenario.beta * d_wkp + scenario.gamma * d_res)))
    den = float(np.sum(wages * np.expm1(scenario.epsilon * d_wkp)))
    if den == 0:
        raise SpilloverError("zero aggregate wage change in the selected set")
    return num / den


def filter_affected_cbsas(
    changes: pd.DataFrame,
    wage_threshold: float = WAGE_THRESHOLD,
) -> tuple[list[str], list[str]]:
    """Drop ZIPs of CBSAs whose mean wage response is below the threshold.

    ``changes`` needs zip, cbsa_id, and d_y columns. Excluding whole metros
    with negligible wage responses removes ratio estimates whose denominator
    is economically meaningless.
    """
    if "cbsa_id" not in changes.columns or "d_y" not in changes.columns:
        raise SchemaError("filter requires cbsa_id and d_y columns")
    means = changes.groupby("cbsa_id")["d_y"].mean()
    excluded = sorted(means.index[means < wage_threshold])
    retained = changes.loc[~changes["cbsa_id"].isin(excluded), "zip"].tolist()
    return sorted(retained), excluded


def decile_profile(changes: pd.DataFrame, n_deciles: int = 10) -> pd.DataFrame:
    """Mean share pocketed by decile of the workplace-residence change gap.

    ``changes`` needs zip, d_mw_res, d_mw_wkp, and rho columns; rows with
    undefined rho are ignored. Ties in the gap break by zip id, so decile
    boundaries do not depend on input order.
    """
    df = changes.dropna(subset=["rho"]).copy()
    if len(df) < n_deciles:
        raise SchemaError(f"need at least {n_deciles} ZIPs with defined rho")
    df["gap"] = df["d_mw_wkp"] - df["d_mw_res"]
    df = df.sort_values(["gap", "zip"], kind="stable").reset_index(drop=True)
    df["decile"] = (np.arange(len(df)) * n_deciles) // len(df) + 1
    return df.groupby("decile", as_index=False).agg(
        gap_mean=("gap", "mean"), rho_mean=("rho", "mean"), count=("rho", "size")
    )


def sensitivity_epsilon(
    safmr_rents: Sequence[float],
    wages_per_household: Sequence[float],
    d_mw_res: Sequence[float],
    d_mw_wkp: Sequence[float],
    scenario: PolicyScenario,
    epsilon_grid: Sequence[float],
) -> list[tuple[float, float]]:
    """Total incidence along a grid of wage-income elasticities."""
    if any(e <= 0 for e in epsilon_grid):
        raise SchemaError("epsilon grid must be positive")
    curve = []
    for eps in epsilon_grid:
        s = replace(scenario, epsilon=float(eps))
        curve.append(
            (float(eps), total_incidence(safmr_rents, wages_per_household, d_mw_res, d_mw_wkp, s))
        )
    return curve


def evaluate_scenario(
    blocks: Sequence[BlockRecord],
    schedules: Sequence[PolicySchedule],
    weights_by_zip: Mapping[str, ExposureWeights],
    covariates: pd.DataFrame,
    scenario: PolicyScenario,
    *,
    zip_cbsa: Mapping[str, str] | None = None,
    wage_threshold: float = WAGE_THRESHOLD,
    epsilon_grid: Sequence[float] | None = None,
) -> IncidenceResult:
    """Full scenario evaluation: changes, per-ZIP incidence, and aggregates.

    ``covariates`` needs zip, safmr_rent, and annual_wage_hh columns. ZIPs
    with no wage response keep their rows with rho missing and are excluded
    from the aggregate; when a CBSA map is supplied, whole metros below the
    wage-response threshold are dropped before aggregation.
    """
    changes = measure_changes(blocks, schedules, weights_by_zip, scenario)
    d_r, d_y = predict_changes(
        changes["d_mw_res"].to_numpy(), changes["d_mw_wkp"].to_numpy(), scenario
    )
    changes["d_r"], changes["d_y"] = d_r, d_y

    cov = covariates.set_index("zip")
    missing = [z for z in changes["zip"] if z not in cov.index]
    if missing:
        raise SchemaError(f"covariates missing for zips: {missing[:5]}")
    changes["safmr_rent"] = cov.loc[changes["zip"], "safmr_rent"].to_numpy(dtype=float)
    wages_annual = cov.loc[changes["zip"], "annual_wage_hh"].to_numpy(dtype=float)
    changes["wage_per_hh"] = wages_annual / 12.0
    changes["s_i"] = changes["safmr_rent"] / changes["wage_per_hh"]

    rho = np.full(len(changes), np.nan)
    defined = changes["d_mw_wkp"].to_numpy() != 0.0
    rho[defined] = (
        changes.loc[defined, "s_i"].to_numpy()
        * np.expm1(changes.loc[defined, "d_r"].to_numpy())
        / np.expm1(scenario.epsilon * changes.loc[defined, "d_mw_wkp"].to_numpy())
    )
    changes["rho"] = rho
    undefined = tuple(changes.loc[~defined, "zip"])

    excluded_cbsas: tuple[str, ...] = ()
    selected = changes
    if zip_cbsa is not None:
        changes["cbsa_id"] = changes["zip"].map(dict(zip_cbsa))
        if changes["cbsa_id"].isna().any():
            bad = changes.loc[changes["cbsa_id"].isna(), "zip"].iloc[0]
            raise SchemaError(f"no CBSA assignment for zip {bad}")
        retained, excluded = filter_affected_cbsas(changes, wage_threshold)
        excluded_cbsas = tuple(excluded)
        selected = changes[changes["zip"].isin(retained)]

    agg = selected[selected["rho"].notna()]
    rho_total = float("nan")
    if len(agg):
        rho_total = total_incidence(
            agg["safmr_rent"].to_numpy(),
            agg["wage_per_hh"].to_numpy(),
            agg["d_mw_res"].to_numpy(),
            agg["d_mw_wkp"].to_numpy(),
            scenario,
        )

    result = IncidenceResult(
        per_zip=changes,
        rho_total=rho_total,
        excluded_cbsas=excluded_cbsas,
        undefined_rho_zips=undefined,
    )
    if epsilon_grid is not None and len(agg):
        result.per_zip.attrs["epsilon_curve"] = sensitivity_epsilon(
            agg["safmr_rent"].to_numpy(),
            agg["wage_per_hh"].to_numpy(),
            agg["d_mw_res"].to_numpy(),
            agg["d_mw_wkp"].to_numpy(),
            scenario,
            epsilon_grid,
        )
    return result


def group_medians(result: IncidenceResult) -> pd.DataFrame:
    """Median changes and shares for directly vs indirectly affected ZIPs."""
    df = result.per_zip
    direct = df["d_mw_res"] > 0
    rows = []
    for label, mask in (("residence_mw_changed", direct), ("residence_mw_unchanged", ~direct)):
        sub = df[mask]
        rows.append(
            {
                "group": label,
                "n": int(len(sub)),
                "d_mw_res_median": float(sub["d_mw_res"].median()) if len(sub) else float("nan"),
                "d_mw_wkp_median": float(sub["d_mw_wkp"].median()) if len(sub) else float("nan"),
                "s_i_median": float(sub["s_i"].median()) if len(sub) else float("nan"),
                "rho_median": float(sub["rho"].median()) if len(sub) else float("nan"),
            }
        )
    return pd.DataFrame(rows)
