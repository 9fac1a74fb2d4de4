"""ZIP-month statutory minimum wage panel and ZIP-level covariates.

Statutory MW levels are set by overlapping jurisdictions (federal, state,
county, place). The binding level at a census block is the maximum of the
levels in force there; ZIP-level values are housing-unit-weighted averages
over the ZIP's blocks, so a ZIP crossing a jurisdiction border gets a value
between the two statutory levels.
"""

from __future__ import annotations

import math
import warnings
from bisect import bisect_right
from dataclasses import dataclass, field

from .errors import SchemaError, UncoveredMonthError
from .months import month_index

LEVELS = ("federal", "state", "county", "place")


@dataclass(frozen=True)
class PolicySchedule:
    """Dated statutory MW steps for one jurisdiction.

    ``steps`` is an ordered list of ``(month, mw)`` pairs; each step takes
    effect at its month and stays in force until the next step.
    """

    jurisdiction_id: str
    level: str
    region_code: str
    steps: tuple[tuple[str, float], ...]
    _step_index: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.level not in LEVELS:
            raise SchemaError(f"unknown jurisdiction level {self.level!r}")
        if not self.steps:
            raise SchemaError(f"schedule {self.jurisdiction_id} has no steps")
        idx = tuple(month_index(m) for m, _ in self.steps)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise SchemaError(
                f"schedule {self.jurisdiction_id}: months must be strictly increasing"
            )
        if any(mw <= 0 for _, mw in self.steps):
            raise SchemaError(f"schedule {self.jurisdiction_id}: mw levels must be > 0")
        object.__setattr__(self, "_step_index", idx)

    def level_at(self, month: str | int) -> float | None:
        """MW in force at ``month``: the last step at or before it, else None."""
        pos = bisect_right(self._step_index, month_index(month))
        if pos == 0:
            return None
        return self.steps[pos - 1][1]


@dataclass(frozen=True)
class BlockRecord:
    """One census block of the block-to-ZIP crosswalk."""

    block_id: str
    zip: str
    state: str
    county: str
    place: str = ""
    housing_units: int = 0

    def __post_init__(self):
        if not self.zip:
            raise SchemaError(f"block {self.block_id}: zip must be non-empty")
        if self.housing_units < 0:
            raise SchemaError(f"block {self.block_id}: housing_units must be >= 0")


@dataclass(frozen=True)
class ZipMonthPolicy:
    """Statutory MW of one ZIP-month, with its log (the residence measure)."""

    zip: str
    month: str
    statutory_mw: float
    mw_res: float

    @classmethod
    def from_mw(cls, zip_: str, month: str, statutory_mw: float) -> "ZipMonthPolicy":
        return cls(zip_, month, statutory_mw, math.log(statutory_mw))


@dataclass(frozen=True)
class ZipCovariates:
    """Cross-sectional ZIP attributes used by heterogeneity and incidence."""

    zip: str
    mw_worker_share: float
    median_hh_income: float
    housing_exp_share: float
    safmr_rent: float
    wage_per_household: float
    public_housing_share: float


def validate_schedules(schedules: list[PolicySchedule]) -> PolicySchedule:
    """Check the one-federal-schedule invariant; returns the federal schedule."""
    federal = [s for s in schedules if s.level == "federal"]
    if len(federal) != 1:
        raise SchemaError(f"expected exactly one federal schedule, found {len(federal)}")
    return federal[0]


def binding_mw_for_block(
    block: BlockRecord, month: str | int, schedules: list[PolicySchedule]
) -> float:
    """Binding statutory MW at a block: max over the levels in force there.

    A schedule applies when its (level, region_code) matches the block's
    state/county/place by exact string; federal applies everywhere. Schedules
    whose first step is after ``month`` are not yet in force and contribute
    nothing, except the federal floor which must cover the month.
    """
    federal = validate_schedules(schedules)
    floor = federal.level_at(month)
    if floor is None:
        raise UncoveredMonthError(
            f"uncovered month: {month} precedes the first federal step"
        )
    best = floor
    region = {"state": block.state, "county": block.county, "place": block.place}
    for sched in schedules:
        if sched.level == "federal":
            continue
        if sched.region_code and sched.region_code == region[sched.level]:
            level = sched.level_at(month)
            if level is not None and level > best:
                best = level
    return best


def aggregate_zip_mw(
    blocks: list[BlockRecord], month: str, schedules: list[PolicySchedule]
) -> ZipMonthPolicy:
    """Housing-unit-weighted average of block MWs for one ZIP-month.

    ZIPs with zero housing units (airports, campuses) fall back to a simple
    average over their blocks.
    """
    if not blocks:
        raise SchemaError("aggregate_zip_mw requires at least one block")
    zips = {b.zip for b in blocks}
    if len(zips) != 1:
        raise SchemaError(f"blocks span multiple zips: {sorted(zips)}")
    mws = [binding_mw_for_block(b, month, schedules) for b in blocks]
    total_units = sum(b.housing_units for b in blocks)
    if total_units > 0:
        mw = sum(b.housing_units * m for b, m in zip(blocks, mws)) / total_units
    else:
        mw = sum(mws) / len(mws)
    return ZipMonthPolicy.from_mw(next(iter(zips)), month, mw)


def estimate_mw_worker_share(
    wage_bins: list[tuple[float, float, float]],
    hourly_mw: float,
    hours_per_month: float = 130.0,
    months: int = 12,
) -> float:
    """Share of workers earning at or below a full-time MW annual wage.

    ``wage_bins`` are contiguous ``(lower, upper, workers)`` annual-wage bins
    (the top bin may have ``upper = inf``). The full-time annual wage is
    ``hourly_mw * hours_per_month * months``; workers in the bin containing it
    count fractionally by the wage's position within the bin.
    """
    if not wage_bins:
        raise SchemaError("no wage bins")
    bins = sorted(wage_bins, key=lambda b: b[0])
    for (lo_a, hi_a, n_a), (lo_b, _, _) in zip(bins, bins[1:]):
        if hi_a != lo_b:
            raise SchemaError(f"bins not contiguous at {hi_a} vs {lo_b}")
    if any(n < 0 for _, _, n in bins):
        raise SchemaError("bin counts must be >= 0")
    total = sum(n for _, _, n in bins)
    if total == 0:
        raise SchemaError("empty workforce")

    yw = hourly_mw * hours_per_month * months
    if yw <= bins[0][0]:
        return 0.0
    if yw > bins[-1][1]:
        warnings.warn(
            f"full-time MW wage {yw} exceeds the top bin; share set to 1", stacklevel=2
        )
        return 1.0
    below = 0.0
    for lo, hi, n in bins:
        if hi <= yw:
            below += n
        elif lo <= yw:
            below += n * (yw - lo) / (hi - lo)
            break
    return below / total


def winsorize(values: list[float], lo_pct: float = 0.5, hi_pct: float = 99.5) -> list[float]:
    """Clamp to the nearest-rank percentile values (bit-reproducible)."""
    if not values:
        return []
    ordered = sorted(values)
    n = len(ordered)

    def rank_value(p):
        rank = max(1, math.ceil(p / 100.0 * n))
        return ordered[min(rank, n) - 1]

    lo_val, hi_val = rank_value(lo_pct), rank_value(hi_pct)
    return [min(max(v, lo_val), hi_val) for v in values]


@dataclass(frozen=True)
class HousingShareResult:
    shares: tuple[tuple[str, float], ...]
    excluded: tuple[str, ...]


def housing_expenditure_shares(
    raw: list[tuple[str, float, float | None]],
    winsor_lo: float = 0.5,
    winsor_hi: float = 99.5,
) -> HousingShareResult:
    """Rent-to-monthly-wage expenditure shares, winsorized cross-sectionally.

    ``raw`` rows are ``(zip, monthly_rent, annual_wage_per_household)``; rows
    with a missing or non-positive wage are excluded and reported so the
    caller can impute them separately.
    """
    kept, excluded = [], []
    for zip_, rent, annual_wage in raw:
        if annual_wage is None or (isinstance(annual_wage, float) and math.isnan(annual_wage)):
            excluded.append(zip_)
            continue
        if rent <= 0 or annual_wage <= 0:
            raise SchemaError(f"zip {zip_}: rents and wages must be positive")
        kept.append((zip_, rent / (annual_wage / 12.0)))
    clamped = winsorize([s for _, s in kept], winsor_lo, winsor_hi)
    return HousingShareResult(
        shares=tuple((z, s) for (z, _), s in zip(kept, clamped)),
        excluded=tuple(excluded),
    )
