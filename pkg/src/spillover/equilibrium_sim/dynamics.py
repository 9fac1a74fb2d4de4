"""Monthly rental market with 12-month contracts and staggered expiry.

Each month a share of contracts expires; the expiring residents demand
square feet at current rents and MW levels against a flow vacancy supply.
Only new contracts reprice, so a permanent MW shock moves the posted rent
once while the stock of existing contracts rolls over gradually.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ..errors import ConvergenceError, SchemaError
from .market import LOG_RENT_TOL, MarketPrimitives, _solve_log_rent

CONTRACT_MONTHS = 12
LAMBDA_SUM_TOL = 1e-9


@dataclass(frozen=True)
class DynamicConfig:
    """Contract-expiry shares, horizon, and stock for the dynamic model.

    ``lam`` maps ``(zip, month)`` to the share of residents whose contracts
    start that month, for months ``0..horizon-1``; months before the start
    are extended 12-periodically. Trailing 12-month sums must equal one.
    The degenerate full-turnover mode (every share equal to one) is allowed
    and reproduces the static model month by month.

    ``vacancy_share`` scales flow supply as ``vacancy_share * supply_scale
    * R**eta``; left unset it is calibrated so steady-state vacancies equal
    the average monthly repricing mass (1/12, or 1 under full turnover).
    """

    lam: Mapping[tuple[str, int], float]
    horizon: int
    total_stock: Mapping[str, float]
    vacancy_share: float | None = None

    def share(self, zip_: str, month: int) -> float:
        # out-of-range months (the pre-period, or horizons beyond the keys)
        # fall back to the 12-month cycle
        for key in ((zip_, month), (zip_, month % CONTRACT_MONTHS)):
            if key in self.lam:
                return float(self.lam[key])
        raise SchemaError(
            f"no contract-expiry share for {zip_} month {month}; "
            "provide either all horizon months or a 12-month cycle"
        )

    def validate(self, zips: Sequence[str]) -> None:
        values = [self.share(z, t) for z in zips for t in range(self.horizon)]
        if any(not 0.0 <= v <= 1.0 for v in values):
            raise SchemaError("contract-expiry shares must lie in [0, 1]")
        if all(v == 1.0 for v in values):
            return  # full-turnover mode
        for z in zips:
            for t in range(self.horizon):
                total = sum(self.share(z, t - k) for k in range(CONTRACT_MONTHS))
                if abs(total - 1.0) > LAMBDA_SUM_TOL:
                    raise SchemaError(
                        f"{z}: expiry shares over the 12 months ending {t} sum to "
                        f"{total:.6f}, expected 1"
                    )

    def steady_share(self, zips: Sequence[str]) -> float:
        if all(self.share(z, t) == 1.0 for z in zips for t in range(self.horizon)):
            return 1.0
        return 1.0 / CONTRACT_MONTHS


@dataclass(frozen=True)
class DynamicPath:
    rents: dict[tuple[str, int], float] = field(hash=False)
    constrained: frozenset[tuple[str, int]] = frozenset()


def _per_capita_demand(prim: MarketPrimitives, log_rent: float, mw: Mapping[str, float]) -> float:
    return math.exp(prim.log_demand(log_rent, mw))


def solve_dynamic_path(
    prims: Sequence[MarketPrimitives] | MarketPrimitives,
    dyn: DynamicConfig,
    mw_path: Mapping[int, Mapping[str, float]],
    initial_ledger: Mapping[str, Sequence[tuple[float, float]]] | None = None,
) -> DynamicPath:
    """Simulate flow-market rents under a statutory MW path.

    Without an explicit ledger the market starts at the steady state of the
    first month's MW profile: cohort square footage mirrors the steady-state
    demand split by expiry shares. Months where flow supply would exceed the
    vacant stock clear at the (higher) rent that fits the remaining space and
    are flagged. Months with a zero expiry share carry the previous posted
    rent forward, since no contract reprices.
    """
    if isinstance(prims, MarketPrimitives):
        prims = [prims]
    zips = [p.zip for p in prims]
    dyn.validate(zips)
    for t in range(dyn.horizon):
        if t not in mw_path:
            raise SchemaError(f"mw_path missing month {t}")

    v_share = dyn.vacancy_share if dyn.vacancy_share is not None else dyn.steady_share(zips)
    rents: dict[tuple[str, int], float] = {}
    constrained: set[tuple[str, int]] = set()

    for prim in prims:
        stock = float(dyn.total_stock[prim.zip])
        v0 = v_share * prim.supply_scale
        mw0 = mw_path[0]

        if initial_ledger is not None and prim.zip in initial_ledger:
            ledger = deque((float(s), float(q)) for s, q in initial_ledger[prim.zip])
        else:
            # steady state of the first month's profile: flow clearing at the
            # calibrated vacancy scale coincides with static market clearing
            def ss_excess(log_rent, prim=prim, mw0=mw0):
                return prim.log_demand(log_rent, mw0) - (
                    math.log(prim.supply_scale) + prim.eta * log_rent
                )

            log_r_ss, _, _ = _solve_log_rent(ss_excess, tol=LOG_RENT_TOL)
            demand_ss = _per_capita_demand(prim, log_r_ss, mw0)
            # newest cohorts first, cumulative share capped at one so the
            # full-turnover mode leaves a single live cohort
            cohorts = []
            room = 1.0
            for tau in range(-1, -CONTRACT_MONTHS - 1, -1):
                share = min(dyn.share(prim.zip, tau), room)
                cohorts.append((share, share * demand_ss))
                room -= share
                if room <= LAMBDA_SUM_TOL:
                    break
            ledger = deque(reversed(cohorts))

        last_rent = math.nan
        for t in range(dyn.horizon):
            lam_t = dyn.share(prim.zip, t)
            # retire the oldest cohorts totaling this month's repricing share
            to_free = lam_t
            while to_free > LAMBDA_SUM_TOL and ledger:
                share, sqft = ledger[0]
                if share <= to_free + LAMBDA_SUM_TOL:
                    ledger.popleft()
                    to_free -= share
                else:
                    keep = (share - to_free) / share
                    ledger[0] = (share - to_free, sqft * keep)
                    to_free = 0.0
            held = sum(q for _, q in ledger)
            available = stock - held

            if lam_t == 0.0:
                ledger.append((0.0, 0.0))
                rents[(prim.zip, t)] = last_rent
                continue

            mw_t = mw_path[t]

            def flow_excess(log_rent, prim=prim, mw_t=mw_t, lam_t=lam_t, v0=v0):
                return (
                    math.log(lam_t)
                    + prim.log_demand(log_rent, mw_t)
                    - math.log(v0)
                    - prim.eta * log_rent
                )

            log_r, _, _ = _solve_log_rent(flow_excess, tol=LOG_RENT_TOL)
            quantity = lam_t * _per_capita_demand(prim, log_r, mw_t)

            if quantity > available + 1e-12 * stock:
                if available <= 0:
                    raise ConvergenceError(
                        f"{prim.zip} month {t}: no vacant stock to clear new contracts"
                    )

                def bound_excess(log_rent, prim=prim, mw_t=mw_t, lam_t=lam_t, available=available):
                    return (
                        math.log(lam_t)
                        + prim.log_demand(log_rent, mw_t)
                        - math.log(available)
                    )

                log_r, _, _ = _solve_log_rent(bound_excess, tol=LOG_RENT_TOL)
                quantity = available
                constrained.add((prim.zip, t))

            ledger.append((lam_t, quantity))
            last_rent = math.exp(log_r)
            rents[(prim.zip, t)] = last_rent

    return DynamicPath(rents=rents, constrained=frozenset(constrained))
