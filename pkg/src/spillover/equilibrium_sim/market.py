"""Constant-elasticity rental-market equilibrium for one or more ZIP markets.

Each origin market clears independently: residents' housing demand depends
on local rent, the local MW (through non-tradable prices) and destination
MWs (through commuted income), while landlords supply square feet with a
constant rent elasticity. Excess demand is strictly decreasing in log rent
under the sign restrictions, so the equilibrium is unique and bracketable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..errors import BracketingError, SchemaError
from ..exposure import ExposureWeights

LOG_RENT_TOL = 1e-12
MAX_BRACKET = 50.0


@dataclass(frozen=True)
class MarketPrimitives:
    """Elasticities and scale constants of one origin ZIP's rental market.

    ``eps_Y`` may be a single elasticity or a per-destination mapping; the
    mapping form breaks the homogeneity needed for the two-measure
    representation and is rejected by :func:`linearized_response`.
    """

    zip: str
    workers: float
    weights: ExposureWeights
    xi_R: float
    xi_P: float
    xi_Y: float
    eps_P: float
    eps_Y: float | Mapping[str, float]
    eta: float
    demand_scale: float = 1.0
    supply_scale: float = 1.0

    def __post_init__(self):
        if self.workers <= 0:
            raise SchemaError(f"{self.zip}: workers must be > 0")
        if self.xi_R >= 0:
            raise SchemaError(f"{self.zip}: rent elasticity of demand must be < 0")
        if self.xi_P >= 0:
            raise SchemaError(f"{self.zip}: non-tradable price elasticity must be < 0")
        if self.xi_Y <= 0:
            raise SchemaError(f"{self.zip}: income elasticity must be > 0")
        if self.eps_P <= 0:
            raise SchemaError(f"{self.zip}: price-to-MW elasticity must be > 0")
        for dest, value in self.eps_y_by_dest().items():
            if value < 0:
                raise SchemaError(f"{self.zip}: income-to-MW elasticity < 0 at {dest}")
        if self.eta < 0:
            raise SchemaError(f"{self.zip}: supply elasticity must be >= 0")
        if self.demand_scale <= 0 or self.supply_scale <= 0:
            raise SchemaError(f"{self.zip}: scale constants must be > 0")

    def eps_y_by_dest(self) -> dict[str, float]:
        if isinstance(self.eps_Y, Mapping):
            missing = set(self.weights.weights) - set(self.eps_Y)
            if missing:
                raise SchemaError(f"{self.zip}: eps_Y missing destinations {sorted(missing)}")
            return {d: float(self.eps_Y[d]) for d in self.weights.weights}
        return {d: float(self.eps_Y) for d in self.weights.weights}

    def log_demand(
        self,
        log_rent: float,
        mw: Mapping[str, float],
        share_elasticity: float = 0.0,
        share_reference_mw: Mapping[str, float] | None = None,
        renormalize_shares: bool = False,
    ) -> float:
        """Log of total square feet demanded at ``log_rent``.

        ``share_elasticity`` lets commuting shares respond to destination MWs
        as pi * (MW_z / MW_ref_z)**zeta. By default the bent shares are not
        renormalized (the measured shares stay the anchor at the reference
        profile); ``renormalize_shares`` rescales them to sum to one, which
        holds total employment fixed instead.
        """
        eps_y = self.eps_y_by_dest()
        income_sum = 0.0
        share_total = 0.0
        for dest, share in self.weights.weights.items():
            if dest not in mw:
                raise SchemaError(f"{self.zip}: no MW for destination {dest}")
            pi = share
            if share_elasticity != 0.0:
                ref = (share_reference_mw or mw)[dest]
                pi = share * (mw[dest] / ref) ** share_elasticity
            share_total += pi
            income_sum += pi * mw[dest] ** (self.xi_Y * eps_y[dest])
        if renormalize_shares and share_total > 0:
            income_sum /= share_total
        return (
            math.log(self.workers)
            + math.log(self.demand_scale)
            + self.xi_R * log_rent
            + self.xi_P * self.eps_P * math.log(mw[self.zip])
            + math.log(income_sum)
        )

    def log_supply(self, log_rent: float) -> float:
        return math.log(self.supply_scale) + self.eta * log_rent


@dataclass(frozen=True)
class EquilibriumSolution:
    rents: dict[str, float] = field(hash=False)
    iterations: int = 0
    residual: float = 0.0


def _solve_log_rent(excess, *, tol: float = LOG_RENT_TOL, method: str = "bisect"):
    """Root of a strictly decreasing function of log rent.

    Brackets around 0 and doubles the half-width until the sign changes;
    a half-width beyond ``MAX_BRACKET`` log points means the primitives are
    inconsistent with market clearing. ``method="newton"`` accelerates with
    secant steps and falls back to bisection whenever a step leaves the
    bracket.
    """
    lo, hi = -1.0, 1.0
    f_lo, f_hi = excess(lo), excess(hi)
    iterations = 2
    while f_lo * f_hi > 0:
        if hi - lo >= 2 * MAX_BRACKET:
            raise BracketingError(
                f"bracketing failure: no sign change within +/-{MAX_BRACKET} log points"
            )
        lo, hi = 2 * lo, 2 * hi
        f_lo, f_hi = excess(lo), excess(hi)
        iterations += 2
    if f_lo < 0:  # decreasing function: excess(lo) must be positive
        lo, hi, f_lo, f_hi = hi, lo, f_hi, f_lo

    secant_turn = method == "newton"
    while abs(hi - lo) > tol:
        x = 0.5 * (lo + hi)
        if secant_turn and f_lo != f_hi:
            candidate = lo - f_lo * (hi - lo) / (f_hi - f_lo)
            if min(lo, hi) < candidate < max(lo, hi):
                x = candidate
        # alternate secant and bisection so the bracket provably shrinks
        secant_turn = (method == "newton") and not secant_turn
        fx = excess(x)
        iterations += 1
        if fx > 0:
            lo, f_lo = x, fx
        elif fx < 0:
            hi, f_hi = x, fx
        else:
            return x, iterations, 0.0
        if iterations > 400:
            break
    x = 0.5 * (lo + hi)
    return x, iterations, abs(excess(x))


def solve_equilibrium(
    prims: Sequence[MarketPrimitives] | MarketPrimitives,
    mw: Mapping[str, float],
    *,
    method: str = "bisect",
    share_elasticity: float = 0.0,
    share_reference_mw: Mapping[str, float] | None = None,
    renormalize_shares: bool = False,
) -> EquilibriumSolution:
    """Market-clearing rents per ZIP given a statutory MW profile."""
    if isinstance(prims, MarketPrimitives):
        prims = [prims]
    rents: dict[str, float] = {}
    total_iter, worst = 0, 0.0
    for prim in prims:
        def excess(log_rent, prim=prim):
            return prim.log_demand(
                log_rent, mw, share_elasticity, share_reference_mw, renormalize_shares
            ) - prim.log_supply(log_rent)

        log_rent, iters, resid = _solve_log_rent(excess, method=method)
        rents[prim.zip] = math.exp(log_rent)
        total_iter += iters
        worst = max(worst, resid)
    return EquilibriumSolution(rents=rents, iterations=total_iter, residual=worst)


def comparative_static(
    prims: Sequence[MarketPrimitives] | MarketPrimitives,
    mw: Mapping[str, float],
    shocked_zips: Sequence[str],
    d_ln_mw: float = 1e-4,
    **solve_kwargs,
) -> dict[str, float]:
    """Central-difference response of log rents to a log-MW shock.

    Returns d ln R per unit of the common log-MW movement applied to
    ``shocked_zips``. Markets with no exposure to the shocked set respond
    exactly zero.
    """
    shocked = set(shocked_zips)
    up = {z: (v * math.exp(d_ln_mw) if z in shocked else v) for z, v in mw.items()}
    dn = {z: (v * math.exp(-d_ln_mw) if z in shocked else v) for z, v in mw.items()}
    if "share_elasticity" in solve_kwargs and "share_reference_mw" not in solve_kwargs:
        solve_kwargs["share_reference_mw"] = dict(mw)
    hi = solve_equilibrium(prims, up, **solve_kwargs)
    lo = solve_equilibrium(prims, dn, **solve_kwargs)
    return {
        z: (math.log(hi.rents[z]) - math.log(lo.rents[z])) / (2 * d_ln_mw)
        for z in hi.rents
    }


def _homogeneous_income_elasticity(prim: MarketPrimitives) -> float:
    values = set(prim.eps_y_by_dest().values())
    if len(values) != 1:
        raise SchemaError(
            f"{prim.zip}: income-to-MW elasticity must be homogeneous across "
            "destinations for the two-measure representation"
        )
    return values.pop()


def _denominator(prim: MarketPrimitives) -> float:
    den = prim.eta - prim.xi_R  # shares sum to one, so sum_z pi_z * xi_R = xi_R
    if abs(den) < 1e-14:
        raise SchemaError(f"{prim.zip}: degenerate denominator eta - xi_R = 0")
    return den


def linearized_response(prim: MarketPrimitives) -> tuple[float, float]:
    """Closed-form (beta_i, gamma_i) of the two-measure rent representation.

    beta_i multiplies the workplace measure and is positive; gamma_i
    multiplies the residence measure and is negative.
    """
    eps_y = _homogeneous_income_elasticity(prim)
    den = _denominator(prim)
    beta = prim.xi_Y * eps_y / den
    gamma = prim.xi_P * prim.eps_P / den
    return beta, gamma


def endogenous_shares_response(
    prim: MarketPrimitives, zeta: float
) -> tuple[float, float]:
    """Workplace/residence coefficients when commuting shares bend with MW.

    ``zeta <= 0`` is the elasticity of a share to its destination MW; the
    workplace coefficient is attenuated toward zero by zeta scaled with the
    same denominator, and residence incidence is unchanged.
    """
    if zeta > 0:
        raise SchemaError("share-to-MW elasticity must be <= 0")
    beta, gamma = linearized_response(prim)
    return beta + zeta / _denominator(prim), gamma


def perturbed_income_elasticities(
    base: float, destinations: Sequence[str], scale: float, rng: np.random.Generator
) -> dict[str, float]:
    """Mean-zero heterogeneous income elasticities around ``base``.

    Draws are clipped at zero and recentred so the cross-destination mean is
    exactly ``base``; useful for probing how far the homogeneity-based
    representation bends under dispersion.
    """
    dests = list(destinations)
    noise = rng.uniform(-scale, scale, size=len(dests))
    noise -= noise.mean()
    values = np.maximum(base + noise, 0.0)
    values += base - values.mean()
    return dict(zip(dests, np.maximum(values, 0.0)))
