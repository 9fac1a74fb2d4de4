"""Synthetic estimation panels with known coefficients.

Generates a small geography of ZIPs grouped into jurisdictions (which set
statutory MW schedules and serve as inference clusters) and CBSAs, draws
sparse commuting flows, builds both MW measures through the exposure
machinery, and lays down log rents from a linear model with fixed effects,
controls, and optionally serially correlated errors. The returned truth
record pins every generated coefficient for estimator validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from ..errors import CollinearDesignError, SchemaError
from ..exposure import CommutingMatrix, compute_shares, rank_condition_check
from ..months import month_index, month_label


@dataclass(frozen=True)
class SyntheticPanelConfig:
    """Geography, policy, and error-process knobs of a synthetic panel.

    ``adoption_pattern`` lists ``(jurisdiction, month_offset, mw_level)``
    steps on top of the common starting level; left empty, jurisdictions
    adopt staggered increases automatically. At least two jurisdictions must
    adopt in different months, otherwise the two measures cannot be told
    apart and generation refuses to proceed.
    """

    n_zips: int
    n_months: int
    true_beta: float
    true_gamma: float
    fe_scale: float = 0.01
    noise_scale: float = 0.01
    ar1_rho: float = 0.0
    adoption_pattern: tuple[tuple[int, int, float], ...] = ()
    controls_effect: tuple[float, ...] = ()
    seed: int = 0
    n_jurisdictions: int = 6
    zips_per_cbsa: int = 12
    base_mw: float = 7.25
    self_share_range: tuple[float, float] = (0.4, 0.8)
    n_commute_dests: int = 4
    moderator_beta: float = 0.0
    moderator_gamma: float = 0.0
    start_month: str = "2015-01"

    def __post_init__(self):
        if self.n_zips < 2 or self.n_months < 3:
            raise SchemaError("need at least 2 zips and 3 months")
        if not 0 <= abs(self.ar1_rho) <= 1:
            raise SchemaError("ar1_rho must be in [-1, 1]")


def default_adoption_pattern(cfg: SyntheticPanelConfig) -> tuple[tuple[int, int, float], ...]:
    """Staggered MW increases: jurisdiction 0 never adopts, others spread out."""
    n_j = min(cfg.n_jurisdictions, cfg.n_zips)
    lo, hi = max(2, cfg.n_months // 4), max(3, 3 * cfg.n_months // 4)
    steps = []
    for j in range(1, n_j):
        month = lo + ((j - 1) * max(1, hi - lo)) // max(1, n_j - 1)
        steps.append((j, month, cfg.base_mw * (1.10 + 0.05 * j)))
    return tuple(steps)


@dataclass(frozen=True)
class SyntheticPanel:
    panel: pd.DataFrame = field(hash=False)
    truth: dict = field(hash=False)
    commuting: CommutingMatrix = field(hash=False)


def generate_synthetic_panel(cfg: SyntheticPanelConfig) -> SyntheticPanel:
    """Simulate the panel; see the module docstring for the data layout.

    The panel is in levels; first-differencing is the estimator's job. The
    log-rent equation is

        r = alpha_i + delta_t + beta * mw_wkp + gamma * mw_res
            + moderator interactions + X'eta + upsilon,

    with upsilon an AR(1) in levels (rho=0 gives iid level errors whose
    first differences have autocorrelation -1/2; rho=1 gives a random walk
    whose differences are white).
    """
    rng = np.random.default_rng(cfg.seed)
    n_j = min(cfg.n_jurisdictions, cfg.n_zips)
    zips = [f"z{i:04d}" for i in range(cfg.n_zips)]
    jurisdiction = {z: i % n_j for i, z in enumerate(zips)}
    cbsa = {z: f"c{i // cfg.zips_per_cbsa:03d}" for i, z in enumerate(zips)}

    pattern = cfg.adoption_pattern or default_adoption_pattern(cfg)
    for j, m, mw in pattern:
        if not 0 <= j < n_j:
            raise SchemaError(f"adoption step references unknown jurisdiction {j}")
        if not 0 < m < cfg.n_months:
            raise SchemaError(f"adoption month {m} outside the panel horizon")
        if mw <= cfg.base_mw:
            raise SchemaError("adoption steps must raise the MW")

    # jurisdiction-by-month log MW schedule
    ln_mw = np.full((n_j, cfg.n_months), math.log(cfg.base_mw))
    for j, m, mw in sorted(pattern, key=lambda s: s[1]):
        ln_mw[j, m:] = math.log(mw)

    # sparse commuting flows; jobs drawn once, shares derived through the
    # exposure machinery so measure construction is exercised end to end
    entries = []
    for i, z in enumerate(zips):
        self_share = rng.uniform(*cfg.self_share_range)
        n_dest = min(cfg.n_commute_dests, cfg.n_zips - 1)
        others = rng.choice([x for x in range(cfg.n_zips) if x != i], size=n_dest, replace=False)
        raw = rng.uniform(0.2, 1.0, size=n_dest)
        raw = raw / raw.sum() * (1 - self_share)
        base_jobs = rng.integers(200, 2000)
        entries.append((z, z, float(base_jobs * self_share)))
        entries.extend(
            (z, zips[d], float(base_jobs * s)) for d, s in zip(others, raw)
        )
    matrix = CommutingMatrix(year=2017, category="all", entries=tuple(entries))
    weights = {z: compute_shares(matrix, z) for z in zips}

    t0 = month_index(cfg.start_month)
    months = [month_label(t0 + t) for t in range(cfg.n_months)]

    mw_res = np.stack([ln_mw[jurisdiction[z]] for z in zips])  # (n_zips, T)
    wkp = np.zeros_like(mw_res)
    for i, z in enumerate(zips):
        for dest, w in weights[z].weights.items():
            wkp[i] += w * ln_mw[jurisdiction[dest]]

    measures = pd.DataFrame(
        {
            "zip": np.repeat(zips, cfg.n_months),
            "month": months * cfg.n_zips,
            "mw_res": mw_res.ravel(),
            "mw_wkp": wkp.ravel(),
        }
    )
    diag = rank_condition_check(measures)
    if diag.collinear:
        raise CollinearDesignError(
            "adoption pattern leaves no independent variation between the "
            "residence and workplace measures"
        )

    n_controls = len(cfg.controls_effect)
    controls = rng.normal(0.0, 0.02, size=(cfg.n_zips, cfg.n_months, n_controls)).cumsum(axis=1)

    alpha = rng.normal(0.0, 10 * cfg.fe_scale, size=cfg.n_zips)
    delta_level = rng.normal(0.0, cfg.fe_scale, size=cfg.n_months).cumsum()

    moderator = rng.uniform(0.05, 0.30, size=cfg.n_zips)
    mod_sd = moderator.std()
    mod_std = (moderator - moderator.mean()) / (mod_sd if mod_sd > 0 else 1.0)

    rho = cfg.ar1_rho
    eps = rng.normal(0.0, cfg.noise_scale, size=(cfg.n_zips, cfg.n_months))
    ups = np.zeros_like(eps)
    if cfg.noise_scale > 0:
        if abs(rho) < 1:
            ups[:, 0] = eps[:, 0] / math.sqrt(1 - rho**2)
        else:
            ups[:, 0] = eps[:, 0]
        for t in range(1, cfg.n_months):
            ups[:, t] = rho * ups[:, t - 1] + eps[:, t]

    beta_i = cfg.true_beta + cfg.moderator_beta * mod_std
    gamma_i = cfg.true_gamma + cfg.moderator_gamma * mod_std
    r = (
        alpha[:, None]
        + delta_level[None, :]
        + beta_i[:, None] * wkp
        + gamma_i[:, None] * mw_res
        + np.einsum("ztk,k->zt", controls, np.asarray(cfg.controls_effect, dtype=float))
        + ups
    )

    panel = measures.copy()
    panel["r"] = r.ravel()
    for k in range(n_controls):
        panel[f"x{k}"] = controls[:, :, k].ravel()
    panel["cluster_id"] = panel["zip"].map(lambda z: f"j{jurisdiction[z]:02d}")
    panel["cbsa_id"] = panel["zip"].map(cbsa)
    panel["entry_cohort"] = "2015Q1"
    panel["mw_worker_share"] = np.repeat(moderator, cfg.n_months)
    panel["weight"] = 1.0

    truth = {
        "beta": cfg.true_beta,
        "gamma": cfg.true_gamma,
        "eta": list(cfg.controls_effect),
        "moderator_beta": cfg.moderator_beta,
        "moderator_gamma": cfg.moderator_gamma,
        "delta_fd": np.diff(delta_level).tolist(),
        "ar1_rho": cfg.ar1_rho,
        "adoption_pattern": [list(s) for s in pattern],
        "seed": cfg.seed,
    }
    return SyntheticPanel(panel=panel, truth=truth, commuting=matrix)


def spawn_seeds(base_seed: int, n: int) -> list[int]:
    """Independent per-replication seeds, stable under any execution order."""
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(base_seed).spawn(n)]
