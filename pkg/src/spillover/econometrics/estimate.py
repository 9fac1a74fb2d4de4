"""Regression specs, fixed-effect absorption, OLS and 2SLS estimators.

Fixed effects are absorbed by iterated within-group demeaning (or exact
dummy expansion for small dimensions, used to cross-validate the demeaned
path). Inference is always computed on the residualized design, which by
Frisch-Waugh matches the dummy regression exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import pandas as pd

from ..errors import CollinearDesignError, ConvergenceError, SchemaError
from .inference import (
    WaldTest,
    cluster_robust_vcov,
    restrictions_to_matrix,
    wald_test_matrix,
)
from .panel import add_month_index, first_difference, unit_columns

DEMEAN_TOL = 1e-10
DUMMY_MAX_LEVELS = 2000
RANK_REL_TOL = 1e-10


@dataclass(frozen=True)
class IVSpec:
    """Lagged-dependent-variable instrument layout (lag indices of the outcome)."""

    endog_lag: int = 1
    instrument_lag: int = 2


@dataclass(frozen=True)
class RegressionSpec:
    """What to regress on what, and how.

    ``fe`` entries are "time", "zip", or "time:<column>" for interacted
    dimensions (e.g. "time:cbsa_id", "time:event_id"). ``window_wkp`` and
    ``window_res`` add that many leads and lags of the (transformed) measure.
    ``lead_shift`` replaces both measures with their k-th lead, for outcomes
    published with a timing lag.
    """

    outcome: str = "r"
    transform: str = "first_difference"
    fe: tuple[str, ...] = ("time",)
    use_res: bool = True
    use_wkp: bool = True
    window_wkp: int = 0
    window_res: int = 0
    lead_shift: int = 0
    interactions: tuple[str, ...] = ()
    controls: tuple[str, ...] = ()
    lagged_dep: bool = False
    iv: IVSpec | None = None
    cluster: str | None = "cluster_id"
    weights: str | None = None
    absorb_method: str = "demean"
    small_sample: bool = True

    def __post_init__(self):
        if self.transform not in ("levels", "first_difference"):
            raise SchemaError(f"unknown transform {self.transform!r}")
        if self.window_wkp < 0 or self.window_res < 0:
            raise SchemaError("lead/lag windows must be >= 0")
        if self.iv is not None and not self.lagged_dep:
            raise SchemaError("an IV layout requires lagged_dep=True")
        if self.absorb_method not in ("demean", "dummies"):
            raise SchemaError(f"unknown absorb_method {self.absorb_method!r}")
        if not (self.use_res or self.use_wkp or self.controls or self.lagged_dep):
            raise SchemaError("specification has no regressors")


@dataclass
class RegressionResult:
    """Coefficients with cluster-robust covariance and summary tests."""

    coefficients: pd.Series
    vcov: pd.DataFrame
    n_obs: int
    r_squared: float
    tests: dict[str, float]
    n_dropped: int = 0
    n_clusters: int | None = None
    dof_model: int = 0
    extras: dict = field(default_factory=dict)

    @property
    def se(self) -> pd.Series:
        return pd.Series(np.sqrt(np.diag(self.vcov.to_numpy())), index=self.coefficients.index)

    def wald(self, restrictions, value=0.0) -> WaldTest:
        R = restrictions_to_matrix(restrictions, list(self.coefficients.index))
        return wald_test_matrix(
            self.coefficients.to_numpy(), self.vcov.to_numpy(), R, np.asarray(value)
        )


def wald_test(result: RegressionResult, restrictions, value=0.0) -> WaldTest:
    """Chi-square Wald test of linear restrictions on a fitted result."""
    return result.wald(restrictions, value)


def _measure_terms(spec: RegressionSpec) -> list[tuple[str, str, int]]:
    """(column name, source measure, shift) triples in display order."""
    terms: list[tuple[str, str, int]] = []
    if spec.use_res:
        terms.append(("mw_res", "mw_res", 0))
    if spec.use_wkp:
        terms.append(("mw_wkp", "mw_wkp", 0))
    for k in range(spec.window_wkp, 0, -1):
        terms.append((f"mw_wkp_lead{k}", "mw_wkp", -k))
    for k in range(1, spec.window_wkp + 1):
        terms.append((f"mw_wkp_lag{k}", "mw_wkp", k))
    for k in range(spec.window_res, 0, -1):
        terms.append((f"mw_res_lead{k}", "mw_res", -k))
    for k in range(1, spec.window_res + 1):
        terms.append((f"mw_res_lag{k}", "mw_res", k))
    return terms


def _fe_keys(spec: RegressionSpec, df: pd.DataFrame) -> dict[str, pd.Series]:
    keys = {}
    for dim in spec.fe:
        if dim == "time":
            keys[dim] = df["t"]
        elif dim == "zip":
            keys[dim] = df["zip"]
        elif dim.startswith("time:"):
            col = dim.split(":", 1)[1]
            if col not in df.columns:
                raise SchemaError(f"fixed-effect column {col!r} not in panel")
            keys[dim] = df["t"].astype(str) + "\x1f" + df[col].astype(str)
        else:
            raise SchemaError(f"unknown fixed-effect dimension {dim!r}")
    return keys


@dataclass
class Design:
    y: np.ndarray
    X: np.ndarray
    names: list[str]
    weights: np.ndarray
    clusters: np.ndarray | None
    fe_codes: list[np.ndarray]
    fe_levels: list[int]
    n_dropped: int
    frame: pd.DataFrame
    Z: np.ndarray | None = None


def build_design(spec: RegressionSpec, data: pd.DataFrame) -> Design:
    """Transform, shift, interact, and listwise-delete into matrices."""
    df = add_month_index(data)
    if spec.transform == "first_difference":
        df = first_difference(df)
    units = unit_columns(df)
    df = df.sort_values([*units, "t"], kind="stable").reset_index(drop=True)

    def shift_in_zip(col, k):
        return df.groupby(units, sort=False)[col].shift(k)

    if spec.lead_shift:
        for col in ("mw_res", "mw_wkp"):
            if col in df.columns:
                df[col] = shift_in_zip(col, -spec.lead_shift)

    names: list[str] = []
    for name, source, shift in _measure_terms(spec):
        if source not in df.columns:
            raise SchemaError(f"panel lacks measure column {source!r}")
        df[name] = shift_in_zip(source, shift) if shift else df[source]
        names.append(name)

    if spec.lagged_dep:
        df["lag_dep"] = shift_in_zip(spec.outcome, spec.iv.endog_lag if spec.iv else 1)
        names.append("lag_dep")
    instrument_col = None
    if spec.iv is not None:
        instrument_col = "iv_instrument"
        df[instrument_col] = shift_in_zip(spec.outcome, spec.iv.instrument_lag)

    names.extend(spec.controls)
    for col in spec.controls:
        if col not in df.columns:
            raise SchemaError(f"panel lacks control column {col!r}")

    needed = [spec.outcome, *names]
    if instrument_col:
        needed.append(instrument_col)
    for col in spec.interactions:
        if col not in df.columns:
            raise SchemaError(f"panel lacks moderator column {col!r}")
        needed.append(col)
    if spec.weights:
        needed.append(spec.weights)
    if spec.cluster:
        if spec.cluster not in df.columns:
            raise SchemaError(f"panel lacks cluster column {spec.cluster!r}")
        needed.append(spec.cluster)

    before = len(df)
    df = df.dropna(subset=[c for c in needed if c in df.columns]).reset_index(drop=True)
    n_dropped = before - len(df)
    if len(df) == 0:
        raise SchemaError("no observations left after listwise deletion")

    # moderator interactions, standardized over the estimation sample
    interaction_names = []
    for mod in spec.interactions:
        values = df[mod].to_numpy(dtype=float)
        sd = values.std()
        if not np.isfinite(sd) or sd == 0:
            raise SchemaError(f"moderator {mod!r} has zero variance in the sample")
        std = (values - values.mean()) / sd
        for base in ("mw_res", "mw_wkp"):
            if (base == "mw_res" and spec.use_res) or (base == "mw_wkp" and spec.use_wkp):
                name = f"{base}:{mod}"
                df[name] = std * df[base].to_numpy(dtype=float)
                interaction_names.append(name)
    names.extend(interaction_names)

    y = df[spec.outcome].to_numpy(dtype=float)
    X = df[names].to_numpy(dtype=float)
    weights = (
        df[spec.weights].to_numpy(dtype=float) if spec.weights else np.ones(len(df))
    )
    if (weights <= 0).any():
        raise SchemaError("weights must be strictly positive")
    clusters = df[spec.cluster].to_numpy() if spec.cluster else None

    fe_codes, fe_levels = [], []
    for key in _fe_keys(spec, df).values():
        codes, uniques = pd.factorize(key, sort=True)
        fe_codes.append(codes)
        fe_levels.append(len(uniques))

    Z = None
    if instrument_col:
        Z = df[[instrument_col]].to_numpy(dtype=float)
    return Design(y, X, names, weights, clusters, fe_codes, fe_levels, n_dropped, df, Z)


def _demean(columns: np.ndarray, codes: list[np.ndarray], levels: list[int], weights: np.ndarray) -> np.ndarray:
    """Alternating weighted within-group demeaning to DEMEAN_TOL."""
    out = columns.astype(float, copy=True)
    if not codes:
        return out
    wsum = [np.bincount(c, weights=weights, minlength=n) for c, n in zip(codes, levels)]
    for _ in range(10000):
        delta = 0.0
        for c, n, ws in zip(codes, levels, wsum):
            totals = np.zeros((n, out.shape[1]))
            np.add.at(totals, c, out * weights[:, None])
            means = totals / ws[:, None]
            shift = means[c]
            out -= shift
            delta = max(delta, np.abs(shift).max(initial=0.0))
        if delta < DEMEAN_TOL:
            break
    else:
        raise ConvergenceError("fixed-effect demeaning did not converge")
    return out


def _dummy_matrix(codes: list[np.ndarray], levels: list[int]) -> np.ndarray:
    blocks = []
    for d, (c, n) in enumerate(zip(codes, levels)):
        eye = np.eye(n)
        block = eye[c]
        if d > 0:
            block = block[:, 1:]  # drop one level per extra dimension
        blocks.append(block)
    return np.hstack(blocks) if blocks else np.empty((len(codes[0]), 0))


def _absorbed_dof(levels: list[int]) -> int:
    if not levels:
        return 0
    return sum(levels) - (len(levels) - 1)


def _check_rank(Xw: np.ndarray, names: Sequence[str]) -> None:
    svals = np.linalg.svd(Xw, compute_uv=False)
    top = float(svals.max()) if svals.size else 0.0
    low = float(svals.min()) if svals.size else 0.0
    if top == 0.0 or low < RANK_REL_TOL * top:
        raise CollinearDesignError(
            "collinear design after fixed-effect absorption; columns: "
            + ", ".join(names)
        )


def estimate_ols(spec: RegressionSpec, data: pd.DataFrame) -> RegressionResult:
    """Weighted least squares with absorbed fixed effects and clustered SEs.

    The result carries, when both measures enter, the sum of the two
    contemporaneous MW coefficients with its delta-method SE and the
    p-value of the equality test between them; event-study specs add the
    joint lead ("pre-trend") tests.
    """
    design = build_design(spec, data)
    y, X, w = design.y, design.X, design.weights

    y_t = _demean(y[:, None], design.fe_codes, design.fe_levels, w)[:, 0]
    X_t = _demean(X, design.fe_codes, design.fe_levels, w)

    sw = np.sqrt(w)
    Xw = X_t * sw[:, None]
    yw = y_t * sw
    _check_rank(Xw, design.names)

    k_model = X.shape[1] + _absorbed_dof(design.fe_levels)
    if len(y) - k_model <= 0:
        raise SchemaError("zero degrees of freedom")

    if spec.absorb_method == "dummies":
        if any(n > DUMMY_MAX_LEVELS for n in design.fe_levels):
            raise SchemaError(
                f"dummy expansion limited to dimensions with <= {DUMMY_MAX_LEVELS} levels"
            )
        D = _dummy_matrix(design.fe_codes, design.fe_levels)
        full = np.hstack([X, D]) * sw[:, None]
        coef_full, *_ = np.linalg.lstsq(full, y * sw, rcond=None)
        coef = coef_full[: X.shape[1]]
    else:
        coef, *_ = np.linalg.lstsq(Xw, yw, rcond=None)

    resid = y_t - X_t @ coef
    ssr = float(w @ resid**2)
    ybar = float(w @ y_t / w.sum())
    tss = float(w @ (y_t - ybar) ** 2)
    r2 = 1.0 - ssr / tss if tss > 0 else float("nan")

    n_clusters = None
    if design.clusters is not None:
        vcov = cluster_robust_vcov(
            X_t,
            resid,
            design.clusters,
            weights=w,
            small_sample=spec.small_sample,
            k_params=k_model,
        )
        n_clusters = len(pd.unique(design.clusters))
    else:
        # singleton clusters: HC-style
        vcov = cluster_robust_vcov(
            X_t,
            resid,
            np.arange(len(y)),
            weights=w,
            small_sample=spec.small_sample,
            k_params=k_model,
        )

    coefficients = pd.Series(coef, index=design.names)
    vcov_df = pd.DataFrame(vcov, index=design.names, columns=design.names)
    residuals = design.frame[["zip", "month", "t"]].copy()
    residuals["resid"] = resid
    result = RegressionResult(
        coefficients=coefficients,
        vcov=vcov_df,
        n_obs=len(y),
        r_squared=r2,
        tests={},
        n_dropped=design.n_dropped,
        n_clusters=n_clusters,
        dof_model=k_model,
        extras={"residuals": residuals},
    )
    _attach_summary_tests(spec, result)
    return result


def _guarded_wald_p(result: RegressionResult, rows) -> float:
    # noise-free fits have a zero restriction covariance: an exactly
    # satisfied restriction scores p=1 inside wald_test_matrix, an exactly
    # violated one is an unambiguous rejection
    try:
        return result.wald(rows).p_value
    except SchemaError:
        return 0.0


def _attach_summary_tests(spec: RegressionSpec, result: RegressionResult) -> None:
    names = list(result.coefficients.index)
    if "mw_res" in names and "mw_wkp" in names:
        result.tests["equality_res_wkp"] = _guarded_wald_p(
            result, {"mw_res": 1.0, "mw_wkp": -1.0}
        )
        total = result.coefficients["mw_res"] + result.coefficients["mw_wkp"]
        v = result.vcov
        var_sum = (
            v.loc["mw_res", "mw_res"]
            + v.loc["mw_wkp", "mw_wkp"]
            + 2 * v.loc["mw_res", "mw_wkp"]
        )
        result.extras["sum_mw"] = (float(total), float(np.sqrt(max(var_sum, 0.0))))
    for measure, window in (("mw_wkp", spec.window_wkp), ("mw_res", spec.window_res)):
        if window > 0:
            leads = [f"{measure}_lead{k}" for k in range(1, window + 1)]
            rows = [{name: 1.0} for name in leads]
            result.tests[f"pre_trend_{measure}"] = _guarded_wald_p(result, rows)


def event_study(spec: RegressionSpec, data: pd.DataFrame) -> RegressionResult:
    """Leads-and-lags estimation plus the implied path in levels.

    The implied level path cumulates the first-difference coefficients over
    the window, with horizons outside the window treated as zero. With a
    zero window this is exactly :func:`estimate_ols`.
    """
    result = estimate_ols(spec, data)
    for measure, window in (("mw_wkp", spec.window_wkp), ("mw_res", spec.window_res)):
        if window == 0:
            continue
        ordered = (
            [f"{measure}_lead{k}" for k in range(window, 0, -1)]
            + [measure]
            + [f"{measure}_lag{k}" for k in range(1, window + 1)]
        )
        path = np.cumsum([result.coefficients[name] for name in ordered])
        result.extras[f"implied_levels_{measure}"] = [
            (k, float(v)) for k, v in zip(range(-window, window + 1), path)
        ]
    return result


def heterogeneity_spec(
    panel: pd.DataFrame, moderator: str, base: RegressionSpec | None = None
) -> RegressionSpec:
    """Spec interacting both measures with a standardized moderator."""
    if moderator not in panel.columns:
        raise SchemaError(f"moderator {moderator!r} not in panel")
    values = panel[moderator].dropna().to_numpy(dtype=float)
    if len(values) == 0 or not np.isfinite(values).all():
        raise SchemaError(f"moderator {moderator!r} has no finite values")
    if values.std() == 0:
        raise SchemaError(f"moderator {moderator!r} has zero variance")
    base = base if base is not None else RegressionSpec()
    return replace(base, interactions=tuple(dict.fromkeys([*base.interactions, moderator])))


def estimate_iv_lagged_dep(spec: RegressionSpec, data: pd.DataFrame) -> RegressionResult:
    """2SLS with a lag of the (transformed) outcome instrumented by a deeper lag.

    Exogenous regressors instrument themselves. Reports the first-stage F
    statistic of the excluded instrument; an effectively zero first stage is
    an error rather than a garbage estimate.
    """
    if spec.iv is None:
        raise SchemaError("estimate_iv_lagged_dep requires spec.iv")
    design = build_design(spec, data)
    y, X, w = design.y, design.X, design.weights
    names = design.names

    fe = (design.fe_codes, design.fe_levels)
    y_t = _demean(y[:, None], *fe, w)[:, 0]
    X_t = _demean(X, *fe, w)
    Z_excl = _demean(design.Z, *fe, w)

    endog_idx = names.index("lag_dep")
    exog_idx = [i for i in range(X.shape[1]) if i != endog_idx]
    Z_t = np.column_stack([Z_excl] + [X_t[:, exog_idx]]) if exog_idx else Z_excl

    sw = np.sqrt(w)
    _check_rank(Z_t * sw[:, None], ["iv_instrument", *[names[i] for i in exog_idx]])

    # first stage for the endogenous column
    fs_coef, *_ = np.linalg.lstsq(Z_t * sw[:, None], X_t[:, endog_idx] * sw, rcond=None)
    fs_fitted = Z_t @ fs_coef
    fs_resid = X_t[:, endog_idx] - fs_fitted
    k_model = X.shape[1] + _absorbed_dof(design.fe_levels)
    fs_vcov = cluster_robust_vcov(
        Z_t,
        fs_resid,
        design.clusters if design.clusters is not None else np.arange(len(y)),
        weights=w,
        small_sample=spec.small_sample,
        k_params=Z_t.shape[1] + _absorbed_dof(design.fe_levels),
    )
    if fs_vcov[0, 0] > 0:
        first_stage_f = float((fs_coef[0] / np.sqrt(fs_vcov[0, 0])) ** 2)
    else:
        first_stage_f = float("inf") if abs(fs_coef[0]) > 0 else 0.0
    if first_stage_f < 1e-6:
        raise SchemaError(f"weak instrument: first-stage F = {first_stage_f:.2e}")

    X_hat = X_t.copy()
    X_hat[:, endog_idx] = fs_fitted

    Xw = X_hat * sw[:, None]
    _check_rank(Xw, names)
    coef, *_ = np.linalg.lstsq(Xw, y_t * sw, rcond=None)
    resid = y_t - X_t @ coef  # structural residual uses the actual regressors

    vcov = cluster_robust_vcov(
        X_hat,
        resid,
        design.clusters if design.clusters is not None else np.arange(len(y)),
        weights=w,
        small_sample=spec.small_sample,
        k_params=k_model,
    )

    ssr = float(w @ resid**2)
    ybar = float(w @ y_t / w.sum())
    tss = float(w @ (y_t - ybar) ** 2)
    coefficients = pd.Series(coef, index=names)
    result = RegressionResult(
        coefficients=coefficients,
        vcov=pd.DataFrame(vcov, index=names, columns=names),
        n_obs=len(y),
        r_squared=1.0 - ssr / tss if tss > 0 else float("nan"),
        tests={},
        n_dropped=design.n_dropped,
        n_clusters=len(pd.unique(design.clusters)) if design.clusters is not None else None,
        dof_model=k_model,
        extras={"first_stage_f": first_stage_f},
    )
    _attach_summary_tests(spec, result)
    return result
