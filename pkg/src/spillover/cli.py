"""Command-line pipeline: build-panel, exposure, estimate, simulate, counterfactual.

Stages compose through files (see SCHEMAS.md). Every run writes a
manifest.json recording input hashes, configuration, seed, and output
hashes; identical manifests produce byte-identical outputs. Errors exit
nonzero with a machine-readable JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__, counterfactual as cf, econometrics as em, io
from .equilibrium_sim import (
    DynamicConfig,
    MarketPrimitives,
    SyntheticPanelConfig,
    comparative_static,
    generate_synthetic_panel,
    linearized_response,
    solve_dynamic_path,
    solve_equilibrium,
)
from .errors import SchemaError, SpilloverError
from .exposure import ExposureWeights, build_measure_panel, compute_shares
from .months import month_range
from .policy_panel import ZipMonthPolicy, aggregate_zip_mw

log = logging.getLogger("spillover")


def _configure_logging() -> None:
    level = os.environ.get("SPILLOVER_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))


def _write_table(out_dir: Path, stem: str, frame: pd.DataFrame, fmt: str) -> Path:
    """Tabular output as CSV (default) or a JSON list of records."""
    if fmt == "json":
        path = out_dir / f"{stem}.json"
        io.write_json(path, frame.to_dict(orient="records"))
    else:
        path = out_dir / f"{stem}.csv"
        io.write_csv(path, frame)
    return path


def _write_manifest(out_dir: Path, command: str, inputs: dict, config: dict, seed, outputs: list[Path]) -> None:
    # inputs are keyed by role with content hashes, never by filesystem
    # location: runs over identical content must produce identical bytes
    manifest = {
        "command": command,
        "config": config,
        "inputs": {
            role: {"file": p.name, "sha256": io.sha256_file(p)}
            for role, p in sorted(inputs.items())
        },
        "outputs": {p.name: io.sha256_file(p) for p in sorted(outputs)},
        "seed": seed,
        "version": __version__,
    }
    io.write_json(out_dir / "manifest.json", manifest)


# ---------------------------------------------------------------- build-panel


def cmd_build_panel(args) -> None:
    schedules = io.load_policies(args.policies)
    blocks = io.load_blocks(args.blocks)
    months = month_range(args.start, args.end) if args.end >= args.start else []
    by_zip: dict[str, list] = {}
    for block in blocks:
        by_zip.setdefault(block.zip, []).append(block)

    rows = []
    for zip_ in sorted(by_zip):
        for month in months:
            policy = aggregate_zip_mw(by_zip[zip_], month, schedules)
            rows.append((zip_, month, policy.statutory_mw, policy.mw_res))
    frame = pd.DataFrame(rows, columns=["zip", "month", "statutory_mw", "mw_res"])
    out = Path(args.out)
    written = _write_table(out, "panel", frame, args.format)
    _write_manifest(
        out,
        "build-panel",
        {"policies": Path(args.policies), "blocks": Path(args.blocks)},
        {"start": args.start, "end": args.end, "format": args.format},
        None,
        [written],
    )
    log.info("panel: %d rows", len(frame))


# ------------------------------------------------------------------- exposure


def cmd_exposure(args) -> None:
    matrices = io.load_commuting(args.commuting)
    panel = io.load_panel_csv(args.panel, ["zip", "month", "mw_res"])
    months = sorted(panel["month"].unique())
    policies = [
        ZipMonthPolicy(z, m, float(mw) if "statutory_mw" in panel.columns else math.exp(r), float(r))
        for z, m, mw, r in zip(
            panel["zip"],
            panel["month"],
            panel.get("statutory_mw", pd.Series([math.nan] * len(panel))),
            panel["mw_res"],
        )
    ]
    fixed_year = None if args.time_varying else args.year
    measures = build_measure_panel(
        matrices, policies, months, fixed_year=fixed_year, category=args.category
    )
    # correlation with other weight variants is reported, never asserted:
    # on administrative data the variants are nearly interchangeable, but
    # synthetic inputs need not reproduce that
    variant_corr = {}
    if not args.time_varying:
        others = {
            m.category
            for m in matrices
            if m.year == args.year and m.category != args.category
        }
        for category in sorted(others):
            alt = build_measure_panel(
                matrices, policies, months, fixed_year=args.year, category=category
            )
            joined = measures.merge(alt, on=["zip", "month"], suffixes=("", "_alt"))
            if len(joined) > 1 and joined["mw_wkp"].std() > 0 and joined["mw_wkp_alt"].std() > 0:
                variant_corr[category] = float(
                    np.corrcoef(joined["mw_wkp"], joined["mw_wkp_alt"])[0, 1]
                )
    measures["category"] = args.category
    measures["share_policy"] = "time_varying" if args.time_varying else f"fixed_{args.year}"
    out = Path(args.out)
    written = _write_table(out, "measures", measures, args.format)
    _write_manifest(
        out,
        "exposure",
        {"commuting": Path(args.commuting), "panel": Path(args.panel)},
        {
            "year": args.year,
            "time_varying": args.time_varying,
            "category": args.category,
            "format": args.format,
            "variant_corr": variant_corr,
        },
        None,
        [written],
    )


# ------------------------------------------------------------------- estimate


def _spec_from_json(payload: dict, control_cols: list[str]) -> em.RegressionSpec:
    iv = payload.get("iv")
    controls = payload.get("controls", "auto")
    if controls == "auto":
        controls = control_cols
    return em.RegressionSpec(
        outcome=payload.get("outcome", "r"),
        transform=payload.get("transform", "first_difference"),
        fe=tuple(payload.get("fe", ["time"])),
        use_res=payload.get("use_res", True),
        use_wkp=payload.get("use_wkp", True),
        window_wkp=payload.get("window_wkp", 0),
        window_res=payload.get("window_res", 0),
        lead_shift=payload.get("lead_shift", 0),
        interactions=tuple(payload.get("interactions", [])),
        controls=tuple(controls),
        lagged_dep=payload.get("lagged_dep", False),
        iv=em.IVSpec(**iv) if iv else None,
        cluster=payload.get("cluster", "cluster_id"),
        weights=payload.get("weights"),
        small_sample=payload.get("small_sample", True),
    )


def cmd_estimate(args) -> None:
    measures = io.load_panel_csv(args.measures, ["zip", "month", "mw_res", "mw_wkp"])
    rents = io.load_panel_csv(args.rents, ["zip", "month", "rent_per_sqft"])
    controls = io.load_panel_csv(args.controls, ["zip", "month"])
    with open(args.spec) as handle:
        payload = json.load(handle)

    panel = measures.merge(rents, on=["zip", "month"], how="inner")
    panel = panel.merge(controls, on=["zip", "month"], how="inner")
    if len(panel) == 0:
        raise SchemaError("join of measures, rents, and controls is empty")
    if (panel["rent_per_sqft"] <= 0).any():
        raise SchemaError("rent_per_sqft must be positive to take logs")
    panel["r"] = np.log(panel["rent_per_sqft"].to_numpy(dtype=float))

    if args.covariates:
        covs = io.load_covariates(args.covariates)
        panel = panel.merge(covs, on="zip", how="left")

    id_cols = {"zip", "month", "rent_per_sqft", "r", "cluster_id", "cbsa_id", "entry_cohort", "weight", "category", "share_policy", "event_id"}
    control_cols = [
        c
        for c in controls.columns
        if c not in id_cols and c not in ("zip", "month") and pd.api.types.is_numeric_dtype(controls[c])
    ]
    spec = _spec_from_json(payload, control_cols)

    balance = payload.get("entropy_balance")
    if balance:
        moderators = balance["moderators"]
        targets = np.asarray(balance["targets"], dtype=float)
        zip_level = panel.drop_duplicates("zip").sort_values("zip", kind="stable")
        weights = em.entropy_balance_weights(zip_level[moderators].to_numpy(dtype=float), targets)
        panel = panel.drop(columns=["weight"], errors="ignore").merge(
            pd.DataFrame({"zip": zip_level["zip"].to_numpy(), "weight": weights}),
            on="zip",
            how="inner",
        )
        spec = replace(spec, weights="weight")

    stacked_cfg = payload.get("stacked")
    extras_out: dict = {}
    if stacked_cfg:
        sample = em.build_stacked_sample(
            panel,
            window=stacked_cfg.get("window", 6),
            min_zips=stacked_cfg.get("min_zips", 10),
        )
        panel = sample.observations
        spec = replace(spec, fe=("time:event_id",))
        extras_out["events"] = sample.event_counts().to_dict(orient="records")

    if spec.iv is not None:
        result = em.estimate_iv_lagged_dep(spec, panel)
    elif spec.window_wkp or spec.window_res:
        result = em.event_study(spec, panel)
    else:
        result = em.estimate_ols(spec, panel)

    out = Path(args.out)
    outputs: list[Path] = []
    binscatter_cfg = payload.get("binscatter")
    if binscatter_cfg:
        bins = em.binned_residual_scatter(
            panel,
            measure=binscatter_cfg.get("measure", "wkp"),
            n_bins=binscatter_cfg.get("n_bins", 30),
            other_measure_bins=binscatter_cfg.get("other_measure_bins", 100),
            restrict_to_change_months=binscatter_cfg.get("restrict", True),
        )
        outputs.append(_write_table(out, "binscatter", bins, args.format))

    coef_frame = pd.DataFrame(
        {
            "name": list(result.coefficients.index),
            "estimate": result.coefficients.to_numpy(dtype=float),
            "se": result.se.to_numpy(dtype=float),
        }
    )
    if "sum_mw" in result.extras:
        total, se = result.extras["sum_mw"]
        coef_frame = pd.concat(
            [coef_frame, pd.DataFrame([{"name": "sum_mw_res_wkp", "estimate": total, "se": se}])],
            ignore_index=True,
        )
    outputs.append(_write_table(out, "coefficients", coef_frame, args.format))
    results_payload = {
        "coefficients": {k: float(v) for k, v in result.coefficients.items()},
        "se": {k: float(v) for k, v in result.se.items()},
        "tests": result.tests,
        "n_obs": result.n_obs,
        "n_dropped": result.n_dropped,
        "n_clusters": result.n_clusters,
        "r_squared": result.r_squared,
        "spec": payload,
        **extras_out,
    }
    if "sum_mw" in result.extras:
        total, se = result.extras["sum_mw"]
        results_payload["sum_of_coefficients"] = {"estimate": total, "se": se}
    if "first_stage_f" in result.extras:
        results_payload["first_stage_f"] = result.extras["first_stage_f"]
    for measure in ("mw_wkp", "mw_res"):
        key = f"implied_levels_{measure}"
        if key in result.extras:
            frame = pd.DataFrame(result.extras[key], columns=["horizon", "level"])
            outputs.append(_write_table(out, key, frame, args.format))
    io.write_json(out / "results.json", results_payload)
    outputs.append(out / "results.json")
    _write_manifest(
        out,
        "estimate",
        {
            "measures": Path(args.measures),
            "rents": Path(args.rents),
            "controls": Path(args.controls),
            "spec": Path(args.spec),
            **({"covariates": Path(args.covariates)} if args.covariates else {}),
        },
        payload,
        None,
        outputs,
    )


# ------------------------------------------------------------------- simulate


def _primitives_from_json(payload: dict) -> tuple[list[MarketPrimitives], dict[str, float]]:
    prims = []
    for entry in payload["zips"]:
        weights = ExposureWeights(entry["zip"], {k: float(v) for k, v in entry["weights"].items()})
        eps_y = entry["eps_Y"]
        prims.append(
            MarketPrimitives(
                zip=entry["zip"],
                workers=float(entry["workers"]),
                weights=weights,
                xi_R=float(entry["xi_R"]),
                xi_P=float(entry["xi_P"]),
                xi_Y=float(entry["xi_Y"]),
                eps_P=float(entry["eps_P"]),
                eps_Y={k: float(v) for k, v in eps_y.items()} if isinstance(eps_y, dict) else float(eps_y),
                eta=float(entry["eta"]),
                demand_scale=float(entry.get("demand_scale", 1.0)),
                supply_scale=float(entry.get("supply_scale", 1.0)),
            )
        )
    mw = {k: float(v) for k, v in payload["mw"].items()}
    return prims, mw


def _random_primitives(rng: np.random.Generator, n_dests: int = 3):
    dests = [f"z{j}" for j in range(n_dests)]
    raw = rng.uniform(0.1, 1.0, size=n_dests)
    weights = ExposureWeights("z0", dict(zip(dests, raw / raw.sum())))
    return MarketPrimitives(
        zip="z0",
        workers=float(rng.uniform(50, 500)),
        weights=weights,
        xi_R=float(-rng.uniform(0.3, 2.0)),
        xi_P=float(-rng.uniform(0.1, 1.0)),
        xi_Y=float(rng.uniform(0.3, 1.5)),
        eps_P=float(rng.uniform(0.05, 0.5)),
        eps_Y=float(rng.uniform(0.02, 0.4)),
        eta=float(rng.uniform(0.0, 1.5)),
        demand_scale=float(rng.uniform(0.5, 2.0)),
        supply_scale=float(rng.uniform(0.5, 2.0)),
    )


def run_property_checks(n_draws: int, seed: int) -> dict:
    """Random-primitive verification of the comparative-statics signs and
    the two-measure linearization; returns a summary report."""
    rng = np.random.default_rng(seed)
    sign_ok = 0
    shrink_ratios = []
    slope_errors = []
    for _ in range(n_draws):
        prim = _random_primitives(rng)
        level = float(rng.uniform(7.0, 15.0))
        mw = {d: level for d in prim.weights.weights}
        mw.setdefault("z0", level)

        others = [d for d in prim.weights.weights if d != "z0"]
        response = comparative_static(prim, mw, shocked_zips=others[:1], d_ln_mw=1e-5)
        if response["z0"] > 0:
            sign_ok += 1

        beta, gamma = linearized_response(prim)
        shock = {d: float(rng.uniform(0.5, 1.0)) for d in mw}
        sol0 = solve_equilibrium(prim, mw)
        err = []
        for h in (1e-2, 5e-3):
            shocked = {d: mw[d] * math.exp(h * shock[d]) for d in mw}
            sol1 = solve_equilibrium(prim, shocked)
            d_lnr = math.log(sol1.rents["z0"]) - math.log(sol0.rents["z0"])
            d_wkp = sum(w * h * shock[d] for d, w in prim.weights.weights.items())
            d_res = h * shock["z0"]
            err.append(abs(d_lnr - (beta * d_wkp + gamma * d_res)))
        if err[1] > 0:
            shrink_ratios.append(err[0] / err[1])

        fd = comparative_static(prim, mw, shocked_zips=others, d_ln_mw=1e-5)
        wkp_loading = sum(prim.weights.weights[d] for d in others)
        if wkp_loading > 0:
            slope_errors.append(abs(fd["z0"] / wkp_loading - beta) / abs(beta))
    return {
        "draws": n_draws,
        "workplace_shock_positive": sign_ok,
        "lin_error_shrink_ratio_median": float(np.median(shrink_ratios)) if shrink_ratios else None,
        "beta_fd_rel_error_max": float(np.max(slope_errors)) if slope_errors else None,
    }


def cmd_simulate(args) -> None:
    out = Path(args.out)
    if args.mode == "synth":
        with open(args.config) as handle:
            payload = json.load(handle)
        payload.setdefault("seed", args.seed)
        cfg = SyntheticPanelConfig(
            **{
                **payload,
                "adoption_pattern": tuple(map(tuple, payload.get("adoption_pattern", []))),
                "controls_effect": tuple(payload.get("controls_effect", [])),
            }
        )
        sim = generate_synthetic_panel(cfg)
        panel = sim.panel
        measures = panel[["zip", "month", "mw_res", "mw_wkp"]].copy()
        measures["category"] = "all"
        measures["share_policy"] = "fixed_2017"
        rents = panel[["zip", "month"]].copy()
        rents["rent_per_sqft"] = np.exp(panel["r"].to_numpy(dtype=float))
        control_cols = [c for c in panel.columns if c.startswith("x")]
        controls = panel[
            ["zip", "month", "cluster_id", "cbsa_id", "entry_cohort", "mw_worker_share", *control_cols]
        ].copy()
        outputs = [
            _write_table(out, "measures", measures, args.format),
            _write_table(out, "rents", rents, args.format),
            _write_table(out, "controls", controls, args.format),
        ]
        io.write_json(out / "truth.json", sim.truth)
        outputs.append(out / "truth.json")
        _write_manifest(out, "simulate-synth", {"config": Path(args.config)}, payload, cfg.seed, outputs)
    elif args.mode == "prop-check":
        report = run_property_checks(args.draws, args.seed)
        io.write_json(out / "prop_report.json", report)
        _write_manifest(out, "simulate-prop-check", {}, {"draws": args.draws}, args.seed, [out / "prop_report.json"])
    elif args.mode == "static":
        with open(args.primitives) as handle:
            payload = json.load(handle)
        prims, mw = _primitives_from_json(payload)
        solution = solve_equilibrium(prims, mw)
        io.write_json(
            out / "equilibrium.json",
            {
                "rents": {k: float(v) for k, v in sorted(solution.rents.items())},
                "iterations": solution.iterations,
                "residual": solution.residual,
            },
        )
        _write_manifest(out, "simulate-static", {"primitives": Path(args.primitives)}, {}, None, [out / "equilibrium.json"])
    elif args.mode == "dynamic":
        with open(args.primitives) as handle:
            payload = json.load(handle)
        prims, _ = _primitives_from_json(payload)
        dyn_payload = payload["dynamic"]
        lam_map = {}
        for zip_, values in dyn_payload["lambda"].items():
            for t, v in enumerate(values):
                lam_map[(zip_, t)] = float(v)
        dyn = DynamicConfig(
            lam=lam_map,
            horizon=int(dyn_payload["horizon"]),
            total_stock={k: float(v) for k, v in dyn_payload["total_stock"].items()},
            vacancy_share=dyn_payload.get("vacancy_share"),
        )
        mw_path = {
            int(t): {k: float(v) for k, v in profile.items()}
            for t, profile in dyn_payload["mw_path"].items()
        }
        path = solve_dynamic_path(prims, dyn, mw_path)
        rows = [
            {"zip": z, "month": t, "rent": r, "constrained": (z, t) in path.constrained}
            for (z, t), r in sorted(path.rents.items())
        ]
        written = _write_table(out, "rent_path", pd.DataFrame(rows), args.format)
        _write_manifest(out, "simulate-dynamic", {"primitives": Path(args.primitives)}, {}, None, [written])
    else:  # pragma: no cover - argparse restricts choices
        raise SchemaError(f"unknown simulate mode {args.mode!r}")


# -------------------------------------------------------------- counterfactual


def cmd_counterfactual(args) -> None:
    schedules = io.load_policies(args.policies)
    blocks = io.load_blocks(args.blocks)
    matrices = io.load_commuting(args.commuting)
    covariates = io.load_covariates(args.covariates)
    with open(args.scenario) as handle:
        payload = json.load(handle)
    scenario = cf.PolicyScenario(
        name=payload["name"],
        base_month=payload["base_month"],
        overrides=tuple(
            (o["level"], o.get("region_code", ""), float(o["mw_dollars"]))
            for o in payload["overrides"]
        ),
        beta=float(payload.get("beta", cf.DEFAULT_BETA)),
        gamma=float(payload.get("gamma", cf.DEFAULT_GAMMA)),
        epsilon=float(payload.get("epsilon", cf.DEFAULT_EPSILON)),
    )

    year = args.share_year
    candidates = [m for m in matrices if m.category == "all" and m.year == year]
    if not candidates:
        raise SchemaError(f"no commuting matrix for category 'all', year {year}")
    matrix = candidates[0]
    weights = {origin: compute_shares(matrix, origin) for origin in matrix.origins()}

    zip_cbsa = None
    if args.zip_cbsa:
        cross = io.load_panel_csv(args.zip_cbsa, ["zip", "cbsa_id"])
        zip_cbsa = dict(zip(cross["zip"], cross["cbsa_id"]))

    epsilon_grid = None
    if args.epsilon_grid:
        lo, hi, n = args.epsilon_grid.split(":")
        epsilon_grid = list(np.linspace(float(lo), float(hi), int(n)))

    result = cf.evaluate_scenario(
        blocks,
        schedules,
        weights,
        covariates,
        scenario,
        zip_cbsa=zip_cbsa,
        wage_threshold=args.wage_threshold,
        epsilon_grid=epsilon_grid,
    )

    out = Path(args.out)
    per_zip = result.per_zip.rename(columns={"rho": "rho_i"})
    cols = ["zip", "d_mw_res", "d_mw_wkp", "d_r", "d_y", "s_i", "rho_i"]
    outputs = [_write_table(out, "incidence", per_zip[cols], args.format)]
    medians = cf.group_medians(result)
    summary = {
        "scenario": payload,
        "rho_total": result.rho_total,
        "group_medians": medians.to_dict(orient="records"),
        "excluded_cbsas": list(result.excluded_cbsas),
        "n_undefined_rho": len(result.undefined_rho_zips),
        "n_zips": int(len(per_zip)),
    }
    if per_zip["rho_i"].notna().sum() >= 10:
        profile = cf.decile_profile(result.per_zip)
        outputs.append(_write_table(out, "decile_profile", profile, args.format))
        summary["decile_profile"] = profile.to_dict(orient="records")
    if epsilon_grid is not None and "epsilon_curve" in result.per_zip.attrs:
        curve = pd.DataFrame(result.per_zip.attrs["epsilon_curve"], columns=["epsilon", "rho_total"])
        outputs.append(_write_table(out, "epsilon_curve", curve, args.format))
        summary["epsilon_curve"] = curve.to_dict(orient="records")
    io.write_json(out / "summary.json", summary)
    outputs.append(out / "summary.json")
    _write_manifest(
        out,
        "counterfactual",
        {
            "policies": Path(args.policies),
            "blocks": Path(args.blocks),
            "commuting": Path(args.commuting),
            "covariates": Path(args.covariates),
            "scenario": Path(args.scenario),
        },
        payload,
        None,
        outputs,
    )


# ----------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spillover",
        description="MW exposure measures, rental-market simulation, estimation, and incidence",
    )
    parser.add_argument("--threads", type=int, default=0, help="cap BLAS thread pools (0 = leave as is)")
    parser.add_argument(
        "--format", choices=["csv", "json"], default="csv",
        help="encoding for tabular outputs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-panel", help="statutory MW panel from schedules and blocks")
    p.add_argument("--policies", required=True)
    p.add_argument("--blocks", required=True)
    p.add_argument("--start", required=True, help="first month YYYY-MM")
    p.add_argument("--end", required=True, help="last month YYYY-MM (inclusive)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_panel)

    p = sub.add_parser("exposure", help="residence/workplace measures from commuting flows")
    p.add_argument("--commuting", required=True)
    p.add_argument("--panel", required=True)
    p.add_argument("--year", type=int, default=2017, help="fixed share year")
    p.add_argument("--time-varying", action="store_true", help="latest matrix year <= month's year")
    p.add_argument("--category", default="all", choices=["all", "low_income", "young"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_exposure)

    p = sub.add_parser("estimate", help="panel regressions per a spec.json")
    p.add_argument("--measures", required=True)
    p.add_argument("--rents", required=True)
    p.add_argument("--controls", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--covariates", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="equilibrium, dynamics, property checks, synthetic panels")
    p.add_argument("mode", choices=["synth", "prop-check", "static", "dynamic"])
    p.add_argument("--config", default=None, help="synthetic panel config JSON")
    p.add_argument("--primitives", default=None, help="market primitives JSON")
    p.add_argument("--draws", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("counterfactual", help="policy scenario incidence")
    p.add_argument("--policies", required=True)
    p.add_argument("--blocks", required=True)
    p.add_argument("--commuting", required=True)
    p.add_argument("--covariates", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--zip-cbsa", default=None, help="zip,cbsa_id crosswalk for metro filtering")
    p.add_argument("--wage-threshold", type=float, default=cf.WAGE_THRESHOLD)
    p.add_argument("--epsilon-grid", default=None, help="lo:hi:n sweep of the wage elasticity")
    p.add_argument("--share-year", type=int, default=2017)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_counterfactual)
    return parser


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    try:
        args.func(args)
    except SpilloverError as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
