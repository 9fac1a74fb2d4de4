#!/usr/bin/env python3
"""Generate a small synthetic geography as pipeline input files.

Three states (one with a high MW), two cities with local ordinances, ~40
ZIPs worth of blocks, commuting flows concentrated near home, ZIP-level
covariates, a federal-$9 scenario, and configs for the synthetic-panel and
estimation stages. Everything is deterministic under --seed.
"""

import argparse
import json
from pathlib import Path

import numpy as np
import pandas as pd


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="demo/in")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--n-zips", type=int, default=40)
    args = parser.parse_args()
    rng = np.random.default_rng(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    policies = [
        ("fed", "federal", "", "2009-07", 7.25),
        ("wa", "state", "WA", "2017-01", 11.00),
        ("wa", "state", "WA", "2019-01", 12.00),
        ("il", "state", "IL", "2019-01", 8.25),
        ("sea", "place", "Seattle", "2018-01", 15.00),
        ("chi", "place", "Chicago", "2019-07", 13.00),
        ("cook", "county", "Cook", "2019-07", 12.00),
    ]
    pd.DataFrame(
        policies,
        columns=["jurisdiction_id", "level", "region_code", "month", "mw_dollars"],
    ).to_csv(out / "policies.csv", index=False)

    states = ["WA", "IL", "TX"]
    zips, blocks = [], []
    for i in range(args.n_zips):
        state = states[i % 3]
        zip_ = f"{90 - 10 * (i % 3)}{i:03d}"
        county = "Cook" if (state == "IL" and i % 6 < 3) else f"{state}C{i % 4}"
        place = ""
        if state == "WA" and i % 5 == 0:
            place = "Seattle"
        if state == "IL" and i % 6 == 0:
            place = "Chicago"
        zips.append((zip_, state, county, place))
        for b in range(rng.integers(3, 7)):
            mixed_place = place if b % 3 else ""  # some blocks outside the city line
            blocks.append(
                (
                    f"{zip_}-{b}",
                    zip_,
                    state,
                    county,
                    mixed_place,
                    int(rng.integers(0, 400)),
                )
            )
    pd.DataFrame(
        blocks, columns=["block_id", "zip", "state", "county", "place", "housing_units"]
    ).to_csv(out / "blocks.csv", index=False)

    flows = []
    zip_ids = [z for z, *_ in zips]
    for i, zid in enumerate(zip_ids):
        base = rng.integers(300, 3000)
        self_share = rng.uniform(0.45, 0.75)
        flows.append((2017, "all", zid, zid, int(base * self_share)))
        others = rng.choice([z for z in zip_ids if z != zid], size=4, replace=False)
        raw = rng.uniform(0.2, 1.0, size=4)
        raw = raw / raw.sum() * (1 - self_share)
        flows.extend(
            (2017, "all", zid, dest, int(base * share)) for dest, share in zip(others, raw)
        )
    pd.DataFrame(
        flows, columns=["year", "category", "origin_zip", "dest_zip", "jobs"]
    ).to_csv(out / "commuting.csv", index=False)

    covariates = pd.DataFrame(
        {
            "zip": zip_ids,
            "safmr_rent": rng.uniform(700, 2200, size=len(zip_ids)).round(0),
            "annual_wage_hh": rng.uniform(35_000, 110_000, size=len(zip_ids)).round(0),
            "median_hh_income": rng.uniform(30_000, 120_000, size=len(zip_ids)).round(0),
            "public_housing_share": rng.uniform(0.0, 0.08, size=len(zip_ids)).round(4),
            "mw_worker_share": rng.uniform(0.05, 0.30, size=len(zip_ids)).round(4),
        }
    )
    covariates.to_csv(out / "covariates.csv", index=False)

    pd.DataFrame(
        {"zip": zip_ids, "cbsa_id": [f"cbsa_{s}" for _, s, *_ in zips]}
    ).to_csv(out / "zips.csv", index=False)

    (out / "scenario.json").write_text(
        json.dumps(
            {
                "name": "federal-9",
                "base_month": "2019-12",
                "overrides": [{"level": "federal", "region_code": "", "mw_dollars": 9.0}],
                "beta": 0.0685,
                "gamma": -0.0219,
                "epsilon": 0.1,
            },
            indent=2,
        )
    )

    (out / "synth.json").write_text(
        json.dumps(
            {
                "n_zips": 120,
                "n_months": 48,
                "true_beta": 0.0685,
                "true_gamma": -0.0219,
                "noise_scale": 0.004,
                "controls_effect": [0.3],
                "seed": args.seed,
            },
            indent=2,
        )
    )

    (out / "spec.json").write_text(
        json.dumps(
            {
                "transform": "first_difference",
                "fe": ["time"],
                "controls": "auto",
                "cluster": "cluster_id",
            },
            indent=2,
        )
    )
    print(f"wrote demo inputs to {out}")


if __name__ == "__main__":
    main()
