"""CSV and JSON readers/writers for the pipeline file formats.

All numeric CSV output is written with round-trip decimal formatting
(``repr`` of the float), so re-ingesting an emitted file reproduces the
values bit for bit. See SCHEMAS.md for the column contracts.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import pandas as pd

from .errors import SchemaError
from .exposure import CommutingMatrix
from .policy_panel import BlockRecord, PolicySchedule, validate_schedules


def _cell(value) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        # plain-float repr: numpy scalars print as np.float64(...) otherwise
        return "" if math.isnan(value) else repr(float(value))
    return str(value)


def write_csv(path: str | Path, frame: pd.DataFrame) -> None:
    """Write a DataFrame with full round-trip float formatting."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(frame.columns))
        for row in frame.itertuples(index=False):
            writer.writerow([_cell(v) for v in row])


def write_json(path: str | Path, payload) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _require_columns(frame: pd.DataFrame, needed: list[str], path) -> None:
    missing = [c for c in needed if c not in frame.columns]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}")


def load_policies(path: str | Path) -> list[PolicySchedule]:
    """policies.csv: jurisdiction_id,level,region_code,month,mw_dollars."""
    df = pd.read_csv(path, dtype=str)
    _require_columns(df, ["jurisdiction_id", "level", "region_code", "month", "mw_dollars"], path)
    dup = df.duplicated(["jurisdiction_id", "month"])
    if dup.any():
        rows = [i + 2 for i in df.index[dup]]  # header is line 1
        raise SchemaError(f"{path}: duplicate (jurisdiction_id, month) at rows {rows[:10]}")
    schedules = []
    for jid, group in df.groupby("jurisdiction_id", sort=True):
        group = group.sort_values("month", kind="stable")
        levels = group["level"].unique()
        regions = group["region_code"].fillna("").unique()
        if len(levels) != 1 or len(regions) != 1:
            raise SchemaError(f"{path}: jurisdiction {jid} mixes levels or regions")
        try:
            steps = tuple(
                (month, float(mw)) for month, mw in zip(group["month"], group["mw_dollars"])
            )
            schedules.append(
                PolicySchedule(
                    jurisdiction_id=str(jid),
                    level=str(levels[0]),
                    region_code=str(regions[0]),
                    steps=steps,
                )
            )
        except (SchemaError, ValueError) as exc:
            rows = [i + 2 for i in group.index[:5]]
            raise SchemaError(f"{path}: jurisdiction {jid} (rows {rows}): {exc}") from exc
    validate_schedules(schedules)
    return schedules


def load_blocks(path: str | Path) -> list[BlockRecord]:
    """blocks.csv: block_id,zip,state,county,place,housing_units."""
    df = pd.read_csv(path, dtype=str).fillna("")
    _require_columns(df, ["block_id", "zip", "state", "county", "place", "housing_units"], path)
    if df["block_id"].duplicated().any():
        rows = [i + 2 for i in df.index[df["block_id"].duplicated()]]
        raise SchemaError(f"{path}: duplicate block_id at rows {rows[:10]}")
    blocks = []
    for i, row in df.iterrows():
        try:
            blocks.append(
                BlockRecord(
                    block_id=row["block_id"],
                    zip=row["zip"],
                    state=row["state"],
                    county=row["county"],
                    place=row["place"],
                    housing_units=int(float(row["housing_units"] or 0)),
                )
            )
        except (SchemaError, ValueError) as exc:
            raise SchemaError(f"{path} row {i + 2}: {exc}") from exc
    return blocks


def load_commuting(path: str | Path) -> list[CommutingMatrix]:
    """commuting.csv: year,category,origin_zip,dest_zip,jobs."""
    df = pd.read_csv(path, dtype={"origin_zip": str, "dest_zip": str}, float_precision="round_trip")
    _require_columns(df, ["year", "category", "origin_zip", "dest_zip", "jobs"], path)
    matrices = []
    for (year, category), group in df.groupby(["year", "category"], sort=True):
        try:
            matrices.append(
                CommutingMatrix(
                    year=int(year),
                    category=str(category),
                    entries=tuple(
                        (o, d, float(j))
                        for o, d, j in zip(group["origin_zip"], group["dest_zip"], group["jobs"])
                    ),
                )
            )
        except SchemaError as exc:
            raise SchemaError(f"{path}: matrix ({year}, {category}): {exc}") from exc
    return matrices


def load_panel_csv(path: str | Path, needed: list[str]) -> pd.DataFrame:
    df = pd.read_csv(path, dtype={"zip": str, "month": str}, float_precision="round_trip")
    _require_columns(df, needed, path)
    return df


def load_covariates(path: str | Path) -> pd.DataFrame:
    """covariates.csv: zip-level attributes; mw_worker_share optional."""
    df = pd.read_csv(path, dtype={"zip": str}, float_precision="round_trip")
    _require_columns(df, ["zip", "safmr_rent", "annual_wage_hh"], path)
    if df["zip"].duplicated().any():
        raise SchemaError(f"{path}: duplicate zip rows")
    return df
