"""Stacked event samples around direct statutory MW changes.

An event is a CBSA-month where a strict subset of the CBSA's ZIPs changed
their statutory MW: the untreated ZIPs of the same metro-month are the
comparison group. Estimation on the stacked sample interacts time with the
event tag, confining comparisons within events.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import pandas as pd

from ..errors import SchemaError
from ..months import month_label
from .panel import add_month_index

CHANGE_TOL = 1e-12


@dataclass(frozen=True)
class StackedEvent:
    event_id: str
    cbsa: str
    month: object
    zips: tuple[str, ...]
    treated_zips: tuple[str, ...]


@dataclass(frozen=True)
class StackedSample:
    events: tuple[StackedEvent, ...]
    observations: pd.DataFrame = field(hash=False)

    def event_counts(self) -> pd.DataFrame:
        rows = [
            {
                "event_id": e.event_id,
                "cbsa": e.cbsa,
                "month": e.month,
                "n_zips": len(e.zips),
                "n_treated": len(e.treated_zips),
            }
            for e in self.events
        ]
        return pd.DataFrame(rows)


def build_stacked_sample(
    panel: pd.DataFrame,
    window: int = 6,
    min_zips: int = 10,
    *,
    outcome: str = "r",
) -> StackedSample:
    """Stack complete +/-window month blocks of ZIPs around each event.

    A ZIP joins an event only with every month of the window present and
    non-missing; events keeping fewer than ``min_zips`` ZIPs are dropped,
    as are CBSA-months where all or none of the ZIPs changed. Observations
    belonging to several overlapping events are duplicated, once per event,
    tagged with ``event_id``.
    """
    if "cbsa_id" not in panel.columns:
        raise SchemaError("stacking requires a cbsa_id column")
    df = add_month_index(panel)
    df = df.sort_values(["zip", "t"], kind="stable").reset_index(drop=True)
    df["_d_res"] = df.groupby("zip", sort=False)["mw_res"].diff()
    changed = df[df["_d_res"].abs() > CHANGE_TOL]

    present = df.dropna(subset=[outcome]) if outcome in df.columns else df
    cells = present.set_index(["zip", "t"]).index

    events: list[StackedEvent] = []
    pieces: list[pd.DataFrame] = []
    for (cbsa, t_event), hits in changed.groupby(["cbsa_id", "t"], sort=True):
        cbsa_zips = sorted(df.loc[df["cbsa_id"] == cbsa, "zip"].unique())
        treated = sorted(hits["zip"].unique())
        if len(treated) == len(cbsa_zips):
            continue  # no within-event contrast
        span = range(t_event - window, t_event + window + 1)
        complete = [z for z in cbsa_zips if all((z, t) in cells for t in span)]
        if len(complete) < min_zips:
            continue
        event_id = f"{cbsa}:{_label(df, t_event)}"
        block = df[(df["zip"].isin(complete)) & (df["t"].isin(span))].copy()
        block["event_id"] = event_id
        pieces.append(block)
        events.append(
            StackedEvent(
                event_id=event_id,
                cbsa=cbsa,
                month=_label(df, t_event),
                zips=tuple(complete),
                treated_zips=tuple(z for z in treated if z in complete),
            )
        )

    if not events:
        raise SchemaError("no qualifying events for the stacked sample")
    observations = pd.concat(pieces, ignore_index=True).drop(columns=["_d_res"])
    return StackedSample(events=tuple(events), observations=observations)


def _label(df: pd.DataFrame, t: int):
    row = df.loc[df["t"] == t, "month"]
    if len(row):
        return row.iloc[0]
    return month_label(t)
