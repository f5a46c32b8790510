"""Charging-order file parsing and constant-current segmentation.

Input CSV schema (one row per telemetry sample):
``order_id,ev_id,fcs_id,timestamp,energy_kwh,soc_pct,current_a,voltage_v,temp_c``
with ISO-8601 UTC timestamps. Malformed rows go to a rejects report and
orders whose series are internally inconsistent are quarantined with a
reason; nothing is silently dropped.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import SchemaError
from .model import ChargingOrder, ChargingPoint, ChargingSegment

REQUIRED_COLUMNS = [
    "order_id", "ev_id", "fcs_id", "timestamp", "energy_kwh", "soc_pct",
    "current_a", "voltage_v", "temp_c",
]
OPTIONAL_COLUMNS = ["battery_type"]


@dataclass
class ParseResult:
    orders: list[ChargingOrder]
    rejected_rows: pd.DataFrame          # original columns + reject_reason
    quarantined_orders: list[tuple[str, str]]   # (order_id, reason)

    def write_rejects(self, path) -> None:
        self.rejected_rows.to_csv(path, index=False)


def parse_orders(path) -> ParseResult:
    """Parse a charging-order CSV into time-sorted orders."""
    df = pd.read_csv(path, dtype={"order_id": str, "ev_id": str, "fcs_id": str})
    missing = [c for c in REQUIRED_COLUMNS if c not in df.columns]
    if missing:
        raise SchemaError(f"{path}: missing required columns {missing}")

    reasons = pd.Series("", index=df.index)

    ts = pd.to_datetime(df["timestamp"], utc=True, format="ISO8601",
                        errors="coerce")
    reasons[ts.isna() & (reasons == "")] = "unparseable timestamp"

    for col in ("energy_kwh", "soc_pct", "current_a", "voltage_v", "temp_c"):
        vals = pd.to_numeric(df[col], errors="coerce")
        bad = ~np.isfinite(vals.to_numpy(dtype=float, na_value=np.nan))
        reasons[bad & (reasons == "")] = f"non-numeric {col}"
        df[col] = vals

    # Field BMS resolution is 1 %; fractional SOC is a data-quality fault,
    # not something to round away.
    soc = df["soc_pct"].to_numpy(dtype=float, na_value=np.nan)
    frac = np.isfinite(soc) & (soc != np.floor(soc))
    reasons[frac & (reasons == "")] = "fractional SOC"
    out_of_range = np.isfinite(soc) & ((soc < 0) | (soc > 100))
    reasons[out_of_range & (reasons == "")] = "SOC out of [0, 100]"

    bad_mask = reasons != ""
    rejected = df[bad_mask].copy()
    rejected["reject_reason"] = reasons[bad_mask]

    good = df[~bad_mask].copy()
    good["_ts"] = ts[~bad_mask].astype("int64") / 1e9

    orders: list[ChargingOrder] = []
    quarantined: list[tuple[str, str]] = []
    for order_id, grp in good.groupby("order_id", sort=True):
        grp = grp.sort_values("_ts", kind="mergesort")
        reason = _order_problem(grp)
        if reason is not None:
            quarantined.append((str(order_id), reason))
            continue
        points = tuple(
            ChargingPoint(timestamp=t, energy_kwh=e, soc_pct=int(s),
                          current_a=i, voltage_v=u, temp_c=c)
            for t, e, s, i, u, c in zip(
                grp["_ts"].to_numpy(), grp["energy_kwh"].to_numpy(),
                grp["soc_pct"].to_numpy(), grp["current_a"].to_numpy(),
                grp["voltage_v"].to_numpy(), grp["temp_c"].to_numpy())
        )
        battery_type = None
        if "battery_type" in grp.columns:
            bt = grp["battery_type"].iloc[0]
            if isinstance(bt, str) and bt.strip():
                battery_type = bt.strip()
        orders.append(ChargingOrder(
            order_id=str(order_id),
            ev_id=str(grp["ev_id"].iloc[0]),
            fcs_id=str(grp["fcs_id"].iloc[0]),
            points=points,
            battery_type=battery_type,
        ))
    return ParseResult(orders=orders, rejected_rows=rejected,
                       quarantined_orders=quarantined)


def _order_problem(grp: pd.DataFrame) -> str | None:
    if len(grp) < 2:
        return "fewer than 2 points"
    if grp["ev_id"].nunique() > 1 or grp["fcs_id"].nunique() > 1:
        return "inconsistent ev/fcs ids"
    t = grp["_ts"].to_numpy()
    if np.any(np.diff(t) <= 0):
        return "non-increasing timestamps"
    e = grp["energy_kwh"].to_numpy()
    if np.any(np.diff(e) < 0):
        return "non-monotone energy"
    s = grp["soc_pct"].to_numpy()
    if np.any(np.diff(s) < 0):
        return "non-monotone SOC"
    return None


def segment_order(order: ChargingOrder,
                  current_pp_threshold: float) -> list[ChargingSegment]:
    """Cut an order into maximal contiguous runs whose peak-to-peak
    charging current stays within the threshold (greedy left to right).

    Runs whose SOC change is below 1 % carry no quantization information
    and are discarded; runs with zero energy change likewise.
    """
    pts = order.points
    n = len(pts)
    current = np.array([p.current_a for p in pts])

    segments: list[ChargingSegment] = []
    start = 0
    while start < n:
        run_min = run_max = current[start]
        end = start + 1
        while end < n:
            lo = min(run_min, current[end])
            hi = max(run_max, current[end])
            if hi - lo > current_pp_threshold:
                break
            run_min, run_max = lo, hi
            end += 1
        if end - start >= 2:
            seg = _make_segment(order, start, end, run_max - run_min)
            if seg is not None:
                segments.append(seg)
        start = end
    return segments


def _make_segment(order: ChargingOrder, start: int, end: int,
                  ptp: float) -> ChargingSegment | None:
    pts = order.points[start:end]
    soc = np.array([p.soc_pct for p in pts], dtype=np.int64)
    energy = np.array([p.energy_kwh for p in pts])
    delta_soc = int(soc[-1] - soc[0])
    delta_e = float(energy[-1] - energy[0])
    if delta_soc < 1 or delta_e <= 0:
        return None
    return ChargingSegment(
        ev_id=order.ev_id,
        fcs_id=order.fcs_id,
        order_id=order.order_id,
        start_ts=pts[0].timestamp,
        delta_energy_kwh=delta_e,
        delta_soc_pct=delta_soc,
        start_soc_pct=int(soc[0]),
        end_soc_pct=int(soc[-1]),
        mean_current_a=float(np.mean([p.current_a for p in pts])),
        peak_to_peak_current_a=float(ptp),
        mean_temp_c=float(np.mean([p.temp_c for p in pts])),
        soc_series=soc - soc[0],
        energy_series=energy - energy[0],
        key=f"{order.order_id}:{start}",
        battery_type=order.battery_type,
    )
