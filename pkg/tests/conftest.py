"""Shared test helpers: hand-built segments and small synthetic fleets."""
from __future__ import annotations

import math

import numpy as np
import pytest

from chargeaudit.model import ChargingOrder, ChargingPoint, ChargingSegment


def make_segment(e_d_true: float, s0_frac: float, delta_true: float,
                 n_points: int = 10, ev_id: str = "EV-1", fcs_id: str = "FCS-1",
                 order_id: str = "ORD-1", current_a: float = 42.0,
                 temp_c: float = 29.0, key: str = "ORD-1:0"
                 ) -> tuple[ChargingSegment, float]:
    """Build a segment from a constant-rate session with true density
    ``e_d_true`` starting at fractional SOC ``s0_frac``; SOC is reported
    floor-quantized. Returns (segment, measured density implied by the
    meter), which equals ``e_d_true`` here (no meter error, no loss).
    """
    soc_true = s0_frac + np.linspace(0.0, delta_true, n_points)
    energy = e_d_true * (soc_true - soc_true[0])
    soc_rep = np.floor(soc_true + 1e-9).astype(np.int64)
    delta_soc = int(soc_rep[-1] - soc_rep[0])
    if delta_soc < 1:
        raise ValueError("choose a wider session for the test")
    seg = ChargingSegment(
        ev_id=ev_id, fcs_id=fcs_id, order_id=order_id, start_ts=0.0,
        delta_energy_kwh=float(energy[-1] - energy[0]),
        delta_soc_pct=delta_soc,
        start_soc_pct=int(soc_rep[0]), end_soc_pct=int(soc_rep[-1]),
        mean_current_a=current_a, peak_to_peak_current_a=0.0,
        mean_temp_c=temp_c,
        soc_series=soc_rep - soc_rep[0],
        energy_series=energy - energy[0],
        key=key)
    return seg, e_d_true


def make_order(order_id: str = "ORD-1", ev_id: str = "EV-1",
               fcs_id: str = "FCS-1", currents=None, n_points: int = 6,
               e_d: float = 0.4, s0: float = 10.2,
               temp_c: float = 29.0) -> ChargingOrder:
    """Order with one sample per minute, one SOC percent per sample."""
    if currents is None:
        currents = [42.0] * n_points
    n = len(currents)
    soc_true = s0 + np.arange(n, dtype=float)
    energy = e_d * np.arange(n, dtype=float)
    points = tuple(
        ChargingPoint(timestamp=60.0 * k, energy_kwh=float(energy[k]),
                      soc_pct=int(math.floor(soc_true[k] + 1e-9)),
                      current_a=float(currents[k]), voltage_v=400.0,
                      temp_c=temp_c)
        for k in range(n))
    return ChargingOrder(order_id=order_id, ev_id=ev_id, fcs_id=fcs_id,
                         points=points)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
