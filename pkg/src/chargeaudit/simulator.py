"""Synthetic charging-fleet generator with known ground truth, plus the
validation harness that scores the estimation pipeline against it.

Sessions integrate SOC at constant current from the Ah balance; the BMS
reports floor-quantized SOC, the station meter reports battery energy
divided by the cable conversion efficiency and scaled by the station's
true error. Identical seeds produce bit-identical datasets.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .errors import DomainError
from .estimator import EstimationResult, run_pipeline
from .model import ChargingOrder, ChargingPoint, ModelConfig


def conversion_efficiency(u: float, i: float, r: float) -> float:
    """Fraction of metered energy reaching the battery after cable loss."""
    if u <= 0:
        raise DomainError("voltage must be > 0")
    if i < 0:
        raise DomainError("current must be >= 0")
    return 1.0 - i * r / u


@dataclass(frozen=True)
class SimFcs:
    fcs_id: str
    gamma_true: float
    cable_resistance_ohm: float = 0.0023


@dataclass
class SimEv:
    ev_id: str
    e_d_true: float                     # kWh per percent point
    rel_repeat_sigma: float = 0.05      # per-percent-increment relative std
    rated_capacity_kwh: float = 40.0
    soh: float = 1.0
    battery_type: str = "NMC"
    base_current_a: float = 42.0
    station_ids: tuple[str, ...] = ()
    swap_event: tuple[float, float] | None = None  # (epoch ts, new e_d_true)

    def density_at(self, ts: float) -> float:
        if self.swap_event is not None and ts >= self.swap_event[0]:
            return self.swap_event[1]
        return self.e_d_true


@dataclass
class SimScenario:
    """Fleet-generation knobs. The defaults give a desk-scale fleet whose
    order/station ratio mirrors a production month of data."""

    n_fcs: int = 50
    n_ev: int = 120
    n_orders: int = 700
    seed: int = 0
    sampling_interval_s: float = 60.0
    soc_start_range: tuple[float, float] = (12.0, 40.0)
    delta_soc_range: tuple[float, float] = (18.0, 78.0)
    current_base_range: tuple[float, float] = (38.0, 46.0)
    voltage_nominal_v: float = 400.0
    voltage_jitter_v: float = 10.0
    temp_mean_c: float = 29.0
    temp_sigma_c: float = 4.5
    fcs_error_sigma: float = 0.0162
    fraction_defective: float = 0.0
    defect_gamma_range: tuple[float, float] = (0.02, 0.04)
    rel_repeat_sigma: float = 0.05
    e_d_range: tuple[float, float] = (0.25, 0.45)
    cable_resistance_ohm: float = 0.0023
    stations_per_ev: tuple[int, int] = (3, 5)
    heavy_ev_fraction: float = 0.0       # share of EVs charging more often
    heavy_ev_weight: float = 4.0         # their relative order frequency
    light_stations_per_ev: tuple[int, int] | None = None  # default: same
    ev_swap_fraction: float = 0.0
    quantization: str = "floor"          # "floor" | "aligned"
    gamma_mode: str = "normal"           # "normal" | "zero_reference"
    itinerary_mode: str = "random"       # "random" | "hub"
    fraction_reference: float = 0.4
    start_epoch_s: float = 1704067200.0  # 2024-01-01T00:00:00Z
    span_days: float = 30.0

    def to_dict(self) -> dict:
        from dataclasses import asdict
        return asdict(self)


def desk_scale_scenario(seed: int, fraction_defective: float = 0.15
                        ) -> SimScenario:
    """Production-like desk-scale scenario used for validation sweeps:
    500 stations, 1200 EVs, ~7000 orders in a month, a heavy-user core
    that concentrates traffic on repeat station visits, long charging
    sessions, and 15 % defective stations by default."""
    return SimScenario(
        n_fcs=500, n_ev=1200, n_orders=7000, seed=seed,
        fraction_defective=fraction_defective,
        stations_per_ev=(6, 8),
        delta_soc_range=(75.0, 94.0),
        soc_start_range=(2.0, 5.0),
        heavy_ev_fraction=0.4,
        heavy_ev_weight=4.0,
        light_stations_per_ev=(2, 3),
        temp_sigma_c=2.0,
    )


@dataclass
class SimFleet:
    scenario: SimScenario
    stations: list[SimFcs]
    evs: list[SimEv]
    orders: list[ChargingOrder]
    gamma_true: dict[str, float]
    session_truth: dict[str, float]      # order_id -> realized density


def _make_stations(scn: SimScenario, rng) -> list[SimFcs]:
    gammas = rng.normal(0.0, scn.fcs_error_sigma, scn.n_fcs)
    if scn.gamma_mode == "zero_reference":
        n_ref = round(scn.fraction_reference * scn.n_fcs)
        gammas[:n_ref] = 0.0
    elif scn.fraction_defective > 0:
        n_def = round(scn.fraction_defective * scn.n_fcs)
        idx = rng.choice(scn.n_fcs, size=n_def, replace=False)
        lo, hi = scn.defect_gamma_range
        signs = rng.choice([-1.0, 1.0], size=n_def)
        gammas[idx] = signs * rng.uniform(lo, hi, size=n_def)
    width = len(str(scn.n_fcs))
    return [SimFcs(fcs_id=f"FCS-{k:0{width}d}", gamma_true=float(gammas[k]),
                   cable_resistance_ohm=scn.cable_resistance_ohm)
            for k in range(scn.n_fcs)]


def _make_evs(scn: SimScenario, stations: list[SimFcs], rng) -> list[SimEv]:
    n_ref = round(scn.fraction_reference * scn.n_fcs)
    ref_ids = [s.fcs_id for s in stations[:n_ref]]
    other_ids = [s.fcs_id for s in stations[n_ref:]]
    all_ids = [s.fcs_id for s in stations]
    width = len(str(scn.n_ev))

    evs: list[SimEv] = []
    for k in range(scn.n_ev):
        e_d = float(rng.uniform(*scn.e_d_range))
        base_i = float(rng.uniform(*scn.current_base_range))
        if scn.itinerary_mode == "hub":
            is_link = k >= round(0.6 * scn.n_ev)
            if is_link and other_ids:
                link_idx = (k - round(0.6 * scn.n_ev)) % len(other_ids)
                ref = ref_ids[int(rng.integers(len(ref_ids)))]
                sts = (ref, other_ids[link_idx])
            else:
                n_st = int(rng.integers(scn.stations_per_ev[0],
                                        scn.stations_per_ev[1] + 1))
                n_st = min(n_st, len(ref_ids))
                sts = tuple(ref_ids[j] for j in sorted(
                    rng.choice(len(ref_ids), size=n_st, replace=False)))
        else:
            span = scn.stations_per_ev
            if (scn.light_stations_per_ev is not None
                    and k >= round(scn.heavy_ev_fraction * scn.n_ev)):
                span = scn.light_stations_per_ev
            n_st = int(rng.integers(span[0], span[1] + 1))
            n_st = min(n_st, scn.n_fcs)
            sts = tuple(all_ids[j] for j in sorted(
                rng.choice(scn.n_fcs, size=n_st, replace=False)))
        swap = None
        if scn.ev_swap_fraction > 0 and rng.random() < scn.ev_swap_fraction:
            swap_ts = scn.start_epoch_s + float(
                rng.uniform(0.3, 0.7)) * scn.span_days * 86400.0
            swap = (swap_ts, e_d * 1.1)
        evs.append(SimEv(
            ev_id=f"EV-{k:0{width}d}", e_d_true=e_d,
            rel_repeat_sigma=scn.rel_repeat_sigma,
            rated_capacity_kwh=e_d * 100.0,
            base_current_a=base_i, station_ids=sts, swap_event=swap))
    return evs


def _order_assignments(scn: SimScenario, evs: list[SimEv], rng):
    """(ev index, station id) per order, honoring the itinerary mode."""
    assignments: list[tuple[int, str]] = []
    if scn.itinerary_mode == "hub":
        first_link = round(0.6 * scn.n_ev)
        for k in range(first_link, scn.n_ev):
            if len(assignments) + 2 > scn.n_orders:
                break
            for st in evs[k].station_ids:
                assignments.append((k, st))
        while len(assignments) < scn.n_orders:
            k = int(rng.integers(first_link)) if first_link else \
                int(rng.integers(scn.n_ev))
            st = evs[k].station_ids[int(rng.integers(len(evs[k].station_ids)))]
            assignments.append((k, st))
    else:
        n_heavy = round(scn.heavy_ev_fraction * scn.n_ev)
        weights = np.ones(scn.n_ev)
        weights[:n_heavy] = scn.heavy_ev_weight
        weights /= weights.sum()
        ev_idx = rng.choice(scn.n_ev, size=scn.n_orders, p=weights)
        for k in ev_idx:
            k = int(k)
            st = evs[k].station_ids[int(rng.integers(len(evs[k].station_ids)))]
            assignments.append((k, st))
    return assignments[:scn.n_orders]


def simulate_session(ev: SimEv, fcs: SimFcs, scenario: SimScenario, rng,
                     order_id: str, start_ts: float
                     ) -> tuple[ChargingOrder, float]:
    """Generate one charging order; returns it with the session's
    realized energy density (ground truth for bounding checks)."""
    scn = scenario
    aligned = scn.quantization == "aligned"

    lo, hi = scn.delta_soc_range
    delta_target = float(rng.uniform(lo, hi))
    s0 = float(rng.uniform(*scn.soc_start_range))
    if aligned:
        delta_target = max(2.0, round(delta_target))
        s0 = float(round(s0))
    delta_target = min(delta_target, 99.0 - s0)

    temp = float(rng.normal(scn.temp_mean_c, scn.temp_sigma_c))
    voltage = scn.voltage_nominal_v + float(
        rng.uniform(-scn.voltage_jitter_v, scn.voltage_jitter_v))

    e_d_base = ev.density_at(start_ts)
    if ev.rel_repeat_sigma > 0:
        # The density averages one noisy energy increment per percent
        # point, so the session-level spread shrinks with sqrt(dSOC).
        eps = float(rng.normal(
            0.0, ev.rel_repeat_sigma / math.sqrt(delta_target)))
    else:
        eps = 0.0
    e_d_sess = e_d_base * (1.0 + eps)

    if aligned:
        # One percent point per sampling interval: every sample lands on
        # an integer SOC and quantization carries no information.
        current = 1000.0 * e_d_sess * 3600.0 \
            / (scn.sampling_interval_s * voltage)
        n_pts = int(delta_target) + 1
        soc_true = s0 + np.arange(n_pts, dtype=float)
        battery_energy = e_d_sess * np.arange(n_pts, dtype=float)
    else:
        current = ev.base_current_a + float(rng.uniform(-0.5, 0.5))
        rate = voltage * current / 1000.0 / 3600.0 / e_d_sess  # pct per s
        n_pts = max(2, int(delta_target / (rate * scn.sampling_interval_s)) + 1)
        times_rel = np.arange(n_pts, dtype=float) * scn.sampling_interval_s
        soc_true = s0 + rate * times_rel
        battery_energy = e_d_sess * (soc_true - s0)

    eta = conversion_efficiency(voltage, current, fcs.cable_resistance_ohm)
    meter_energy = battery_energy / eta * (1.0 + fcs.gamma_true)
    soc_reported = np.floor(soc_true + 1e-9).astype(int)
    timestamps = start_ts + np.arange(n_pts, dtype=float) \
        * scn.sampling_interval_s

    points = tuple(
        ChargingPoint(timestamp=float(t), energy_kwh=float(e), soc_pct=int(s),
                      current_a=float(current), voltage_v=float(voltage),
                      temp_c=temp)
        for t, e, s in zip(timestamps, meter_energy, soc_reported))
    order = ChargingOrder(order_id=order_id, ev_id=ev.ev_id,
                          fcs_id=fcs.fcs_id, points=points,
                          battery_type=ev.battery_type)
    return order, e_d_sess


def simulate_fleet(scenario: SimScenario) -> SimFleet:
    """Generate the whole fleet dataset for a scenario, deterministically."""
    scn = scenario
    rng = np.random.default_rng([scn.seed, 0])
    stations = _make_stations(scn, rng)
    evs = _make_evs(scn, stations, rng)
    station_by_id = {s.fcs_id: s for s in stations}
    assignments = _order_assignments(scn, evs, rng)
    start_offsets = rng.uniform(0.0, scn.span_days * 86400.0,
                                size=len(assignments))

    orders: list[ChargingOrder] = []
    session_truth: dict[str, float] = {}
    width = len(str(scn.n_orders))
    for idx, (ev_idx, fcs_id) in enumerate(assignments):
        order_rng = np.random.default_rng([scn.seed, 1, idx])
        order_id = f"ORD-{idx:0{width}d}"
        start_ts = scn.start_epoch_s + float(np.floor(start_offsets[idx]))
        order, e_d_sess = simulate_session(
            evs[ev_idx], station_by_id[fcs_id], scn, order_rng,
            order_id, start_ts)
        orders.append(order)
        session_truth[order_id] = e_d_sess

    return SimFleet(
        scenario=scn, stations=stations, evs=evs, orders=orders,
        gamma_true={s.fcs_id: s.gamma_true for s in stations},
        session_truth=session_truth)


def _iso(ts: float) -> str:
    return datetime.fromtimestamp(int(ts), tz=timezone.utc).strftime(
        "%Y-%m-%dT%H:%M:%SZ")


def write_orders_csv(orders: list[ChargingOrder], path) -> None:
    """Emit the ingestion CSV format."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("order_id,ev_id,fcs_id,timestamp,energy_kwh,soc_pct,"
                 "current_a,voltage_v,temp_c\n")
        for order in orders:
            for p in order.points:
                fh.write(f"{order.order_id},{order.ev_id},{order.fcs_id},"
                         f"{_iso(p.timestamp)},{p.energy_kwh!r},{p.soc_pct},"
                         f"{p.current_a!r},{p.voltage_v!r},{p.temp_c!r}\n")


def write_ground_truth_csv(gamma_true: dict[str, float], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("fcs_id,gamma_true\n")
        for fcs_id in sorted(gamma_true):
            fh.write(f"{fcs_id},{gamma_true[fcs_id]!r}\n")


def read_ground_truth_csv(path) -> dict[str, float]:
    out: dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header[:2] != ["fcs_id", "gamma_true"]:
            raise DomainError(f"{path}: expected fcs_id,gamma_true header")
        for line in fh:
            if not line.strip():
                continue
            fcs_id, gamma = line.strip().split(",")
            out[fcs_id] = float(gamma)
    return out


@dataclass
class ValidationReport:
    n_fcs_total: int
    n_fcs_estimated: int
    n_unreliable: int
    n_rcs: int
    n_chains: int
    accuracy_pct: float               # over non-Unreliable verdicts
    coverage_pct: float               # |gamma_true - gamma| <= sigma
    confusion: dict                   # acceptable taken as "positive"
    flags: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        from dataclasses import asdict
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def score_verdicts(result: EstimationResult, gamma_true: dict[str, float],
                   cfg: ModelConfig) -> ValidationReport:
    """Compare pipeline verdicts with ground truth."""
    gamma_t = cfg.acceptable_gamma_t
    confusion = {"tp": 0, "tn": 0, "fp": 0, "fn": 0}
    n_ok = n_scored = n_cov = 0
    n_unreliable = 0
    for v in result.verdicts:
        truth = gamma_true[v.fcs_id]
        if abs(truth - v.gamma) <= v.sigma_gamma:
            n_cov += 1
        if v.classification == "Unreliable":
            n_unreliable += 1
            continue
        truth_ok = abs(truth) <= gamma_t
        pred_ok = v.classification == "Acceptable"
        n_scored += 1
        if pred_ok and truth_ok:
            confusion["tp"] += 1
        elif not pred_ok and not truth_ok:
            confusion["tn"] += 1
        elif pred_ok and not truth_ok:
            confusion["fp"] += 1
        else:
            confusion["fn"] += 1
        if pred_ok == truth_ok:
            n_ok += 1

    n_est = len(result.verdicts)
    flags = list(result.warnings)
    if not result.clusters:
        flags.append("insufficient data")
    n_rcs = len({f for c in result.clusters for f in c.fcs_ids})
    return ValidationReport(
        n_fcs_total=len(gamma_true),
        n_fcs_estimated=n_est,
        n_unreliable=n_unreliable,
        n_rcs=n_rcs,
        n_chains=len(result.chains),
        accuracy_pct=round(100.0 * n_ok / n_scored, 1) if n_scored else 0.0,
        coverage_pct=round(100.0 * n_cov / n_est, 1) if n_est else 0.0,
        confusion=confusion,
        flags=flags,
    )


def run_validation(scenario: SimScenario,
                   cfg: ModelConfig) -> tuple[ValidationReport, EstimationResult]:
    """Simulate a fleet, run the full pipeline in memory and score it."""
    fleet = simulate_fleet(scenario)
    result = run_pipeline(fleet.orders, cfg)
    report = score_verdicts(result, fleet.gamma_true, cfg)
    return report, result
