"""Core domain types for charging-station meter-error estimation.

All relative quantities (station errors, thresholds, uncertainties of
dimensionless values) are stored as fractions; percent appears only at
I/O boundaries. Energy density is kWh per percent point of SOC.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class ChargingPoint:
    """One telemetry sample of a charging order."""

    timestamp: float          # seconds (epoch), monotone within an order
    energy_kwh: float         # cumulative station meter reading
    soc_pct: int              # BMS-reported SOC, integer percent
    current_a: float
    voltage_v: float
    temp_c: float


@dataclass(frozen=True)
class ChargingOrder:
    """A single charging session: ordered samples for one EV at one station."""

    order_id: str
    ev_id: str
    fcs_id: str
    points: tuple[ChargingPoint, ...]
    battery_type: str | None = None

    def __post_init__(self):
        if len(self.points) < 2:
            raise DomainError(f"order {self.order_id}: needs >= 2 points")


@dataclass(frozen=True, eq=False)
class ChargingSegment:
    """A contiguous near-constant-current slice of one charging order.

    ``soc_series`` / ``energy_series`` hold the per-sample SOC and energy
    deltas relative to the segment's first point (first entry is 0/0).
    """

    ev_id: str
    fcs_id: str
    order_id: str
    start_ts: float
    delta_energy_kwh: float
    delta_soc_pct: int
    start_soc_pct: int
    end_soc_pct: int
    mean_current_a: float
    peak_to_peak_current_a: float
    mean_temp_c: float
    soc_series: np.ndarray
    energy_series: np.ndarray
    key: str = ""
    battery_type: str | None = None

    def __post_init__(self):
        if self.delta_soc_pct < 1:
            raise DomainError(f"segment {self.key}: delta SOC must be >= 1")
        if self.delta_energy_kwh <= 0:
            raise DomainError(f"segment {self.key}: delta energy must be > 0")


@dataclass(frozen=True)
class QuantBounds:
    """Feasible interval for the true energy density and the scaled
    SOC-quantization error of one segment."""

    e_d_min: float
    e_d_max: float
    y_min: float
    y_max: float
    y0: int    # reported SOC change of the segment

    @property
    def degenerate(self) -> bool:
        return self.y_max - self.y_min <= 1e-12


@dataclass(frozen=True)
class DensityEstimate:
    """Unbiased energy-density estimate of one segment with its
    uncertainty components (quantization, repeatability, efficiency)."""

    expected_e_d: float      # efficiency-corrected expectation, kWh/%
    expected_e_d_sq: float   # raw second moment of the uncorrected value
    sigma_quant: float       # std from SOC quantization, kWh/%
    sigma_repeat: float      # std from session-to-session repeatability, kWh/%
    sigma_cv: float          # relative std of the efficiency correction
    sigma_total: float       # combined std of expected_e_d, kWh/%
    segment: ChargingSegment | None = None


@dataclass(frozen=True)
class ReferenceCluster:
    """Stations sharing one EV whose pairwise relative meter errors all
    fall below the reference threshold; anchors the error estimates."""

    ev_id: str
    fcs_ids: tuple[str, ...]
    per_fcs_density: dict      # fcs_id -> pooled estimate (value, sigma)
    e_d_true_est: float        # mean pooled density across member stations
    sigma_e_d_true: float
    sigma_bias: float          # residual bias of the anchor, kWh/%


@dataclass(frozen=True)
class ComparisonChain:
    """Station path rooted at a reference station along which errors and
    uncertainties propagate."""

    root_rcs_id: str
    hops: tuple          # (from_fcs, to_fcs, ev_id) triples, in order
    terminal_reason: str  # MaxLength | HitAnotherRcs | Exhausted

    @property
    def stations(self) -> tuple[str, ...]:
        out = [self.root_rcs_id]
        for _, to_fcs, _ in self.hops:
            out.append(to_fcs)
        return tuple(out)


@dataclass(frozen=True)
class StationVerdict:
    """Final per-station result: error estimate, uncertainty, acceptance
    probability and classification."""

    fcs_id: str
    gamma: float
    sigma_gamma: float
    interval: tuple[float, float]
    p_acceptable: float      # fraction in [0, 1]
    classification: str      # Acceptable | Unacceptable | Unreliable
    provenance: str          # "RCS-direct" or "chain:<path>"

    def to_dict(self) -> dict:
        return {
            "fcs_id": self.fcs_id,
            "gamma": self.gamma,
            "sigma_gamma": self.sigma_gamma,
            "interval": list(self.interval),
            "p_acceptable_pct": round(self.p_acceptable * 100.0, 1),
            "classification": self.classification,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StationVerdict":
        return cls(
            fcs_id=d["fcs_id"],
            gamma=d["gamma"],
            sigma_gamma=d["sigma_gamma"],
            interval=(d["interval"][0], d["interval"][1]),
            p_acceptable=d["p_acceptable_pct"] / 100.0,
            classification=d["classification"],
            provenance=d["provenance"],
        )


@dataclass
class ModelConfig:
    """Estimation-model parameters. Defaults follow the production
    operating point for 2 %-class station meters."""

    current_pp_threshold_a: float = 4.0
    min_delta_soc_pct: int = 20
    bped_rel_repeat: float = 0.06
    min_rcs_fcs_count: int = 3
    expected_bped_stability_threshold: float = 0.01
    fcs_error_sigma: float = 0.0162
    rcs_rel_error_threshold_l: float = 0.0067
    max_chain_len_fcs: int = 4
    d_temperature_threshold_c: float = 5.0
    acceptable_gamma_t: float = 0.02
    temp_window_c: tuple[float, float] = (20.0, 40.0)
    max_timespan_days: float = 60.0
    sigma_r_cv: float = 0.002
    eta_fixed: float = 1.0
    d_current_threshold_a: float = 4.0

    def __post_init__(self):
        lo, hi = self.temp_window_c
        if lo >= hi:
            raise DomainError("temp_window_c low must be below high")
        for name in (
            "current_pp_threshold_a", "min_delta_soc_pct", "bped_rel_repeat",
            "min_rcs_fcs_count", "expected_bped_stability_threshold",
            "fcs_error_sigma", "rcs_rel_error_threshold_l", "max_chain_len_fcs",
            "d_temperature_threshold_c", "acceptable_gamma_t",
            "max_timespan_days", "d_current_threshold_a",
        ):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be > 0")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["temp_window_c"] = list(self.temp_window_c)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        if "temp_window_c" in d:
            d["temp_window_c"] = tuple(d["temp_window_c"])
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "ModelConfig":
        """Read a flat ``key = value`` config file; keys are field names."""
        values: dict = {}
        fields = {f.name: f for f in dataclasses.fields(cls)}
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise DomainError(f"{path}:{lineno}: expected key = value")
                key, _, val = line.partition("=")
                key, val = key.strip(), val.strip()
                if key not in fields:
                    raise DomainError(f"{path}:{lineno}: unknown key {key!r}")
                if key == "temp_window_c":
                    values[key] = tuple(float(x) for x in val.split(","))
                elif key in ("min_delta_soc_pct", "min_rcs_fcs_count",
                             "max_chain_len_fcs"):
                    values[key] = int(val)
                else:
                    values[key] = float(val)
        return cls(**values)


def energy_density(delta_energy_kwh: float, delta_soc_pct: float) -> float:
    """Naive energy density: charging energy per percent point of SOC."""
    if delta_soc_pct < 1:
        raise DomainError("delta SOC must be >= 1 percent point")
    if delta_energy_kwh <= 0:
        raise DomainError("delta energy must be > 0")
    return delta_energy_kwh / delta_soc_pct


def relative_meter_error(e_d_b: float, e_d_a: float) -> float:
    """Relative meter error of station B against station A, from the
    energy densities one EV exhibited at each."""
    if e_d_a <= 0:
        raise DomainError("reference energy density must be > 0")
    return (e_d_b - e_d_a) / e_d_a


def chain_error(gamma_rel_b_to_a: float, e_d_b: float, e_d_a: float,
                gamma_a: float) -> float:
    """Absolute meter error of station B given its relative error against
    station A and A's own error."""
    if e_d_a <= 0:
        raise DomainError("reference energy density must be > 0")
    return gamma_rel_b_to_a + (e_d_b / e_d_a) * gamma_a


def verdicts_to_json(verdicts: list[StationVerdict], extra: dict | None = None) -> str:
    """Serialize verdicts (plus optional report metadata) to JSON."""
    payload: dict = {"verdicts": [v.to_dict() for v in verdicts]}
    if extra:
        payload.update(extra)
    return json.dumps(payload, indent=2, sort_keys=True)
