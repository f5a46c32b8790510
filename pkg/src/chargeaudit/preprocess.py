"""Segment filtering and per-EV stability screening.

Produces the analysis-ready segment pool: temperature window, minimum
SOC change, dataset time-span cap, optional battery-type exclusion, and
removal of EVs whose expected energy density is not repeatable (damaged
cells, battery swaps).
"""
from __future__ import annotations

import math
from collections import defaultdict

import numpy as np

from . import soc_quant
from .errors import DomainError
from .model import ChargingSegment, ModelConfig

SECONDS_PER_DAY = 86400.0


def filter_segments(segments: list[ChargingSegment], cfg: ModelConfig
                    ) -> tuple[list[ChargingSegment], list[tuple[str, str]]]:
    """Apply the per-segment screens; returns (kept, exclusion log)."""
    kept: list[ChargingSegment] = []
    log: list[tuple[str, str]] = []
    if not segments:
        return kept, log
    t_lo, t_hi = cfg.temp_window_c
    anchor = min(s.start_ts for s in segments)
    horizon = anchor + cfg.max_timespan_days * SECONDS_PER_DAY
    for seg in segments:
        # LiFePO4 SOC reporting is unreliable in the mid-SOC plateau;
        # excluded only when the input declares a battery type.
        if seg.battery_type is not None and \
                seg.battery_type.lower() in ("lifepo4", "lfp"):
            log.append((seg.key, "LiFePO4 battery excluded"))
        elif not (t_lo <= seg.mean_temp_c <= t_hi):
            log.append((seg.key, "temperature out of window"))
        elif seg.delta_soc_pct < cfg.min_delta_soc_pct:
            log.append((seg.key, "SOC change below minimum"))
        elif seg.start_ts > horizon:
            log.append((seg.key, "outside dataset time span"))
        else:
            kept.append(seg)
    return kept, log


def ev_stability(segments: list[ChargingSegment],
                 expected: list[float] | None = None) -> float:
    """Relative repeatability of the expected energy density over
    segments of one EV at one FCS (sample std over mean)."""
    if len(segments) < 2:
        raise DomainError("stability needs >= 2 segments")
    if len({(s.ev_id, s.fcs_id) for s in segments}) != 1:
        raise DomainError("stability needs a single (EV, FCS) pair")
    if expected is None:
        expected = [soc_quant.expected_density(s, soc_quant.quant_bounds(s))
                    for s in segments]
    vals = np.asarray(expected, dtype=float)
    return float(np.std(vals, ddof=1) / np.mean(vals))


def screen_unstable_evs(pool: list[ChargingSegment], cfg: ModelConfig,
                        expected: dict[str, float] | None = None
                        ) -> tuple[list[ChargingSegment], list[tuple[str, str]]]:
    """Drop every segment of any EV whose per-FCS stability exceeds the
    threshold. EVs with no repeated (EV, FCS) pair cannot be scored and
    are retained; they are logged as unscored.

    ``expected`` optionally maps segment key -> expected density, to
    reuse values already computed by the caller.
    """
    by_pair: dict[tuple[str, str], list[ChargingSegment]] = defaultdict(list)
    for seg in pool:
        by_pair[(seg.ev_id, seg.fcs_id)].append(seg)

    unstable: set[str] = set()
    scored: set[str] = set()
    for (ev_id, _), segs in by_pair.items():
        if len(segs) < 2:
            continue
        scored.add(ev_id)
        exp = None
        if expected is not None:
            exp = [expected[s.key] for s in segs]
        if ev_stability(segs, exp) > cfg.expected_bped_stability_threshold:
            unstable.add(ev_id)

    log: list[tuple[str, str]] = []
    kept: list[ChargingSegment] = []
    unscored_logged: set[str] = set()
    for seg in pool:
        if seg.ev_id in unstable:
            log.append((seg.key, "EV failed stability screen"))
        else:
            kept.append(seg)
            if seg.ev_id not in scored and seg.ev_id not in unscored_logged:
                log.append((seg.key, "EV unscored (no repeated station)"))
                unscored_logged.add(seg.ev_id)
    return kept, log


def write_exclusion_log(log: list[tuple[str, str]], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("segment_key,reason\n")
        for key, reason in log:
            fh.write(f"{key},{reason}\n")
