"""SOC quantization-error model.

The BMS reports SOC at 1 % resolution, so the fractional SOC consumed
before the first sample and after the last one is unobserved. The
difference of the two fractional residuals is triangular-distributed on
(-1, 1); the uploaded intermediate points bound it to a sub-interval,
and the conditional moments of the true energy density follow in closed
form.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import DataInconsistencyError, DomainError
from .model import ChargingSegment, DensityEstimate, ModelConfig, QuantBounds

# Below this interval width the closed forms lose digits to cancellation;
# switch to fixed-order Gauss-Legendre on the exact integrand (machine
# precision there: the integrand is smooth on the scale of the interval).
_NARROW_WIDTH = 1e-3

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def triangular_pdf(y):
    """Density of the difference of two independent U[0, 1) residuals."""
    y = np.asarray(y, dtype=float)
    return np.where(np.abs(y) < 1.0, 1.0 - np.abs(y), 0.0)


def quant_error_naive(delta_s1: float, delta_s2: float, s0: int, sn: int) -> float:
    """Relative density error caused by the two unobserved SOC residuals."""
    if not (0.0 <= delta_s1 < 1.0 and 0.0 <= delta_s2 < 1.0):
        raise DomainError("SOC residuals must lie in [0, 1)")
    if sn <= s0:
        raise DomainError("end SOC must exceed start SOC")
    return (delta_s2 - delta_s1) / (sn - s0)


def quant_bounds(segment: ChargingSegment) -> QuantBounds:
    """Bound the true energy density (and the scaled quantization error)
    using every uploaded point of the segment.

    Each point with SOC advance k and energy advance dE constrains the
    true density to [dE/(k+1), dE/(k-1)]; the intersection over all
    points is the feasible interval.
    """
    ds = segment.soc_series.astype(float)
    de = segment.energy_series.astype(float)
    mask = ds >= 1.0
    if not mask.any():
        raise DomainError(f"segment {segment.key}: no point with SOC advance >= 1")
    ds, de = ds[mask], de[mask]

    e_d_min = float(np.max(de / (ds + 1.0)))
    upper_mask = ds > 1.0
    if upper_mask.any():
        e_d_max = float(np.min(de[upper_mask] / (ds[upper_mask] - 1.0)))
    else:
        e_d_max = math.inf
    if e_d_min > e_d_max * (1.0 + 1e-12):
        raise DataInconsistencyError(
            f"segment {segment.key}: empty feasible density interval "
            f"[{e_d_min}, {e_d_max}]")

    y0 = segment.delta_soc_pct
    e = segment.delta_energy_kwh
    y_min = e / e_d_max - y0 if math.isfinite(e_d_max) else -1.0
    y_max = e / e_d_min - y0
    # Values outside the open support (-1, 1) only signal inconsistent
    # data; tighten them to the support.
    y_min = max(y_min, -1.0 + 1e-12)
    y_max = min(y_max, 1.0 - 1e-12)
    y_min = min(y_min, y_max)
    return QuantBounds(e_d_min=e / (y0 + y_max), e_d_max=e / (y0 + y_min),
                       y_min=y_min, y_max=y_max, y0=y0)


def _normalizer(y_min: float, y_max: float) -> float:
    """Twice the triangular mass on [y_min, y_max] (the a/b/c constant)."""
    if y_max <= 0.0:
        return (y_max - y_min) * (2.0 + y_max + y_min)
    if y_min >= 0.0:
        return (y_max - y_min) * (2.0 - y_max - y_min)
    return 2.0 * (y_max - y_min) - (y_max * y_max + y_min * y_min)


def _narrow_segment(e: float, y0: float, a: float, b: float):
    """Gauss-Legendre integrals of pdf*g and pdf*g^2 over [a, b] for
    g = e/(y0+y); [a, b] must not straddle the pdf kink at 0."""
    half, mid = 0.5 * (b - a), 0.5 * (b + a)
    y = mid + half * _GL_NODES
    w = half * _GL_WEIGHTS * triangular_pdf(y)
    g = e / (y0 + y)
    return float((w * g).sum()), float((w * g * g).sum())


def _segment_integrals(y0: float, a: float, b: float):
    """(I1, I2) = integrals of pdf/(y0+y) and pdf/(y0+y)^2 over [a, b],
    where pdf = 1 - |y| and [a, b] lies in a single sign region.

    The naive antiderivative differences cancel catastrophically for
    narrow intervals far from zero; each expression below is a sum of
    non-negative terms.
    """
    w = b - a
    lo, hi = y0 + a, y0 + b
    u = w / lo
    log1pu = math.log1p(u)
    if b <= 0.0:                       # pdf = 1 + y
        i1 = (1.0 - y0) * (log1pu - u) + w * (1.0 + a) / lo
        i2 = w * (1.0 + b) / (lo * hi) + (log1pu - u)
    else:                              # pdf = 1 - y
        i1 = (1.0 + y0) * (log1pu - u) + w * (1.0 - a) / lo
        i2 = (1.0 - b) * w / (hi * lo) + (u - log1pu)
    return i1, i2


def _moments(e: float, y0: float, y_min: float, y_max: float):
    """Closed-form conditional moments of the true energy density."""
    if y0 + y_min <= 0.0:
        raise DomainError("SOC change too small for the conditional moments")
    if y_max - y_min <= 0.0:
        v = e / (y0 + 0.5 * (y_min + y_max))
        return v, v * v
    pieces = [(y_min, y_max)]
    if y_min < 0.0 < y_max:            # split at the pdf kink
        pieces = [(y_min, 0.0), (0.0, y_max)]
    narrow = (y_max - y_min) < _NARROW_WIDTH
    i1 = i2 = 0.0
    for a, b in pieces:
        if b <= a:
            continue
        p1, p2 = (_narrow_segment(e, y0, a, b) if narrow
                  else _segment_integrals(y0, a, b))
        i1 += p1
        i2 += p2
    norm = 0.5 * _normalizer(y_min, y_max)   # triangular mass on the interval
    if narrow:
        return i1 / norm, i2 / norm
    return e * i1 / norm, e * e * i2 / norm


def expected_density(segment: ChargingSegment, bounds: QuantBounds) -> float:
    """Conditionally unbiased energy density of the segment, kWh/%."""
    return _moments(segment.delta_energy_kwh, float(bounds.y0),
                    bounds.y_min, bounds.y_max)[0]


def expected_density_sq(segment: ChargingSegment, bounds: QuantBounds) -> float:
    """Conditional second moment of the segment's energy density."""
    return _moments(segment.delta_energy_kwh, float(bounds.y0),
                    bounds.y_min, bounds.y_max)[1]


def sigma_quant(segment: ChargingSegment, bounds: QuantBounds) -> float:
    """Std of the energy density due to SOC quantization alone."""
    m1, m2 = _moments(segment.delta_energy_kwh, float(bounds.y0),
                      bounds.y_min, bounds.y_max)
    var = m2 - m1 * m1
    if var < -1e-12 * m2:
        raise DataInconsistencyError(
            f"segment {segment.key}: negative quantization variance {var}")
    return math.sqrt(max(var, 0.0))


def sample_conditional(bounds: QuantBounds, n: int, rng) -> np.ndarray:
    """Draw quantization errors from the conditional triangular density
    (rejection sampling; used by verification code)."""
    out = np.empty(0)
    span = bounds.y_max - bounds.y_min
    if span <= 0:
        return np.full(n, bounds.y_min)
    peak = triangular_pdf(np.array([bounds.y_min, 0.0, bounds.y_max]))
    fmax = float(peak.max())
    while out.size < n:
        y = rng.uniform(bounds.y_min, bounds.y_max, size=2 * n)
        u = rng.uniform(0.0, fmax, size=2 * n)
        out = np.concatenate([out, y[u < triangular_pdf(y)]])
    return out[:n]


def estimate_segment(segment: ChargingSegment, cfg: ModelConfig) -> DensityEstimate:
    """Full density estimate of one segment with its uncertainty budget.

    Combines the quantization std, the repeatability std (shrinking with
    the square root of the SOC change, since the density averages that
    many per-percent increments) and the relative efficiency-correction
    std into the total std of the corrected expectation.
    """
    bounds = quant_bounds(segment)
    m1, m2 = _moments(segment.delta_energy_kwh, float(bounds.y0),
                      bounds.y_min, bounds.y_max)
    var = max(m2 - m1 * m1, 0.0)
    s_quant = math.sqrt(var)
    s_repeat = cfg.bped_rel_repeat * m1 / math.sqrt(segment.delta_soc_pct)
    expected = cfg.eta_fixed * m1
    s_total = expected * math.sqrt(
        cfg.sigma_r_cv ** 2 + (s_quant ** 2 + s_repeat ** 2) / (m1 * m1))
    return DensityEstimate(
        expected_e_d=expected,
        expected_e_d_sq=m2,
        sigma_quant=s_quant,
        sigma_repeat=s_repeat,
        sigma_cv=cfg.sigma_r_cv,
        sigma_total=s_total,
        segment=segment,
    )
