"""SOC quantization model: triangular residual law, density bounds and
closed-form conditional moments (checked against quadrature and
Monte Carlo oracles)."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from chargeaudit import soc_quant
from chargeaudit.errors import DataInconsistencyError, DomainError
from chargeaudit.model import ChargingSegment, ModelConfig

from conftest import make_segment


# ---------------------------------------------------------------- triangular
def test_triangular_pdf_normalizes_to_one():
    val, err = integrate.quad(soc_quant.triangular_pdf, -1.0, 1.0,
                              points=[0.0])
    assert abs(val - 1.0) < 1e-12


def test_triangular_pdf_shape():
    assert soc_quant.triangular_pdf(0.0) == 1.0
    assert soc_quant.triangular_pdf(0.5) == 0.5
    assert soc_quant.triangular_pdf(-0.5) == 0.5
    assert soc_quant.triangular_pdf(1.5) == 0.0


def test_quant_error_naive():
    assert soc_quant.quant_error_naive(0.2, 0.7, 10, 60) == pytest.approx(0.01)
    with pytest.raises(DomainError):
        soc_quant.quant_error_naive(1.2, 0.5, 10, 60)
    with pytest.raises(DomainError):
        soc_quant.quant_error_naive(0.2, 0.5, 60, 60)


# ------------------------------------------------------------------- bounds
def test_quant_bounds_hand_example():
    # two informative points: (dS=1, dE=0.5) and (dS=3, dE=1.2)
    seg = ChargingSegment(
        ev_id="E", fcs_id="F", order_id="O", start_ts=0.0,
        delta_energy_kwh=1.2, delta_soc_pct=3, start_soc_pct=10,
        end_soc_pct=13, mean_current_a=42.0, peak_to_peak_current_a=0.0,
        mean_temp_c=29.0, soc_series=np.array([0, 1, 3]),
        energy_series=np.array([0.0, 0.5, 1.2]), key="O:0")
    b = soc_quant.quant_bounds(seg)
    # e_d_min = max(0.5/2, 1.2/4); e_d_max = 1.2/2
    assert b.e_d_min == pytest.approx(max(0.25, 0.3))
    assert b.e_d_max == pytest.approx(0.6)
    # y bounds are the same constraint in residual space
    assert 1.2 / (3 + b.y_max) == pytest.approx(b.e_d_min)
    assert 1.2 / (3 + b.y_min) == pytest.approx(b.e_d_max)


def test_quant_bounds_empty_interval_raises():
    seg = ChargingSegment(
        ev_id="E", fcs_id="F", order_id="O", start_ts=0.0,
        delta_energy_kwh=10.5, delta_soc_pct=4, start_soc_pct=10,
        end_soc_pct=14, mean_current_a=42.0, peak_to_peak_current_a=0.0,
        mean_temp_c=29.0, soc_series=np.array([0, 1, 4]),
        energy_series=np.array([0.0, 10.0, 10.5]), key="O:0")
    with pytest.raises(DataInconsistencyError):
        soc_quant.quant_bounds(seg)


@settings(max_examples=200, deadline=None)
@given(e_d=st.floats(0.25, 0.45), s0=st.floats(2.0, 40.0),
       delta=st.floats(20.0, 58.0), n=st.integers(5, 60))
def test_bounds_always_contain_truth(e_d, s0, delta, n):
    """Floor quantization makes the feasible interval a hard constraint."""
    seg, truth = make_segment(e_d, s0, delta, n_points=n)
    b = soc_quant.quant_bounds(seg)
    assert b.e_d_min <= truth <= b.e_d_max
    assert -1.0 <= b.y_min <= b.y_max <= 1.0


# ------------------------------------------------------------------ moments
def _quad_moments(e, y0, a, b):
    pts = [0.0] if a < 0.0 < b else []
    f = lambda y: 1.0 - abs(y)
    kw = dict(epsabs=1e-15, epsrel=1e-13, points=pts, limit=200)
    den = integrate.quad(f, a, b, **kw)[0]
    q1 = integrate.quad(lambda y: f(y) * e / (y0 + y), a, b, **kw)[0] / den
    q2 = integrate.quad(lambda y: f(y) * (e / (y0 + y)) ** 2, a, b,
                        **kw)[0] / den
    return q1, q2


@pytest.mark.parametrize("case", ["neg", "pos", "straddle", "narrow"])
def test_moments_match_quadrature(case, rng):
    worst = 0.0
    for _ in range(100):
        y0 = float(rng.integers(2, 96))
        if case == "neg":
            a, b = sorted(rng.uniform(-0.99, 0.0, 2))
        elif case == "pos":
            a, b = sorted(rng.uniform(0.0, 0.99, 2))
        elif case == "straddle":
            a = float(rng.uniform(-0.99, -1e-3))
            b = float(rng.uniform(1e-3, 0.99))
        else:
            a = float(rng.uniform(-0.9, 0.9))
            b = a + float(rng.uniform(1e-9, 9e-4))
        e = float(rng.uniform(5.0, 40.0))
        m1, m2 = soc_quant._moments(e, y0, a, b)
        q1, q2 = _quad_moments(e, y0, a, b)
        worst = max(worst, abs(m1 - q1) / q1, abs(m2 - q2) / q2)
    assert worst < 1e-9


def test_moments_against_monte_carlo(rng):
    seg, _ = make_segment(0.4, 10.3, 41.2, n_points=12)
    b = soc_quant.quant_bounds(seg)
    y = soc_quant.sample_conditional(b, 400_000, rng)
    g = seg.delta_energy_kwh / (b.y0 + y)
    m1 = soc_quant.expected_density(seg, b)
    m2 = soc_quant.expected_density_sq(seg, b)
    assert m1 == pytest.approx(float(g.mean()), rel=3e-4)
    assert m2 == pytest.approx(float((g * g).mean()), rel=6e-4)
    assert soc_quant.sigma_quant(seg, b) == pytest.approx(
        float(g.std()), rel=0.01)


def test_sigma_quant_near_triangular_limit():
    """With a long constant-rate session the bounds stay at the full
    (-1, 1) support, so the quantization std approaches the raw
    triangular law: sigma ~ e_d / (sqrt(6) * dSOC)."""
    seg, truth = make_segment(0.4, 10.41, 60.0, n_points=61)
    b = soc_quant.quant_bounds(seg)
    s = soc_quant.sigma_quant(seg, b)
    assert s == pytest.approx(truth / math.sqrt(6.0) / 60.0, rel=0.05)


def test_sample_conditional_degenerate():
    from chargeaudit.model import QuantBounds
    bb = QuantBounds(e_d_min=0.4, e_d_max=0.4, y_min=0.3, y_max=0.3, y0=50)
    out = soc_quant.sample_conditional(bb, 5, np.random.default_rng(0))
    assert np.all(out == 0.3)


# --------------------------------------------------------- estimate_segment
def test_estimate_segment_budget():
    cfg = ModelConfig()
    seg, _ = make_segment(0.4, 10.3, 41.2, n_points=12)
    est = soc_quant.estimate_segment(seg, cfg)
    b = soc_quant.quant_bounds(seg)
    m1 = soc_quant.expected_density(seg, b)
    assert est.expected_e_d == pytest.approx(cfg.eta_fixed * m1)
    assert est.sigma_repeat == pytest.approx(
        cfg.bped_rel_repeat * m1 / math.sqrt(seg.delta_soc_pct))
    want_total = est.expected_e_d * math.sqrt(
        cfg.sigma_r_cv ** 2
        + (est.sigma_quant ** 2 + est.sigma_repeat ** 2) / m1 ** 2)
    assert est.sigma_total == pytest.approx(want_total)
    assert est.segment is seg


def test_estimate_segment_more_soc_means_less_relative_noise():
    cfg = ModelConfig()
    short, _ = make_segment(0.4, 10.3, 25.0, n_points=26)
    long, _ = make_segment(0.4, 10.3, 80.0, n_points=81)
    e_short = soc_quant.estimate_segment(short, cfg)
    e_long = soc_quant.estimate_segment(long, cfg)
    assert (e_long.sigma_total / e_long.expected_e_d
            < e_short.sigma_total / e_short.expected_e_d)
