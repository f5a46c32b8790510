"""Core domain types and the basic error algebra."""
import json

import pytest
from hypothesis import given, strategies as st

from chargeaudit.errors import DomainError
from chargeaudit.model import (ChargingOrder, ChargingPoint, ModelConfig,
                               QuantBounds, StationVerdict, chain_error,
                               energy_density, relative_meter_error,
                               verdicts_to_json)


def test_energy_density_basic():
    assert energy_density(20.0, 50) == pytest.approx(0.4)


@pytest.mark.parametrize("e, s", [(20.0, 0), (0.0, 50), (-1.0, 50)])
def test_energy_density_domain(e, s):
    with pytest.raises(DomainError):
        energy_density(e, s)


def test_relative_meter_error_sign():
    # station B metering high shows a larger density for the same EV
    assert relative_meter_error(0.42, 0.40) == pytest.approx(0.05)
    assert relative_meter_error(0.38, 0.40) == pytest.approx(-0.05)
    with pytest.raises(DomainError):
        relative_meter_error(0.4, 0.0)


@given(gamma_a=st.floats(-0.1, 0.1), gamma_b=st.floats(-0.1, 0.1),
       e_d=st.floats(0.2, 0.5))
def test_chain_error_recovers_next_station(gamma_a, gamma_b, e_d):
    """With consistent inputs, one chain hop is algebraically exact:
    gamma_b = rel(B vs A) + (E_dB/E_dA) * gamma_a."""
    e_da = e_d * (1.0 + gamma_a)
    e_db = e_d * (1.0 + gamma_b)
    rel = relative_meter_error(e_db, e_da)
    assert chain_error(rel, e_db, e_da, gamma_a) == pytest.approx(
        gamma_b, abs=1e-12)


def test_charging_order_needs_two_points():
    p = ChargingPoint(0.0, 0.0, 10, 42.0, 400.0, 29.0)
    with pytest.raises(DomainError):
        ChargingOrder("O", "E", "F", (p,))


def test_quant_bounds_degenerate_flag():
    b = QuantBounds(e_d_min=0.4, e_d_max=0.4, y_min=0.1, y_max=0.1, y0=50)
    assert b.degenerate
    b2 = QuantBounds(e_d_min=0.39, e_d_max=0.41, y_min=-0.4, y_max=0.4, y0=50)
    assert not b2.degenerate


def test_model_config_validation():
    with pytest.raises(DomainError):
        ModelConfig(acceptable_gamma_t=0.0)
    with pytest.raises(DomainError):
        ModelConfig(temp_window_c=(40.0, 20.0))


def test_model_config_dict_roundtrip():
    cfg = ModelConfig(acceptable_gamma_t=0.03, min_rcs_fcs_count=4)
    again = ModelConfig.from_dict(cfg.to_dict())
    assert again == cfg


def test_model_config_from_file(tmp_path):
    p = tmp_path / "cfg.txt"
    p.write_text("acceptable_gamma_t = 0.03  # wider band\n"
                 "min_rcs_fcs_count = 4\n"
                 "temp_window_c = 15, 45\n")
    cfg = ModelConfig.from_file(p)
    assert cfg.acceptable_gamma_t == 0.03
    assert cfg.min_rcs_fcs_count == 4
    assert cfg.temp_window_c == (15.0, 45.0)


def test_model_config_from_file_rejects_unknown_key(tmp_path):
    p = tmp_path / "cfg.txt"
    p.write_text("no_such_knob = 1\n")
    with pytest.raises(DomainError):
        ModelConfig.from_file(p)


def test_station_verdict_roundtrip():
    v = StationVerdict(fcs_id="F", gamma=-0.017, sigma_gamma=0.011,
                       interval=(-0.028, -0.006), p_acceptable=0.636,
                       classification="Acceptable", provenance="RCS-direct")
    again = StationVerdict.from_dict(v.to_dict())
    assert again.fcs_id == v.fcs_id
    assert again.gamma == v.gamma
    assert again.classification == v.classification


def test_verdicts_to_json_is_sorted_and_parseable():
    v = StationVerdict("F", 0.0, 0.01, (-0.01, 0.01), 1.0,
                       "Acceptable", "RCS-direct")
    payload = json.loads(verdicts_to_json([v], {"note": "x"}))
    assert payload["note"] == "x"
    assert payload["verdicts"][0]["fcs_id"] == "F"
