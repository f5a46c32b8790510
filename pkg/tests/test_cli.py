"""Command-line driver: happy path, exit codes, artifact shape."""
import json

import pytest

from chargeaudit.cli import EXIT_OK, EXIT_USAGE, main


def _simulate(tmp_path, seed=11):
    out = tmp_path / "data"
    rc = main(["simulate", "--fcs", "12", "--ev", "40", "--orders", "150",
               "--seed", str(seed), "--out", str(out)])
    assert rc == EXIT_OK
    return out


def test_simulate_writes_dataset(tmp_path, capsys):
    out = _simulate(tmp_path)
    assert (out / "orders.csv").exists()
    assert (out / "ground_truth.csv").exists()
    assert "simulated 150 orders" in capsys.readouterr().out


def test_estimate_and_validate_happy_path(tmp_path, capsys):
    data = _simulate(tmp_path)
    est = tmp_path / "est"
    rc = main(["estimate", "--input", str(data / "orders.csv"),
               "--out", str(est)])
    assert rc == EXIT_OK
    for name in ("verdicts.json", "verdicts.csv", "rejects.csv",
                 "exclusions.csv", "quarantined_orders.csv"):
        assert (est / name).exists()
    payload = json.loads((est / "verdicts.json").read_text())
    assert "verdicts" in payload and "n_reference_clusters" in payload

    val = tmp_path / "val"
    rc = main(["validate", "--input", str(data / "orders.csv"),
               "--ground-truth", str(data / "ground_truth.csv"),
               "--out", str(val)])
    assert rc == EXIT_OK
    report = json.loads((val / "validation.json").read_text())
    assert report["n_fcs_total"] == 12
    assert "accuracy" in capsys.readouterr().out


def test_estimate_missing_input_is_usage_error(tmp_path):
    rc = main(["estimate", "--input", str(tmp_path / "nope.csv"),
               "--out", str(tmp_path / "o")])
    assert rc == EXIT_USAGE


def test_validate_missing_ground_truth_is_usage_error(tmp_path):
    data = _simulate(tmp_path)
    rc = main(["validate", "--input", str(data / "orders.csv"),
               "--ground-truth", str(tmp_path / "nope.csv"),
               "--out", str(tmp_path / "v")])
    assert rc == EXIT_USAGE


def test_bad_scenario_config_is_usage_error(tmp_path):
    cfg = tmp_path / "scn.txt"
    cfg.write_text("no_such_knob = 3\n")
    rc = main(["simulate", "--config", str(cfg),
               "--out", str(tmp_path / "d")])
    assert rc == EXIT_USAGE


def test_scenario_config_file_applies(tmp_path, capsys):
    cfg = tmp_path / "scn.txt"
    cfg.write_text("n_fcs = 7\nn_ev = 20\nn_orders = 60\nseed = 2\n")
    out = tmp_path / "d"
    rc = main(["simulate", "--config", str(cfg), "--out", str(out)])
    assert rc == EXIT_OK
    assert "7 stations" in capsys.readouterr().out


def test_model_config_file_applies(tmp_path):
    data = _simulate(tmp_path)
    mc = tmp_path / "model.txt"
    mc.write_text("acceptable_gamma_t = 0.05\n")
    rc = main(["estimate", "--input", str(data / "orders.csv"),
               "--config", str(mc), "--out", str(tmp_path / "e")])
    assert rc == EXIT_OK
