"""Batch command-line driver: simulate fleets, estimate station errors,
validate against ground truth.

Exit codes: 0 success (possibly with warnings), 2 usage/data errors,
3 internal invariant violation.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .errors import ChargeAuditError, SchemaError
from .ingestion import parse_orders
from .model import ModelConfig, verdicts_to_json
from .preprocess import write_exclusion_log
from .estimator import run_pipeline
from .simulator import (SimScenario, read_ground_truth_csv, score_verdicts,
                        simulate_fleet, write_ground_truth_csv,
                        write_orders_csv)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INTERNAL = 3


def _load_config(path: str | None) -> ModelConfig:
    if path is None:
        return ModelConfig()
    return ModelConfig.from_file(path)


def _scenario_from_args(args) -> SimScenario:
    scn = SimScenario()
    if args.config:
        values: dict = {}
        fields = {f.name: f for f in dataclasses.fields(SimScenario)}
        for lineno, raw in enumerate(
                Path(args.config).read_text().splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in fields:
                raise ChargeAuditError(
                    f"{args.config}:{lineno}: unknown scenario key {key!r}")
            ftype = fields[key].type
            if "int" in str(ftype):
                values[key] = int(val)
            elif "float" in str(ftype):
                values[key] = float(val)
            elif "tuple" in str(ftype):
                values[key] = tuple(float(x) for x in val.split(","))
            else:
                values[key] = val
        scn = SimScenario(**values)
    # explicit flags override the config file
    overrides = {"n_fcs": args.fcs, "n_ev": args.ev, "n_orders": args.orders,
                 "seed": args.seed}
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if overrides:
        scn = dataclasses.replace(scn, **overrides)
    return scn


def cmd_simulate(args) -> int:
    scn = _scenario_from_args(args)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        fleet = simulate_fleet(scn)
        write_orders_csv(fleet.orders, out / "orders.csv")
        write_ground_truth_csv(fleet.gamma_true, out / "ground_truth.csv")
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE
    n_points = sum(len(o.points) for o in fleet.orders)
    print(f"simulated {len(fleet.orders)} orders, {scn.n_fcs} stations, "
          f"{scn.n_ev} EVs, {n_points} samples (seed {scn.seed})")
    print(f"wrote {out / 'orders.csv'} and {out / 'ground_truth.csv'}")
    return EXIT_OK


def _estimate(args):
    cfg = _load_config(args.config)
    parsed = parse_orders(args.input)
    result = run_pipeline(parsed.orders, cfg)
    return cfg, parsed, result


def cmd_estimate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg, parsed, result = _estimate(args)

    parsed.write_rejects(out / "rejects.csv")
    write_exclusion_log(result.exclusion_log, out / "exclusions.csv")
    with open(out / "quarantined_orders.csv", "w", encoding="utf-8") as fh:
        fh.write("order_id,reason\n")
        for order_id, reason in parsed.quarantined_orders:
            fh.write(f"{order_id},{reason}\n")

    extra = {
        "warnings": result.warnings,
        "unestimated_fcs": result.unestimated_fcs,
        "n_reference_clusters": len(result.clusters),
        "n_chains": len(result.chains),
        "bias_model_note": "reference-anchor bias uses the untruncated "
                           "population std of the member-error mean",
    }
    (out / "verdicts.json").write_text(
        verdicts_to_json(result.verdicts, extra) + "\n")
    with open(out / "verdicts.csv", "w", encoding="utf-8") as fh:
        fh.write("fcs_id,gamma_pct,sigma_pct,p_acceptable_pct,"
                 "classification,provenance\n")
        for v in result.verdicts:
            fh.write(f"{v.fcs_id},{100 * v.gamma:.4f},"
                     f"{100 * v.sigma_gamma:.4f},"
                     f"{100 * v.p_acceptable:.1f},"
                     f"{v.classification},{v.provenance}\n")

    print(f"estimated {len(result.verdicts)} of "
          f"{len(result.verdicts) + len(result.unestimated_fcs)} stations "
          f"({len(result.clusters)} reference clusters, "
          f"{len(result.chains)} chains)")
    for w in result.warnings:
        print(f"warning: {w}")
    return EXIT_OK


def cmd_validate(args) -> int:
    if not Path(args.ground_truth).exists():
        print(f"error: ground truth file not found: {args.ground_truth}",
              file=sys.stderr)
        return EXIT_USAGE
    cfg, parsed, result = _estimate(args)
    gamma_true = read_ground_truth_csv(args.ground_truth)
    report = score_verdicts(result, gamma_true, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "validation.json").write_text(report.to_json() + "\n")
    print(f"accuracy {report.accuracy_pct:.1f}% over "
          f"{report.n_fcs_estimated - report.n_unreliable} valid verdicts "
          f"({report.n_unreliable} unreliable excluded); "
          f"coverage {report.coverage_pct:.1f}%")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chargeaudit",
        description="Estimate charging-station meter errors from fleet "
                    "charging records.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic fleet")
    p_sim.add_argument("--fcs", type=int, default=None)
    p_sim.add_argument("--ev", type=int, default=None)
    p_sim.add_argument("--orders", type=int, default=None)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--config", default=None,
                       help="scenario config file (key = value)")
    p_sim.add_argument("--out", required=True)
    p_sim.set_defaults(func=cmd_simulate)

    p_est = sub.add_parser("estimate", help="estimate station errors")
    p_est.add_argument("--input", required=True, help="orders CSV")
    p_est.add_argument("--config", default=None,
                       help="model config file (key = value)")
    p_est.add_argument("--out", required=True)
    p_est.add_argument("--workers", type=int, default=1,
                       help="reserved; results are worker-count independent")
    p_est.set_defaults(func=cmd_estimate)

    p_val = sub.add_parser("validate", help="score against ground truth")
    p_val.add_argument("--input", required=True, help="orders CSV")
    p_val.add_argument("--ground-truth", required=True)
    p_val.add_argument("--config", default=None)
    p_val.add_argument("--out", required=True)
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, FileNotFoundError, ChargeAuditError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # invariant violations
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
