"""Command-line entry point: analytic, simulate, optimize and sweep."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .config import load_config
from .errors import AoiiError, ConfigError, StabilityError
from .experiments import load_experiment, rows_to_csv, run_sweep
from .pipeline import analytic_metrics, comparison_table, optimize, simulate, solve_result_to_dict

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MODEL = 3


def _plain(value):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats as null."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def to_json(data) -> str:
    return json.dumps(_plain(data), indent=2, allow_nan=False) + "\n"


def _table_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def cmd_analytic(args) -> str:
    cfg = load_config(args.config)
    _, flat = analytic_metrics(cfg)
    if args.format == "json":
        return to_json(flat)
    return _table_csv([{"metric": k, "value": v} for k, v in flat.items()])


def cmd_simulate(args) -> str:
    cfg = load_config(args.config)
    sim, metrics = simulate(cfg, seed=args.seed, packets=args.packets)
    if args.trace:
        sim.trace.write_csv(args.trace)
    table = comparison_table(cfg, metrics)
    if args.format == "json":
        return to_json({"report": sim.to_dict(), "simulated": metrics.to_dict(), "comparison": table})
    return _table_csv(table)


def cmd_optimize(args) -> str:
    cfg = load_config(args.config)
    result = solve_result_to_dict(optimize(cfg))
    if args.format == "json":
        return to_json(result)
    return _table_csv(result["trace"])


def cmd_sweep(args) -> str:
    spec = load_experiment(args.experiment)
    rows = run_sweep(spec)
    if args.format == "json":
        return to_json([row.__dict__ for row in rows])
    return rows_to_csv(rows)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=argparse.SUPPRESS, help="also write the result to this file")
    common.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="noma-aoii", description="AoII analysis of a NOMA semantic uplink")
    parser.add_argument("--out", default=None, help="also write the result to this file")
    parser.add_argument("--format", choices=("csv", "json"), default=None, help="output format")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", parents=[common], help="closed-form delays, AoI and AoII")
    p.add_argument("config")
    p.set_defaults(func=cmd_analytic, default_format="json")

    p = sub.add_parser("simulate", parents=[common], help="Monte-Carlo run plus comparison table")
    p.add_argument("config")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--packets", type=int, default=None)
    p.add_argument("--trace", default=None, help="write the per-packet trace CSV here")
    p.set_defaults(func=cmd_simulate, default_format="json")

    p = sub.add_parser("optimize", parents=[common], help="service rates and powers minimizing AoII")
    p.add_argument("config")
    p.set_defaults(func=cmd_optimize, default_format="json")

    p = sub.add_parser("sweep", parents=[common], help="run an experiment file")
    p.add_argument("experiment")
    p.set_defaults(func=cmd_sweep, default_format="csv")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.format is None:
        args.format = args.default_format
    try:
        text = args.func(args)
    except StabilityError as exc:
        print(f"error: unstable model: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except ConfigError as exc:
        print(f"error: configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AoiiError as exc:
        print(f"error: infeasible model: {exc}", file=sys.stderr)
        return EXIT_MODEL
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
