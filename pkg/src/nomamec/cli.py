"""Command-line front end: `sim run`, `sim sweep`, `sim validate`."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from nomamec.harness import ALGORITHM_ORDER, SWEEP_PARAMETERS, ExperimentConfig, run_experiment
from nomamec.scenario import ConfigError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sim", description="NOMA multi-BS edge offloading experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the experiment described by a config file")
    run.add_argument("--config", required=True, help="YAML config file")
    run.add_argument("--out", default=None, help="output directory (overrides config)")
    run.add_argument("--workers", type=int, default=None, help="parallel worker count")
    run.add_argument("--dump", action="store_true", help="write one solution JSON per cell")
    run.add_argument("--algo", choices=ALGORITHM_ORDER, default=None, help="run a single algorithm")

    sweep = sub.add_parser("sweep", help="run with a sweep overriding the config")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--param", required=True, choices=SWEEP_PARAMETERS)
    sweep.add_argument("--values", required=True, help="comma-separated sweep values")
    sweep.add_argument("--out", default=None)
    sweep.add_argument("--workers", type=int, default=None)
    sweep.add_argument("--dump", action="store_true")
    sweep.add_argument("--algo", choices=ALGORITHM_ORDER, default=None)

    val = sub.add_parser("validate", help="check a config file and report its shape")
    val.add_argument("--config", required=True)
    return parser


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_file(args.config)
    overrides = {}
    if getattr(args, "out", None):
        overrides["output_dir"] = args.out
    if getattr(args, "workers", None):
        overrides["workers"] = args.workers
    if getattr(args, "dump", False):
        overrides["dump_solutions"] = True
    if getattr(args, "algo", None):
        overrides["algorithms"] = (args.algo,)
    if getattr(args, "param", None):
        overrides["sweep_parameter"] = args.param
        overrides["sweep_values"] = tuple(float(v) for v in args.values.split(","))
    return replace(config, **overrides) if overrides else config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        if args.command == "validate":
            print(
                json.dumps(
                    {
                        "status": "ok",
                        "algorithms": list(config.algorithms),
                        "sweep_parameter": config.sweep_parameter,
                        "sweep_values": list(config.sweep_values),
                        "n_seeds": len(config.seeds),
                        "cells": len(config.sweep_values) * len(config.seeds) * len(config.algorithms),
                        "output_dir": config.output_dir,
                    }
                )
            )
            return 0
        table = run_experiment(config)
        failures = [r for r in table.rows if r.status != "ok"]
        print(
            json.dumps(
                {
                    "status": "ok" if not failures else "partial",
                    "rows": len(table.rows),
                    "failures": len(failures),
                    "output_dir": config.output_dir,
                }
            )
        )
        return 0 if not failures else 1
    except (ConfigError, OSError, ValueError) as exc:
        print(json.dumps({"status": "error", "kind": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
