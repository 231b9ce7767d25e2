"""Experiment orchestration: Monte Carlo sweeps, metric collection, CSV output.

Every algorithm in a cell shares the same generated scenario (paired seeds),
cells are independent jobs for the worker pool, and results are merged in
sorted key order so the output files do not depend on completion order.
"""

from __future__ import annotations

import csv
import math
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from nomamec.ao import AOConfig, alternating_optimize
from nomamec.baselines import BaselineKind, build_assignment
from nomamec.model import delay_report
from nomamec.power import mm_power_allocation
from nomamec.scenario import ConfigError, GenerationParams, generate_scenario

import yaml

ALGORITHM_ORDER = ["proposed", "gale-shapley", "max-min", "nearby", "computing"]
SWEEP_PARAMETERS = ("n_devices", "n_subchannels", "n_bs", "mec_rate_scale")

METRICS_HEADER = [
    "algorithm",
    "sweep_value",
    "seed",
    "total_delay_s",
    "avg_delay_s",
    "total_power_w",
    "avg_power_w",
    "deadline_violations",
    "outer_iterations",
    "wall_time_s",
    "status",
]

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ExperimentConfig:
    params: GenerationParams = GenerationParams()
    algorithms: tuple[str, ...] = tuple(ALGORITHM_ORDER)
    sweep_parameter: str = "n_devices"
    sweep_values: tuple[float, ...] = (40, 50, 60, 70, 80)
    seeds: tuple[int, ...] = tuple(range(20))
    output_dir: str = "results"
    dump_solutions: bool = False
    workers: int = 1
    ao: AOConfig = AOConfig()

    def __post_init__(self):
        if not self.sweep_values:
            raise ConfigError("sweep_values must be non-empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        if self.sweep_parameter not in SWEEP_PARAMETERS:
            raise ConfigError(f"unknown sweep parameter {self.sweep_parameter!r}")
        unknown = [a for a in self.algorithms if a not in ALGORITHM_ORDER]
        if unknown:
            raise ConfigError(f"unknown algorithms: {unknown}")

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
        if not isinstance(raw, dict):
            raise ConfigError(f"config file {path} must contain a key-value mapping")
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = dict(raw)
        kwargs = {}
        if "algorithms" in raw:
            kwargs["algorithms"] = tuple(raw.pop("algorithms"))
        if "sweep_parameter" in raw:
            kwargs["sweep_parameter"] = str(raw.pop("sweep_parameter"))
        if "sweep_values" in raw:
            kwargs["sweep_values"] = tuple(float(v) for v in raw.pop("sweep_values"))
        if "seeds" in raw:
            kwargs["seeds"] = tuple(int(s) for s in raw.pop("seeds"))
        elif "seed_count" in raw:
            base = int(raw.pop("base_seed", 0))
            kwargs["seeds"] = tuple(base + i for i in range(int(raw.pop("seed_count"))))
        if "base_seed" in raw and "seeds" in kwargs:
            raw.pop("base_seed")
        if "output_dir" in raw:
            kwargs["output_dir"] = str(raw.pop("output_dir"))
        if "workers" in raw:
            kwargs["workers"] = int(raw.pop("workers"))
        if "dump" in raw:
            kwargs["dump_solutions"] = bool(raw.pop("dump"))
        kwargs["params"] = GenerationParams.from_dict(raw)
        return cls(**kwargs)


@dataclass
class MetricsRow:
    algorithm: str
    sweep_value: float
    seed: int
    total_delay_s: float
    avg_delay_s: float
    total_power_w: float
    avg_power_w: float
    deadline_violations: int
    outer_iterations: int
    wall_time_s: float
    status: str = "ok"

    def sort_key(self):
        return (self.sweep_value, self.seed, ALGORITHM_ORDER.index(self.algorithm))


@dataclass
class MetricsTable:
    rows: list[MetricsRow] = field(default_factory=list)
    convergence: list[tuple] = field(default_factory=list)  # (value, seed, iter, delay)
    solutions: list[tuple] = field(default_factory=list)  # (algorithm, value, seed, dict)


def apply_sweep(params: GenerationParams, parameter: str, value: float) -> GenerationParams:
    if parameter == "n_devices":
        return replace(params, n_devices=int(value))
    if parameter == "n_subchannels":
        return replace(params, n_subchannels=int(value))
    if parameter == "n_bs":
        return replace(params, n_bs=int(value))
    if parameter == "mec_rate_scale":
        lo, hi = params.mec_rate_range
        return replace(params, mec_rate_range=(lo * value, hi * value))
    raise ConfigError(f"unknown sweep parameter {parameter!r}")


def solve_cell(algorithm: str, scenario, ao: AOConfig):
    """Run one algorithm on one scenario; returns (metrics dict, solution dict)."""
    start = time.perf_counter()
    if algorithm == "proposed":
        sol = alternating_optimize(scenario, ao)
        assignment, powers, report = sol.assignment, sol.powers, sol.delay_report
        outer = sol.outer_iterations
        extra = {"trace": [float(v) for v in sol.objective_trace]}
        dump = sol.to_dict()
    else:
        assignment = build_assignment(BaselineKind(algorithm), scenario)
        powers, _ = mm_power_allocation(assignment, scenario, eps=ao.mm_eps, t_max=ao.mm_t_max)
        report = delay_report(assignment, powers, scenario)
        outer = 1
        extra = {"trace": [report.total_delay_sum_s]}
        dump = {
            "assignment": [
                "local" if s is None else f"{s[0]}:{s[1]}"
                for s in (assignment.strategy(n) for n in range(scenario.n_devices))
            ],
            "powers_w": [float(p) for p in powers],
            "devices": report.to_csv_rows(),
        }
    n = scenario.n_devices
    metrics = {
        "total_delay_s": report.total_delay_sum_s,
        "avg_delay_s": report.total_delay_sum_s / n,
        "total_power_w": float(np.sum(powers)),
        "avg_power_w": float(np.sum(powers)) / n,
        "deadline_violations": int(np.sum(~report.deadline_met)),
        "outer_iterations": outer,
        "wall_time_s": time.perf_counter() - start,
    }
    return metrics, extra, dump


def _run_job(args):
    params, parameter, value, seed, algorithms, ao, dump_solutions = args
    cell_params = apply_sweep(params, parameter, value)
    scenario = generate_scenario(cell_params, seed)
    rows, convergence, dumps = [], [], []
    for algorithm in algorithms:
        try:
            metrics, extra, dump = solve_cell(algorithm, scenario, ao)
            rows.append(MetricsRow(algorithm=algorithm, sweep_value=value, seed=seed, **metrics))
            if algorithm == "proposed":
                for i, delay in enumerate(extra["trace"], start=1):
                    convergence.append((value, seed, i, delay))
            if dump_solutions:
                dumps.append((algorithm, value, seed, dump))
        except Exception as exc:  # recorded, never silently dropped
            rows.append(
                MetricsRow(
                    algorithm=algorithm,
                    sweep_value=value,
                    seed=seed,
                    total_delay_s=math.nan,
                    avg_delay_s=math.nan,
                    total_power_w=math.nan,
                    avg_power_w=math.nan,
                    deadline_violations=-1,
                    outer_iterations=-1,
                    wall_time_s=0.0,
                    status=f"error:{type(exc).__name__}:{exc}",
                )
            )
    return rows, convergence, dumps


def run_experiment(config: ExperimentConfig, write: bool = True) -> MetricsTable:
    """Execute the full sweep; optionally persist metrics/summary/convergence CSVs."""
    if write:
        os.makedirs(config.output_dir, exist_ok=True)
        probe = os.path.join(config.output_dir, ".write_probe")
        try:
            with open(probe, "w", encoding="utf-8") as fh:
                fh.write("ok")
            os.remove(probe)
        except OSError as exc:
            raise OSError(f"output directory {config.output_dir!r} is not writable: {exc}") from exc

    jobs = [
        (config.params, config.sweep_parameter, value, seed, config.algorithms, config.ao, config.dump_solutions)
        for value in config.sweep_values
        for seed in config.seeds
    ]
    table = MetricsTable()
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        results = [_run_job(job) for job in jobs]
    for rows, convergence, dumps in results:
        table.rows.extend(rows)
        table.convergence.extend(convergence)
        table.solutions.extend(dumps)
    table.rows.sort(key=MetricsRow.sort_key)
    table.convergence.sort()

    if write:
        write_metrics_csv(table, os.path.join(config.output_dir, "metrics.csv"))
        write_summary_csv(aggregate(table), os.path.join(config.output_dir, "summary.csv"))
        write_convergence_csv(table, os.path.join(config.output_dir, "convergence.csv"))
        if config.dump_solutions:
            import json

            for algorithm, value, seed, dump in table.solutions:
                name = f"solution_{algorithm}_{value:g}_{seed}.json"
                with open(os.path.join(config.output_dir, name), "w", encoding="utf-8") as fh:
                    json.dump(dump, fh, indent=2, sort_keys=True)
    return table


def write_metrics_csv(table: MetricsTable, path) -> None:
    # The fixed header row is the schema; SCHEMA_VERSION bumps on any change.
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_HEADER)
        for row in table.rows:
            writer.writerow(
                [
                    row.algorithm,
                    repr(float(row.sweep_value)),
                    row.seed,
                    repr(float(row.total_delay_s)),
                    repr(float(row.avg_delay_s)),
                    repr(float(row.total_power_w)),
                    repr(float(row.avg_power_w)),
                    row.deadline_violations,
                    row.outer_iterations,
                    f"{row.wall_time_s:.3f}",
                    row.status,
                ]
            )


def write_convergence_csv(table: MetricsTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sweep_value", "seed", "iteration", "total_delay_s"])
        for value, seed, iteration, delay in table.convergence:
            writer.writerow([repr(float(value)), seed, iteration, repr(float(delay))])


SUMMARY_METRICS = ("total_delay_s", "avg_delay_s", "total_power_w", "avg_power_w")


def aggregate(table: MetricsTable) -> list[dict]:
    """Mean/std/median of each metric over seeds per (algorithm, sweep value)."""
    groups: dict[tuple, list[MetricsRow]] = {}
    for row in table.rows:
        if row.status == "ok":
            groups.setdefault((row.algorithm, row.sweep_value), []).append(row)
    summary = []
    for (algorithm, value), rows in sorted(
        groups.items(), key=lambda kv: (kv[0][1], ALGORITHM_ORDER.index(kv[0][0]))
    ):
        entry = {"algorithm": algorithm, "sweep_value": value, "n_seeds": len(rows)}
        for metric in SUMMARY_METRICS:
            samples = [getattr(r, metric) for r in rows]
            entry[f"{metric}_mean"] = statistics.fmean(samples)
            entry[f"{metric}_std"] = statistics.stdev(samples) if len(samples) > 1 else 0.0
            entry[f"{metric}_median"] = statistics.median(samples)
        entry["deadline_violations_mean"] = statistics.fmean(r.deadline_violations for r in rows)
        entry["outer_iterations_median"] = statistics.median(r.outer_iterations for r in rows)
        summary.append(entry)
    return summary


def write_summary_csv(summary: list[dict], path) -> None:
    if not summary:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write("")
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(summary[0].keys()))
        writer.writeheader()
        for entry in summary:
            out = {
                k: (repr(float(v)) if isinstance(v, float) else v) for k, v in entry.items()
            }
            writer.writerow(out)
