"""Render result figures from experiment CSVs.

Input files follow the simulator's metrics schema (algorithm, sweep_value,
seed, total_delay_s, avg_delay_s, total_power_w, avg_power_w, ...) or, for the
convergence kind, its convergence schema (sweep_value, seed, iteration,
total_delay_s).  Rendering is read-only over inputs and overwrites its output
idempotently.  Series carry +/- one standard deviation over seeds as error
bars, and the legend keeps a fixed order with the proposed scheme first.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "figtool"  # stable ids for idempotent output
import matplotlib.pyplot as plt
import numpy as np

# legend order pinned by the metrics schema: the proposed scheme leads
SERIES_ORDER = ["proposed", "gale-shapley", "max-min", "nearby", "computing"]

DEFAULT_STYLES = {
    "proposed": {"color": "#d62728", "marker": "o"},
    "gale-shapley": {"color": "#1f77b4", "marker": "s"},
    "max-min": {"color": "#2ca02c", "marker": "^"},
    "nearby": {"color": "#9467bd", "marker": "v"},
    "computing": {"color": "#8c564b", "marker": "D"},
}

FIGURE_KINDS = (
    "convergence",
    "delay_vs_n",
    "power_vs_n",
    "delay_power_vs_g",
    "delay_vs_m",
    "delay_vs_f",
)


class SchemaError(ValueError):
    """The input CSV does not carry the columns the figure kind needs."""


@dataclass
class FigureSpec:
    input_csv: str
    kind: str
    output_path: str
    styles: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; choose from {FIGURE_KINDS}")


def _read_rows(path, required: list[str]) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in required:
            if column not in header:
                raise SchemaError(f"missing column {column!r} in {path}")
        return [row for row in reader]


def _series(rows: list[dict], metric: str):
    """Per-algorithm sweep series: (values, means, stds) over seeds."""
    buckets: dict[str, dict[float, list[float]]] = {}
    for row in rows:
        if row.get("status", "ok") != "ok":
            continue
        value = float(row["sweep_value"])
        sample = float(row[metric])
        if not math.isfinite(sample):
            continue
        buckets.setdefault(row["algorithm"], {}).setdefault(value, []).append(sample)
    ordered = [a for a in SERIES_ORDER if a in buckets]
    ordered += sorted(set(buckets) - set(ordered))
    out = {}
    for algorithm in ordered:
        values = sorted(buckets[algorithm])
        means = np.array([np.mean(buckets[algorithm][v]) for v in values])
        stds = np.array([np.std(buckets[algorithm][v], ddof=1) if len(buckets[algorithm][v]) > 1 else 0.0 for v in values])
        out[algorithm] = (np.array(values), means, stds)
    return out


def _plot_metric(ax, rows, metric: str, styles: dict, xlabel: str, ylabel: str):
    for algorithm, (values, means, stds) in _series(rows, metric).items():
        style = {**DEFAULT_STYLES.get(algorithm, {}), **styles.get(algorithm, {})}
        ax.errorbar(values, means, yerr=stds, label=algorithm, capsize=3, **style)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    ax.legend()


def _render_convergence(spec: FigureSpec):
    rows = _read_rows(spec.input_csv, ["sweep_value", "seed", "iteration", "total_delay_s"])
    traces: dict[float, dict[int, list[float]]] = {}
    for row in rows:
        value = float(row["sweep_value"])
        traces.setdefault(value, {}).setdefault(int(row["iteration"]), []).append(
            float(row["total_delay_s"])
        )
    fig, ax = plt.subplots(figsize=(6, 4))
    for value in sorted(traces):
        iterations = sorted(traces[value])
        means = [np.mean(traces[value][i]) for i in iterations]
        ax.plot(iterations, means, marker="o", label=f"N = {value:g}")
    ax.set_xlabel("outer iteration")
    ax.set_ylabel("total delay (s)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    return fig


METRIC_HEADER = ["algorithm", "sweep_value", "seed", "total_delay_s", "avg_delay_s", "total_power_w", "avg_power_w"]


def _render_two_panel(spec: FigureSpec, metrics: tuple[str, str], labels: tuple[str, str], xlabel: str):
    rows = _read_rows(spec.input_csv, METRIC_HEADER)
    fig, axes = plt.subplots(1, 2, figsize=(11, 4))
    for ax, metric, label in zip(axes, metrics, labels):
        _plot_metric(ax, rows, metric, spec.styles, xlabel, label)
    fig.tight_layout()
    return fig


def _render_single(spec: FigureSpec, metric: str, ylabel: str, xlabel: str):
    rows = _read_rows(spec.input_csv, METRIC_HEADER)
    fig, ax = plt.subplots(figsize=(6, 4))
    _plot_metric(ax, rows, metric, spec.styles, xlabel, ylabel)
    fig.tight_layout()
    return fig


def render(spec: FigureSpec):
    """Render one figure and write it to the spec's output path.

    Returns the matplotlib figure for inspection; the file on disk is
    overwritten if it already exists.
    """
    if spec.kind == "convergence":
        fig = _render_convergence(spec)
    elif spec.kind == "delay_vs_n":
        fig = _render_two_panel(
            spec,
            ("total_delay_s", "avg_delay_s"),
            ("total delay (s)", "average delay (s)"),
            "number of devices",
        )
    elif spec.kind == "power_vs_n":
        fig = _render_two_panel(
            spec,
            ("total_power_w", "avg_power_w"),
            ("total power (W)", "average power (W)"),
            "number of devices",
        )
    elif spec.kind == "delay_power_vs_g":
        fig = _render_two_panel(
            spec,
            ("total_delay_s", "total_power_w"),
            ("total delay (s)", "total power (W)"),
            "number of subchannels",
        )
    elif spec.kind == "delay_vs_m":
        fig = _render_single(spec, "total_delay_s", "total delay (s)", "number of base stations")
    else:  # delay_vs_f
        fig = _render_single(spec, "total_delay_s", "total delay (s)", "MEC compute rate scale")
    metadata = None
    out = str(spec.output_path)
    if out.endswith(".svg"):
        metadata = {"Date": None}  # drop the embedded timestamp
    elif out.endswith(".pdf"):
        metadata = {"CreationDate": None}
    fig.savefig(spec.output_path, metadata=metadata)
    plt.close(fig)
    return fig
