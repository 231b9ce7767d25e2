import csv
import json
import subprocess
import sys

import pytest

from figtool.cli import main as cli_main
from figtool.render import FIGURE_KINDS, FigureSpec, SchemaError, render

ALGOS = ["proposed", "gale-shapley", "max-min", "nearby", "computing"]
HEADER = [
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


def write_metrics(path, algorithms=ALGOS, values=(40, 60, 80), seeds=(0, 1, 2)):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HEADER)
        for value in values:
            for seed in seeds:
                for i, algo in enumerate(algorithms):
                    delay = 10.0 + value * (1 + 0.1 * i) + seed
                    writer.writerow(
                        [algo, value, seed, delay, delay / value, 20 + i, (20 + i) / value, 0, 3, 0.5, "ok"]
                    )
    return path


def write_convergence(path, values=(60, 80), seeds=(0, 1)):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sweep_value", "seed", "iteration", "total_delay_s"])
        for value in values:
            for seed in seeds:
                for it in range(1, 6):
                    writer.writerow([value, seed, it, 100.0 + value - 10 * it + seed])
    return path


@pytest.fixture
def metrics_csv(tmp_path):
    return write_metrics(tmp_path / "metrics.csv")


@pytest.fixture
def convergence_csv(tmp_path):
    return write_convergence(tmp_path / "convergence.csv")


def test_all_kinds_render(tmp_path, metrics_csv, convergence_csv):
    for kind in FIGURE_KINDS:
        source = convergence_csv if kind == "convergence" else metrics_csv
        out = tmp_path / f"{kind}.svg"
        render(FigureSpec(input_csv=str(source), kind=kind, output_path=str(out)))
        assert out.exists() and out.stat().st_size > 0


def test_delay_vs_n_one_series_per_algorithm(tmp_path, metrics_csv):
    out = tmp_path / "delay.svg"
    fig = render(FigureSpec(input_csv=str(metrics_csv), kind="delay_vs_n", output_path=str(out)))
    total_axes = fig.axes[0]
    labels = [line.get_label() for line in total_axes.containers]
    assert labels == ALGOS  # fixed legend order, proposed first


def test_single_algorithm_single_series(tmp_path):
    source = write_metrics(tmp_path / "one.csv", algorithms=["proposed"])
    fig = render(FigureSpec(input_csv=str(source), kind="delay_vs_m", output_path=str(tmp_path / "m.svg")))
    assert len(fig.axes[0].containers) == 1


def test_missing_column_names_it(tmp_path):
    bad = tmp_path / "bad.csv"
    with open(bad, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["algorithm", "sweep_value", "seed"])
        writer.writerow(["proposed", 80, 0])
    with pytest.raises(SchemaError, match="total_delay_s"):
        render(FigureSpec(input_csv=str(bad), kind="delay_vs_n", output_path=str(tmp_path / "x.svg")))


def test_unknown_kind_rejected(tmp_path, metrics_csv):
    with pytest.raises(ValueError):
        FigureSpec(input_csv=str(metrics_csv), kind="pie", output_path=str(tmp_path / "x.svg"))


def test_rendering_is_idempotent(tmp_path, metrics_csv):
    out = tmp_path / "fig.svg"
    render(FigureSpec(input_csv=str(metrics_csv), kind="delay_vs_m", output_path=str(out)))
    first = out.read_bytes()
    render(FigureSpec(input_csv=str(metrics_csv), kind="delay_vs_m", output_path=str(out)))
    assert out.read_bytes() == first


def test_error_rows_and_non_finite_values_skipped(tmp_path):
    path = tmp_path / "mixed.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HEADER)
        writer.writerow(["proposed", 80, 0, 100.0, 1.25, 20, 0.25, 0, 3, 0.5, "ok"])
        writer.writerow(["proposed", 80, 1, "nan", "nan", "nan", "nan", -1, -1, 0.0, "error:Boom:x"])
        writer.writerow(["nearby", 80, 0, "inf", "inf", 30, 0.375, 0, 1, 0.5, "ok"])
    fig = render(FigureSpec(input_csv=str(path), kind="delay_vs_m", output_path=str(tmp_path / "y.svg")))
    labels = [c.get_label() for c in fig.axes[0].containers]
    assert labels == ["proposed"]  # nearby had no finite delay samples


def test_cli_roundtrip(tmp_path, metrics_csv, capsys):
    out = tmp_path / "cli.svg"
    assert cli_main(["--in", str(metrics_csv), "--kind", "delay_vs_n", "--out", str(out)]) == 0
    assert json.loads(capsys.readouterr().out)["status"] == "ok"
    assert out.exists()

    bad = tmp_path / "missing.csv"
    code = cli_main(["--in", str(bad), "--kind", "delay_vs_n", "--out", str(out)])
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["status"] == "error"


def test_cli_subprocess(tmp_path, metrics_csv):
    out = tmp_path / "sub.png"
    proc = subprocess.run(
        [sys.executable, "-m", "figtool.cli", "--in", str(metrics_csv), "--kind", "power_vs_n", "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
