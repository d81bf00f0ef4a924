"""Report rendering: delimited tables plus matplotlib figures next to them.

Every writer returns the list of paths it produced so callers can log them.
The Agg backend is forced; nothing here needs a display.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .attention import AttentionSimilarityReport
from .metrics import BASELINE_COLUMNS, CrossDomainGrid, EvalReport
from .training import BatchLogEntry


def _ensure_dir(out_dir: Path | str) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_eval_report(
    report: EvalReport, out_dir: Path | str, stem: str = "eval"
) -> list[Path]:
    out = _ensure_dir(out_dir)
    csv_path = out / f"{stem}.csv"
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scope", "metric", "value", "papers"])
        for metric, value in report.metrics.items():
            writer.writerow(["overall", metric, f"{value:.6f}", report.paper_count])
        for domain in sorted(report.per_domain):
            for metric, value in report.per_domain[domain].items():
                writer.writerow(
                    [domain, metric, f"{value:.6f}", report.domain_paper_counts[domain]]
                )

    png_path = out / f"{stem}.png"
    metrics = list(report.metrics)
    groups = ["overall"] + sorted(report.per_domain)
    fig, ax = plt.subplots(figsize=(1.6 + 1.2 * len(groups) * len(metrics) / 2, 3.6))
    width = 0.8 / max(1, len(metrics))
    for mi, metric in enumerate(metrics):
        values = [report.metrics[metric]] + [
            report.per_domain[d][metric] for d in sorted(report.per_domain)
        ]
        positions = [gi + mi * width for gi in range(len(groups))]
        ax.bar(positions, values, width=width, label=metric)
    ax.set_xticks([gi + 0.4 - width / 2 for gi in range(len(groups))])
    ax.set_xticklabels(groups, rotation=20, ha="right")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("score")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return [csv_path, png_path]


def write_cross_domain_report(
    grid: CrossDomainGrid, out_dir: Path | str, stem: str = "cross_eval"
) -> list[Path]:
    out = _ensure_dir(out_dir)
    columns = list(grid.train_domains) + list(BASELINE_COLUMNS)
    paths: list[Path] = []

    csv_path = out / f"{stem}.csv"
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "test_domain"] + columns)
        for metric in grid.metric_names:
            for test in grid.test_domains:
                row = [metric, test]
                for column in columns:
                    cell = grid.cells[test][column]
                    row.append("" if cell is None else f"{cell.metrics[metric]:.6f}")
                writer.writerow(row)
    paths.append(csv_path)

    for metric in grid.metric_names:
        matrix = []
        for test in grid.test_domains:
            matrix.append(
                [
                    (
                        float("nan")
                        if grid.cells[test][column] is None
                        else grid.cells[test][column].metrics[metric]
                    )
                    for column in columns
                ]
            )
        fig, ax = plt.subplots(
            figsize=(1.5 + 0.9 * len(columns), 1.5 + 0.7 * len(grid.test_domains))
        )
        image = ax.imshow(matrix, vmin=0.0, vmax=1.0, cmap="viridis")
        ax.set_xticks(range(len(columns)), columns, rotation=30, ha="right")
        ax.set_yticks(range(len(grid.test_domains)), grid.test_domains)
        ax.set_xlabel("scorer (training domain or baseline)")
        ax.set_ylabel("test domain")
        ax.set_title(metric)
        for i, row in enumerate(matrix):
            for j, value in enumerate(row):
                if value == value:
                    ax.text(
                        j, i, f"{value:.3f}", ha="center", va="center",
                        color="white" if value < 0.6 else "black", fontsize="small",
                    )
        fig.colorbar(image, ax=ax, shrink=0.8)
        fig.tight_layout()
        png_path = out / f"{stem}_{metric.replace('@', '_at_')}.png"
        fig.savefig(png_path, dpi=120)
        plt.close(fig)
        paths.append(png_path)
    return paths


def write_attention_report(
    report: AttentionSimilarityReport, out_dir: Path | str, stem: str = "attn_sim"
) -> list[Path]:
    out = _ensure_dir(out_dir)
    csv_path = out / f"{stem}.csv"
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scope", "cosine", "samples"])
        writer.writerow(["all_layers", f"{report.overall:.6f}", report.sample_count])
        for layer, value in enumerate(report.per_layer):
            writer.writerow([f"layer_{layer}", f"{value:.6f}", report.sample_count])

    png_path = out / f"{stem}.png"
    labels = ["all"] + [f"L{i}" for i in range(len(report.per_layer))]
    values = [report.overall] + list(report.per_layer)
    fig, ax = plt.subplots(figsize=(1.5 + 0.8 * len(labels), 3.2))
    ax.bar(range(len(values)), values, color="tab:purple")
    ax.set_xticks(range(len(labels)), labels)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("mean attention cosine")
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return [csv_path, png_path]


def write_training_log(
    log: Sequence[BatchLogEntry],
    out_dir: Path | str,
    stem: str = "training",
    title: Optional[str] = None,
) -> list[Path]:
    out = _ensure_dir(out_dir)
    csv_path = out / f"{stem}.csv"
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "batch", "loss", "grad_norm", "clipped_norm"])
        for entry in log:
            writer.writerow(
                [
                    entry.epoch,
                    entry.batch,
                    f"{entry.loss:.6f}",
                    f"{entry.grad_norm:.6f}",
                    f"{entry.clipped_norm:.6f}",
                ]
            )

    png_path = out / f"{stem}.png"
    fig, ax = plt.subplots(figsize=(6.0, 3.2))
    ax.plot([entry.loss for entry in log], color="tab:blue", label="batch loss")
    ax.set_xlabel("batch")
    ax.set_ylabel("margin loss")
    if title:
        ax.set_title(title)
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return [csv_path, png_path]
