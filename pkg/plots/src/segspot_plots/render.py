"""Figure rendering; reads only the documented report files, writes one image per job."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import schema

FIGURE_KINDS = ("curves", "boxplot", "heatmap", "fusion-bars")


@dataclass(frozen=True)
class PlotJob:
    kind: str
    inputs: tuple[str, ...]
    output: str
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise ValueError("a plot job needs at least one input file")


def render(job: PlotJob) -> Path:
    out = Path(job.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    if job.kind == "curves":
        fig = _curves(job.inputs, job.options)
    elif job.kind == "boxplot":
        fig = _boxplot(job.inputs[0])
    elif job.kind == "heatmap":
        fig = _heatmap(job.inputs[0], job.options)
    else:
        fig = _fusion_bars(job.inputs, job.options)
    fig.savefig(out, dpi=130)
    plt.close(fig)
    return out


def _collect_rows(inputs):
    rows = []
    for path in inputs:
        rows.extend(schema.read_report(path))
    return rows


def _curves(inputs, options):
    rows = _collect_rows(inputs)
    wanted = options.get("metric")
    metric_names = sorted({r.metric for r in rows})
    if wanted:
        if wanted not in metric_names:
            raise ValueError(f"metric {wanted!r} not present (have {metric_names})")
        metric_names = [wanted]
    fig, axes = plt.subplots(1, len(metric_names),
                             figsize=(4.2 * len(metric_names), 3.6), squeeze=False)
    for ax, metric in zip(axes[0], metric_names):
        series: dict[str, list] = {}
        for r in rows:
            if r.metric == metric:
                series.setdefault(r.method, []).append((r.level, r.value))
        for method in sorted(series):
            points = sorted(series[method])
            ax.plot([p[0] for p in points], [p[1] for p in points],
                    marker="o", markersize=3, label=method)
        ax.set_xlabel("IoU level")
        ax.set_ylabel(metric)
        ax.set_ylim(-0.02, 1.02)
        ax.grid(alpha=0.3)
        ax.legend(fontsize=7)
    fig.tight_layout()
    return fig


def _boxplot(path):
    groups = schema.read_maxima(path)
    labels = [axis for axis in schema.SEGQUALITY_AXES if axis in groups]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.boxplot([groups[a] for a in labels], tick_labels=labels, whis=(0, 100))
    ax.set_ylabel("best IoU")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(axis="y", alpha=0.3)
    ax.set_title("Segmentation quality: per-box best IoU")
    fig.tight_layout()
    return fig


def _heatmap(path, options):
    names, rows = schema.read_square_matrix(path)
    matrix = np.asarray(rows)
    fig, ax = plt.subplots(figsize=(1.1 * len(names) + 2.2, 1.0 * len(names) + 1.8))
    image = ax.imshow(matrix, cmap=options.get("cmap", "viridis"))
    ax.set_xticks(range(len(names)), names, rotation=45, ha="right")
    ax.set_yticks(range(len(names)), names)
    mid = (np.nanmax(matrix) + np.nanmin(matrix)) / 2 if np.isfinite(matrix).any() else 0.5
    for i in range(len(names)):
        for j in range(len(names)):
            value = matrix[i, j]
            color = "white" if value < mid else "black"
            ax.text(j, i, f"{value:.2f}", ha="center", va="center",
                    fontsize=8, color=color)
    fig.colorbar(image, ax=ax, shrink=0.85)
    if options.get("title"):
        ax.set_title(options["title"])
    fig.tight_layout()
    return fig


def _fusion_bars(inputs, options):
    rows = _collect_rows(inputs)
    metric = options.get("metric", "mAP")
    levels = sorted({r.level for r in rows})
    level = options.get("level")
    level = float(level) if level is not None else levels[-1]
    at_level = {r.method: r.value for r in rows
                if r.metric == metric and r.level == level}
    if not at_level:
        raise ValueError(f"no {metric!r} rows at level {level} (have levels {levels})")
    fused = {m: v for m, v in at_level.items() if m.startswith("fusion(")}
    if not fused:
        raise ValueError(f"no fusion(...) rows at level {level}; run the fuse step first")
    base = {m: v for m, v in at_level.items() if m not in fused}
    names = sorted(base) + sorted(fused)
    values = [at_level[m] for m in names]
    fig, ax = plt.subplots(figsize=(1.1 * len(names) + 2.5, 4))
    colors = ["#7a7a7a"] * len(base) + ["#2b7bba"] * len(fused)
    bars = ax.bar(range(len(names)), values, color=colors)
    ax.set_xticks(range(len(names)), names, rotation=30, ha="right")
    ax.set_ylabel(metric)
    ax.set_ylim(0, 1.1)
    for idx, (name, bar) in enumerate(zip(names, bars)):
        label = f"{at_level[name] * 100:.1f}%"
        if name in fused:
            constituents = name[len("fusion("):-1].split("+")
            known = [base[c] for c in constituents if c in base]
            if known:
                label += f"\n+{(at_level[name] - max(known)) * 100:.1f}"
        ax.text(bar.get_x() + bar.get_width() / 2, bar.get_height() + 0.02, label,
                ha="center", fontsize=8)
    ax.set_title(f"{metric} at IoU level {level:g}, fusion gain over best constituent")
    fig.tight_layout()
    return fig
