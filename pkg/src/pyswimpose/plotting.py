"""Figures drawn from stored reports and curves; nothing here evaluates a model."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

from .core import JointId, StyleLabel
from .metrics import COMBINED, PckReport

DPI = 150


def _save(figure: Figure, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    figure.tight_layout()
    figure.savefig(path, dpi=DPI)
    return path


def plot_per_style(reports: Mapping[str, PckReport], path: str | Path) -> Path:
    """Grouped bars of PCK per style and combined, one bar per model variant."""
    columns = [style.column_name for style in StyleLabel] + [COMBINED]
    figure = Figure(figsize=(8, 4))
    axes = figure.add_subplot()
    positions = np.arange(len(columns))
    width = 0.8 / max(1, len(reports))
    for number, (name, report) in enumerate(reports.items()):
        values = [report.per_style[style] for style in StyleLabel] + [report.overall]
        axes.bar(positions + number * width, np.nan_to_num(values), width, label=name)
    axes.set_xticks(positions + 0.4 - width / 2)
    axes.set_xticklabels(columns, rotation=15)
    axes.set_ylabel(f"PCK@{next(iter(reports.values())).alpha:g} [%]" if reports else "PCK [%]")
    axes.set_ylim(0, 100)
    axes.legend(loc="lower right")
    return _save(figure, path)


def plot_per_joint(report: PckReport, path: str | Path) -> Path:
    """PCK of every joint, one bar group per style."""
    figure = Figure(figsize=(10, 4))
    axes = figure.add_subplot()
    positions = np.arange(len(JointId))
    width = 0.8 / len(StyleLabel)
    for number, (style, values) in enumerate(report.per_style_per_joint.items()):
        axes.bar(positions + number * width, np.nan_to_num(values), width, label=style.column_name)
    axes.set_xticks(positions + 0.4 - width / 2)
    axes.set_xticklabels([joint.label for joint in JointId], rotation=45, ha="right")
    axes.set_ylabel("PCK [%]")
    axes.set_ylim(0, 100)
    axes.legend(loc="lower right", fontsize="small")
    return _save(figure, path)


def plot_curves(
    curves: Mapping[str, Sequence[tuple[float, float]]],
    path: str | Path,
    xlabel: str = "alpha",
    ylabel: str = "PCK [%]",
) -> Path:
    """Line plot of (x, score) series, e.g. PCK against alpha or against the sequence span k."""
    figure = Figure(figsize=(5, 4))
    axes = figure.add_subplot()
    for name, curve in curves.items():
        xs, ys = zip(*curve) if curve else ((), ())
        axes.plot(xs, ys, marker="o", markersize=3, label=name)
    axes.set_xlabel(xlabel)
    axes.set_ylabel(ylabel)
    axes.grid(visible=True, alpha=0.3)
    if len(curves) > 1:
        axes.legend(loc="lower right")
    return _save(figure, path)
