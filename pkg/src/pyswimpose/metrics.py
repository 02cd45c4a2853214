"""PCK evaluation normalized by the torso diameter of the ground truth.

A joint counts as correct if its prediction lies within alpha times the distance between the left hip and the right
shoulder of the ground truth pose, the comparison being inclusive. Scores are percentages in [0, 100]; aggregates are
weighted by the number of evaluated joints, so the combined score is not a mean of the per-style scores.
"""

from __future__ import annotations

import csv
import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import numpy.typing as npt

from .core import JOINT_PAIRS, NUM_JOINTS, NUM_STYLES, JointId, Pose, StyleLabel, VideoClip
from .ErrorMessage import ConfigurationError, DatasetError, debug

COMBINED = "Combined"


class DegenerateTorsoError(DatasetError):
    """The ground truth torso endpoints coincide, so no PCK threshold exists."""


@dataclass(frozen=True)
class PckConfig:
    alpha: float = 0.2
    torso_endpoints: tuple[JointId, JointId] = (JointId.LEFT_HIP, JointId.RIGHT_SHOULDER)

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            msg = f"The PCK threshold alpha must be positive, got {self.alpha}."
            raise ConfigurationError(msg)


def torso_diameter(gt: Pose, cfg: PckConfig | None = None) -> float:
    first, second = (cfg or PckConfig()).torso_endpoints
    return float(np.linalg.norm(gt[first] - gt[second]))


def pck(pred: Pose, gt: Pose, cfg: PckConfig | None = None) -> npt.NDArray[np.bool_]:
    """Per joint whether the prediction lies within alpha torso diameters of the ground truth.

    Args:
        pred: The predicted pose.
        gt: The ground truth pose; only its coordinates define the threshold.
        cfg: Threshold fraction and torso endpoints.

    Returns:
        14 booleans in joint order.

    Raises:
        DegenerateTorsoError: If the ground truth torso diameter is zero.
    """
    cfg = cfg or PckConfig()
    diameter = torso_diameter(gt, cfg)
    if diameter <= 0:
        msg = "The ground truth torso diameter is zero."
        raise DegenerateTorsoError(msg)
    distances = np.linalg.norm(pred.coords - gt.coords, axis=1)
    return distances <= cfg.alpha * diameter  # type: ignore[no-any-return]


@dataclass
class PckReport:
    """Correct and evaluated joint counts per style and joint, from which all scores derive."""

    alpha: float
    correct: npt.NDArray[np.int64] = field(default_factory=lambda: np.zeros((NUM_STYLES, NUM_JOINTS), np.int64))
    counts: npt.NDArray[np.int64] = field(default_factory=lambda: np.zeros((NUM_STYLES, NUM_JOINTS), np.int64))
    # visible / occluded joints as [correct, count]
    visibility: dict[str, list[int]] | None = None
    excluded: list[str] = field(default_factory=list)

    @staticmethod
    def _percentage(correct: Any, count: Any) -> float:  # noqa: ANN401
        return 100.0 * float(correct) / float(count) if count > 0 else math.nan

    @property
    def overall(self) -> float:
        return self._percentage(self.correct.sum(), self.counts.sum())

    @property
    def per_joint(self) -> list[float]:
        return [self._percentage(c, n) for c, n in zip(self.correct.sum(axis=0), self.counts.sum(axis=0))]

    @property
    def per_style(self) -> dict[StyleLabel, float]:
        return {
            style: self._percentage(self.correct[style.index].sum(), self.counts[style.index].sum())
            for style in StyleLabel
        }

    @property
    def per_style_per_joint(self) -> dict[StyleLabel, list[float]]:
        return {
            style: [self._percentage(c, n) for c, n in zip(self.correct[style.index], self.counts[style.index])]
            for style in StyleLabel
        }

    @property
    def per_visibility(self) -> dict[str, float] | None:
        if self.visibility is None:
            return None
        return {key: self._percentage(*values) for key, values in self.visibility.items()}

    def to_dict(self) -> dict[str, Any]:
        def clean(value: float) -> float | None:
            return None if math.isnan(value) else round(value, 10)

        return {
            "alpha": self.alpha,
            "overall": clean(self.overall),
            "per_joint": {JointId(j).label: clean(v) for j, v in enumerate(self.per_joint)},
            "per_style": {style.column_name: clean(v) for style, v in self.per_style.items()},
            "per_style_per_joint": {
                style.column_name: [clean(v) for v in values] for style, values in self.per_style_per_joint.items()
            },
            "per_visibility": (
                None if self.per_visibility is None else {k: clean(v) for k, v in self.per_visibility.items()}
            ),
            "correct": self.correct.tolist(),
            "counts": self.counts.tolist(),
            "visibility": self.visibility,
            "excluded": list(self.excluded),
        }

    @classmethod
    def from_dict(cls, values: Mapping[str, Any]) -> PckReport:
        return cls(
            alpha=float(values["alpha"]),
            correct=np.array(values["correct"], dtype=np.int64),
            counts=np.array(values["counts"], dtype=np.int64),
            visibility=values.get("visibility"),
            excluded=list(values.get("excluded", [])),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> PckReport:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class _Instances:
    distances: npt.NDArray[np.float64]  # [N, J]
    diameters: npt.NDArray[np.float64]  # [N]
    styles: npt.NDArray[np.int64]  # [N]
    visible: npt.NDArray[np.bool_]  # [N, J]
    excluded: list[str]


def _missing_frames(predictions: Mapping[str, Sequence[Pose]], clips: Sequence[VideoClip]) -> list[str]:
    missing = []
    for clip in clips:
        available = len(predictions.get(clip.clip_id, ()))
        missing += [f"{clip.clip_id}:{t}" for t in range(available + 1, clip.num_frames + 1)]
    return missing


def _collect(
    predictions: Mapping[str, Sequence[Pose]],
    clips: Sequence[VideoClip],
    cfg: PckConfig,
) -> _Instances:
    missing = _missing_frames(predictions, clips)
    if missing:
        shown = ", ".join(missing[:20]) + (", ..." if len(missing) > 20 else "")  # noqa: PLR2004
        msg = f"Predictions missing for {len(missing)} frame(s): {shown}"
        raise DatasetError(msg)

    distances, diameters, styles, visible, excluded = [], [], [], [], []
    for clip in clips:
        for t in range(1, clip.num_frames + 1):
            gt = clip.annotation(t)
            diameter = torso_diameter(gt, cfg)
            if diameter <= 0:
                excluded.append(f"{clip.clip_id}:{t}")
                continue
            pred = predictions[clip.clip_id][t - 1]
            distances.append(np.linalg.norm(pred.coords - gt.coords, axis=1))
            diameters.append(diameter)
            styles.append(clip.style.index)
            visible.append(gt.visible)
    if excluded:
        debug(f"PCK: excluded {len(excluded)} frame(s) with zero torso diameter: {', '.join(excluded)}")
    return _Instances(
        np.array(distances, dtype=np.float64).reshape(-1, NUM_JOINTS),
        np.array(diameters, dtype=np.float64),
        np.array(styles, dtype=np.int64),
        np.array(visible, dtype=bool).reshape(-1, NUM_JOINTS),
        excluded,
    )


def _report(instances: _Instances, alpha: float, by_visibility: bool) -> PckReport:
    correct_mask = instances.distances <= alpha * instances.diameters[:, None]
    report = PckReport(alpha=alpha, excluded=list(instances.excluded))
    for style_index in range(NUM_STYLES):
        rows = instances.styles == style_index
        report.correct[style_index] = correct_mask[rows].sum(axis=0)
        report.counts[style_index] = rows.sum()
    if by_visibility:
        report.visibility = {
            "visible": [int(correct_mask[instances.visible].sum()), int(instances.visible.sum())],
            "occluded": [int(correct_mask[~instances.visible].sum()), int((~instances.visible).sum())],
        }
    return report


def evaluate(
    predictions: Mapping[str, Sequence[Pose]],
    clips: Sequence[VideoClip],
    cfg: PckConfig | None = None,
    by_visibility: bool = False,
) -> PckReport:
    """Aggregate PCK over every frame of the clips.

    Args:
        predictions: Per clip id, one predicted pose per frame in frame order.
        clips: The labeled clips to evaluate on.
        cfg: Threshold fraction and torso endpoints.
        by_visibility: Additionally score visible and occluded joints separately.

    Returns:
        The report; frames with a zero torso diameter are listed in `excluded` and not counted.

    Raises:
        DatasetError: If any frame of the clips has no prediction.
    """
    cfg = cfg or PckConfig()
    return _report(_collect(predictions, clips, cfg), cfg.alpha, by_visibility)


def pck_curve(
    predictions: Mapping[str, Sequence[Pose]],
    clips: Sequence[VideoClip],
    alphas: Sequence[float],
) -> list[tuple[float, float]]:
    """Overall PCK for every alpha in ascending order, alpha = 0 included."""
    if any(alpha < 0 for alpha in alphas):
        msg = "PCK thresholds must be non-negative."
        raise ValueError(msg)
    if any(later < earlier for earlier, later in zip(alphas, alphas[1:])):
        msg = f"PCK thresholds must be sorted ascending, got {list(alphas)}."
        raise ValueError(msg)
    instances = _collect(predictions, clips, PckConfig())
    return [(float(alpha), _report(instances, float(alpha), False).overall) for alpha in alphas]


def default_alphas(maximum: float = 0.2, steps: int = 21) -> list[float]:
    return [float(alpha) for alpha in np.linspace(0.0, maximum, steps)]


def write_curve_csv(
    path: str | Path,
    curve: Sequence[tuple[float, float]],
    header: tuple[str, str] = ("alpha", "score"),
) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as file:
        writer = csv.writer(file)
        writer.writerow(header)
        writer.writerows((f"{x:.6g}", f"{y:.6f}") for x, y in curve)


def read_curve_csv(path: str | Path) -> list[tuple[float, float]]:
    with Path(path).open(newline="", encoding="utf-8") as file:
        reader = csv.reader(file)
        next(reader, None)
        return [(float(x), float(y)) for x, y in reader]


def format_table(rows: Mapping[str, PckReport]) -> str:
    """Plain-text table with one row per model variant and the columns of every style plus Combined."""
    columns = [style.column_name for style in StyleLabel] + [COMBINED]
    name_width = max([len("Model"), *(len(name) for name in rows)])
    widths = [max(len(column), 6) for column in columns]

    def cell(value: float, width: int) -> str:
        return f"{'-':>{width}}" if math.isnan(value) else f"{value:>{width}.1f}"

    lines = [f"{'Model':<{name_width}}  " + "  ".join(f"{c:>{w}}" for c, w in zip(columns, widths))]
    for name, report in rows.items():
        values = [report.per_style[style] for style in StyleLabel] + [report.overall]
        lines.append(f"{name:<{name_width}}  " + "  ".join(cell(v, w) for v, w in zip(values, widths)))
    return "\n".join(lines)


def left_right_confusion(
    predictions: Mapping[str, Sequence[Pose]],
    clips: Sequence[VideoClip],
) -> dict[str, float]:
    """Share of left/right joint predictions that lie strictly closer to the opposite side's ground truth.

    Returns:
        A fraction in [0, 1] per style column name plus Combined; nan for styles without frames.
    """
    missing = _missing_frames(predictions, clips)
    if missing:
        msg = f"Predictions missing for {len(missing)} frame(s)."
        raise DatasetError(msg)
    swapped = np.zeros(NUM_STYLES)
    total = np.zeros(NUM_STYLES)
    for clip in clips:
        for t in range(1, clip.num_frames + 1):
            gt = clip.annotation(t).coords
            pred = predictions[clip.clip_id][t - 1].coords
            for left, right in JOINT_PAIRS:
                for own, other in ((left, right), (right, left)):
                    own_distance = np.linalg.norm(pred[own] - gt[own])
                    other_distance = np.linalg.norm(pred[own] - gt[other])
                    swapped[clip.style.index] += other_distance < own_distance
                    total[clip.style.index] += 1
    result = {
        style.column_name: float(swapped[style.index] / total[style.index]) if total[style.index] else math.nan
        for style in StyleLabel
    }
    result[COMBINED] = float(swapped.sum() / total.sum()) if total.sum() else math.nan
    return result
