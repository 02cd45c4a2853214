# The MIT License
#
# Copyright (c) 2024 pyswimpose developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy of
# this software and associated documentation files (the "Software"), to deal in
# the Software without restriction, including without limitation the rights to
# use, copy, modify, merge, publish, distribute, sublicense, and/or sell copies
# of the Software, and to permit persons to whom the Software is furnished to do
# so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.

"""Domain types shared by all modules: joints, poses, styles, heatmaps, clips and model configuration."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from enum import Enum, IntEnum
from typing import Any

import numpy as np
import numpy.typing as npt

from .ErrorMessage import ConfigurationError

NUM_JOINTS = 14
NUM_STYLES = 4


class JointId(IntEnum):
    """The 14 joints of the person-centric body model, in annotation order."""

    HEAD = 0
    NECK = 1
    LEFT_SHOULDER = 2
    RIGHT_SHOULDER = 3
    LEFT_ELBOW = 4
    RIGHT_ELBOW = 5
    LEFT_WRIST = 6
    RIGHT_WRIST = 7
    LEFT_HIP = 8
    RIGHT_HIP = 9
    LEFT_KNEE = 10
    RIGHT_KNEE = 11
    LEFT_ANKLE = 12
    RIGHT_ANKLE = 13

    @property
    def mirror(self) -> JointId:
        """The joint on the other side of the body; head and neck map to themselves."""
        return JointId(MIRROR_INDEX[self.value])

    @property
    def is_left(self) -> bool:
        return self.name.startswith("LEFT_")

    @property
    def is_right(self) -> bool:
        return self.name.startswith("RIGHT_")

    @property
    def label(self) -> str:
        """Human readable name, e.g. 'left wrist'."""
        return self.name.lower().replace("_", " ")


def _build_mirror_index() -> tuple[int, ...]:
    index = []
    for joint in JointId:
        if joint.name.startswith("LEFT_"):
            index.append(JointId["RIGHT_" + joint.name[5:]].value)
        elif joint.name.startswith("RIGHT_"):
            index.append(JointId["LEFT_" + joint.name[6:]].value)
        else:
            index.append(joint.value)
    return tuple(index)


MIRROR_INDEX: tuple[int, ...] = _build_mirror_index()

# pairs of (left, right) joints
JOINT_PAIRS: tuple[tuple[JointId, JointId], ...] = tuple(
    (joint, joint.mirror) for joint in JointId if joint.is_left
)


class StyleLabel(Enum):
    """Activity class of a clip. The member order is the channel order of the class label maps."""

    BACKSTROKE = "backstroke"
    BREASTSTROKE = "breaststroke"
    BUTTERFLY = "butterfly"
    FREESTYLE = "freestyle"

    @property
    def index(self) -> int:
        return list(StyleLabel).index(self)

    @property
    def symmetric(self) -> bool:
        """True for styles whose left and right limbs move in phase and share annotations."""
        return self in (StyleLabel.BREASTSTROKE, StyleLabel.BUTTERFLY)

    @property
    def column_name(self) -> str:
        """Report column, e.g. 'Backstroke-analog'."""
        return f"{self.value.capitalize()}-analog"

    def one_hot(self) -> npt.NDArray[np.float32]:
        encoding = np.zeros(NUM_STYLES, dtype=np.float32)
        encoding[self.index] = 1.0
        return encoding

    @classmethod
    def from_index(cls, index: int) -> StyleLabel:
        return list(cls)[index]

    @classmethod
    def parse(cls, value: str | StyleLabel) -> StyleLabel:
        """Accept an enum member, its value or its name (case insensitive)."""
        if isinstance(value, StyleLabel):
            return value
        for style in cls:
            if value.lower() in (style.value, style.name.lower()):
                return style
        msg = f"Unknown style '{value}'. Supported styles: {', '.join(style.value for style in cls)}"
        raise ValueError(msg)


def _readonly(array: npt.NDArray[Any]) -> npt.NDArray[Any]:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Pose:
    """Image coordinates (pixels, origin at the top-left pixel center) and visibility of all 14 joints.

    Occluded joints keep their annotated coordinates and only carry visible=False.
    """

    coords: npt.NDArray[np.float64]
    visible: npt.NDArray[np.bool_]

    def __post_init__(self) -> None:
        coords = np.array(self.coords, dtype=np.float64).reshape(NUM_JOINTS, 2)
        visible = np.array(self.visible, dtype=bool).reshape(NUM_JOINTS)
        if not np.all(np.isfinite(coords)):
            msg = "Pose coordinates must be finite."
            raise ValueError(msg)
        object.__setattr__(self, "coords", _readonly(coords))
        object.__setattr__(self, "visible", _readonly(visible))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float | bool]]) -> Pose:
        """Create a pose from 14 rows of [x, y, visible]."""
        if len(rows) != NUM_JOINTS:
            msg = f"A pose needs {NUM_JOINTS} joints, got {len(rows)}."
            raise ValueError(msg)
        coords = np.array([[float(row[0]), float(row[1])] for row in rows])
        visible = np.array([bool(row[2]) for row in rows])
        return cls(coords, visible)

    @classmethod
    def all_visible(cls, coords: npt.ArrayLike) -> Pose:
        return cls(np.asarray(coords, dtype=np.float64), np.ones(NUM_JOINTS, dtype=bool))

    def to_rows(self) -> list[list[float | bool]]:
        return [[float(x), float(y), bool(v)] for (x, y), v in zip(self.coords, self.visible)]

    def __getitem__(self, joint: JointId | int) -> npt.NDArray[np.float64]:
        return self.coords[int(joint)]

    def scaled(self, sx: float, sy: float) -> Pose:
        """Scale coordinates of pixel centers from one image size to another by the factors sx, sy."""
        coords = np.empty_like(self.coords)
        coords[:, 0] = (self.coords[:, 0] + 0.5) * sx - 0.5
        coords[:, 1] = (self.coords[:, 1] + 0.5) * sy - 0.5
        return Pose(coords, self.visible.copy())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Pose):
            return NotImplemented
        return bool(np.array_equal(self.coords, other.coords) and np.array_equal(self.visible, other.visible))

    def __hash__(self) -> int:
        return hash((self.coords.tobytes(), self.visible.tobytes()))


def mirror_pose(pose: Pose, width: int) -> Pose:
    """Reflect a pose about the vertical axis of an image of the given width and swap left/right joints.

    Args:
        pose: The pose to reflect.
        width: The image width in pixels.

    Returns:
        The mirrored pose; mirror_pose(mirror_pose(p, w), w) equals p.
    """
    coords = pose.coords.copy()
    coords[:, 0] = (width - 1) - coords[:, 0]
    index = list(MIRROR_INDEX)
    return Pose(coords[index], pose.visible[index])


@dataclass(frozen=True, eq=False)
class HeatmapStack:
    """One confidence map per joint on a grid that is `grid_stride` input pixels per cell."""

    data: npt.NDArray[np.float32]
    grid_stride: int

    def __post_init__(self) -> None:
        data = np.array(self.data, dtype=np.float32)
        if data.ndim != 3 or data.shape[0] != NUM_JOINTS:  # noqa: PLR2004
            msg = f"A heatmap stack must have shape [{NUM_JOINTS}, H, W], got {list(data.shape)}."
            raise ValueError(msg)
        if not np.all(np.isfinite(data)):
            msg = "Heatmap values must be finite."
            raise ValueError(msg)
        if self.grid_stride < 1:
            msg = f"grid_stride must be >= 1, got {self.grid_stride}."
            raise ValueError(msg)
        object.__setattr__(self, "data", _readonly(data))

    @property
    def shape(self) -> tuple[int, int, int]:
        num_joints, height, width = self.data.shape
        return num_joints, height, width

    @property
    def map_size(self) -> tuple[int, int]:
        return self.data.shape[1], self.data.shape[2]


@dataclass(frozen=True)
class VideoClip:
    """Ordered frames (H x W x 3, uint8 RGB) with one annotation per frame and a single style.

    Frames are addressed 1-based through `frame()` and `annotation()`; the underlying sequences are 0-based.
    """

    clip_id: str
    style: StyleLabel
    frames: Sequence[npt.NDArray[np.uint8]]
    annotations: Sequence[Pose]

    def __post_init__(self) -> None:
        if len(self.frames) != len(self.annotations):
            msg = (
                f"Clip '{self.clip_id}' has {len(self.frames)} frames but {len(self.annotations)} annotations."
            )
            raise ValueError(msg)
        if len(self.frames) < 1:
            msg = f"Clip '{self.clip_id}' has no frames."
            raise ValueError(msg)

    @property
    def num_frames(self) -> int:
        return len(self.annotations)

    def frame(self, t: int) -> npt.NDArray[np.uint8]:
        """Return frame t, 1 <= t <= T."""
        return self.frames[self._to_offset(t)]

    def annotation(self, t: int) -> Pose:
        """Return the annotation of frame t, 1 <= t <= T."""
        return self.annotations[self._to_offset(t)]

    def _to_offset(self, t: int) -> int:
        if not 1 <= t <= self.num_frames:
            msg = f"Frame index {t} outside [1, {self.num_frames}] of clip '{self.clip_id}'."
            raise IndexError(msg)
        return t - 1


@dataclass(frozen=True)
class SequenceSpec:
    """Temporal extent of a refinement input: k = 4l+1 frames spanned, k' = 2l+1 estimates stacked."""

    l: int = 0  # noqa: E741

    def __post_init__(self) -> None:
        if self.l < 0:
            msg = f"The sequence parameter l must be non-negative, got {self.l}."
            raise ConfigurationError(msg)

    @property
    def k(self) -> int:
        return 4 * self.l + 1

    @property
    def k_prime(self) -> int:
        return 2 * self.l + 1


class ConditioningMode(Enum):
    """Where class label maps enter the conditioned stages."""

    NONE = "none"
    ONCE = "once"
    REPEATED = "repeated"


@dataclass(frozen=True)
class ModelConfig:
    """Architecture and target parameters of the estimator and the refinement network."""

    num_stages: int = 3
    num_joints: int = NUM_JOINTS
    input_size: int = 368
    heatmap_size: int = 46
    gaussian_sigma: float = 1.0
    conditioning_mode: ConditioningMode = ConditioningMode.NONE
    # None means every stage s >= 2
    conditioned_stages: tuple[int, ...] | None = None
    seq_spec: SequenceSpec = field(default_factory=SequenceSpec)
    channel_multiplier: float = 0.25
    stage_kernel: int = 7
    stage_depth: int = 5
    branch_kernel: int = 7
    subpixel_decoding: bool = False

    def __post_init__(self) -> None:
        if self.num_stages < 1:
            msg = f"num_stages must be >= 1, got {self.num_stages}."
            raise ConfigurationError(msg)
        if self.num_joints != NUM_JOINTS:
            msg = f"The body model has exactly {NUM_JOINTS} joints, got num_joints={self.num_joints}."
            raise ConfigurationError(msg)
        if self.heatmap_size < 1 or self.input_size % self.heatmap_size != 0:
            msg = f"input_size {self.input_size} must be divisible by heatmap_size {self.heatmap_size}."
            raise ConfigurationError(msg)
        if self.gaussian_sigma <= 0:
            msg = f"gaussian_sigma must be positive, got {self.gaussian_sigma}."
            raise ConfigurationError(msg)
        if self.channel_multiplier <= 0:
            msg = f"channel_multiplier must be positive, got {self.channel_multiplier}."
            raise ConfigurationError(msg)
        if self.stage_depth < 1 or self.stage_kernel % 2 == 0 or self.branch_kernel % 2 == 0:
            msg = "stage_depth must be >= 1 and kernel sizes must be odd."
            raise ConfigurationError(msg)
        if self.conditioned_stages is not None:
            stages = tuple(sorted(set(self.conditioned_stages)))
            if any(stage < 2 or stage > self.num_stages for stage in stages):  # noqa: PLR2004
                msg = (
                    f"Conditioned stages {list(stages)} must lie in [2, {self.num_stages}]; "
                    "the first stage operates on local image content only and is never conditioned."
                )
                raise ConfigurationError(msg)
            object.__setattr__(self, "conditioned_stages", stages)

    @property
    def grid_stride(self) -> int:
        return self.input_size // self.heatmap_size

    @property
    def is_conditioned(self) -> bool:
        return self.conditioning_mode is not ConditioningMode.NONE

    def stage_is_conditioned(self, stage: int) -> bool:
        """True if class label maps are injected into the given 1-based stage."""
        if not self.is_conditioned or stage < 2:  # noqa: PLR2004
            return False
        if self.conditioned_stages is None:
            return True
        return stage in self.conditioned_stages

    def to_dict(self) -> dict[str, Any]:
        values = asdict(self)
        values["conditioning_mode"] = self.conditioning_mode.value
        values["conditioned_stages"] = None if self.conditioned_stages is None else list(self.conditioned_stages)
        values["seq_spec"] = {"l": self.seq_spec.l}
        return values

    @classmethod
    def from_dict(cls, values: dict[str, Any]) -> ModelConfig:
        values = dict(values)
        if "conditioning_mode" in values:
            values["conditioning_mode"] = ConditioningMode(values["conditioning_mode"])
        if values.get("conditioned_stages") is not None:
            values["conditioned_stages"] = tuple(values["conditioned_stages"])
        if "seq_spec" in values:
            values["seq_spec"] = SequenceSpec(**values["seq_spec"])
        return cls(**values)
