"""Seedable generator of synthetic swimmer clips.

A side-view stick figure swims to the right across a textured water background. All joint trajectories are smooth
functions of the stroke phase, which advances by 2*pi/period per frame, so every pose repeats exactly after one
period. The styles come in two pairs that share the motion of the left limbs:

- rotary arms with a flutter kick: freestyle (right limbs half a period behind) and butterfly (right = left);
- sweeping arms with a wide kick: backstroke (right limbs half a period behind) and breaststroke (right = left).

With the right limbs occluded, a single frame of a style cannot be told apart from its partner.
"""

from __future__ import annotations

import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from typing import Any

import cv2
import numpy as np
import numpy.typing as npt

from .core import NUM_JOINTS, JointId, Pose, StyleLabel, VideoClip
from .ErrorMessage import ConfigurationError
from .rendering import draw_disc, draw_segment

# bound of the joint speed in image widths per radian of stroke phase
AMPLITUDE_BOUND = 0.5

# segment lengths in image widths
UPPER_ARM = 0.13
FOREARM = 0.12
THIGH = 0.15
SHIN = 0.14

ROTARY_STYLES = (StyleLabel.FREESTYLE, StyleLabel.BUTTERFLY)

LIMBS: dict[str, tuple[JointId, JointId, JointId]] = {
    "left_arm": (JointId.LEFT_SHOULDER, JointId.LEFT_ELBOW, JointId.LEFT_WRIST),
    "right_arm": (JointId.RIGHT_SHOULDER, JointId.RIGHT_ELBOW, JointId.RIGHT_WRIST),
    "left_leg": (JointId.LEFT_HIP, JointId.LEFT_KNEE, JointId.LEFT_ANKLE),
    "right_leg": (JointId.RIGHT_HIP, JointId.RIGHT_KNEE, JointId.RIGHT_ANKLE),
}

# relative occlusion frequency of the limbs; the far (right) side is hidden far more often
OCCLUSION_WEIGHTS = {"left_arm": 0.35, "right_arm": 1.0, "left_leg": 0.35, "right_leg": 1.0}


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of a synthetic dataset. The defaults give 4 styles x 6 clips x 150 frames."""

    seed: int = 0
    clips_per_style: int = 6
    frames_per_clip: int = 150
    image_size: int = 128
    period: int = 30
    occlusion_rate: float = 0.3
    noise_level: float = 0.05
    styles: tuple[StyleLabel, ...] = field(default_factory=lambda: tuple(StyleLabel))

    def __post_init__(self) -> None:
        object.__setattr__(self, "styles", tuple(StyleLabel.parse(style) for style in self.styles))
        problems = []
        if self.period < 4:  # noqa: PLR2004
            problems.append(f"period must be >= 4, got {self.period}")
        if not 0.0 <= self.occlusion_rate <= 1.0:
            problems.append(f"occlusion_rate must lie in [0, 1], got {self.occlusion_rate}")
        if self.noise_level < 0:
            problems.append(f"noise_level must be >= 0, got {self.noise_level}")
        if self.clips_per_style < 1 or self.frames_per_clip < 1:
            problems.append("clips_per_style and frames_per_clip must be >= 1")
        if self.image_size < 32:  # noqa: PLR2004
            problems.append(f"image_size must be >= 32, got {self.image_size}")
        if not self.styles or len(set(self.styles)) != len(self.styles):
            problems.append("styles must be a non-empty set of distinct styles")
        if problems:
            msg = "Invalid synthetic dataset configuration: " + "; ".join(problems)
            raise ConfigurationError(msg)

    @property
    def num_clips(self) -> int:
        return self.clips_per_style * len(self.styles)

    def motion_bound(self) -> float:
        """Upper bound of any joint's displacement between consecutive frames, in pixels."""
        return self.image_size * 2 * math.pi / self.period * AMPLITUDE_BOUND

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "clips_per_style": self.clips_per_style,
            "frames_per_clip": self.frames_per_clip,
            "image_size": self.image_size,
            "period": self.period,
            "occlusion_rate": self.occlusion_rate,
            "noise_level": self.noise_level,
            "styles": [style.value for style in self.styles],
        }

    @classmethod
    def from_dict(cls, values: dict[str, Any]) -> SynthConfig:
        values = dict(values)
        if "styles" in values:
            values["styles"] = tuple(StyleLabel.parse(style) for style in values["styles"])
        return cls(**values)


@dataclass(frozen=True)
class _Body:
    """Per-clip body placement."""

    scale: float
    center: tuple[float, float]
    phase_offset: int


def _limb_angles(style: StyleLabel, phi: float) -> dict[str, tuple[float, float]]:
    """Absolute angles (image coordinates, clockwise from +x) of the proximal and distal segment of the left limbs."""
    if style in ROTARY_STYLES:
        upper_arm = phi
        forearm = upper_arm + 0.3 * (1.0 - math.cos(phi))
        thigh = math.pi + 0.3 * math.sin(2.0 * phi)
        shin = thigh - 0.25 * (1.0 - math.cos(2.0 * phi))
    else:
        upper_arm = 0.5 * math.pi + 1.1 * math.sin(phi)
        forearm = upper_arm - 0.3 * (1.0 + math.sin(phi))
        thigh = math.pi + 0.45 * math.sin(phi)
        shin = thigh + 0.3 * (1.0 + math.sin(phi))
    return {"arm": (upper_arm, forearm), "leg": (thigh, shin)}


def _chain(
    origin: npt.NDArray[np.float64],
    angles: tuple[float, float],
    lengths: tuple[float, float],
) -> list[npt.NDArray[np.float64]]:
    middle = origin + lengths[0] * np.array([math.cos(angles[0]), math.sin(angles[0])])
    end = middle + lengths[1] * np.array([math.cos(angles[1]), math.sin(angles[1])])
    return [middle, end]


def _phase(t: int, cfg: SynthConfig, body: _Body) -> float:
    # reduce the frame index first so that frames one period apart get bitwise identical phases
    return 2.0 * math.pi * ((t - 1 + body.phase_offset) % cfg.period) / cfg.period


def pose_at(style: StyleLabel, t: int, cfg: SynthConfig, body: _Body) -> npt.NDArray[np.float64]:
    """Ground truth joint coordinates [14, 2] of frame t."""
    width = float(cfg.image_size)
    unit = width * body.scale
    phi = _phase(t, cfg, body)
    symmetric = style.symmetric
    coords = np.zeros((NUM_JOINTS, 2))

    cx, cy = body.center
    bob = 0.01 * width * math.sin(phi)
    shoulder = np.array([cx + 0.12 * unit, cy + bob])
    hip = np.array([cx - 0.13 * unit, cy + 0.5 * bob])
    roll = 0.0 if symmetric else math.sin(phi)
    coords[JointId.LEFT_SHOULDER] = shoulder + [0.0, 0.02 * unit * roll]
    coords[JointId.RIGHT_SHOULDER] = shoulder - [0.0, 0.02 * unit * roll]
    coords[JointId.LEFT_HIP] = hip + [0.0, 0.015 * unit * roll]
    coords[JointId.RIGHT_HIP] = hip - [0.0, 0.015 * unit * roll]
    coords[JointId.NECK] = shoulder + [0.04 * unit, 0.0]
    coords[JointId.HEAD] = coords[JointId.NECK] + [0.07 * unit, -0.01 * unit]

    right_phi = phi if symmetric else phi + math.pi
    for side, side_phi in (("left", phi), ("right", right_phi)):
        angles = _limb_angles(style, side_phi)
        arm = LIMBS[f"{side}_arm"]
        leg = LIMBS[f"{side}_leg"]
        arm_origin = coords[JointId.LEFT_SHOULDER] if symmetric else coords[arm[0]]
        leg_origin = coords[JointId.LEFT_HIP] if symmetric else coords[leg[0]]
        coords[arm[1]], coords[arm[2]] = _chain(arm_origin, angles["arm"], (UPPER_ARM * unit, FOREARM * unit))
        coords[leg[1]], coords[leg[2]] = _chain(leg_origin, angles["leg"], (THIGH * unit, SHIN * unit))

    return np.clip(coords, 1.0, width - 2.0)


def _background(rng: np.random.Generator, size: int) -> npt.NDArray[np.float32]:
    """Water texture: value noise of three octaves upsampled with bicubic interpolation, tinted blue."""
    texture = np.zeros((size, size), dtype=np.float32)
    for octave, weight in ((4, 0.5), (8, 0.3), (16, 0.2)):
        grid = rng.random((octave, octave)).astype(np.float32)
        texture += weight * cv2.resize(grid, (size, size), interpolation=cv2.INTER_CUBIC)
    texture = np.clip(texture, 0.0, 1.0)
    base = np.array([30.0, 90.0, 150.0], dtype=np.float32)
    spread = np.array([40.0, 60.0, 60.0], dtype=np.float32)
    return base + texture[:, :, None] * spread


def _occlusion_schedule(rng: np.random.Generator, cfg: SynthConfig) -> dict[str, npt.NDArray[np.bool_]]:
    """Per limb, the frames in which it is hidden; occlusions cover contiguous spans of frames."""
    num_frames = cfg.frames_per_clip
    schedule = {}
    for limb, weight in OCCLUSION_WEIGHTS.items():
        hidden = np.zeros(num_frames, dtype=bool)
        target = cfg.occlusion_rate * weight * num_frames
        if target >= num_frames:
            hidden[:] = True
        attempts = 0
        while hidden.sum() < target and attempts < 10 * num_frames:
            length = int(rng.integers(max(1, cfg.period // 4), cfg.period + 1))
            start = int(rng.integers(0, num_frames))
            hidden[start : start + length] = True
            attempts += 1
        schedule[limb] = hidden
    return schedule


def _widths(size: int) -> dict[str, int]:
    return {
        "upper": max(1, round(0.032 * size)),
        "lower": max(1, round(0.024 * size)),
        "thigh": max(1, round(0.045 * size)),
        "shin": max(1, round(0.032 * size)),
        "torso": max(2, round(0.07 * size)),
    }


def render_frame(
    background: npt.NDArray[np.float32],
    coords: npt.NDArray[np.float64],
    hidden: Sequence[str],
    rng: np.random.Generator,
    noise_level: float,
) -> npt.NDArray[np.uint8]:
    """Draw the body on the background and add Gaussian pixel noise; limbs named in `hidden` are not drawn."""
    size = background.shape[0]
    canvas = np.ascontiguousarray(np.clip(background, 0, 255).astype(np.uint8))
    widths = _widths(size)
    near = (235, 195, 165)
    far = (175, 135, 110)

    def limb(name: str, color: tuple[int, int, int]) -> None:
        if name in hidden:
            return
        first, second, third = LIMBS[name]
        proximal, distal = ("upper", "lower") if name.endswith("arm") else ("thigh", "shin")
        draw_segment(canvas, coords[first], coords[second], color, widths[proximal])
        draw_segment(canvas, coords[second], coords[third], color, widths[distal])

    limb("right_leg", far)
    limb("right_arm", far)
    shoulders = 0.5 * (coords[JointId.LEFT_SHOULDER] + coords[JointId.RIGHT_SHOULDER])
    hips = 0.5 * (coords[JointId.LEFT_HIP] + coords[JointId.RIGHT_HIP])
    draw_segment(canvas, hips, shoulders, (205, 165, 135), widths["torso"])
    draw_segment(canvas, shoulders, coords[JointId.NECK], (205, 165, 135), widths["upper"])
    draw_disc(canvas, coords[JointId.HEAD], 0.045 * size, (225, 185, 150))
    limb("left_leg", near)
    limb("left_arm", near)

    if noise_level > 0:
        noisy = canvas.astype(np.float32) + rng.normal(0.0, noise_level * 255.0, canvas.shape).astype(np.float32)
        canvas = np.clip(np.rint(noisy), 0, 255).astype(np.uint8)
    return canvas


def generate_clip(cfg: SynthConfig, style: StyleLabel, index: int, seed: np.random.SeedSequence) -> VideoClip:
    """Generate clip number `index` of a style from its own seed sequence."""
    rng = np.random.default_rng(seed)
    width = cfg.image_size
    body = _Body(
        scale=float(rng.uniform(0.9, 1.05)),
        center=(
            0.5 * width + float(rng.uniform(-0.03, 0.03)) * width,
            0.5 * width + float(rng.uniform(-0.03, 0.03)) * width,
        ),
        phase_offset=int(rng.integers(0, cfg.period)),
    )
    background = _background(rng, width)
    schedule = _occlusion_schedule(rng, cfg)

    frames = []
    annotations = []
    for t in range(1, cfg.frames_per_clip + 1):
        coords = pose_at(style, t, cfg, body)
        hidden = [name for name, frames_hidden in schedule.items() if frames_hidden[t - 1]]
        visible = np.ones(NUM_JOINTS, dtype=bool)
        for name in hidden:
            _root, middle, end = LIMBS[name]
            visible[[middle, end]] = False
        frames.append(render_frame(background, coords, hidden, rng, cfg.noise_level))
        annotations.append(Pose(coords, visible))
    return VideoClip(f"{style.value}_{index:02d}", style, frames, annotations)


def iter_clips(cfg: SynthConfig) -> Iterator[VideoClip]:
    """Yield the clips of `generate` one at a time, style by style."""
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.num_clips)
    for style_number, style in enumerate(cfg.styles):
        for index in range(cfg.clips_per_style):
            yield generate_clip(cfg, style, index, seeds[style_number * cfg.clips_per_style + index])


def generate(cfg: SynthConfig | None = None) -> list[VideoClip]:
    """Generate all clips of a synthetic dataset; the same configuration always yields identical clips."""
    return list(iter_clips(cfg or SynthConfig()))
