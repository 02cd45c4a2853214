"""Anti-aliased drawing of body parts and skeleton overlays on RGB frames."""

from __future__ import annotations

from collections.abc import Sequence

import cv2
import numpy as np
import numpy.typing as npt

from .core import JointId, Pose

# cv2 fixed point: coordinates are passed multiplied by 2**SHIFT for sub-pixel accuracy
SHIFT = 4

Color = tuple[int, int, int]

SKELETON: tuple[tuple[JointId, JointId], ...] = (
    (JointId.HEAD, JointId.NECK),
    (JointId.NECK, JointId.LEFT_SHOULDER),
    (JointId.NECK, JointId.RIGHT_SHOULDER),
    (JointId.LEFT_SHOULDER, JointId.LEFT_ELBOW),
    (JointId.LEFT_ELBOW, JointId.LEFT_WRIST),
    (JointId.RIGHT_SHOULDER, JointId.RIGHT_ELBOW),
    (JointId.RIGHT_ELBOW, JointId.RIGHT_WRIST),
    (JointId.LEFT_SHOULDER, JointId.LEFT_HIP),
    (JointId.RIGHT_SHOULDER, JointId.RIGHT_HIP),
    (JointId.LEFT_HIP, JointId.RIGHT_HIP),
    (JointId.LEFT_HIP, JointId.LEFT_KNEE),
    (JointId.LEFT_KNEE, JointId.LEFT_ANKLE),
    (JointId.RIGHT_HIP, JointId.RIGHT_KNEE),
    (JointId.RIGHT_KNEE, JointId.RIGHT_ANKLE),
)

LEFT_COLOR: Color = (255, 64, 64)
RIGHT_COLOR: Color = (64, 160, 255)
CENTER_COLOR: Color = (255, 255, 64)


def _fixed(point: npt.ArrayLike) -> tuple[int, int]:
    x, y = np.asarray(point, dtype=np.float64)
    return int(round(x * 2**SHIFT)), int(round(y * 2**SHIFT))


def draw_segment(
    image: npt.NDArray[np.uint8],
    start: npt.ArrayLike,
    end: npt.ArrayLike,
    color: Color,
    thickness: int,
) -> None:
    """Draw an anti-aliased line between two pixel-center coordinates in place."""
    cv2.line(image, _fixed(start), _fixed(end), color, max(1, thickness), cv2.LINE_AA, SHIFT)


def draw_disc(image: npt.NDArray[np.uint8], center: npt.ArrayLike, radius: float, color: Color) -> None:
    cv2.circle(image, _fixed(center), int(round(radius * 2**SHIFT)), color, -1, cv2.LINE_AA, SHIFT)


def is_left_part(edge: tuple[JointId, JointId]) -> bool:
    return all(joint.is_left for joint in edge) or (edge[0] is JointId.NECK and edge[1].is_left)


def draw_skeleton(
    frame: npt.NDArray[np.uint8],
    pose: Pose,
    edges: Sequence[tuple[JointId, JointId]] = SKELETON,
    thickness: int = 1,
) -> npt.NDArray[np.uint8]:
    """Return a copy of the frame with the pose drawn as connections between joints.

    Parts on the left side of the body are stroked thicker and in their own color, so that left/right swaps are
    visible in the overlay.
    """
    canvas = np.ascontiguousarray(frame.copy())
    for edge in edges:
        start, end = pose[edge[0]], pose[edge[1]]
        if is_left_part(edge):
            draw_segment(canvas, start, end, LEFT_COLOR, thickness + 1)
        elif any(joint.is_right for joint in edge):
            draw_segment(canvas, start, end, RIGHT_COLOR, thickness)
        else:
            draw_segment(canvas, start, end, CENTER_COLOR, thickness)
    for joint in JointId:
        draw_disc(canvas, pose[joint], 1.5 * thickness, LEFT_COLOR if joint.is_left else CENTER_COLOR)
    return canvas
