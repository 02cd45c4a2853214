"""Test the skeleton overlays."""

from __future__ import annotations

import numpy as np

from pyswimpose.core import NUM_JOINTS, JointId, Pose
from pyswimpose.rendering import SKELETON, draw_skeleton, is_left_part

ARMS = ((JointId.LEFT_SHOULDER, JointId.LEFT_ELBOW), (JointId.RIGHT_SHOULDER, JointId.RIGHT_ELBOW))


class TestDrawSkeleton:
    """Tests for drawing a pose onto a frame."""

    def setup_method(self) -> None:
        """Place the left upper arm at y=10, the right one at y=40 and all other joints in a corner."""
        coords = np.full((NUM_JOINTS, 2), 60.0)
        coords[JointId.LEFT_SHOULDER] = (5.0, 10.0)
        coords[JointId.LEFT_ELBOW] = (45.0, 10.0)
        coords[JointId.RIGHT_SHOULDER] = (5.0, 40.0)
        coords[JointId.RIGHT_ELBOW] = (45.0, 40.0)
        self.pose = Pose.all_visible(coords)
        self.frame = np.zeros((64, 64, 3), dtype=np.uint8)

    def test_copy(self) -> None:
        """Test that the frame itself is left untouched."""
        canvas = draw_skeleton(self.frame, self.pose)
        assert canvas.shape == self.frame.shape
        assert canvas.any()
        assert not self.frame.any()

    def test_left_side_distinct(self) -> None:
        """Test that the left limb is drawn thicker and in the left color."""
        canvas = draw_skeleton(self.frame, self.pose, edges=ARMS).astype(int)
        assert canvas[10, 25, 0] > canvas[10, 25, 2]
        assert canvas[40, 25, 2] > canvas[40, 25, 0]
        left_rows = np.count_nonzero(canvas[:25, 25].any(axis=1))
        right_rows = np.count_nonzero(canvas[25:55, 25].any(axis=1))
        assert left_rows > right_rows

    def test_left_parts(self) -> None:
        """Test which skeleton edges count as left side."""
        left = [edge for edge in SKELETON if is_left_part(edge)]
        assert (JointId.NECK, JointId.LEFT_SHOULDER) in left
        assert (JointId.LEFT_HIP, JointId.RIGHT_HIP) not in left
        assert len(left) == 6
