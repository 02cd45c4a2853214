"""Test the torso normalized PCK metric and its aggregation."""

from __future__ import annotations

import math

import numpy as np
import pytest

from pyswimpose import metrics
from pyswimpose.core import MIRROR_INDEX, NUM_JOINTS, JointId, Pose, StyleLabel, VideoClip
from pyswimpose.ErrorMessage import ConfigurationError, DatasetError

FRAME = np.zeros((4, 4, 3), dtype=np.uint8)


def base_coords() -> np.ndarray:
    """Distinct joint positions with a torso diameter of exactly 100 px."""
    coords = np.array([[40.0 + 20 * j, 60.0 + 15 * (j % 3)] for j in range(NUM_JOINTS)])
    coords[JointId.RIGHT_SHOULDER] = (200.0, 100.0)
    coords[JointId.LEFT_HIP] = (200.0, 200.0)
    return coords


def make_clip(clip_id: str, style: StyleLabel, poses: list[Pose]) -> VideoClip:
    return VideoClip(clip_id, style, [FRAME] * len(poses), poses)


class TestPck:
    """Tests for the per-joint PCK decision."""

    def setup_method(self) -> None:
        """Create a ground truth pose with a torso diameter of 100 px."""
        self.gt = Pose.all_visible(base_coords())

    def test_torso_diameter(self) -> None:
        """Test the distance between left hip and right shoulder."""
        assert metrics.torso_diameter(self.gt) == 100.0

    def test_threshold_inclusive(self) -> None:
        """Test that an error of exactly alpha torso diameters counts as correct."""
        coords = base_coords()
        coords[JointId.HEAD, 0] += 20.0
        coords[JointId.NECK, 0] += 20.001
        result = metrics.pck(Pose.all_visible(coords), self.gt, metrics.PckConfig(0.2))
        assert result[JointId.HEAD]
        assert not result[JointId.NECK]
        assert result.sum() == NUM_JOINTS - 1

    def test_degenerate_torso(self) -> None:
        """Test that a ground truth pose with coinciding torso endpoints is rejected."""
        coords = base_coords()
        coords[JointId.LEFT_HIP] = coords[JointId.RIGHT_SHOULDER]
        gt = Pose.all_visible(coords)
        with pytest.raises(metrics.DegenerateTorsoError, match="torso diameter is zero"):
            metrics.pck(gt, gt)

    def test_invalid_alpha(self) -> None:
        """Test that the threshold fraction must be positive."""
        with pytest.raises(ConfigurationError, match="must be positive"):
            metrics.PckConfig(alpha=0.0)

    def test_occlusion_does_not_matter(self) -> None:
        """Test that occluded joints are scored on their annotated coordinates like visible ones."""
        hidden = Pose(base_coords(), np.zeros(NUM_JOINTS, dtype=bool))
        assert metrics.pck(Pose.all_visible(base_coords()), hidden).all()


class TestEvaluate:
    """Tests for the aggregation over clips, styles and joints."""

    def setup_method(self) -> None:
        """Create one clip per style with noisy predictions."""
        rng = np.random.default_rng(0)
        self.clips = []
        self.predictions = {}
        for style in StyleLabel:
            poses = [Pose.all_visible(base_coords() + rng.normal(0, 3, (NUM_JOINTS, 2))) for _ in range(5)]
            clip = make_clip(f"{style.value}_00", style, poses)
            self.clips.append(clip)
            self.predictions[clip.clip_id] = [
                Pose.all_visible(pose.coords + rng.normal(0, 15, (NUM_JOINTS, 2))) for pose in poses
            ]

    def test_exact_predictions(self) -> None:
        """Test that the ground truth itself scores 100 everywhere."""
        exact = {clip.clip_id: list(clip.annotations) for clip in self.clips}
        report = metrics.evaluate(exact, self.clips)
        assert report.overall == 100.0
        assert report.per_joint == [100.0] * NUM_JOINTS
        assert all(score == 100.0 for score in report.per_style.values())

    def test_two_frame_toy(self) -> None:
        """Test that one perfect and one completely wrong frame give 50."""
        gt = Pose.all_visible(base_coords())
        clip = make_clip("toy", StyleLabel.FREESTYLE, [gt, gt])
        wrong = Pose.all_visible(base_coords() + 50.0)
        report = metrics.evaluate({"toy": [gt, wrong]}, [clip])
        assert report.overall == 50.0
        assert report.per_style[StyleLabel.FREESTYLE] == 50.0
        assert math.isnan(report.per_style[StyleLabel.BUTTERFLY])

    def test_brute_force(self) -> None:
        """Test every cell of the report and every per-instance decision against a direct count of 200 instances."""
        rng = np.random.default_rng(1)
        clips, predictions = [], {}
        expected_correct = np.zeros((len(StyleLabel), NUM_JOINTS), dtype=np.int64)
        for index in range(40):
            style = list(StyleLabel)[index % 4]
            gts = [Pose.all_visible(rng.uniform(0, 300, (NUM_JOINTS, 2))) for _ in range(5)]
            preds = [Pose.all_visible(gt.coords + rng.normal(0, 20, (NUM_JOINTS, 2))) for gt in gts]
            clip = make_clip(f"clip{index}", style, gts)
            clips.append(clip)
            predictions[clip.clip_id] = preds
            for gt, pred in zip(gts, preds):
                torso = math.dist(gt[JointId.LEFT_HIP], gt[JointId.RIGHT_SHOULDER])
                oracle = [math.dist(pred[joint], gt[joint]) <= 0.2 * torso for joint in range(NUM_JOINTS)]
                assert metrics.pck(pred, gt).tolist() == oracle
                expected_correct[style.index] += oracle
        report = metrics.evaluate(predictions, clips)

        assert report.counts.tolist() == [[50] * NUM_JOINTS] * len(StyleLabel)
        assert report.correct.tolist() == expected_correct.tolist()
        overall = 100.0 * expected_correct.sum() / (200 * NUM_JOINTS)
        assert report.overall == pytest.approx(overall, rel=0, abs=1e-9)
        per_joint = 100.0 * expected_correct.sum(axis=0) / 200
        assert report.per_joint == pytest.approx(per_joint.tolist(), rel=0, abs=1e-9)
        for style in StyleLabel:
            expected = 100.0 * expected_correct[style.index].sum() / (50 * NUM_JOINTS)
            assert report.per_style[style] == pytest.approx(expected, rel=0, abs=1e-9)
            cells = 100.0 * expected_correct[style.index] / 50
            assert report.per_style_per_joint[style] == pytest.approx(cells.tolist(), rel=0, abs=1e-9)

    def test_combined_is_weighted(self) -> None:
        """Test that the combined score weights every evaluated joint equally."""
        gt = Pose.all_visible(base_coords())
        wrong = Pose.all_visible(base_coords() + 50.0)
        clips = [make_clip("a", StyleLabel.FREESTYLE, [gt] * 3), make_clip("b", StyleLabel.BACKSTROKE, [gt])]
        report = metrics.evaluate({"a": [gt] * 3, "b": [wrong]}, clips)
        assert report.per_style[StyleLabel.FREESTYLE] == 100.0
        assert report.per_style[StyleLabel.BACKSTROKE] == 0.0
        assert report.overall == 75.0

    def test_degenerate_frames_excluded(self) -> None:
        """Test that frames with a zero torso diameter are listed and not counted."""
        coords = base_coords()
        coords[JointId.LEFT_HIP] = coords[JointId.RIGHT_SHOULDER]
        gt = Pose.all_visible(base_coords())
        clip = make_clip("c", StyleLabel.BUTTERFLY, [gt, Pose.all_visible(coords)])
        report = metrics.evaluate({"c": [gt, gt]}, [clip])
        assert report.excluded == ["c:2"]
        assert report.counts.sum() == NUM_JOINTS
        assert report.overall == 100.0

    def test_missing_predictions(self) -> None:
        """Test that frames without a prediction are reported."""
        predictions = dict(self.predictions)
        predictions[self.clips[0].clip_id] = predictions[self.clips[0].clip_id][:3]
        with pytest.raises(DatasetError, match="missing for 2 frame"):
            metrics.evaluate(predictions, self.clips)
        del predictions[self.clips[1].clip_id]
        with pytest.raises(DatasetError, match=f"{self.clips[1].clip_id}:1"):
            metrics.evaluate(predictions, self.clips)

    def test_invariance(self) -> None:
        """Test that translating or scaling prediction and ground truth together leaves the scores unchanged."""
        report = metrics.evaluate(self.predictions, self.clips)

        def transformed(scale: float, shift: tuple[float, float]) -> metrics.PckReport:
            clips = []
            for clip in self.clips:
                poses = [Pose.all_visible(p.coords * scale + shift) for p in clip.annotations]
                clips.append(make_clip(clip.clip_id, clip.style, poses))
            predictions = {
                key: [Pose.all_visible(p.coords * scale + shift) for p in poses]
                for key, poses in self.predictions.items()
            }
            return metrics.evaluate(predictions, clips)

        assert transformed(1.0, (13.5, -7.25)).overall == pytest.approx(report.overall)
        assert np.array_equal(transformed(2.0, (0.0, 0.0)).correct, report.correct)

    def test_by_visibility(self) -> None:
        """Test the separate scores of visible and occluded joints."""
        visible = np.ones(NUM_JOINTS, dtype=bool)
        visible[:4] = False
        gt = Pose(base_coords(), visible)
        coords = base_coords()
        coords[:4] += 50.0
        clip = make_clip("v", StyleLabel.BREASTSTROKE, [gt, gt])
        report = metrics.evaluate({"v": [Pose.all_visible(coords)] * 2}, [clip], by_visibility=True)
        assert report.visibility == {"visible": [20, 20], "occluded": [0, 8]}
        assert report.per_visibility == {"visible": 100.0, "occluded": 0.0}
        assert metrics.evaluate({"v": [gt, gt]}, [clip]).per_visibility is None


class TestReport:
    """Tests for persisting and presenting PCK reports."""

    def setup_method(self) -> None:
        """Create a report of two frames, half of them correct."""
        gt = Pose.all_visible(base_coords())
        clip = make_clip("toy", StyleLabel.FREESTYLE, [gt, gt])
        self.clip = clip
        self.report = metrics.evaluate({"toy": [gt, Pose.all_visible(base_coords() + 50.0)]}, [clip])

    def test_save_load(self, tmp_path) -> None:
        """Test that a saved report loads with the same counts and scores."""
        path = tmp_path / "report.json"
        self.report.save(path)
        loaded = metrics.PckReport.load(path)
        assert loaded.to_dict() == self.report.to_dict()
        assert loaded.to_dict()["per_style"]["Butterfly-analog"] is None

    def test_format_table(self) -> None:
        """Test the header and rows of the text table."""
        table = metrics.format_table({"baseline": self.report})
        header, row = table.splitlines()
        for style in StyleLabel:
            assert style.column_name in header
        assert header.split()[-1] == metrics.COMBINED
        assert row.split()[0] == "baseline"
        assert row.split()[-1] == "50.0"
        assert "-" in row.split()

    def test_left_right_confusion(self) -> None:
        """Test that mirrored joint labels are detected as left/right swaps."""
        gt = self.clip.annotation(1)
        swapped = Pose(gt.coords[list(MIRROR_INDEX)], gt.visible)
        confusion = metrics.left_right_confusion({"toy": [swapped, swapped]}, [self.clip])
        assert confusion[metrics.COMBINED] == 1.0
        assert confusion[StyleLabel.FREESTYLE.column_name] == 1.0
        assert math.isnan(confusion[StyleLabel.BACKSTROKE.column_name])
        assert metrics.left_right_confusion({"toy": [gt, gt]}, [self.clip])[metrics.COMBINED] == 0.0


class TestPckCurve:
    """Tests for PCK as a function of the threshold fraction."""

    def setup_method(self) -> None:
        """Create a clip with predictions that are off on every joint."""
        rng = np.random.default_rng(2)
        gts = [Pose.all_visible(base_coords()) for _ in range(10)]
        offsets = rng.uniform(1.0, 30.0, (10, NUM_JOINTS, 1)) * rng.choice([-1.0, 1.0], (10, NUM_JOINTS, 2))
        self.clips = [make_clip("curve", StyleLabel.BACKSTROKE, gts)]
        self.predictions = {"curve": [Pose.all_visible(gt.coords + offset) for gt, offset in zip(gts, offsets)]}

    def test_curve(self) -> None:
        """Test monotonicity, the zero threshold and agreement with the single-threshold evaluation."""
        alphas = metrics.default_alphas()
        assert len(alphas) == 21
        assert alphas[0] == 0.0
        assert alphas[-1] == 0.2
        curve = metrics.pck_curve(self.predictions, self.clips, alphas)
        scores = [score for _alpha, score in curve]
        assert scores[0] == 0.0
        assert all(later >= earlier for earlier, later in zip(scores, scores[1:]))
        assert scores[-1] == metrics.evaluate(self.predictions, self.clips, metrics.PckConfig(0.2)).overall

    def test_perfect_oracle(self) -> None:
        """Test that exact predictions score 100 even at threshold zero."""
        exact = {"curve": list(self.clips[0].annotations)}
        assert metrics.pck_curve(exact, self.clips, [0.0, 0.1]) == [(0.0, 100.0), (0.1, 100.0)]

    def test_invalid_thresholds(self) -> None:
        """Test that negative or unsorted thresholds are rejected."""
        with pytest.raises(ValueError, match="non-negative"):
            metrics.pck_curve(self.predictions, self.clips, [-0.1, 0.1])
        with pytest.raises(ValueError, match="sorted ascending"):
            metrics.pck_curve(self.predictions, self.clips, [0.2, 0.1])

    def test_csv(self, tmp_path) -> None:
        """Test writing and reading a curve as CSV."""
        path = tmp_path / "curve.csv"
        curve = metrics.pck_curve(self.predictions, self.clips, [0.0, 0.1, 0.2])
        metrics.write_curve_csv(path, curve)
        assert path.read_text(encoding="utf-8").splitlines()[0] == "alpha,score"
        loaded = metrics.read_curve_csv(path)
        assert [alpha for alpha, _score in loaded] == [0.0, 0.1, 0.2]
        assert [score for _alpha, score in loaded] == pytest.approx([score for _alpha, score in curve])
