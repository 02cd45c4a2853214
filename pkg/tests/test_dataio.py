"""Test reading and writing datasets and the video-level split."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from pyswimpose import dataio
from pyswimpose.core import NUM_JOINTS, Pose, StyleLabel, VideoClip
from pyswimpose.ErrorMessage import DatasetError
from pyswimpose.synthgen import SynthConfig, generate

FRAME = np.zeros((4, 4, 3), dtype=np.uint8)


def dummy_clips(per_style: int) -> list[VideoClip]:
    pose = Pose.all_visible(np.arange(2 * NUM_JOINTS, dtype=float).reshape(NUM_JOINTS, 2))
    return [
        VideoClip(f"{style.value}_{index:02d}", style, [FRAME] * 2, [pose] * 2)
        for style in StyleLabel
        for index in range(per_style)
    ]


class TestWriteLoad:
    """Tests for writing a dataset and loading it back."""

    def setup_method(self) -> None:
        """Generate a small synthetic dataset in memory."""
        self.cfg = SynthConfig(clips_per_style=2, frames_per_clip=3, image_size=32, period=4)
        self.clips = generate(self.cfg)

    def test_roundtrip(self, tmp_path: Path) -> None:
        """Test that frames, annotations, styles and the default split survive writing and loading."""
        manifest = dataio.write_dataset(tmp_path, self.clips, synth=self.cfg.to_dict())
        assert (tmp_path / dataio.MANIFEST_NAME).is_file()
        assert manifest.synth == self.cfg.to_dict()
        clips, split = dataio.load(tmp_path)
        assert [clip.clip_id for clip in clips] == [clip.clip_id for clip in self.clips]
        for loaded, original in zip(clips, self.clips):
            assert loaded.style is original.style
            assert list(loaded.annotations) == list(original.annotations)
            assert all(np.array_equal(a, b) for a, b in zip(loaded.frames, original.frames))
        assert split["freestyle_01"] == "test"
        assert split["freestyle_00"] == "train"
        assert sorted(split.values()).count("test") == 4

    def test_manifest_layout(self, tmp_path: Path) -> None:
        """Test the recorded format, frame pattern and annotation records."""
        dataio.write_dataset(tmp_path, self.clips[:1])
        values = json.loads((tmp_path / dataio.MANIFEST_NAME).read_text(encoding="utf-8"))
        assert values["format"] == dataio.FORMAT_NAME
        assert values["version"] == dataio.FORMAT_VERSION
        entry = values["clips"][0]
        assert entry["frames"] == "clips/backstroke_00/frames/{:06d}.png"
        assert entry["image_size"] == [32, 32]
        assert (tmp_path / "clips/backstroke_00/frames/000003.png").is_file()
        lines = (tmp_path / entry["annotations"]).read_text(encoding="utf-8").splitlines()
        record = json.loads(lines[0])
        assert record["frame_index"] == 1
        assert len(record["joints"]) == NUM_JOINTS

    def test_missing_annotation(self, tmp_path: Path) -> None:
        """Test that a clip with fewer annotations than frames is rejected with its id."""
        dataio.write_dataset(tmp_path, self.clips)
        path = tmp_path / dataio.ANNOTATION_PATTERN.format(clip_id="butterfly_00")
        lines = path.read_text(encoding="utf-8").splitlines()
        path.write_text("\n".join(lines[:-1]) + "\n", encoding="utf-8")
        with pytest.raises(DatasetError, match="Clip 'butterfly_00' has 3 frames but 2 annotations"):
            dataio.load(tmp_path)

    def test_missing_frame(self, tmp_path: Path) -> None:
        """Test that a missing frame file is reported."""
        dataio.write_dataset(tmp_path, self.clips)
        (tmp_path / "clips/freestyle_00/frames/000002.png").unlink()
        with pytest.raises(DatasetError, match="frame file"):
            dataio.load(tmp_path)

    def test_unknown_style(self, tmp_path: Path) -> None:
        """Test that a manifest with an unknown style is rejected."""
        dataio.write_dataset(tmp_path, self.clips)
        path = tmp_path / dataio.MANIFEST_NAME
        values = json.loads(path.read_text(encoding="utf-8"))
        values["clips"][0]["style"] = "sidestroke"
        path.write_text(json.dumps(values), encoding="utf-8")
        with pytest.raises(DatasetError, match="unknown style 'sidestroke'"):
            dataio.load(tmp_path)

    def test_missing_manifest(self, tmp_path: Path) -> None:
        """Test that loading a directory without manifest fails."""
        with pytest.raises(DatasetError, match="does not exist"):
            dataio.load(tmp_path)

    def test_digest(self, tmp_path: Path) -> None:
        """Test that writing the same clips twice gives the same digest."""
        dataio.write_dataset(tmp_path / "a", self.clips)
        dataio.write_dataset(tmp_path / "b", self.clips)
        assert dataio.manifest_digest(tmp_path / "a") == dataio.manifest_digest(tmp_path / "b")
        other = SynthConfig(seed=3, clips_per_style=2, frames_per_clip=3, image_size=32, period=4)
        dataio.write_dataset(tmp_path / "c", generate(other))
        assert dataio.manifest_digest(tmp_path / "a") != dataio.manifest_digest(tmp_path / "c")


class TestManifest:
    """Tests for the manifest consistency checks."""

    def setup_method(self) -> None:
        """Create two clip entries."""
        self.entries = [
            dataio.ClipEntry(f"clip{i}", StyleLabel.FREESTYLE, 2, f"clips/clip{i}/{{:06d}}.png", "a.jsonl", (4, 4))
            for i in range(2)
        ]

    def test_dict(self) -> None:
        """Test conversion to and from a plain dictionary."""
        manifest = dataio.DatasetManifest(self.entries, {"clip0": "train", "clip1": "test"})
        restored = dataio.DatasetManifest.from_dict(manifest.to_dict())
        assert restored.clips == manifest.clips
        assert restored.split == manifest.split
        assert manifest.entry("clip1") == self.entries[1]
        with pytest.raises(DatasetError, match="Unknown clip id"):
            manifest.entry("clip9")

    def test_duplicate_ids(self) -> None:
        """Test that duplicate clip ids are rejected."""
        with pytest.raises(DatasetError, match="Duplicate clip id"):
            dataio.DatasetManifest([self.entries[0], self.entries[0]], {"clip0": "train"})

    def test_split_consistency(self) -> None:
        """Test that every clip needs an assignment and the split names only known clips."""
        with pytest.raises(DatasetError, match="without a train/test assignment: clip1"):
            dataio.DatasetManifest(self.entries, {"clip0": "train"})
        with pytest.raises(DatasetError, match="unknown clip"):
            dataio.DatasetManifest(self.entries, {"clip0": "train", "clip1": "test", "clip2": "test"})

    def test_format_check(self) -> None:
        """Test that foreign or newer manifests are rejected."""
        values = dataio.DatasetManifest(self.entries, {"clip0": "train", "clip1": "test"}).to_dict()
        with pytest.raises(DatasetError, match="Not a pyswimpose-dataset manifest"):
            dataio.DatasetManifest.from_dict({**values, "format": "other"})
        with pytest.raises(DatasetError, match="not supported"):
            dataio.DatasetManifest.from_dict({**values, "version": "2.0"})


class TestSplit:
    """Tests for the video-level train/test split."""

    def setup_method(self) -> None:
        """Create six clips per style."""
        self.clips = dummy_clips(6)

    def test_default_holdout(self) -> None:
        """Test that the last clip of every style is held out, leaving 20 training clips."""
        holdout = dataio.default_holdout(self.clips)
        train, test = dataio.split_by_clip(self.clips, holdout)
        assert len(train) == 20
        assert len(test) == 4
        assert {clip.clip_id for clip in test} == {f"{style.value}_05" for style in StyleLabel}
        assert not {clip.clip_id for clip in train} & {clip.clip_id for clip in test}

    def test_invalid_holdout(self) -> None:
        """Test that unknown or mismatched holdout clips are rejected."""
        with pytest.raises(DatasetError, match="Holdout clip 'freestyle_09' for style 'freestyle' does not exist"):
            dataio.split_by_clip(self.clips, {StyleLabel.FREESTYLE: "freestyle_09"})
        with pytest.raises(DatasetError, match="has style 'backstroke'"):
            dataio.split_by_clip(self.clips, {StyleLabel.FREESTYLE: "backstroke_00"})

    def test_apply_split(self) -> None:
        """Test partitioning by a stored assignment."""
        split = {clip.clip_id: "test" if clip.clip_id.endswith("_00") else "train" for clip in self.clips}
        train, test = dataio.apply_split(self.clips, split)  # type: ignore[arg-type]
        assert len(train) == 20
        assert all(clip.clip_id.endswith("_00") for clip in test)

    def test_frame_counts(self) -> None:
        """Test the per-style frame counts and the summary table."""
        split = {clip.clip_id: "test" if clip.clip_id.endswith("_05") else "train" for clip in self.clips}
        counts = dataio.frame_counts(self.clips, split)  # type: ignore[arg-type]
        assert counts[StyleLabel.BUTTERFLY] == {"train": 10, "test": 2}
        table = dataio.summary_table(self.clips, split)  # type: ignore[arg-type]
        assert table.splitlines()[-1].split() == ["Total", "40", "8"]
        assert "Butterfly-analog" in table

    def test_synthetic_counts(self, tmp_path: Path) -> None:
        """Test that the frame counts of a written synthetic dataset follow its configuration."""
        cfg = SynthConfig(clips_per_style=2, frames_per_clip=3, image_size=32, period=4)
        manifest = dataio.write_dataset(tmp_path, generate(cfg))
        counts = dataio.frame_counts(manifest.clips, manifest.split)
        assert all(count == {"train": 3, "test": 3} for count in counts.values())
