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

"""On-disk dataset format.

A dataset directory contains

- ``manifest.json``: ``{"format": "pyswimpose-dataset", "version": "1.0", "clips": [...], "split": {clip_id: "train" |
  "test"}}`` where every clip entry holds ``clip_id``, ``style``, ``frame_count``, ``frames`` (a ``str.format``
  pattern relative to the dataset root, e.g. ``clips/freestyle_00/frames/{:06d}.png``), ``annotations`` (path relative
  to the root) and ``image_size`` ([height, width]);
- one PNG file per frame, numbered from 1;
- one ``annotations.jsonl`` per clip with a record ``{"frame_index": t, "joints": [[x, y, visible], ...]}`` per line,
  the 14 joints in JointId order and coordinates in pixels with the origin at the top-left pixel center.
"""

from __future__ import annotations

import hashlib
import json
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal, overload

import cv2
import numpy as np
import numpy.typing as npt

from ._utils import is_format_compatible
from .core import NUM_JOINTS, Pose, StyleLabel, VideoClip
from .ErrorMessage import DatasetError, debug

FORMAT_NAME = "pyswimpose-dataset"
FORMAT_VERSION = "1.0"
MANIFEST_NAME = "manifest.json"
FRAME_PATTERN = "clips/{clip_id}/frames/{{:06d}}.png"
ANNOTATION_PATTERN = "clips/{clip_id}/annotations.jsonl"

Split = Literal["train", "test"]


@dataclass(frozen=True)
class ClipEntry:
    clip_id: str
    style: StyleLabel
    frame_count: int
    frames: str
    annotations: str
    image_size: tuple[int, int]

    def to_dict(self) -> dict[str, Any]:
        return {
            "clip_id": self.clip_id,
            "style": self.style.value,
            "frame_count": self.frame_count,
            "frames": self.frames,
            "annotations": self.annotations,
            "image_size": list(self.image_size),
        }


@dataclass
class DatasetManifest:
    """Clip inventory and the video-level train/test assignment of a dataset."""

    clips: list[ClipEntry]
    split: dict[str, Split]
    version: str = FORMAT_VERSION
    # generator parameters, present for synthetic datasets
    synth: dict[str, Any] | None = None
    root: Path = field(default_factory=Path)

    def __post_init__(self) -> None:
        ids = [entry.clip_id for entry in self.clips]
        duplicates = sorted({clip_id for clip_id in ids if ids.count(clip_id) > 1})
        if duplicates:
            msg = f"Duplicate clip id(s) in manifest: {', '.join(duplicates)}"
            raise DatasetError(msg)
        unassigned = [clip_id for clip_id in ids if self.split.get(clip_id) not in ("train", "test")]
        if unassigned:
            msg = f"Clip(s) without a train/test assignment: {', '.join(unassigned)}"
            raise DatasetError(msg)
        unknown = sorted(set(self.split) - set(ids))
        if unknown:
            msg = f"Split names unknown clip(s): {', '.join(unknown)}"
            raise DatasetError(msg)

    def entry(self, clip_id: str) -> ClipEntry:
        for entry in self.clips:
            if entry.clip_id == clip_id:
                return entry
        msg = f"Unknown clip id '{clip_id}'."
        raise DatasetError(msg)

    def to_dict(self) -> dict[str, Any]:
        values: dict[str, Any] = {
            "format": FORMAT_NAME,
            "version": self.version,
            "clips": [entry.to_dict() for entry in self.clips],
            "split": dict(self.split),
        }
        if self.synth is not None:
            values["synth"] = self.synth
        return values

    @classmethod
    def from_dict(cls, values: Mapping[str, Any], root: Path | None = None) -> DatasetManifest:
        if values.get("format") != FORMAT_NAME:
            msg = f"Not a {FORMAT_NAME} manifest (format '{values.get('format')}')."
            raise DatasetError(msg)
        version = str(values.get("version", ""))
        if not is_format_compatible(version, FORMAT_VERSION):
            msg = f"Manifest version {version} is not supported (supported: {FORMAT_VERSION})."
            raise DatasetError(msg)
        entries = []
        for item in values.get("clips", []):
            try:
                style = StyleLabel.parse(item["style"])
            except ValueError as e:
                msg = f"Clip '{item.get('clip_id')}' has an unknown style '{item.get('style')}'."
                raise DatasetError(msg) from e
            entries.append(
                ClipEntry(
                    clip_id=str(item["clip_id"]),
                    style=style,
                    frame_count=int(item["frame_count"]),
                    frames=str(item["frames"]),
                    annotations=str(item["annotations"]),
                    image_size=(int(item["image_size"][0]), int(item["image_size"][1])),
                ),
            )
        return cls(entries, dict(values.get("split", {})), version, values.get("synth"), root or Path())


class FrameSequence(Sequence[npt.NDArray[np.uint8]]):
    """Lazily decoded RGB frames of one clip."""

    def __init__(self, paths: Sequence[Path]) -> None:
        self.paths = list(paths)

    def __len__(self) -> int:
        return len(self.paths)

    @overload
    def __getitem__(self, index: int) -> npt.NDArray[np.uint8]:
        ...

    @overload
    def __getitem__(self, index: slice) -> list[npt.NDArray[np.uint8]]:
        ...

    def __getitem__(self, index: int | slice) -> npt.NDArray[np.uint8] | list[npt.NDArray[np.uint8]]:
        if isinstance(index, slice):
            return [self[i] for i in range(*index.indices(len(self)))]
        return read_frame(self.paths[index])

    def __iter__(self) -> Iterator[npt.NDArray[np.uint8]]:
        for path in self.paths:
            yield read_frame(path)


def read_frame(path: Path) -> npt.NDArray[np.uint8]:
    image = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if image is None:
        msg = f"Cannot read frame {path}."
        raise DatasetError(msg)
    return cv2.cvtColor(image, cv2.COLOR_BGR2RGB)  # type: ignore[no-any-return]


def write_frame(path: Path, frame: npt.NDArray[np.uint8]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), cv2.cvtColor(frame, cv2.COLOR_RGB2BGR)):
        msg = f"Cannot write frame {path}."
        raise OSError(msg)


def write_annotations(path: Path, poses: Iterable[Pose]) -> int:
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8", newline="\n") as file:
        for t, pose in enumerate(poses, start=1):
            file.write(json.dumps({"frame_index": t, "joints": pose.to_rows()}) + "\n")
            count += 1
    return count


def read_annotations(path: Path, clip_id: str = "") -> list[Pose]:
    poses = []
    with path.open(encoding="utf-8") as file:
        for line_number, line in enumerate(file, start=1):
            if not line.strip():
                continue
            record = json.loads(line)
            if int(record["frame_index"]) != len(poses) + 1:
                msg = f"Clip '{clip_id}': annotation line {line_number} has frame_index {record['frame_index']}."
                raise DatasetError(msg)
            joints = record["joints"]
            if len(joints) != NUM_JOINTS:
                msg = f"Clip '{clip_id}': frame {record['frame_index']} has {len(joints)} joints."
                raise DatasetError(msg)
            poses.append(Pose.from_rows(joints))
    return poses


def write_clip(root: Path, clip: VideoClip) -> ClipEntry:
    """Write the frames and annotations of a clip below the dataset root."""
    frames = FRAME_PATTERN.format(clip_id=clip.clip_id)
    annotations = ANNOTATION_PATTERN.format(clip_id=clip.clip_id)
    for t in range(1, clip.num_frames + 1):
        write_frame(root / frames.format(t), clip.frame(t))
    write_annotations(root / annotations, clip.annotations)
    height, width = clip.frames[0].shape[:2]
    return ClipEntry(clip.clip_id, clip.style, clip.num_frames, frames, annotations, (height, width))


def write_manifest(root: str | Path, manifest: DatasetManifest) -> Path:
    path = Path(root) / MANIFEST_NAME
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.is_file():
        msg = f"Dataset manifest {path} does not exist."
        raise DatasetError(msg)
    return DatasetManifest.from_dict(json.loads(path.read_text(encoding="utf-8")), path.parent)


def manifest_digest(path: str | Path) -> str:
    """SHA-256 of the manifest and every file it references, in manifest order."""
    manifest = read_manifest(path)
    digest = hashlib.sha256((manifest.root / MANIFEST_NAME).read_bytes())
    for entry in manifest.clips:
        for t in range(1, entry.frame_count + 1):
            digest.update((manifest.root / entry.frames.format(t)).read_bytes())
        digest.update((manifest.root / entry.annotations).read_bytes())
    return digest.hexdigest()


def write_dataset(
    root: str | Path,
    clips: Iterable[VideoClip],
    holdout: Mapping[StyleLabel, str] | None = None,
    synth: dict[str, Any] | None = None,
) -> DatasetManifest:
    """Write clips and a manifest to a dataset directory.

    Args:
        root: The dataset directory.
        clips: The clips, written one at a time.
        holdout: Per style the clip id of its test clip; defaults to the last clip of every style.
        synth: Generator parameters recorded in the manifest.

    Returns:
        The written manifest.
    """
    root = Path(root)
    entries = []
    for clip in clips:
        entries.append(write_clip(root, clip))
        debug(f"Dataset: wrote clip '{clip.clip_id}' ({clip.num_frames} frames)", debugmode_only=True)
    if holdout is None:
        holdout = default_holdout(entries)
    test_ids = _validate_holdout(entries, holdout)
    split: dict[str, Split] = {entry.clip_id: "test" if entry.clip_id in test_ids else "train" for entry in entries}
    manifest = DatasetManifest(entries, split, synth=synth, root=root)
    write_manifest(root, manifest)
    return manifest


def load(path: str | Path) -> tuple[list[VideoClip], dict[str, Split]]:
    """Load every clip of a dataset together with its split assignment.

    Raises:
        DatasetError: For a malformed manifest, an unknown style, a duplicate clip id or a clip whose number of
            frames and annotations differ.
    """
    manifest = read_manifest(path)
    clips = []
    for entry in manifest.clips:
        poses = read_annotations(manifest.root / entry.annotations, entry.clip_id)
        paths = [manifest.root / entry.frames.format(t) for t in range(1, entry.frame_count + 1)]
        missing = [str(p) for p in paths if not p.is_file()]
        if missing:
            msg = f"Clip '{entry.clip_id}': {len(missing)} frame file(s) missing, first {missing[0]}."
            raise DatasetError(msg)
        if len(poses) != entry.frame_count:
            msg = f"Clip '{entry.clip_id}' has {entry.frame_count} frames but {len(poses)} annotations."
            raise DatasetError(msg)
        clips.append(VideoClip(entry.clip_id, entry.style, FrameSequence(paths), poses))
    return clips, dict(manifest.split)


def default_holdout(clips: Iterable[VideoClip | ClipEntry]) -> dict[StyleLabel, str]:
    """The last clip of every style."""
    holdout: dict[StyleLabel, str] = {}
    for clip in clips:
        holdout[clip.style] = clip.clip_id
    return holdout


def _validate_holdout(clips: Sequence[VideoClip | ClipEntry], holdout: Mapping[StyleLabel, str]) -> set[str]:
    by_id = {clip.clip_id: clip for clip in clips}
    for style, clip_id in holdout.items():
        if clip_id not in by_id:
            msg = f"Holdout clip '{clip_id}' for style '{style.value}' does not exist."
            raise DatasetError(msg)
        if by_id[clip_id].style is not style:
            msg = f"Holdout clip '{clip_id}' has style '{by_id[clip_id].style.value}', not '{style.value}'."
            raise DatasetError(msg)
    return set(holdout.values())


def split_by_clip(
    clips: Sequence[VideoClip],
    holdout: Mapping[StyleLabel, str],
) -> tuple[list[VideoClip], list[VideoClip]]:
    """Partition clips on video boundaries: the named clips form the test set, all others the training set."""
    test_ids = _validate_holdout(clips, holdout)
    train = [clip for clip in clips if clip.clip_id not in test_ids]
    test = [clip for clip in clips if clip.clip_id in test_ids]
    return train, test


def apply_split(
    clips: Sequence[VideoClip],
    split: Mapping[str, Split],
) -> tuple[list[VideoClip], list[VideoClip]]:
    """Partition clips by the assignment stored in a manifest."""
    return (
        [clip for clip in clips if split.get(clip.clip_id) == "train"],
        [clip for clip in clips if split.get(clip.clip_id) == "test"],
    )


def frame_counts(
    clips: Sequence[VideoClip | ClipEntry],
    split: Mapping[str, Split],
) -> dict[StyleLabel, dict[str, int]]:
    counts = {style: {"train": 0, "test": 0} for style in StyleLabel}
    for clip in clips:
        frames = clip.frame_count if isinstance(clip, ClipEntry) else clip.num_frames
        counts[clip.style][split[clip.clip_id]] += frames
    return counts


def summary_table(clips: Sequence[VideoClip | ClipEntry], split: Mapping[str, Split]) -> str:
    """Per-style number of video frames in the training and test set."""
    counts = frame_counts(clips, split)
    width = max(len(style.column_name) for style in StyleLabel)
    lines = [f"{'Style':<{width}}  {'Train':>7}  {'Test':>7}"]
    for style in StyleLabel:
        lines.append(f"{style.column_name:<{width}}  {counts[style]['train']:>7}  {counts[style]['test']:>7}")
    total_train = sum(c["train"] for c in counts.values())
    total_test = sum(c["test"] for c in counts.values())
    lines.append(f"{'Total':<{width}}  {total_train:>7}  {total_test:>7}")
    return "\n".join(lines)
