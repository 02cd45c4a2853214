"""Training and inference plumbing for the single-frame estimator.

Images are resized to the square model input and scaled to [-0.5, 0.5] per channel. Poses follow the same
resize, so targets are always rendered in input-image pixels.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Callable, Iterable, Iterator, Sequence
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np
import numpy.typing as npt
import torch
from torch import nn
from torch.utils.data import DataLoader, Dataset

from . import posenet
from ._utils import seed_everything
from .core import ModelConfig, Pose, StyleLabel, VideoClip, mirror_pose
from .ErrorMessage import debug
from .heatmap import decode_array, render_target_array
from .UserInterface import message_info, progress


@dataclass(frozen=True)
class TrainSettings:
    """Optimizer schedule of one training run."""

    learning_rate: float = 1e-3
    iterations: int = 200
    batch_size: int = 8
    seed: int = 0
    grad_clip: float | None = None
    flip_prob: float = 0.5
    num_workers: int = 0
    log_every: int = 10


def prepare_image(frame: npt.NDArray[np.uint8], input_size: int) -> torch.Tensor:
    """Resize an RGB frame to the model input and scale it to [-0.5, 0.5], returning a tensor [3, S, S]."""
    if frame.shape[0] != input_size or frame.shape[1] != input_size:
        frame = cv2.resize(frame, (input_size, input_size), interpolation=cv2.INTER_AREA)
    image = frame.astype(np.float32) / 255.0 - 0.5
    return torch.from_numpy(np.ascontiguousarray(image.transpose(2, 0, 1)))


def pose_to_input(pose: Pose, frame_shape: tuple[int, ...], input_size: int) -> Pose:
    """Map a pose from frame pixels to model input pixels."""
    height, width = frame_shape[:2]
    return pose.scaled(input_size / width, input_size / height)


def pose_to_frame(pose: Pose, frame_shape: tuple[int, ...], input_size: int) -> Pose:
    """Map a pose from model input pixels back to frame pixels."""
    height, width = frame_shape[:2]
    return pose.scaled(width / input_size, height / input_size)


class FrameDataset(Dataset[tuple[torch.Tensor, torch.Tensor, int]]):
    """Every annotated frame of a set of clips as (image, target heatmaps, style index).

    With `flip_prob` > 0 frames are mirrored horizontally together with their annotation. Indices beyond the number
    of frames address repeated draws of frame `index % len(self)`, each with its own mirror decision.
    """

    def __init__(self, clips: Sequence[VideoClip], config: ModelConfig, flip_prob: float = 0.0, seed: int = 0) -> None:
        self.clips = list(clips)
        self.config = config
        self.flip_prob = flip_prob
        self.seed = seed
        self.items = [(c, t) for c, clip in enumerate(self.clips) for t in range(1, clip.num_frames + 1)]

    def __len__(self) -> int:
        return len(self.items)

    def flips(self, index: int) -> bool:
        """Whether a draw is mirrored; the decision depends on the seed and the index only, not on the worker."""
        return bool(np.random.default_rng((self.seed, index)).random() < self.flip_prob)

    def __getitem__(self, index: int) -> tuple[torch.Tensor, torch.Tensor, int]:
        clip_index, t = self.items[index % len(self.items)]
        clip = self.clips[clip_index]
        frame = clip.frame(t)
        pose = pose_to_input(clip.annotation(t), frame.shape, self.config.input_size)
        image = prepare_image(frame, self.config.input_size)
        if self.flip_prob > 0 and self.flips(index):
            image = torch.flip(image, dims=[2])
            pose = mirror_pose(pose, self.config.input_size)
        target = torch.from_numpy(render_target_array(pose.coords, self.config))
        return image, target, clip.style.index


def endless_batches(
    dataset: Dataset[tuple[torch.Tensor, ...]],
    settings: TrainSettings,
) -> Iterator[tuple[torch.Tensor, ...]]:
    """Sample `iterations` random batches with replacement, reproducibly for a given seed.

    The n-th draw of sample i is requested as index `n * len(dataset) + i`, so datasets reduce indices modulo their
    length and may use the full index to vary augmentations between draws.
    """
    generator = torch.Generator()
    generator.manual_seed(settings.seed)
    size = len(dataset)  # type: ignore[arg-type]
    num_samples = settings.iterations * settings.batch_size
    draws = torch.randint(size, (num_samples,), generator=generator) + torch.arange(num_samples) * size
    loader = DataLoader(
        dataset,
        batch_size=settings.batch_size,
        sampler=draws.tolist(),
        num_workers=settings.num_workers,
    )
    yield from loader


class LossLog:
    """CSV log of training losses with the columns iteration, loss."""

    def __init__(self, path: str | Path | None) -> None:
        self.path = Path(path) if path is not None else None
        self.rows: list[tuple[int, float]] = []

    def append(self, iteration: int, value: float) -> None:
        self.rows.append((iteration, value))

    def write(self) -> None:
        if self.path is None:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("w", newline="", encoding="utf-8") as file:
            writer = csv.writer(file)
            writer.writerow(["iteration", "loss"])
            writer.writerows((iteration, f"{value:.8g}") for iteration, value in self.rows)


def optimize(
    parameters: Iterable[nn.Parameter],
    batches: Iterable[tuple[torch.Tensor, ...]],
    compute_loss: Callable[[tuple[torch.Tensor, ...]], torch.Tensor],
    settings: TrainSettings,
    log: LossLog | None = None,
    name: str = "training",
) -> list[float]:
    """Minimize `compute_loss` over the batches with Adam and optional gradient norm clipping.

    Returns:
        The loss of every iteration.
    """
    params = [param for param in parameters if param.requires_grad]
    optimizer = torch.optim.Adam(params, lr=settings.learning_rate)
    losses: list[float] = []
    for iteration, batch in enumerate(batches, start=1):
        optimizer.zero_grad()
        value = compute_loss(batch)
        if not torch.isfinite(value):
            msg = f"{name}: loss became {value.item()} at iteration {iteration}."
            raise FloatingPointError(msg)
        value.backward()  # type: ignore[no-untyped-call]
        if settings.grad_clip is not None:
            nn.utils.clip_grad_norm_(params, settings.grad_clip)
        optimizer.step()
        losses.append(float(value.item()))
        if log is not None:
            log.append(iteration, losses[-1])
        if iteration % settings.log_every == 0 or iteration == settings.iterations:
            progress(name, iteration, settings.iterations, losses[-1])
    if log is not None:
        log.write()
    return losses


def train_estimator(
    model: posenet.PoseNet,
    clips: Sequence[VideoClip],
    settings: TrainSettings,
    loss_log: str | Path | None = None,
    device: torch.device | str = "cpu",
) -> list[float]:
    """Train the single-frame estimator with intermediate supervision on every frame of the clips."""
    seed_everything(settings.seed)
    model.to(device).train()
    dataset = FrameDataset(clips, model.config, settings.flip_prob, settings.seed)
    message_info(f"Training estimator on {len(dataset)} frames from {len(clips)} clips")
    conditioned = model.config.is_conditioned

    def compute_loss(batch: tuple[torch.Tensor, ...]) -> torch.Tensor:
        images, targets, style_index = batch
        styles = [StyleLabel.from_index(int(i)) for i in style_index] if conditioned else None
        outputs = model(images.to(device), styles)
        return posenet.loss(outputs, targets.to(device))

    losses = optimize(
        model.parameters(),
        endless_batches(dataset, settings),  # type: ignore[arg-type]
        compute_loss,
        settings,
        LossLog(loss_log),
        name="estimator",
    )
    model.eval()
    return losses


@torch.no_grad()
def estimate_clip(
    model: posenet.PoseNet,
    clip: VideoClip,
    batch_size: int = 16,
    device: torch.device | str = "cpu",
) -> torch.Tensor:
    """Final-stage heatmaps of every frame of a clip, as a tensor [T, J, H, W] on the CPU."""
    model.to(device).eval()
    styles = [clip.style] if model.config.is_conditioned else None
    outputs = []
    for start in range(0, clip.num_frames, batch_size):
        stop = min(start + batch_size, clip.num_frames)
        images = torch.stack([prepare_image(clip.frames[i], model.config.input_size) for i in range(start, stop)])
        batch_styles = styles * (stop - start) if styles is not None else None
        outputs.append(model(images.to(device), batch_styles).final.cpu())
    return torch.cat(outputs)


def heatmaps_to_poses(
    heatmaps: torch.Tensor,
    config: ModelConfig,
    frame_shape: tuple[int, ...],
) -> list[Pose]:
    """Decode heatmaps [T, J, H, W] and map the poses to frame pixels."""
    poses = []
    for item in heatmaps.detach().cpu().numpy():
        coords, _peaks = decode_array(item, config.grid_stride, config.subpixel_decoding)
        poses.append(pose_to_frame(Pose.all_visible(coords), frame_shape, config.input_size))
    return poses


def predict_clip(model: posenet.PoseNet, clip: VideoClip, device: torch.device | str = "cpu") -> list[Pose]:
    """Predict the pose of every frame of a clip with the single-frame estimator."""
    heatmaps = estimate_clip(model, clip, device=device)
    debug(f"Predicted {clip.num_frames} frames of clip '{clip.clip_id}'", debugmode_only=True)
    return heatmaps_to_poses(heatmaps, model.config, clip.frames[0].shape)


def loss_decreased(losses: Sequence[float], window: int = 10) -> bool:
    """Compare the mean of the first and last `window` losses."""
    if len(losses) < 2:  # noqa: PLR2004
        return False
    window = max(1, min(window, len(losses) // 2))
    first = sum(losses[:window]) / window
    last = sum(losses[-window:]) / window
    return math.isfinite(last) and last < first
