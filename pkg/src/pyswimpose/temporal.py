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

"""Temporal refinement of single-frame heatmap estimates.

The refinement input of frame t is the strided sequence of estimates at t-2l, t-2(l-1), ..., t+2l. The first l
estimates feed the "past" branch, the last l the "future" branch and the estimate of frame t together with the
frame itself the "present" branch. A per-joint temporal pooling layer merges the three branch predictions.
"""

from __future__ import annotations

import copy
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import numpy.typing as npt
import torch
import torch.nn.functional as F  # noqa: N812
from torch import nn
from torch.func import functional_call
from torch.utils.data import Dataset

from ._utils import seed_everything
from .conditioning import ConditionedConv2d, label_maps_batch
from .core import HeatmapStack, ModelConfig, Pose, SequenceSpec, StyleLabel, VideoClip
from .ErrorMessage import ConfigurationError, debug
from .heatmap import render_target_array
from .posenet import FeatureExtractor, PoseNet, PoseStage, scaled_channels
from .training import (
    LossLog,
    TrainSettings,
    endless_batches,
    estimate_clip,
    heatmaps_to_poses,
    optimize,
    pose_to_input,
    prepare_image,
)
from .UserInterface import message_info

BRANCHES = ("past", "present", "future")


def sequence_indices(t: int, num_frames: int, spec: SequenceSpec) -> tuple[int, ...]:
    """1-based frame indices t-2l, ..., t+2l sampled with stride 2 and clamped to [1, T]."""
    if num_frames < 1:
        msg = "Cannot assemble a sequence from an empty clip."
        raise ValueError(msg)
    if not 1 <= t <= num_frames:
        msg = f"Frame index {t} outside [1, {num_frames}]."
        raise ValueError(msg)
    return tuple(min(max(t + 2 * offset, 1), num_frames) for offset in range(-spec.l, spec.l + 1))


@dataclass(frozen=True)
class PoseSequence:
    """The k' = 2l+1 single-frame estimates around frame `center_t`, ordered by time."""

    center_t: int
    indices: tuple[int, ...]
    stacks: tuple[HeatmapStack, ...]
    spec: SequenceSpec

    def __post_init__(self) -> None:
        if len(self.stacks) != self.spec.k_prime or len(self.indices) != self.spec.k_prime:
            msg = f"A sequence with l={self.spec.l} needs {self.spec.k_prime} stacks, got {len(self.stacks)}."
            raise ConfigurationError(msg)

    def as_tensor(self) -> torch.Tensor:
        """The stacks as tensor [k', J, H, W]."""
        return torch.from_numpy(np.stack([stack.data for stack in self.stacks]))


def assemble_sequence(clip_estimates: Sequence[HeatmapStack], t: int, spec: SequenceSpec) -> PoseSequence:
    """Assemble the strided sequence of estimates around frame t.

    Args:
        clip_estimates: The single-frame estimates of all T frames of a clip, frame 1 first.
        t: The 1-based index of the frame to refine.
        spec: The sequence length parameters.

    Returns:
        The sequence; indices outside the clip are clamped to its first or last frame.
    """
    indices = sequence_indices(t, len(clip_estimates), spec)
    return PoseSequence(t, indices, tuple(clip_estimates[i - 1] for i in indices), spec)


@dataclass
class BranchOutputs:
    """Heatmap predictions [B, J, H, W] of the three branches."""

    past: torch.Tensor
    present: torch.Tensor
    future: torch.Tensor

    def stacks(self, index: int, grid_stride: int) -> dict[str, HeatmapStack]:
        return {
            name: HeatmapStack(getattr(self, name)[index].detach().cpu().numpy(), grid_stride) for name in BRANCHES
        }


@dataclass(frozen=True)
class TemporalPoolingWeights:
    """Per joint: weights of the past, present and future predictions [J, 3] and a bias [J]."""

    weights: npt.NDArray[np.float64]
    bias: npt.NDArray[np.float64]

    def average(self) -> dict[str, float]:
        """Weight of every branch averaged over all joints."""
        return {name: float(self.weights[:, index].mean()) for index, name in enumerate(BRANCHES)}

    def mean_absolute(self) -> dict[str, float]:
        return {name: float(np.abs(self.weights[:, index]).mean()) for index, name in enumerate(BRANCHES)}

    def table(self) -> str:
        average = self.average()
        header = "".join(f"{name:>10}" for name in BRANCHES)
        values = "".join(f"{average[name]:>10.3f}" for name in BRANCHES)
        return f"{'':<12}{header}\n{'Avg. weight':<12}{values}"


class TemporalPooling(nn.Module):
    """A 1x1 filter per joint over its three branch heatmaps: w_past*past + w_present*present + w_future*future + b."""

    def __init__(self, num_joints: int) -> None:
        super().__init__()
        self.weight = nn.Parameter(torch.full((num_joints, len(BRANCHES)), 1.0 / len(BRANCHES)))
        self.bias = nn.Parameter(torch.zeros(num_joints))

    def forward(self, past: torch.Tensor, present: torch.Tensor, future: torch.Tensor) -> torch.Tensor:
        stacked = torch.stack([past, present, future], dim=2)
        pooled = torch.einsum("bjkhw,jk->bjhw", stacked, self.weight.to(stacked.dtype))
        return pooled + self.bias.to(stacked.dtype)[None, :, None, None]

    def weights(self) -> TemporalPoolingWeights:
        return TemporalPoolingWeights(
            self.weight.detach().cpu().double().numpy(),
            self.bias.detach().cpu().double().numpy(),
        )


class OuterBranch(nn.Module):
    """Past or future branch: four large-kernel convolutions around one x2 max-pool/upsample pair."""

    def __init__(self, in_channels: int, config: ModelConfig) -> None:
        super().__init__()
        width = scaled_channels(128, config.channel_multiplier)
        mode = config.conditioning_mode
        kernel = config.branch_kernel
        specs = [(in_channels, width, kernel), (width, width, kernel), (width, width, kernel), (width, width, kernel)]
        self.convs = nn.ModuleList(
            ConditionedConv2d(cin, cout, k, mode, index) for index, (cin, cout, k) in enumerate(specs)
        )
        self.head = ConditionedConv2d(width, config.num_joints, 1, mode, len(specs))

    @staticmethod
    def _labels_for(labels: torch.Tensor | None, size: torch.Size) -> torch.Tensor | None:
        if labels is None:
            return None
        # label maps are spatially constant, so cropping resizes them
        return labels[:, :, : size[0], : size[1]]

    def forward(self, sequence: torch.Tensor, labels: torch.Tensor | None = None) -> torch.Tensor:
        full_size = sequence.shape[-2:]
        x = F.relu(self.convs[0](sequence, self._labels_for(labels, full_size)))
        x = F.max_pool2d(x, 2, ceil_mode=True)
        for layer in self.convs[1:3]:
            x = F.relu(layer(x, self._labels_for(labels, x.shape[-2:])))
        x = F.interpolate(x, size=full_size, mode="nearest")
        x = F.relu(self.convs[3](x, self._labels_for(labels, full_size)))
        return self.head(x, self._labels_for(labels, full_size))


class RefinementNet(nn.Module):
    """Three-branch temporal refinement network with a learned temporal pooling layer."""

    def __init__(self, config: ModelConfig) -> None:
        super().__init__()
        self.config = config
        self.spec = config.seq_spec
        num_joints = config.num_joints
        self.features = FeatureExtractor(config)
        self.present = PoseStage(
            num_joints + self.features.out_channels,
            scaled_channels(128, config.channel_multiplier),
            num_joints,
            config.stage_kernel,
            config.stage_depth,
            config.conditioning_mode,
        )
        self.past: OuterBranch | None = None
        self.future: OuterBranch | None = None
        if self.spec.l > 0:
            self.past = OuterBranch(self.spec.l * num_joints, config)
            self.future = OuterBranch(self.spec.l * num_joints, config)
        self.pooling = TemporalPooling(num_joints)

    def init_from_estimator(self, estimator: PoseNet) -> None:
        """Start the image encoder from the estimator's trained encoder.

        The present branch starts from the estimator's last stage if both have the same layout, so that with l=0 the
        refiner begins as a copy of that stage.
        """
        self.features.load_state_dict(estimator.features.state_dict())
        if not estimator.stages:
            return
        last = estimator.stages[-1].state_dict()
        own = self.present.state_dict()
        if last.keys() == own.keys() and all(last[key].shape == own[key].shape for key in own):
            self.present.load_state_dict(last)

    def branch_parameters(self) -> list[nn.Parameter]:
        return [param for name, param in self.named_parameters() if not name.startswith("pooling.")]

    def pooling_parameters(self) -> list[nn.Parameter]:
        return list(self.pooling.parameters())

    def forward(
        self,
        image: torch.Tensor,
        sequence: torch.Tensor,
        styles: Sequence[StyleLabel] | None = None,
    ) -> tuple[BranchOutputs, torch.Tensor]:
        """Refine the pose of the current frames.

        Args:
            image: Normalized current frames [B, 3, S, S].
            sequence: Single-frame estimates [B, k', J, H, W], ordered by time.
            styles: One style per batch item; required iff conditioning is enabled.

        Returns:
            The three branch predictions and the pooled heatmaps [B, J, H, W].
        """
        l = self.spec.l  # noqa: E741
        if sequence.dim() != 5 or sequence.shape[1] != self.spec.k_prime:  # noqa: PLR2004
            msg = f"Expected a sequence [B, {self.spec.k_prime}, J, H, W] for l={l}, got {list(sequence.shape)}."
            raise ConfigurationError(msg)
        if self.config.is_conditioned and styles is None:
            msg = f"Conditioning mode '{self.config.conditioning_mode.value}' requires a style for every frame."
            raise ConfigurationError(msg)

        labels = None
        if self.config.is_conditioned and styles is not None:
            labels = label_maps_batch(styles, sequence.shape[-2], sequence.shape[-1], sequence.device)

        features = self.features(image)
        present = self.present(torch.cat([sequence[:, l], features], dim=1), labels)
        if self.past is not None and self.future is not None:
            past = self.past(sequence[:, :l].flatten(1, 2), labels)
            future = self.future(sequence[:, l + 1 :].flatten(1, 2), labels)
        else:
            # without past and future input the outer branches contribute nothing
            past = torch.zeros_like(present)
            future = torch.zeros_like(present)
        branches = BranchOutputs(past, present, future)
        return branches, self.pooling(past, present, future)


def refine(
    model: RefinementNet,
    x_t: torch.Tensor,
    seq: PoseSequence,
    style: StyleLabel | None = None,
) -> tuple[BranchOutputs, HeatmapStack]:
    """Refine the estimate of a single frame.

    Args:
        model: The refinement network.
        x_t: The normalized frame [3, S, S] at time seq.center_t.
        seq: The assembled sequence of single-frame estimates.
        style: The clip style, required iff the model is conditioned.

    Returns:
        The three branch predictions and the pooled stack h*_t.
    """
    if seq.spec != model.spec:
        msg = f"The sequence was assembled for l={seq.spec.l} but the model expects l={model.spec.l}."
        raise ConfigurationError(msg)
    grid_stride = seq.stacks[0].grid_stride
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            device = next(model.parameters()).device
            styles = [style] if style is not None else None
            branches, pooled = model(x_t.unsqueeze(0).to(device), seq.as_tensor().unsqueeze(0).to(device), styles)
    finally:
        model.train(was_training)
    return branches, HeatmapStack(pooled[0].cpu().numpy(), grid_stride)


class SequenceDataset(Dataset[tuple[torch.Tensor, torch.Tensor, torch.Tensor, int]]):
    """Every frame of a set of clips as (image, sequence of estimates, target heatmaps, style index)."""

    def __init__(self, clips: Sequence[VideoClip], estimates: Sequence[torch.Tensor], config: ModelConfig) -> None:
        if len(clips) != len(estimates):
            msg = f"Got estimates for {len(estimates)} of {len(clips)} clips."
            raise ValueError(msg)
        self.clips = list(clips)
        self.estimates = list(estimates)
        self.config = config
        self.items = [(c, t) for c, clip in enumerate(self.clips) for t in range(1, clip.num_frames + 1)]

    def __len__(self) -> int:
        return len(self.items)

    def __getitem__(self, index: int) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, int]:
        clip_index, t = self.items[index % len(self.items)]
        clip = self.clips[clip_index]
        indices = sequence_indices(t, clip.num_frames, self.config.seq_spec)
        sequence = self.estimates[clip_index][[i - 1 for i in indices]]
        frame = clip.frame(t)
        pose = pose_to_input(clip.annotation(t), frame.shape, self.config.input_size)
        target = torch.from_numpy(render_target_array(pose.coords, self.config))
        return prepare_image(frame, self.config.input_size), sequence, target, clip.style.index


def estimate_clips(
    estimator: PoseNet,
    clips: Sequence[VideoClip],
    device: torch.device | str = "cpu",
) -> list[torch.Tensor]:
    """Single-frame estimates [T, J, H, W] of every clip with the frozen estimator."""
    return [estimate_clip(estimator, clip, device=device) for clip in clips]


def _styles(model: RefinementNet, style_index: torch.Tensor) -> list[StyleLabel] | None:
    if not model.config.is_conditioned:
        return None
    return [StyleLabel.from_index(int(i)) for i in style_index]


def _set_trainable(parameters: Sequence[nn.Parameter], trainable: bool) -> None:
    for param in parameters:
        param.requires_grad_(trainable)


def train_phase1(
    model: RefinementNet,
    dataset: SequenceDataset,
    settings: TrainSettings,
    loss_log: str | Path | None = None,
    device: torch.device | str = "cpu",
) -> list[float]:
    """Train every branch to predict the target of the current frame on its own; pooling is left untouched."""
    seed_everything(settings.seed)
    model.to(device).train()
    _set_trainable(model.pooling_parameters(), False)
    _set_trainable(model.branch_parameters(), True)
    message_info(f"Temporal phase 1: training branches with l={model.spec.l} on {len(dataset)} frames")

    def compute_loss(batch: tuple[torch.Tensor, ...]) -> torch.Tensor:
        images, sequences, targets, style_index = batch
        targets = targets.to(device)
        branches, _pooled = model(images.to(device), sequences.to(device), _styles(model, style_index))
        total = F.mse_loss(branches.present, targets)
        if model.spec.l > 0:
            total = total + F.mse_loss(branches.past, targets) + F.mse_loss(branches.future, targets)
        return total

    try:
        return optimize(
            model.branch_parameters(),
            endless_batches(dataset, settings),  # type: ignore[arg-type]
            compute_loss,
            settings,
            LossLog(loss_log),
            name="temporal-phase1",
        )
    finally:
        _set_trainable(model.pooling_parameters(), True)
        model.eval()


def train_phase2(
    model: RefinementNet,
    dataset: SequenceDataset,
    settings: TrainSettings,
    loss_log: str | Path | None = None,
    device: torch.device | str = "cpu",
) -> list[float]:
    """Train only the temporal pooling weights on the pooled output; all branches stay frozen."""
    seed_everything(settings.seed)
    model.to(device).eval()
    _set_trainable(model.branch_parameters(), False)
    _set_trainable(model.pooling_parameters(), True)
    message_info(f"Temporal phase 2: training temporal pooling on {len(dataset)} frames")

    def compute_loss(batch: tuple[torch.Tensor, ...]) -> torch.Tensor:
        images, sequences, targets, style_index = batch
        _branches, pooled = model(images.to(device), sequences.to(device), _styles(model, style_index))
        return F.mse_loss(pooled, targets.to(device))

    try:
        losses = optimize(
            model.pooling_parameters(),
            endless_batches(dataset, settings),  # type: ignore[arg-type]
            compute_loss,
            settings,
            LossLog(loss_log),
            name="temporal-phase2",
        )
    finally:
        _set_trainable(model.branch_parameters(), True)
    debug(f"Temporal pooling weights:\n{model.pooling.weights().table()}")
    return losses


@torch.no_grad()
def refine_clip(
    model: RefinementNet,
    clip: VideoClip,
    estimates: torch.Tensor,
    batch_size: int = 16,
    device: torch.device | str = "cpu",
    branch: str | None = None,
) -> torch.Tensor:
    """Refined heatmaps [T, J, H, W] of every frame of a clip, including the frames near its boundaries.

    With `branch` set to past, present or future the prediction of that branch alone is returned instead of the
    pooled one.
    """
    if branch is not None and branch not in BRANCHES:
        msg = f"Unknown branch '{branch}'. Supported: {', '.join(BRANCHES)}"
        raise ValueError(msg)
    model.to(device).eval()
    spec = model.spec
    outputs = []
    for start in range(1, clip.num_frames + 1, batch_size):
        frames = range(start, min(start + batch_size, clip.num_frames + 1))
        images = torch.stack([prepare_image(clip.frame(t), model.config.input_size) for t in frames])
        sequences = torch.stack(
            [estimates[[i - 1 for i in sequence_indices(t, clip.num_frames, spec)]] for t in frames],
        )
        styles = [clip.style] * len(frames) if model.config.is_conditioned else None
        branches, pooled = model(images.to(device), sequences.to(device), styles)
        outputs.append((pooled if branch is None else getattr(branches, branch)).cpu())
    return torch.cat(outputs)


def predict_clip(
    estimator: PoseNet,
    model: RefinementNet,
    clip: VideoClip,
    device: torch.device | str = "cpu",
    branch: str | None = None,
) -> list[Pose]:
    """Predict the pose of every frame with single-frame estimates refined over time, or by one branch alone."""
    estimates = estimate_clip(estimator, clip, device=device)
    refined = refine_clip(model, clip, estimates, device=device, branch=branch)
    return heatmaps_to_poses(refined, model.config, clip.frames[0].shape)


def pooling_gradcheck(
    model: RefinementNet,
    image: torch.Tensor,
    sequence: torch.Tensor,
    styles: Sequence[StyleLabel] | None = None,
    rtol: float = 1e-4,
) -> bool:
    """Compare analytic gradients of the pooled output w.r.t. the pooling weights with central differences.

    The check runs the full network in double precision and raises if any gradient deviates.
    """
    replica = copy.deepcopy(model).double().eval()
    image = image.double()
    sequence = sequence.double()
    weight = replica.pooling.weight.detach().clone().requires_grad_(True)
    bias = replica.pooling.bias.detach().clone().requires_grad_(True)

    def pooled(weight: torch.Tensor, bias: torch.Tensor) -> torch.Tensor:
        params = {"pooling.weight": weight, "pooling.bias": bias}
        _branches, output = functional_call(replica, params, (image, sequence, styles))
        return output  # type: ignore[no-any-return]

    return bool(torch.autograd.gradcheck(pooled, (weight, bias), eps=1e-6, atol=1e-8, rtol=rtol, fast_mode=True))


def pooling_weight_summary(model: RefinementNet) -> dict[str, float]:
    """Pooling weight of the past, present and future branch, averaged over all joints."""
    return model.pooling.weights().average()


def finite_difference_check(
    function: Callable[[torch.Tensor], torch.Tensor],
    point: torch.Tensor,
    eps: float = 1e-6,
) -> float:
    """Largest relative deviation between the autograd gradient of sum(function) and central differences.

    Args:
        function: Maps a tensor to any tensor; its outputs are summed to a scalar.
        point: Where the gradient is evaluated; converted to double precision.
        eps: Step of the central differences.

    Returns:
        max |analytic - numeric| / max(|numeric|, 1), over all entries of the point.
    """
    point = point.detach().double().clone().requires_grad_(True)
    (analytic,) = torch.autograd.grad(function(point).sum(), point)
    numeric = torch.zeros_like(point)
    flat_point = point.detach().view(-1)
    flat_numeric = numeric.view(-1)
    with torch.no_grad():
        for index in range(flat_point.numel()):
            shifted = flat_point.clone()
            shifted[index] += eps
            upper = function(shifted.view_as(point)).sum()
            shifted[index] -= 2 * eps
            lower = function(shifted.view_as(point)).sum()
            flat_numeric[index] = (upper - lower) / (2 * eps)
    deviation = (analytic - numeric).abs() / numeric.abs().clamp(min=1.0)
    return float(deviation.max())
