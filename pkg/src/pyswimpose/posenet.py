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

"""Stage-wise fully convolutional single-frame pose estimator with intermediate supervision."""

from __future__ import annotations

import copy
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F  # noqa: N812
from torch import nn

from .conditioning import ConditionedConv2d, label_maps_batch
from .core import ConditioningMode, HeatmapStack, ModelConfig, StyleLabel
from .ErrorMessage import ConfigurationError


def scaled_channels(base: int, multiplier: float) -> int:
    """Layer width of the canonical design scaled by the channel multiplier."""
    return max(4, int(round(base * multiplier)))


@dataclass
class StageOutput:
    """Heatmaps of every stage [B, J, H, W] and the image features shared by the stages >= 2."""

    per_stage: list[torch.Tensor]
    shared_features: torch.Tensor

    @property
    def final(self) -> torch.Tensor:
        return self.per_stage[-1]

    def stacks(self, index: int, grid_stride: int) -> list[HeatmapStack]:
        """The per-stage heatmaps of batch item `index` as HeatmapStack values."""
        return [HeatmapStack(stage[index].detach().cpu().numpy(), grid_stride) for stage in self.per_stage]


class FeatureExtractor(nn.Module):
    """VGG-like image encoder reducing the input resolution by the grid stride."""

    def __init__(self, config: ModelConfig) -> None:
        super().__init__()
        num_pools = int(round(math.log2(config.grid_stride)))
        if 2**num_pools != config.grid_stride:
            msg = f"The grid stride {config.grid_stride} (input_size / heatmap_size) must be a power of two."
            raise ConfigurationError(msg)

        widths = [64, 128, 256]
        layers: list[nn.Module] = []
        in_channels = 3
        for block in range(num_pools):
            out_channels = scaled_channels(widths[min(block, len(widths) - 1)], config.channel_multiplier)
            layers += [
                nn.Conv2d(in_channels, out_channels, 3, padding=1),
                nn.ReLU(inplace=True),
                nn.Conv2d(out_channels, out_channels, 3, padding=1),
                nn.ReLU(inplace=True),
                nn.MaxPool2d(2, 2),
            ]
            in_channels = out_channels
        self.out_channels = scaled_channels(128, config.channel_multiplier)
        layers += [
            nn.Conv2d(in_channels, scaled_channels(256, config.channel_multiplier), 3, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(scaled_channels(256, config.channel_multiplier), self.out_channels, 3, padding=1),
            nn.ReLU(inplace=True),
        ]
        self.layers = nn.Sequential(*layers)

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        return self.layers(image)


class PoseStage(nn.Module):
    """A refinement stage: `depth` large-kernel convolutions followed by two 1x1 convolutions.

    With a conditioning mode other than NONE the layers selected by `receives_labels` consume class label maps.
    """

    def __init__(  # noqa: PLR0913
        self,
        in_channels: int,
        hidden_channels: int,
        out_channels: int,
        kernel_size: int,
        depth: int,
        mode: ConditioningMode = ConditioningMode.NONE,
        stage: int | None = None,
    ) -> None:
        super().__init__()
        self.mode = mode
        specs = [(kernel_size, hidden_channels)] * depth + [(1, hidden_channels), (1, out_channels)]
        layers = []
        channels = in_channels
        for index, (kernel, width) in enumerate(specs):
            layers.append(ConditionedConv2d(channels, width, kernel, mode, index, stage))
            channels = width
        self.layers = nn.ModuleList(layers)

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def label_layer_count(self) -> int:
        """Number of convolutions of this stage that consume class label maps."""
        return sum(1 for layer in self.layers if isinstance(layer, ConditionedConv2d) and layer.conditioned)

    def forward(self, features: torch.Tensor, labels: torch.Tensor | None = None) -> torch.Tensor:
        for index, layer in enumerate(self.layers):
            features = layer(features, labels)
            if index < len(self.layers) - 1:
                features = F.relu(features)
        return features


class PoseNet(nn.Module):
    """Stage 1 maps image features to J heatmaps, stages 2..S refine them with growing receptive field."""

    def __init__(self, config: ModelConfig) -> None:
        super().__init__()
        self.config = config
        num_joints = config.num_joints
        self.features = FeatureExtractor(config)
        feature_channels = self.features.out_channels
        hidden = scaled_channels(512, config.channel_multiplier)
        self.stage1 = nn.Sequential(
            nn.Conv2d(feature_channels, hidden, 1),
            nn.ReLU(inplace=True),
            nn.Conv2d(hidden, num_joints, 1),
        )
        stage_width = scaled_channels(128, config.channel_multiplier)
        self.stages = nn.ModuleList(
            PoseStage(
                num_joints + feature_channels,
                stage_width,
                num_joints,
                config.stage_kernel,
                config.stage_depth,
                config.conditioning_mode if config.stage_is_conditioned(stage) else ConditioningMode.NONE,
                stage,
            )
            for stage in range(2, config.num_stages + 1)
        )

    def forward(self, image: torch.Tensor, styles: Sequence[StyleLabel] | None = None) -> StageOutput:
        """Compute the heatmaps of all stages.

        Args:
            image: Normalized input images [B, 3, input_size, input_size].
            styles: One style per batch item; required iff the configuration enables conditioning and
                ignored otherwise.

        Returns:
            The S heatmap stacks and the shared image features.
        """
        if self.config.is_conditioned and styles is None:
            msg = f"Conditioning mode '{self.config.conditioning_mode.value}' requires a style for every image."
            raise ConfigurationError(msg)

        shared = self.features(image)
        heatmaps = self.stage1(shared)
        per_stage = [heatmaps]

        labels = None
        if self.config.is_conditioned and styles is not None:
            if len(styles) != image.shape[0]:
                msg = f"Got {len(styles)} styles for a batch of {image.shape[0]} images."
                raise ConfigurationError(msg)
            labels = label_maps_batch(styles, shared.shape[-2], shared.shape[-1], shared.device)

        for stage in self.stages:
            heatmaps = stage(torch.cat([heatmaps, shared], dim=1), labels)
            per_stage.append(heatmaps)
        return StageOutput(per_stage, shared)

    @torch.no_grad()
    def predict(self, image: torch.Tensor, styles: Sequence[StyleLabel] | None = None) -> torch.Tensor:
        """Final-stage heatmaps in inference mode."""
        was_training = self.training
        self.eval()
        try:
            return self(image, styles).final
        finally:
            self.train(was_training)


def loss(outputs: StageOutput, target: torch.Tensor | HeatmapStack) -> torch.Tensor:
    """Sum over stages of the mean squared error between each stage's heatmaps and the target."""
    if isinstance(target, HeatmapStack):
        target = torch.from_numpy(np.array(target.data)).unsqueeze(0)
    target = target.to(outputs.final.device, outputs.final.dtype)
    total = outputs.final.new_zeros(())
    for index, stage in enumerate(outputs.per_stage):
        if stage.shape != target.shape:
            msg = f"Stage {index + 1} heatmaps {list(stage.shape)} do not match the target {list(target.shape)}."
            raise ValueError(msg)
        total = total + F.mse_loss(stage, target)
    return total


@torch.no_grad()
def influence_radius(
    model: PoseNet,
    image: torch.Tensor,
    styles: Sequence[StyleLabel] | None = None,
    pixel: tuple[int, int] | None = None,
) -> list[int]:
    """Measure how far a single-pixel input change spreads in every stage's heatmaps.

    Returns:
        Per stage, the largest Chebyshev distance (in cells) between the cell containing the perturbed pixel and
        any cell whose value changed.
    """
    replica = copy.deepcopy(model).double().eval()
    image = image[:1].double()
    height, width = image.shape[-2:]
    row, col = pixel if pixel is not None else (height // 2, width // 2)
    perturbed = image.clone()
    perturbed[:, :, row, col] += 1.0

    base = replica(image, styles).per_stage
    changed = replica(perturbed, styles).per_stage
    stride = model.config.grid_stride
    center_row, center_col = row // stride, col // stride

    radii = []
    for before, after in zip(base, changed):
        diff = (after - before).abs().amax(dim=(0, 1))
        rows, cols = torch.nonzero(diff > 0, as_tuple=True)
        if len(rows) == 0:
            radii.append(-1)
            continue
        distance = torch.maximum((rows - center_row).abs(), (cols - center_col).abs())
        radii.append(int(distance.max()))
    return radii
