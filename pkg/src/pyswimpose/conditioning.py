"""One-hot class label maps and their injection into convolution layers.

A label map stack has one channel per style, in StyleLabel order; the channel of the given style is filled with
ones and the others with zeros. Concatenated to the input of a convolution, the constant channels shift every
output activation away from the border by the sum of the kernel weights of the active channel, i.e. they act as
a style dependent bias.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import torch
from torch import nn

from .core import NUM_STYLES, ConditioningMode, StyleLabel
from .ErrorMessage import ConfigurationError


@dataclass(frozen=True)
class ClassLabelMaps:
    """Spatially constant one-hot maps [4, h, w] for a single style."""

    data: npt.NDArray[np.float32]
    style: StyleLabel

    @property
    def size(self) -> tuple[int, int]:
        return self.data.shape[1], self.data.shape[2]

    def as_tensor(self, device: torch.device | str | None = None) -> torch.Tensor:
        return torch.from_numpy(np.ascontiguousarray(self.data)).to(device)


def make_label_maps(style: StyleLabel, h: int, w: int) -> ClassLabelMaps:
    """Create the class label maps of a style with spatial size h x w."""
    if h < 1 or w < 1:
        msg = f"Label maps need a positive size, got {h}x{w}."
        raise ValueError(msg)
    data = np.zeros((NUM_STYLES, h, w), dtype=np.float32)
    data[style.index] = 1.0
    return ClassLabelMaps(data, style)


def label_maps_batch(
    styles: Sequence[StyleLabel],
    h: int,
    w: int,
    device: torch.device | str | None = None,
) -> torch.Tensor:
    """Label maps of a batch of styles as a tensor [B, 4, h, w]."""
    one_hot = torch.zeros(len(styles), NUM_STYLES, device=device)
    one_hot[torch.arange(len(styles)), torch.tensor([style.index for style in styles])] = 1.0
    return one_hot[:, :, None, None].expand(-1, -1, h, w).contiguous()


def receives_labels(mode: ConditioningMode, layer_index: int) -> bool:
    """Whether the convolution with the 0-based index `layer_index` of a conditioned stage gets label channels."""
    if mode is ConditioningMode.ONCE:
        return layer_index == 0
    return mode is ConditioningMode.REPEATED


def inject(
    features: torch.Tensor,
    maps: ClassLabelMaps | torch.Tensor,
    mode: ConditioningMode,
    stage: int | None = None,
    layer_index: int = 0,
) -> torch.Tensor:
    """Concatenate label channels to the input of a convolution layer of a conditioned stage.

    Args:
        features: Feature tensor [C, H, W] or [B, C, H, W].
        maps: Label maps matching the spatial size of the features, as ClassLabelMaps or tensor.
        mode: ONCE injects into the first layer of the stage only, REPEATED into every layer.
        stage: The 1-based estimator stage index, None for the branches of the refinement network. Stage 1 is never
            conditioned.
        layer_index: The 0-based index of the convolution layer within the stage.

    Returns:
        The features with the 4 label channels appended, or the unchanged features if the layer receives none.
    """
    if stage is not None and stage < 2:  # noqa: PLR2004
        msg = f"Class label maps cannot be injected into stage {stage}; the first stage is never conditioned."
        raise ConfigurationError(msg)
    if mode is ConditioningMode.NONE or not receives_labels(mode, layer_index):
        return features

    labels = maps.as_tensor(features.device) if isinstance(maps, ClassLabelMaps) else maps
    labels = labels.to(dtype=features.dtype, device=features.device)
    if tuple(labels.shape[-2:]) != tuple(features.shape[-2:]):
        msg = f"Label maps of size {tuple(labels.shape[-2:])} do not match features {tuple(features.shape[-2:])}."
        raise ValueError(msg)
    if features.dim() == 4 and labels.dim() == 3:  # noqa: PLR2004
        labels = labels.unsqueeze(0).expand(features.shape[0], -1, -1, -1)
    return torch.cat([features, labels], dim=-3)


class ConditionedConv2d(nn.Module):
    """A 'same' padded convolution that consumes 4 extra label channels if `inject` feeds its layer.

    The label channel weights are part of the same nn.Conv2d and therefore share its random initialization.
    """

    def __init__(  # noqa: PLR0913
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        mode: ConditioningMode = ConditioningMode.NONE,
        layer_index: int = 0,
        stage: int | None = None,
    ) -> None:
        super().__init__()
        self.in_features = in_channels
        self.mode = mode
        self.layer_index = layer_index
        self.stage = stage
        self.conditioned = mode is not ConditioningMode.NONE and receives_labels(mode, layer_index)
        extra = NUM_STYLES if self.conditioned else 0
        self.conv = nn.Conv2d(in_channels + extra, out_channels, kernel_size, padding=kernel_size // 2)

    def forward(self, features: torch.Tensor, labels: torch.Tensor | None = None) -> torch.Tensor:
        if labels is None:
            if self.conditioned:
                msg = "This convolution is conditioned and requires class label maps."
                raise ConfigurationError(msg)
            return self.conv(features)
        return self.conv(inject(features, labels, self.mode, self.stage, self.layer_index))

    def class_bias(self, style: StyleLabel) -> torch.Tensor:
        """The activation shift per output channel caused by the label maps of `style` away from the border."""
        if not self.conditioned:
            return torch.zeros(self.conv.out_channels)
        return self.conv.weight[:, self.in_features + style.index].sum(dim=(-2, -1)).detach()


def interior_slice(size: int, kernel_size: int) -> slice:
    """Positions at least a kernel radius away from the border, where zero padding has no influence."""
    radius = kernel_size // 2
    return slice(radius, size - radius)
