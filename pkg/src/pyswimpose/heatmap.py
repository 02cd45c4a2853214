"""Conversion between poses and heatmap stacks.

Cell (row, col) of a heatmap covers input pixels [col * stride, (col + 1) * stride) horizontally and likewise
vertically, so its center lies at pixel col * stride + (stride - 1) / 2 (pixel coordinates have their origin at the
center of the top-left pixel).
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import torch

from .core import NUM_JOINTS, HeatmapStack, ModelConfig, Pose


@dataclass(frozen=True)
class DecodedPose:
    """A predicted pose together with the heatmap value at each decoded location."""

    pose: Pose
    peak_confidence: npt.NDArray[np.float32]


def pixel_to_cell(coords: npt.NDArray[np.float64], grid_stride: int) -> npt.NDArray[np.float64]:
    """Map pixel coordinates to continuous cell coordinates."""
    return (coords - (grid_stride - 1) / 2.0) / grid_stride


def cell_to_pixel(cells: npt.NDArray[np.float64], grid_stride: int) -> npt.NDArray[np.float64]:
    """Map (continuous) cell coordinates to pixel coordinates of the cell centers."""
    return cells * grid_stride + (grid_stride - 1) / 2.0


def render_target(pose: Pose, config: ModelConfig) -> HeatmapStack:
    """Render the ground truth heatmaps of a pose given in input-image pixels.

    Every joint gets an unnormalized isotropic Gaussian with peak 1.0 and a standard deviation of
    `config.gaussian_sigma` cells. Coordinates outside the input image are clamped to its border.
    """
    return HeatmapStack(render_target_array(pose.coords, config), config.grid_stride)


def render_target_array(coords: npt.NDArray[np.float64], config: ModelConfig) -> npt.NDArray[np.float32]:
    size = config.heatmap_size
    clamped = np.clip(coords, 0.0, config.input_size - 1)
    centers = pixel_to_cell(clamped, config.grid_stride)
    grid = np.arange(size, dtype=np.float64)
    # separable Gaussian: exp(-(dx^2 + dy^2) / 2s^2) = exp(-dx^2 / 2s^2) * exp(-dy^2 / 2s^2)
    two_sigma_sq = 2.0 * config.gaussian_sigma**2
    gx = np.exp(-((grid[None, :] - centers[:, 0:1]) ** 2) / two_sigma_sq)
    gy = np.exp(-((grid[None, :] - centers[:, 1:2]) ** 2) / two_sigma_sq)
    maps = gy[:, :, None] * gx[:, None, :]
    return maps.astype(np.float32)


def render_targets(poses: Sequence[Pose], config: ModelConfig) -> torch.Tensor:
    """Render a batch of targets as a float tensor [B, J, H, W]."""
    batch = np.stack([render_target_array(pose.coords, config) for pose in poses])
    return torch.from_numpy(batch)


def _argmax_cells(maps: npt.NDArray[np.float32]) -> tuple[npt.NDArray[np.int64], npt.NDArray[np.int64]]:
    num_maps, _height, width = maps.shape
    # np.argmax returns the first maximum, i.e. the lowest row-major index on ties
    flat_index = np.argmax(maps.reshape(num_maps, -1), axis=1)
    return flat_index // width, flat_index % width


def _subpixel_offsets(
    maps: npt.NDArray[np.float32],
    rows: npt.NDArray[np.int64],
    cols: npt.NDArray[np.int64],
) -> npt.NDArray[np.float64]:
    """Quarter-cell shift of each argmax toward its higher neighbour, per axis."""
    _num_maps, height, width = maps.shape
    offsets = np.zeros((len(rows), 2))
    for j, (row, col) in enumerate(zip(rows, cols)):
        if 0 < col < width - 1:
            offsets[j, 0] = 0.25 * np.sign(maps[j, row, col + 1] - maps[j, row, col - 1])
        if 0 < row < height - 1:
            offsets[j, 1] = 0.25 * np.sign(maps[j, row + 1, col] - maps[j, row - 1, col])
    return offsets


def decode_array(
    maps: npt.NDArray[np.float32],
    grid_stride: int,
    subpixel: bool = False,
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float32]]:
    """Decode joint coordinates (pixels) and peak values from an array [J, H, W]."""
    rows, cols = _argmax_cells(maps)
    cells = np.stack([cols, rows], axis=1).astype(np.float64)
    if subpixel:
        cells += _subpixel_offsets(maps, rows, cols)
    peaks = maps[np.arange(maps.shape[0]), rows, cols].astype(np.float32)
    return cell_to_pixel(cells, grid_stride), peaks


def decode_pose(heatmaps: HeatmapStack, subpixel: bool = False) -> DecodedPose:
    """Decode a pose by taking the argmax of every joint's heatmap.

    Args:
        heatmaps: The heatmap stack to decode.
        subpixel: If True, shift each argmax by a quarter cell toward its higher neighbour.

    Returns:
        The decoded pose in input-image pixels (all joints flagged visible) and the peak confidences.
    """
    coords, peaks = decode_array(heatmaps.data, heatmaps.grid_stride, subpixel)
    return DecodedPose(Pose(coords, np.ones(NUM_JOINTS, dtype=bool)), peaks)


def decode_batch(heatmaps: torch.Tensor, grid_stride: int, subpixel: bool = False) -> list[DecodedPose]:
    """Decode every item of a tensor [B, J, H, W]."""
    array = heatmaps.detach().float().cpu().numpy()
    return [decode_pose(HeatmapStack(item, grid_stride), subpixel) for item in array]
