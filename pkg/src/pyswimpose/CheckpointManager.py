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

from __future__ import annotations

import json
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import torch
from torch import nn

from . import temporal, training
from ._utils import is_format_compatible
from .Config import RunConfig
from .core import ModelConfig, Pose, VideoClip
from .ErrorMessage import CheckpointError, error
from .posenet import PoseNet

FORMAT_NAME = "pyswimpose-checkpoint"
FORMAT_VERSION = "1.0"

ESTIMATOR = "estimator"
REFINER_PHASE1 = "refiner-phase1"
REFINER_PHASE2 = "refiner-phase2"
KINDS = (ESTIMATOR, REFINER_PHASE1, REFINER_PHASE2)

Predictor = Callable[[VideoClip], list[Pose]]


@dataclass
class Checkpoint:
    """The content of a checkpoint archive."""

    kind: str
    run_config: RunConfig
    state: dict[str, dict[str, torch.Tensor]]
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def model_config(self) -> ModelConfig:
        return self.run_config.model_config()

    @property
    def is_temporal(self) -> bool:
        return self.kind in (REFINER_PHASE1, REFINER_PHASE2)


def save_checkpoint(
    path: str | Path,
    kind: str,
    run_config: RunConfig,
    modules: Mapping[str, nn.Module],
    extra: Mapping[str, Any] | None = None,
) -> Path:
    """Write the state of the given modules and the full run configuration into one archive.

    Args:
        path: The archive to write.
        kind: One of 'estimator', 'refiner-phase1' and 'refiner-phase2'.
        run_config: The configuration of the run that produced the modules.
        modules: The modules to store by name, e.g. {'estimator': model}.
        extra: Further JSON serializable information such as the sequence parameter l.

    Returns:
        The path of the archive.
    """
    if kind not in KINDS:
        msg = f"Unknown checkpoint kind '{kind}'. Supported kinds: {', '.join(KINDS)}"
        raise CheckpointError(msg)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format": FORMAT_NAME,
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "config": json.dumps(run_config.to_dict(), sort_keys=True),
        "extra": json.dumps(dict(extra or {}), sort_keys=True),
        "state": {
            name: {key: value.detach().cpu() for key, value in module.state_dict().items()}
            for name, module in modules.items()
        },
    }
    torch.save(payload, path)
    # the configuration next to the archive keeps runs inspectable without torch
    path.with_suffix(".json").write_text(
        json.dumps({"kind": kind, "config": run_config.to_dict(), "extra": dict(extra or {})}, indent=2),
        encoding="utf-8",
    )
    return path


def load_checkpoint(path: str | Path) -> Checkpoint:
    """Read and validate a checkpoint archive.

    Raises:
        CheckpointError: If the file is missing, not a checkpoint or of an incompatible format version.
    """
    path = Path(path)
    if not path.is_file():
        msg = f"Checkpoint {path} does not exist."
        raise CheckpointError(msg)
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as e:  # noqa: BLE001
        # torch raises a variety of exceptions for corrupt archives
        error()
        msg = f"Cannot read checkpoint {path}."
        raise CheckpointError(msg) from e

    if not isinstance(payload, dict) or payload.get("format") != FORMAT_NAME:
        msg = f"{path} is not a {FORMAT_NAME} archive."
        raise CheckpointError(msg)
    version = str(payload.get("format_version", ""))
    if not is_format_compatible(version, FORMAT_VERSION):
        msg = f"Checkpoint format version {version} of {path} is not supported (supported: {FORMAT_VERSION})."
        raise CheckpointError(msg)
    kind = str(payload.get("kind"))
    if kind not in KINDS:
        msg = f"Checkpoint {path} has an unknown kind '{kind}'."
        raise CheckpointError(msg)

    run_config = RunConfig.from_dict(json.loads(payload["config"]))
    return Checkpoint(kind, run_config, payload["state"], json.loads(payload.get("extra", "{}")))


def get_estimator_instance(config: ModelConfig) -> PoseNet:
    """Create an untrained estimator for a configuration."""
    return PoseNet(config)


def setup_model(model: nn.Module, state: Mapping[str, torch.Tensor], name: str) -> None:
    try:
        model.load_state_dict(state)
    except RuntimeError as e:
        msg = f"The stored {name} parameters do not match the architecture of the stored configuration."
        raise CheckpointError(msg) from e
    model.eval()


def estimator_from(checkpoint: Checkpoint) -> PoseNet:
    """Rebuild the estimator stored in any kind of checkpoint."""
    if checkpoint.is_temporal:
        estimator_config = ModelConfig.from_dict(checkpoint.extra["estimator_config"])
    else:
        estimator_config = checkpoint.model_config
    estimator = get_estimator_instance(estimator_config)
    setup_model(estimator, checkpoint.state["estimator"], "estimator")
    return estimator


def get_estimator(path: str | Path) -> PoseNet:
    """Load a trained single-frame estimator.

    Args:
        path: An estimator or refiner checkpoint; the latter embeds the estimator it was trained on.

    Returns:
        The estimator in evaluation mode.
    """
    return estimator_from(load_checkpoint(path))


def get_refiner(path: str | Path) -> tuple[PoseNet, temporal.RefinementNet]:
    """Load a trained refinement network together with the estimator that produces its input sequences."""
    checkpoint = load_checkpoint(path)
    if not checkpoint.is_temporal:
        msg = f"Checkpoint {path} of kind '{checkpoint.kind}' contains no refinement network."
        raise CheckpointError(msg)
    refiner = temporal.RefinementNet(checkpoint.model_config)
    setup_model(refiner, checkpoint.state["refiner"], "refiner")
    return estimator_from(checkpoint), refiner


def get_predictor(path: str | Path, device: torch.device | str = "cpu") -> tuple[Checkpoint, Predictor]:
    """Load any checkpoint and return a function predicting the poses of all frames of a clip."""
    checkpoint = load_checkpoint(path)
    estimator = estimator_from(checkpoint)
    if not checkpoint.is_temporal:
        return checkpoint, lambda clip: training.predict_clip(estimator, clip, device)

    refiner = temporal.RefinementNet(checkpoint.model_config)
    setup_model(refiner, checkpoint.state["refiner"], "refiner")
    return checkpoint, lambda clip: temporal.predict_clip(estimator, refiner, clip, device)
