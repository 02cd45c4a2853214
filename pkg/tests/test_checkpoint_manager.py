"""Test saving and restoring trained models."""

from __future__ import annotations

import json
from pathlib import Path
from unittest.mock import patch

import pytest
import torch

from pyswimpose import CheckpointManager
from pyswimpose.Config import RunConfig
from pyswimpose.core import NUM_JOINTS, StyleLabel
from pyswimpose.ErrorMessage import CheckpointError
from pyswimpose.posenet import PoseNet
from pyswimpose.synthgen import SynthConfig, generate
from pyswimpose.temporal import RefinementNet

SMALL = {
    "input_size": 32,
    "heatmap_size": 8,
    "channel_multiplier": 0.125,
    "stage_kernel": 3,
    "stage_depth": 2,
    "branch_kernel": 3,
}


class TestEstimatorCheckpoint:
    """Test checkpoints of single-frame estimators."""

    def setup_method(self) -> None:
        """Create a small untrained estimator."""
        torch.manual_seed(0)
        self.run = RunConfig(mode="conditioned-once", **SMALL)  # type: ignore[arg-type]
        self.model = PoseNet(self.run.model_config())

    def test_roundtrip(self, tmp_path: Path) -> None:
        """Test that a restored estimator has the same parameters and configuration."""
        path = CheckpointManager.save_checkpoint(
            tmp_path / "estimator.pt",
            CheckpointManager.ESTIMATOR,
            self.run,
            {"estimator": self.model},
            {"loss": 0.5},
        )
        checkpoint = CheckpointManager.load_checkpoint(path)
        assert checkpoint.kind == CheckpointManager.ESTIMATOR
        assert checkpoint.run_config == self.run
        assert checkpoint.extra == {"loss": 0.5}
        assert not checkpoint.is_temporal
        restored = CheckpointManager.get_estimator(path)
        assert not restored.training
        assert restored.config == self.model.config
        for key, value in self.model.state_dict().items():
            assert torch.equal(restored.state_dict()[key], value)

    def test_sidecar(self, tmp_path: Path) -> None:
        """Test that the configuration is also written as readable JSON next to the archive."""
        CheckpointManager.save_checkpoint(tmp_path / "a.pt", "estimator", self.run, {"estimator": self.model})
        sidecar = json.loads((tmp_path / "a.json").read_text(encoding="utf-8"))
        assert sidecar["kind"] == "estimator"
        assert sidecar["config"]["mode"] == "conditioned-once"

    def test_predictor(self, tmp_path: Path) -> None:
        """Test that the predictor of an estimator checkpoint returns one pose per frame."""
        path = CheckpointManager.save_checkpoint(tmp_path / "e.pt", "estimator", self.run, {"estimator": self.model})
        clip = generate(SynthConfig(clips_per_style=1, frames_per_clip=3, image_size=32, period=4))[0]
        checkpoint, predict = CheckpointManager.get_predictor(path)
        assert checkpoint.kind == "estimator"
        assert len(predict(clip)) == 3

    def test_no_refiner(self, tmp_path: Path) -> None:
        """Test that an estimator checkpoint cannot be loaded as refiner."""
        path = CheckpointManager.save_checkpoint(tmp_path / "e.pt", "estimator", self.run, {"estimator": self.model})
        with pytest.raises(CheckpointError, match="contains no refinement network"):
            CheckpointManager.get_refiner(path)

    def test_architecture_mismatch(self, tmp_path: Path) -> None:
        """Test that parameters of another architecture are rejected."""
        other = RunConfig(**{**SMALL, "stage_depth": 3})  # type: ignore[arg-type]
        path = CheckpointManager.save_checkpoint(tmp_path / "e.pt", "estimator", other, {"estimator": self.model})
        with pytest.raises(CheckpointError, match="do not match the architecture"):
            CheckpointManager.get_estimator(path)


class TestInvalidCheckpoints:
    """Test the validation of checkpoint archives."""

    def setup_method(self) -> None:
        """Create a valid payload to corrupt."""
        self.payload = {
            "format": CheckpointManager.FORMAT_NAME,
            "format_version": CheckpointManager.FORMAT_VERSION,
            "kind": "estimator",
            "config": json.dumps(RunConfig().to_dict()),
            "extra": "{}",
            "state": {},
        }

    def test_missing(self, tmp_path: Path) -> None:
        """Test that a missing file is reported."""
        with pytest.raises(CheckpointError, match="does not exist"):
            CheckpointManager.load_checkpoint(tmp_path / "missing.pt")

    def test_not_an_archive(self, tmp_path: Path) -> None:
        """Test that arbitrary files are rejected."""
        path = tmp_path / "text.pt"
        path.write_text("no archive", encoding="utf-8")
        with patch("pyswimpose.CheckpointManager.error") as mocked_error:
            with pytest.raises(CheckpointError, match="Cannot read checkpoint"):
                CheckpointManager.load_checkpoint(path)
        assert mocked_error.call_count == 1

    def test_foreign_format(self, tmp_path: Path) -> None:
        """Test that archives of other applications are rejected."""
        torch.save({**self.payload, "format": "other"}, tmp_path / "other.pt")
        with pytest.raises(CheckpointError, match="is not a pyswimpose-checkpoint archive"):
            CheckpointManager.load_checkpoint(tmp_path / "other.pt")

    def test_version(self, tmp_path: Path) -> None:
        """Test that newer format versions are rejected."""
        torch.save({**self.payload, "format_version": "2.0"}, tmp_path / "new.pt")
        with pytest.raises(CheckpointError, match="version 2.0"):
            CheckpointManager.load_checkpoint(tmp_path / "new.pt")

    def test_kind(self, tmp_path: Path) -> None:
        """Test that unknown kinds are rejected on loading and saving."""
        torch.save({**self.payload, "kind": "detector"}, tmp_path / "kind.pt")
        with pytest.raises(CheckpointError, match="unknown kind 'detector'"):
            CheckpointManager.load_checkpoint(tmp_path / "kind.pt")
        with pytest.raises(CheckpointError, match="Unknown checkpoint kind"):
            CheckpointManager.save_checkpoint(tmp_path / "x.pt", "detector", RunConfig(), {})


class TestRefinerCheckpoint:
    """Test checkpoints of temporal refinement networks."""

    def setup_method(self) -> None:
        """Create an estimator and a refiner with l=1."""
        torch.manual_seed(0)
        self.estimator_run = RunConfig(**SMALL)  # type: ignore[arg-type]
        self.estimator = PoseNet(self.estimator_run.model_config())
        self.run = RunConfig(mode="temporal-phase1", seq_l=1, **SMALL)  # type: ignore[arg-type]
        self.refiner = RefinementNet(self.run.model_config())

    def _save(self, path: Path) -> Path:
        return CheckpointManager.save_checkpoint(
            path,
            CheckpointManager.REFINER_PHASE1,
            self.run,
            {"estimator": self.estimator, "refiner": self.refiner},
            {"seq_l": 1, "estimator_config": self.estimator.config.to_dict()},
        )

    def test_get_refiner(self, tmp_path: Path) -> None:
        """Test that estimator and refiner are restored with their own configurations."""
        estimator, refiner = CheckpointManager.get_refiner(self._save(tmp_path / "r.pt"))
        assert estimator.config.seq_spec.l == 0
        assert refiner.spec.l == 1
        for key, value in self.refiner.state_dict().items():
            assert torch.equal(refiner.state_dict()[key], value)
        assert torch.equal(refiner.pooling.weight, torch.full((NUM_JOINTS, 3), 1 / 3))

    def test_predictor(self, tmp_path: Path) -> None:
        """Test that the predictor of a refiner checkpoint refines every frame."""
        cfg = SynthConfig(clips_per_style=1, frames_per_clip=4, image_size=32, period=4, styles=("backstroke",))
        clip = generate(cfg)[0]
        assert clip.style is StyleLabel.BACKSTROKE
        checkpoint, predict = CheckpointManager.get_predictor(self._save(tmp_path / "r.pt"))
        assert checkpoint.is_temporal
        assert len(predict(clip)) == 4
