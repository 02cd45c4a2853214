"""Test the stage-wise single-frame estimator."""

from __future__ import annotations

import numpy as np
import pytest
import torch

from pyswimpose.core import NUM_JOINTS, ConditioningMode, HeatmapStack, ModelConfig, StyleLabel
from pyswimpose.ErrorMessage import ConfigurationError
from pyswimpose.posenet import PoseNet, StageOutput, influence_radius, loss

SMALL = {"input_size": 64, "heatmap_size": 8, "channel_multiplier": 0.125, "stage_depth": 2, "stage_kernel": 3}


class TestForward:
    """Tests for the forward pass of the estimator."""

    def setup_method(self) -> None:
        """Create a small three stage estimator."""
        torch.manual_seed(0)
        self.model = PoseNet(ModelConfig(**SMALL))
        self.image = torch.rand(2, 3, 64, 64) - 0.5

    def test_shapes(self) -> None:
        """Test that every stage yields heatmaps of the same shape."""
        outputs = self.model(self.image)
        assert len(outputs.per_stage) == 3
        assert all(stage.shape == (2, NUM_JOINTS, 8, 8) for stage in outputs.per_stage)
        stacks = outputs.stacks(0, 8)
        assert all(isinstance(stack, HeatmapStack) and stack.shape == (NUM_JOINTS, 8, 8) for stack in stacks)

    def test_stage_count(self) -> None:
        """Test that more stages add list entries but never change the per-stage shape."""
        model = PoseNet(ModelConfig(num_stages=5, **SMALL))
        outputs = model(self.image)
        assert len(outputs.per_stage) == 5
        assert outputs.final.shape == (2, NUM_JOINTS, 8, 8)

    def test_determinism(self) -> None:
        """Test that identical inputs give bitwise identical outputs in inference mode."""
        self.model.eval()
        with torch.no_grad():
            first = self.model(self.image).final
            second = self.model(self.image.clone()).final
        assert torch.equal(first, second)

    def test_gradient_flow(self) -> None:
        """Test that every trainable parameter receives a finite gradient."""
        outputs = self.model(self.image)
        loss(outputs, torch.rand(2, NUM_JOINTS, 8, 8)).backward()
        for name, param in self.model.named_parameters():
            assert param.grad is not None, name
            assert torch.isfinite(param.grad).all(), name

    def test_unconditioned_ignores_style(self) -> None:
        """Test that without conditioning the output is a function of the image alone."""
        self.model.eval()
        with torch.no_grad():
            plain = self.model(self.image).final
            styled = self.model(self.image, [StyleLabel.FREESTYLE, StyleLabel.BACKSTROKE]).final
        assert torch.equal(plain, styled)

    def test_conditioned_requires_style(self) -> None:
        """Test that a conditioned estimator rejects a missing style."""
        model = PoseNet(ModelConfig(conditioning_mode=ConditioningMode.REPEATED, **SMALL))
        with pytest.raises(ConfigurationError, match="requires a style"):
            model(self.image)
        with pytest.raises(ConfigurationError, match="1 styles for a batch of 2"):
            model(self.image, [StyleLabel.FREESTYLE])
        outputs = model(self.image, [StyleLabel.FREESTYLE, StyleLabel.BUTTERFLY])
        assert outputs.final.shape == (2, NUM_JOINTS, 8, 8)

    def test_conditioning_changes_output(self) -> None:
        """Test that the style of a conditioned estimator influences its heatmaps."""
        model = PoseNet(ModelConfig(conditioning_mode=ConditioningMode.ONCE, **SMALL)).eval()
        with torch.no_grad():
            first = model(self.image[:1], [StyleLabel.BACKSTROKE]).final
            second = model(self.image[:1], [StyleLabel.BREASTSTROKE]).final
        assert not torch.equal(first, second)

    def test_predict(self) -> None:
        """Test that predict returns the final stage without switching the model to inference mode."""
        self.model.train()
        heatmaps = self.model.predict(self.image)
        assert heatmaps.shape == (2, NUM_JOINTS, 8, 8)
        assert self.model.training


class TestLoss:
    """Tests for the intermediate supervision loss."""

    def setup_method(self) -> None:
        """Create a random target."""
        torch.manual_seed(0)
        self.target = torch.rand(1, NUM_JOINTS, 6, 6)

    def test_exact(self) -> None:
        """Test that outputs equal to the target at every stage give zero loss."""
        outputs = StageOutput([self.target.clone() for _ in range(3)], torch.zeros(1))
        assert float(loss(outputs, self.target)) == 0.0

    def test_constant_offset(self) -> None:
        """Test that one stage off by a constant c gives c squared."""
        outputs = StageOutput([self.target, self.target + 0.5, self.target], torch.zeros(1))
        assert float(loss(outputs, self.target)) == pytest.approx(0.25, rel=1e-5)

    def test_heatmap_stack_target(self) -> None:
        """Test that a HeatmapStack is accepted as target of a single item."""
        stack = HeatmapStack(self.target[0].numpy(), 8)
        outputs = StageOutput([self.target + 1.0], torch.zeros(1))
        assert float(loss(outputs, stack)) == pytest.approx(1.0, rel=1e-5)

    def test_non_negative(self) -> None:
        """Test that the loss is non-negative for random outputs."""
        for _ in range(10):
            outputs = StageOutput([torch.randn(1, NUM_JOINTS, 6, 6) for _ in range(3)], torch.zeros(1))
            assert float(loss(outputs, self.target)) >= 0.0

    def test_shape_mismatch(self) -> None:
        """Test that stage and target shapes must match."""
        outputs = StageOutput([torch.zeros(1, NUM_JOINTS, 5, 5)], torch.zeros(1))
        with pytest.raises(ValueError, match="do not match the target"):
            loss(outputs, self.target)


class TestReceptiveField:
    """Tests for the growing spatial influence of deeper stages."""

    def test_influence_grows(self) -> None:
        """Test that a single-pixel perturbation reaches strictly farther at every later stage."""
        torch.manual_seed(0)
        config = ModelConfig(input_size=256, heatmap_size=32, channel_multiplier=0.125, stage_kernel=3, stage_depth=3)
        model = PoseNet(config)
        radii = influence_radius(model, torch.rand(1, 3, 256, 256) - 0.5)
        assert len(radii) == 3
        assert all(radius >= 0 for radius in radii)
        assert np.all(np.diff(radii) > 0)
