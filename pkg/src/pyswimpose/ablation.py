"""Synthetic ablation of the model variants over several seeds.

Every seed generates its own synthetic dataset and trains, on its training clips:

- the baseline and both conditioned estimators;
- a temporal refiner on top of the baseline and a combined refiner on top of the once-conditioned estimator;
- a refiner with l=0 on top of the baseline, which can only act as one more stage.

All variants are scored on the held-out clips. The reports of all seeds are pooled, so every evaluated joint of
every seed counts once, and the ordering checks run on the pooled scores.
"""

from __future__ import annotations

import json
import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from . import dataio, metrics, temporal, training
from .Architecture import hardware_info
from .Config import RunConfig
from .core import Pose, StyleLabel, VideoClip
from .ErrorMessage import ConfigurationError, debug
from .posenet import PoseNet
from .synthgen import SynthConfig, generate
from .UserInterface import message_info

ESTIMATOR_VARIANTS = ("baseline", "conditioned-once", "conditioned-repeated")
VARIANTS = (*ESTIMATOR_VARIANTS, "temporal", "combined", "temporal-l0")

# styles that look alike on a single frame once the right limbs are occluded
STYLE_PAIRS = (
    (StyleLabel.FREESTYLE, StyleLabel.BUTTERFLY),
    (StyleLabel.BACKSTROKE, StyleLabel.BREASTSTROKE),
)

MIN_GAIN = 5.0
COMBINED_TOLERANCE = 1.0
PARITY_TOLERANCE = 2.0
MIN_POOLING_WEIGHT = 0.05


@dataclass(frozen=True)
class AblationConfig:
    """The seeds and datasets of an ablation; `base` holds the architecture and optimizer of all variants."""

    base: RunConfig = field(default_factory=RunConfig)
    seeds: tuple[int, ...] = (0, 1, 2)
    seq_l: int = 2
    phase1_iterations: int | None = None
    phase2_iterations: int | None = None
    synth: SynthConfig = field(default_factory=SynthConfig)
    alpha: float = 0.2

    def __post_init__(self) -> None:
        if not self.seeds:
            msg = "An ablation needs at least one seed."
            raise ConfigurationError(msg)
        if self.seq_l < 1:
            msg = f"The temporal variants need seq_l >= 1, got {self.seq_l}; l=0 is always part of the ablation."
            raise ConfigurationError(msg)

    def run(self, mode: str, seed: int, **overrides: Any) -> RunConfig:  # noqa: ANN401
        return RunConfig.from_dict({**self.base.to_dict(), "mode": mode, "seed": seed, **overrides})

    def refiner_run(self, seed: int, seq_l: int, conditioning: str = "none") -> RunConfig:
        return self.run(
            "temporal-phase1",
            seed,
            seq_l=seq_l,
            conditioning=conditioning,
            iterations=self.phase1_iterations or self.base.iterations,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "base": self.base.to_dict(),
            "seeds": list(self.seeds),
            "seq_l": self.seq_l,
            "phase1_iterations": self.phase1_iterations,
            "phase2_iterations": self.phase2_iterations,
            "synth": self.synth.to_dict(),
            "alpha": self.alpha,
        }


@dataclass
class SeedResult:
    """Scores of every variant trained with one seed."""

    seed: int
    reports: dict[str, metrics.PckReport]
    # the temporal variant's branches on their own, after phase 1
    branch_reports: dict[str, metrics.PckReport]
    # mean absolute pooling weight per branch of the temporal variant, after phase 2
    pooling: dict[str, float]
    phase1_losses_decreased: bool
    chance: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "reports": {name: report.to_dict() for name, report in self.reports.items()},
            "branch_pck": {name: report.overall for name, report in self.branch_reports.items()},
            "pooling_mean_absolute": self.pooling,
            "phase1_losses_decreased": self.phase1_losses_decreased,
            "chance": self.chance,
        }


def pooled_report(reports: Sequence[metrics.PckReport]) -> metrics.PckReport:
    """Sum the joint counts of several reports with the same threshold."""
    pooled = metrics.PckReport(alpha=reports[0].alpha)
    for report in reports:
        pooled.correct += report.correct
        pooled.counts += report.counts
        pooled.excluded += report.excluded
        if report.visibility is not None:
            if pooled.visibility is None:
                pooled.visibility = {key: [0, 0] for key in report.visibility}
            for key, (correct, count) in report.visibility.items():
                pooled.visibility[key][0] += correct
                pooled.visibility[key][1] += count
    return pooled


def pair_score(report: metrics.PckReport, pair: Sequence[StyleLabel]) -> float:
    """PCK over the joints of the clips of a group of styles."""
    rows = [style.index for style in pair]
    count = report.counts[rows].sum()
    return 100.0 * float(report.correct[rows].sum()) / float(count) if count > 0 else math.nan


def occluded_score(report: metrics.PckReport) -> float:
    scores = report.per_visibility
    return math.nan if scores is None else scores["occluded"]


@dataclass
class AblationResult:
    """The results of all seeds and the ordering checks on their pooled scores."""

    config: AblationConfig
    seeds: list[SeedResult]

    def pooled(self) -> dict[str, metrics.PckReport]:
        return {name: pooled_report([seed.reports[name] for seed in self.seeds]) for name in VARIANTS}

    def ambiguous_pair(self) -> tuple[StyleLabel, ...]:
        """The style pair the baseline confuses most."""
        baseline = self.pooled()["baseline"]
        return min(STYLE_PAIRS, key=lambda pair: pair_score(baseline, pair))

    def gains(self) -> dict[str, float]:
        """Score differences in PCK points that the checks compare against their thresholds."""
        pooled = self.pooled()
        pair = self.ambiguous_pair()
        baseline = pooled["baseline"]
        conditioned = max(pair_score(pooled[name], pair) for name in ESTIMATOR_VARIANTS[1:])
        best_single = max(pooled[name].overall for name in ("conditioned-once", "conditioned-repeated", "temporal"))
        return {
            "conditioned_on_ambiguous_pair": conditioned - pair_score(baseline, pair),
            "temporal_on_occluded": occluded_score(pooled["temporal"]) - occluded_score(baseline),
            "combined_over_best_single": pooled["combined"].overall - best_single,
            "l0_over_baseline": pooled["temporal-l0"].overall - baseline.overall,
        }

    def checks(self) -> dict[str, bool]:
        gains = self.gains()
        return {
            "conditioned_beats_baseline_on_ambiguous_pair": gains["conditioned_on_ambiguous_pair"] >= MIN_GAIN,
            "temporal_beats_baseline_on_occluded": gains["temporal_on_occluded"] >= MIN_GAIN,
            "combined_matches_best_single": gains["combined_over_best_single"] >= -COMBINED_TOLERANCE,
            "l0_matches_baseline": abs(gains["l0_over_baseline"]) <= PARITY_TOLERANCE,
            "pooling_weights_used": all(
                value > MIN_POOLING_WEIGHT for seed in self.seeds for value in seed.pooling.values()
            ),
            "phase1_loss_decreased": all(seed.phase1_losses_decreased for seed in self.seeds),
            "branches_beat_chance": all(
                report.overall > seed.chance for seed in self.seeds for report in seed.branch_reports.values()
            ),
        }

    def table(self) -> str:
        """The pooled per-style table plus the occluded-joint column, the gains and the checks."""
        pooled = self.pooled()
        lines = [f"Synthetic ablation, {len(self.seeds)} seed(s), PCK@{self.config.alpha:g}", ""]
        lines += metrics.format_table(pooled).splitlines()
        lines += ["", f"{'Model':<22}{'Occluded':>10}"]
        lines += [f"{name:<22}{occluded_score(report):>10.1f}" for name, report in pooled.items()]
        pair = " / ".join(style.column_name for style in self.ambiguous_pair())
        lines += ["", f"Ambiguous pair: {pair}"]
        lines += [f"{name:<32}{value:>+8.1f}" for name, value in self.gains().items()]
        lines += [""] + [f"{name:<48}{'ok' if passed else 'FAILED'}" for name, passed in self.checks().items()]
        return "\n".join(lines)

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "pooled": {name: report.to_dict() for name, report in self.pooled().items()},
            "gains": self.gains(),
            "checks": self.checks(),
            "seeds": [seed.to_dict() for seed in self.seeds],
        }


def chance_pck(clips: Sequence[VideoClip], alpha: float = 0.2, seed: int = 0) -> float:
    """PCK of joints placed uniformly at random in the frame."""
    rng = np.random.default_rng(seed)
    predictions: dict[str, list[Pose]] = {}
    for clip in clips:
        height, width = clip.frames[0].shape[:2]
        predictions[clip.clip_id] = [
            Pose.all_visible(rng.uniform((0, 0), (width, height), (len(pose.coords), 2))) for pose in clip.annotations
        ]
    return metrics.evaluate(predictions, clips, metrics.PckConfig(alpha)).overall


def _train_estimator(run: RunConfig, clips: Sequence[VideoClip], device: str) -> PoseNet:
    model = PoseNet(run.model_config())
    training.train_estimator(model, clips, run.train_settings(), device=device)
    return model


def _train_refiner(
    run: RunConfig,
    estimator: PoseNet,
    clips: Sequence[VideoClip],
    phase2_iterations: int,
    device: str,
) -> tuple[temporal.RefinementNet, list[float]]:
    refiner = temporal.RefinementNet(run.model_config())
    refiner.init_from_estimator(estimator)
    estimates = temporal.estimate_clips(estimator, clips, device)
    dataset = temporal.SequenceDataset(clips, estimates, refiner.config)
    settings = run.train_settings()
    losses = temporal.train_phase1(refiner, dataset, settings, device=device)
    temporal.train_phase2(refiner, dataset, replace(settings, iterations=phase2_iterations), device=device)
    return refiner, losses


def run_seed(cfg: AblationConfig, seed: int, device: str | None = None) -> SeedResult:
    """Train and score every variant on the synthetic dataset of one seed."""
    device = device or hardware_info.torch_device
    clips = generate(replace(cfg.synth, seed=cfg.synth.seed + seed))
    train, test = dataio.split_by_clip(clips, dataio.default_holdout(clips))
    pck_config = metrics.PckConfig(cfg.alpha)
    message_info(f"Ablation seed {seed}: {len(train)} training and {len(test)} test clips")

    def score(predict: Callable[[VideoClip], list[Pose]]) -> metrics.PckReport:
        predictions = {clip.clip_id: predict(clip) for clip in test}
        return metrics.evaluate(predictions, test, pck_config, by_visibility=True)

    estimators = {name: _train_estimator(cfg.run(name, seed), train, device) for name in ESTIMATOR_VARIANTS}
    reports = {
        name: score(lambda clip, model=model: training.predict_clip(model, clip, device))
        for name, model in estimators.items()
    }

    phase2_iterations = cfg.phase2_iterations or cfg.base.iterations
    refiners = {
        "temporal": (estimators["baseline"], cfg.refiner_run(seed, cfg.seq_l)),
        "combined": (estimators["conditioned-once"], cfg.refiner_run(seed, cfg.seq_l, "once")),
        "temporal-l0": (estimators["baseline"], cfg.refiner_run(seed, 0)),
    }
    branch_reports: dict[str, metrics.PckReport] = {}
    pooling: dict[str, float] = {}
    phase1_losses_decreased = False
    for name, (estimator, run) in refiners.items():
        refiner, losses = _train_refiner(run, estimator, train, phase2_iterations, device)
        reports[name] = score(lambda clip, e=estimator, r=refiner: temporal.predict_clip(e, r, clip, device))
        if name == "temporal":
            phase1_losses_decreased = training.loss_decreased(losses)
            pooling = refiner.pooling.weights().mean_absolute()
            for branch in temporal.BRANCHES:
                branch_reports[branch] = score(
                    lambda clip, r=refiner, b=branch: temporal.predict_clip(estimators["baseline"], r, clip, device, b),
                )
    debug(f"Ablation seed {seed}: " + ", ".join(f"{name} {report.overall:.1f}" for name, report in reports.items()))
    return SeedResult(seed, reports, branch_reports, pooling, phase1_losses_decreased, chance_pck(test, cfg.alpha))


def run_ablation(cfg: AblationConfig, device: str | None = None) -> AblationResult:
    """Run every seed of the ablation."""
    return AblationResult(cfg, [run_seed(cfg, seed, device) for seed in cfg.seeds])


def write_ablation(result: AblationResult, out_dir: str | Path) -> list[Path]:
    """Write ablation.json with every seed and ablation.txt with the pooled table and the checks."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    document, table = out_dir / "ablation.json", out_dir / "ablation.txt"
    document.write_text(json.dumps(result.to_dict(), indent=2), encoding="utf-8")
    table.write_text(result.table() + "\n", encoding="utf-8")
    return [document, table]


def summary_of(checks: Mapping[str, bool]) -> str:
    failed = [name for name, passed in checks.items() if not passed]
    return "all checks passed" if not failed else f"{len(failed)} check(s) failed: {', '.join(failed)}"
