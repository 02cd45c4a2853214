"""Command line interface: ``pyswimpose synth | train | eval | infer | plot | ablation``.

Every option can be given as a flag or in the ini file passed with ``--config``; flags take precedence. Exit codes
are 0 on success, 1 for invalid input and 2 for any other failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any, NoReturn

from . import ablation, dataio, metrics, plotting, temporal, training
from .Architecture import hardware_info
from .CheckpointManager import (
    ESTIMATOR,
    REFINER_PHASE1,
    REFINER_PHASE2,
    Checkpoint,
    estimator_from,
    get_predictor,
    get_refiner,
    load_checkpoint,
    save_checkpoint,
)
from .Config import MODES, RunConfig, read_section
from .core import ModelConfig, Pose, StyleLabel, VideoClip
from .ErrorMessage import CheckpointError, ConfigurationError, DatasetError, error, setup_console_logging
from .FolderManager import getFoMa
from .posenet import PoseNet
from .rendering import draw_skeleton
from .synthgen import SynthConfig, iter_clips
from .UserInterface import message_info, message_log

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FAILURE = 2

# architecture parameters a refiner takes over from the estimator it refines
ARCHITECTURE_KEYS = (
    "num_stages",
    "input_size",
    "heatmap_size",
    "gaussian_sigma",
    "channel_multiplier",
    "stage_kernel",
    "stage_depth",
)


class _ArgumentParser(argparse.ArgumentParser):
    """Report usage errors as invalid input instead of exiting."""

    def error(self, message: str) -> NoReturn:
        raise ConfigurationError(message)


def _device() -> str:
    return hardware_info.torch_device


# ---------------------------------------------------------------------------------------------------------- synth


def synth_config(file_name: str | Path | None = None, overrides: Mapping[str, Any] | None = None) -> SynthConfig:
    """Defaults < [synth] section of the config file < explicit overrides."""
    values: dict[str, Any] = SynthConfig().to_dict()
    converters = {
        "seed": int,
        "clips_per_style": int,
        "frames_per_clip": int,
        "image_size": int,
        "period": int,
        "occlusion_rate": float,
        "noise_level": float,
        "styles": lambda text: [item for item in str(text).replace(",", " ").split() if item],
    }
    section = read_section(file_name, "synth")
    for key, value in [*section.items(), *(overrides or {}).items()]:
        if value is None:
            continue
        if key not in converters:
            msg = f"Parameter(s) '{key}' not supported. Supported parameters are: {', '.join(converters)}"
            raise ValueError(msg)
        values[key] = value if isinstance(value, list) else converters[key](value)
    return SynthConfig.from_dict(values)


def cmd_synth(cfg: SynthConfig, root: str | Path) -> dataio.DatasetManifest:
    """Generate a synthetic dataset and write it in the dataset format.

    Returns:
        The manifest; one clip per style is held out as test clip.
    """
    root = Path(root)
    message_info(f"Generating {cfg.num_clips} clips of {cfg.frames_per_clip} frames into {root}")
    manifest = dataio.write_dataset(root, iter_clips(cfg), synth=cfg.to_dict())
    message_info(dataio.summary_table(manifest.clips, manifest.split))
    message_log(f"synth: {root} digest {dataio.manifest_digest(root)}")
    return manifest


# ---------------------------------------------------------------------------------------------------------- train


def _load_split(dataset: str | Path | None) -> tuple[list[VideoClip], list[VideoClip]]:
    if dataset is None:
        msg = "No dataset given. Use --dataset or the 'dataset' option of the [data] section."
        raise ConfigurationError(msg)
    clips, split = dataio.load(dataset)
    return dataio.apply_split(clips, split)


def _frame_size(clips: Sequence[VideoClip]) -> list[int]:
    height, width = clips[0].frames[0].shape[:2]
    return [int(height), int(width)]


def _inherit(run: RunConfig, source: RunConfig, keys: Sequence[str]) -> None:
    run.set_parameters({key: getattr(source, key) for key in keys})


def _inherit_conditioning(run: RunConfig, estimator_config: ModelConfig) -> None:
    """A refiner without its own conditioning takes the one of the estimator it refines."""
    if run.conditioning != "none" or not estimator_config.is_conditioned:
        return
    stages = estimator_config.conditioned_stages
    run.set_parameters(
        {
            "conditioning": estimator_config.conditioning_mode.value,
            "conditioned_stages": None if stages is None else list(stages),
        },
    )


def _loss_log_path(checkpoint_path: Path) -> Path:
    return checkpoint_path.with_name(checkpoint_path.stem + "_loss.csv")


def cmd_train(run: RunConfig, checkpoint_path: str | Path | None = None) -> Path:
    """Train the model of a run mode and store it with its configuration and a loss log.

    Args:
        run: The run configuration; its mode selects baseline, conditioned or temporal training.
        checkpoint_path: Where to write the checkpoint; defaults to CHECKPOINTS/<mode>.pt.

    Returns:
        The path of the written checkpoint.
    """
    train_clips, _test_clips = _load_split(run.dataset)
    if not train_clips:
        msg = f"The dataset {run.dataset} has no training clips."
        raise DatasetError(msg)
    if run.output_dir:
        getFoMa().set_root(run.output_dir)
    path = Path(checkpoint_path) if checkpoint_path else getFoMa().get_path("CHECKPOINTS") / f"{run.mode}.pt"
    device = _device()
    message_info(f"Training '{run.mode}' on {hardware_info.summary()}")
    run.set_parameters({"frame_size": _frame_size(train_clips)})

    if run.mode == "temporal-phase1":
        _train_phase1(run, train_clips, path, device)
    elif run.mode == "temporal-phase2":
        _train_phase2(run, train_clips, path, device)
    else:
        model = PoseNet(run.model_config())
        losses = training.train_estimator(model, train_clips, run.train_settings(), _loss_log_path(path), device)
        save_checkpoint(path, ESTIMATOR, run, {"estimator": model})
        message_info(f"Estimator loss {losses[0]:.6f} -> {losses[-1]:.6f}")

    message_log(f"train: {run.mode} -> {path}")
    return path


def _train_phase1(run: RunConfig, clips: Sequence[VideoClip], path: Path, device: str) -> None:
    if not run.estimator_checkpoint:
        msg = "temporal-phase1 requires an estimator checkpoint (--estimator-checkpoint)."
        raise ConfigurationError(msg)
    source = load_checkpoint(run.estimator_checkpoint)
    estimator = estimator_from(source)
    _inherit(run, source.run_config, ARCHITECTURE_KEYS)
    _inherit_conditioning(run, estimator.config)

    refiner = temporal.RefinementNet(run.model_config())
    refiner.init_from_estimator(estimator)
    estimates = temporal.estimate_clips(estimator, clips, device)
    dataset = temporal.SequenceDataset(clips, estimates, refiner.config)
    temporal.train_phase1(refiner, dataset, run.train_settings(), _loss_log_path(path), device)
    save_checkpoint(
        path,
        REFINER_PHASE1,
        run,
        {"estimator": estimator, "refiner": refiner},
        {
            "l": run.seq_l,
            "estimator_checkpoint": str(run.estimator_checkpoint),
            "estimator_config": estimator.config.to_dict(),
        },
    )


def _train_phase2(run: RunConfig, clips: Sequence[VideoClip], path: Path, device: str) -> None:
    if not run.phase1_checkpoint:
        msg = "temporal-phase2 requires a phase-1 checkpoint (--phase1-checkpoint)."
        raise ConfigurationError(msg)
    source = load_checkpoint(run.phase1_checkpoint)
    if source.kind not in (REFINER_PHASE1, REFINER_PHASE2):
        msg = f"{run.phase1_checkpoint} is an '{source.kind}' checkpoint, not a temporal phase-1 checkpoint."
        raise CheckpointError(msg)
    # the branches are frozen, so the architecture and l come from the phase-1 run
    keys = (*ARCHITECTURE_KEYS, "seq_l", "conditioning", "conditioned_stages", "branch_kernel")
    _inherit(run, source.run_config, keys)
    estimator, refiner = get_refiner(run.phase1_checkpoint)

    estimates = temporal.estimate_clips(estimator, clips, device)
    dataset = temporal.SequenceDataset(clips, estimates, refiner.config)
    temporal.train_phase2(refiner, dataset, run.train_settings(), _loss_log_path(path), device)
    summary = temporal.pooling_weight_summary(refiner)
    weights = ", ".join(f"{branch} {value:.3f}" for branch, value in summary.items())
    message_info(f"Temporal pooling weights (avg. over joints): {weights}")
    save_checkpoint(
        path,
        REFINER_PHASE2,
        run,
        {"estimator": estimator, "refiner": refiner},
        {**source.extra, "phase1_checkpoint": str(run.phase1_checkpoint), "pooling": summary},
    )


# ---------------------------------------------------------------------------------------------------------- eval


def _check_frame_size(checkpoint: Checkpoint, clips: Sequence[VideoClip], name: str) -> None:
    expected = checkpoint.run_config.frame_size
    if expected is None or not clips:
        return
    found = _frame_size(clips)
    if list(expected) != found:
        msg = (
            f"Checkpoint '{name}' was trained on {expected[0]}x{expected[1]} frames, "
            f"the dataset has {found[0]}x{found[1]}."
        )
        raise ConfigurationError(msg)


def evaluate_predictions(
    predictions: Mapping[str, Sequence[Pose]],
    clips: Sequence[VideoClip],
    alphas: Sequence[float],
    cfg: metrics.PckConfig | None = None,
    by_visibility: bool = False,
) -> tuple[metrics.PckReport, list[tuple[float, float]]]:
    """Score predictions at the report threshold and along the alpha curve."""
    report = metrics.evaluate(predictions, clips, cfg, by_visibility)
    return report, metrics.pck_curve(predictions, clips, alphas)


def write_eval_outputs(
    out_dir: str | Path,
    reports: Mapping[str, metrics.PckReport],
    curves: Mapping[str, Sequence[tuple[float, float]]],
    extras: Mapping[str, Mapping[str, Any]] | None = None,
    sequence_spans: Mapping[str, int] | None = None,
) -> list[Path]:
    """Write report.json, table.txt, one curve_<name>.csv per model and pck_vs_k.csv for temporal models."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    documents = {name: {**report.to_dict(), **(extras or {}).get(name, {})} for name, report in reports.items()}
    written = [out_dir / "report.json", out_dir / "table.txt"]
    written[0].write_text(json.dumps(documents, indent=2), encoding="utf-8")
    written[1].write_text(metrics.format_table(reports) + "\n", encoding="utf-8")
    for name, curve in curves.items():
        written.append(out_dir / f"curve_{name}.csv")
        metrics.write_curve_csv(written[-1], curve)
    if sequence_spans:
        by_k = sorted((k, reports[name].overall) for name, k in sequence_spans.items())
        written.append(out_dir / "pck_vs_k.csv")
        metrics.write_curve_csv(written[-1], [(float(k), score) for k, score in by_k], header=("k", "score"))
    return written


def cmd_eval(  # noqa: PLR0913
    checkpoints: Sequence[str | Path],
    dataset: str | Path,
    alphas: Sequence[float] | None = None,
    out_dir: str | Path | None = None,
    names: Sequence[str] | None = None,
    alpha: float = 0.2,
    by_visibility: bool = False,
) -> dict[str, metrics.PckReport]:
    """Evaluate checkpoints on the test clips of a dataset and write the report files.

    Returns:
        The report of every checkpoint, keyed by the model variant name (default: the checkpoint file stem).
    """
    alphas = list(alphas) if alphas is not None else metrics.default_alphas()
    names = list(names) if names else [Path(path).stem for path in checkpoints]
    if len(names) != len(checkpoints) or len(set(names)) != len(names):
        msg = "Every checkpoint needs a distinct name."
        raise ConfigurationError(msg)
    _train_clips, test_clips = _load_split(dataset)
    if not test_clips:
        msg = f"The dataset {dataset} has no test clips."
        raise DatasetError(msg)

    cfg = metrics.PckConfig(alpha)
    reports: dict[str, metrics.PckReport] = {}
    curves: dict[str, list[tuple[float, float]]] = {}
    extras: dict[str, dict[str, Any]] = {}
    spans: dict[str, int] = {}
    for name, path in zip(names, checkpoints):
        checkpoint, predictor = get_predictor(path, _device())
        _check_frame_size(checkpoint, test_clips, name)
        message_info(f"Evaluating '{name}' ({checkpoint.kind}) on {len(test_clips)} test clips")
        predictions = {clip.clip_id: predictor(clip) for clip in test_clips}
        reports[name], curves[name] = evaluate_predictions(predictions, test_clips, alphas, cfg, by_visibility)
        extras[name] = {
            "kind": checkpoint.kind,
            "mode": checkpoint.run_config.mode,
            "left_right_confusion": metrics.left_right_confusion(predictions, test_clips),
        }
        if checkpoint.is_temporal:
            spans[name] = checkpoint.model_config.seq_spec.k

    out = Path(out_dir) if out_dir else getFoMa().get_path("REPORTS")
    write_eval_outputs(out, reports, curves, extras, spans)
    message_info(metrics.format_table(reports))
    message_log(f"eval: {', '.join(names)} -> {out}")
    return reports


# ---------------------------------------------------------------------------------------------------------- infer


def cmd_infer(
    checkpoint: str | Path,
    dataset: str | Path,
    clip_id: str,
    out_dir: str | Path | None = None,
    overlays: bool = False,
) -> Path:
    """Predict every frame of one clip and write the poses as JSON lines, optionally with skeleton overlays.

    Returns:
        The path of the predictions file.
    """
    clips, _split = dataio.load(dataset)
    matches = [clip for clip in clips if clip.clip_id == clip_id]
    if not matches:
        msg = f"Clip '{clip_id}' is not part of the dataset {dataset}."
        raise DatasetError(msg)
    clip = matches[0]
    loaded, predictor = get_predictor(checkpoint, _device())
    _check_frame_size(loaded, [clip], Path(checkpoint).stem)

    poses = predictor(clip)
    out = Path(out_dir) if out_dir else getFoMa().get_path("PREDICTIONS") / clip_id
    predictions_path = out / "predictions.jsonl"
    dataio.write_annotations(predictions_path, poses)
    if overlays:
        for t, pose in enumerate(poses, start=1):
            dataio.write_frame(out / "overlays" / f"{t:06d}.png", draw_skeleton(clip.frame(t), pose))
    message_info(f"Wrote {len(poses)} predictions of clip '{clip_id}' to {predictions_path}")
    return predictions_path


# ---------------------------------------------------------------------------------------------------------- plot


def cmd_plot(report_dir: str | Path | None = None, plot_dir: str | Path | None = None) -> list[Path]:
    """Draw the figures of stored evaluation results: per style, per joint, PCK over alpha and PCK over k."""
    report_dir = Path(report_dir) if report_dir else getFoMa().get_path("REPORTS")
    plot_dir = Path(plot_dir) if plot_dir else getFoMa().get_path("PLOTS")
    written = []
    report_file = report_dir / "report.json"
    if report_file.is_file():
        documents = json.loads(report_file.read_text(encoding="utf-8"))
        reports = {name: metrics.PckReport.from_dict(values) for name, values in documents.items()}
        written.append(plotting.plot_per_style(reports, plot_dir / "pck_per_style.png"))
        for name, report in reports.items():
            written.append(plotting.plot_per_joint(report, plot_dir / f"pck_per_joint_{name}.png"))
    curves = {
        path.stem[len("curve_") :]: metrics.read_curve_csv(path) for path in sorted(report_dir.glob("curve_*.csv"))
    }
    if curves:
        written.append(plotting.plot_curves(curves, plot_dir / "pck_vs_alpha.png"))
    sweep = report_dir / "pck_vs_k.csv"
    if sweep.is_file():
        sweep_curve = {"temporal": metrics.read_curve_csv(sweep)}
        written.append(plotting.plot_curves(sweep_curve, plot_dir / "pck_vs_k.png", xlabel="k"))
    if not written:
        msg = f"No evaluation results found in {report_dir}."
        raise ValueError(msg)
    message_info(f"Wrote {len(written)} figure(s) to {plot_dir}")
    return written


# ---------------------------------------------------------------------------------------------------------- ablation


def cmd_ablation(cfg: ablation.AblationConfig, out_dir: str | Path | None = None) -> ablation.AblationResult:
    """Train and score every model variant on synthetic data for each seed and write the pooled comparison.

    Returns:
        The result; failed ordering checks are reported but do not raise.
    """
    out_dir = Path(out_dir) if out_dir else getFoMa().get_path("REPORTS") / "ablation"
    message_info(f"Ablation over seeds {', '.join(map(str, cfg.seeds))} on {hardware_info.summary()}")
    result = ablation.run_ablation(cfg, _device())
    ablation.write_ablation(result, out_dir)
    message_info(result.table())
    summary = ablation.summary_of(result.checks())
    message_log(f"ablation: {out_dir} {summary}")
    return result


def ablation_config(args: argparse.Namespace) -> ablation.AblationConfig:
    """Defaults < the [model], [train] and [synth] sections of the ini file < flags."""
    base = RunConfig.from_sources(args.config, {"iterations": args.iterations, "batch_size": args.batch_size})
    keys = ("clips_per_style", "frames_per_clip", "image_size")
    synth = synth_config(args.config, {key: getattr(args, key) for key in keys})
    seeds = tuple(int(seed) for seed in args.seeds.replace(",", " ").split()) if args.seeds else (0, 1, 2)
    return ablation.AblationConfig(
        base=base,
        seeds=seeds,
        seq_l=args.seq_l if args.seq_l is not None else base.seq_l,
        phase1_iterations=args.phase1_iterations,
        phase2_iterations=args.phase2_iterations,
        synth=synth,
    )


# ---------------------------------------------------------------------------------------------------------- parser


def _parse_alphas(text: str | None) -> list[float] | None:
    if text is None:
        return None
    return [float(item) for item in text.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="pyswimpose", description="Swimmer pose estimation on synthetic and recorded clips.")
    parser.add_argument("--config", help="ini file with [model], [train], [synth], [data] and [eval] sections")
    parser.add_argument("--output", help="output root (default: $PYSWIMPOSE_OUTPUT or ./pyswimpose_output)")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    synth = commands.add_parser("synth", help="generate a synthetic dataset")
    synth.add_argument("--dataset", help="dataset directory to write")
    synth.add_argument("--seed", type=int)
    synth.add_argument("--clips-per-style", dest="clips_per_style", type=int)
    synth.add_argument("--frames", dest="frames_per_clip", type=int)
    synth.add_argument("--image-size", dest="image_size", type=int)
    synth.add_argument("--period", type=int)
    synth.add_argument("--occlusion-rate", dest="occlusion_rate", type=float)
    synth.add_argument("--noise-level", dest="noise_level", type=float)
    synth.add_argument("--styles", help="comma separated subset of " + ", ".join(s.value for s in StyleLabel))

    train = commands.add_parser("train", help="train an estimator or a temporal refiner")
    train.add_argument("--mode", choices=MODES)
    train.add_argument("--dataset")
    train.add_argument("--checkpoint", help="checkpoint file to write")
    train.add_argument("--estimator-checkpoint", dest="estimator_checkpoint")
    train.add_argument("--phase1-checkpoint", dest="phase1_checkpoint")
    train.add_argument("--conditioning", choices=("none", "once", "repeated"))
    train.add_argument("--seq-l", dest="seq_l", type=int)
    train.add_argument("--iterations", type=int)
    train.add_argument("--batch-size", dest="batch_size", type=int)
    train.add_argument("--learning-rate", dest="learning_rate", type=float)
    train.add_argument("--grad-clip", dest="grad_clip", type=float)
    train.add_argument("--seed", type=int)
    train.add_argument("--num-stages", dest="num_stages", type=int)
    train.add_argument("--input-size", dest="input_size", type=int)
    train.add_argument("--heatmap-size", dest="heatmap_size", type=int)
    train.add_argument("--channel-multiplier", dest="channel_multiplier", type=float)
    train.add_argument("--gaussian-sigma", dest="gaussian_sigma", type=float)
    train.add_argument("--stage-kernel", dest="stage_kernel", type=int)
    train.add_argument("--stage-depth", dest="stage_depth", type=int)
    train.add_argument("--branch-kernel", dest="branch_kernel", type=int)
    train.add_argument("--subpixel-decoding", dest="subpixel_decoding", action="store_true", default=None)
    train.add_argument("--conditioned-stages", dest="conditioned_stages", help="comma separated stages, e.g. 2,3")
    train.add_argument("--flip-prob", dest="flip_prob", type=float)
    train.add_argument("--output-dir", dest="output_dir", help="output root of this run, overridden by --output")

    evaluate = commands.add_parser("eval", help="evaluate checkpoints on the test clips")
    evaluate.add_argument("--checkpoint", nargs="+", required=True)
    evaluate.add_argument("--name", nargs="+", help="model variant names, one per checkpoint")
    evaluate.add_argument("--dataset")
    evaluate.add_argument("--alpha", type=float)
    evaluate.add_argument("--alphas", help="comma separated thresholds of the PCK curve")
    evaluate.add_argument("--by-visibility", dest="by_visibility", action="store_true", default=None)
    evaluate.add_argument("--reports", help="directory of the report files")

    infer = commands.add_parser("infer", help="predict the poses of one clip")
    infer.add_argument("--checkpoint", required=True)
    infer.add_argument("--dataset")
    infer.add_argument("--clip", required=True)
    infer.add_argument("--out")
    infer.add_argument("--overlays", action="store_true")

    plot = commands.add_parser("plot", help="draw figures from stored evaluation results")
    plot.add_argument("--reports")
    plot.add_argument("--plots")

    ablate = commands.add_parser("ablation", help="compare all model variants on synthetic data over several seeds")
    ablate.add_argument("--seeds", help="comma separated seeds (default: 0,1,2)")
    ablate.add_argument("--seq-l", dest="seq_l", type=int)
    ablate.add_argument("--iterations", type=int, help="estimator iterations, also the default of both phases")
    ablate.add_argument("--phase1-iterations", dest="phase1_iterations", type=int)
    ablate.add_argument("--phase2-iterations", dest="phase2_iterations", type=int)
    ablate.add_argument("--batch-size", dest="batch_size", type=int)
    ablate.add_argument("--clips-per-style", dest="clips_per_style", type=int)
    ablate.add_argument("--frames", dest="frames_per_clip", type=int)
    ablate.add_argument("--image-size", dest="image_size", type=int)
    ablate.add_argument("--out", help="directory of ablation.json and ablation.txt")
    return parser


# run parameters the train command accepts as flags
TRAIN_FLAGS = (
    "mode", "dataset", "estimator_checkpoint", "phase1_checkpoint", "conditioning", "conditioned_stages", "seq_l",
    "iterations", "batch_size", "learning_rate", "grad_clip", "seed", "flip_prob", "num_stages", "input_size",
    "heatmap_size", "gaussian_sigma", "channel_multiplier", "stage_kernel", "stage_depth", "branch_kernel",
    "subpixel_decoding",
)  # fmt: skip


def _dataset_option(args: argparse.Namespace) -> str:
    data = read_section(args.config, "data")
    return str(args.dataset or data.get("dataset") or getFoMa().get_path("DATASET"))


def output_root(args: argparse.Namespace) -> str | None:
    """The output root of a command: --output, else --output-dir of train, else [data] output_dir of the ini file."""
    if args.output:
        return str(args.output)
    if getattr(args, "output_dir", None):
        return str(args.output_dir)
    value = read_section(args.config, "data").get("output_dir", "").strip()
    return None if value.lower() in ("", "none") else value


def train_run_config(args: argparse.Namespace) -> RunConfig:
    """The run of the train command: defaults < [model], [train] and [data] of the ini file < flags."""
    run = RunConfig.from_sources(args.config, {key: getattr(args, key) for key in TRAIN_FLAGS})
    updates = {"output_dir": str(getFoMa().root)}
    if run.dataset is None:
        updates["dataset"] = _dataset_option(args)
    run.set_parameters(updates)
    return run


def _dispatch(args: argparse.Namespace) -> None:
    if args.command == "synth":
        keys = ("seed", "clips_per_style", "frames_per_clip", "image_size", "period", "occlusion_rate", "noise_level")
        overrides: dict[str, Any] = {key: getattr(args, key) for key in keys}
        overrides["styles"] = args.styles
        cmd_synth(synth_config(args.config, overrides), _dataset_option(args))

    elif args.command == "train":
        cmd_train(train_run_config(args), args.checkpoint)

    elif args.command == "eval":
        section = read_section(args.config, "eval")
        alpha = args.alpha if args.alpha is not None else float(section.get("alpha", 0.2))
        alphas = _parse_alphas(args.alphas if args.alphas is not None else section.get("alphas"))
        by_visibility = args.by_visibility or section.get("by_visibility", "false").lower() == "true"
        cmd_eval(args.checkpoint, _dataset_option(args), alphas, args.reports, args.name, alpha, by_visibility)

    elif args.command == "infer":
        cmd_infer(args.checkpoint, _dataset_option(args), args.clip, args.out, args.overlays)

    elif args.command == "plot":
        cmd_plot(args.reports, args.plots)

    elif args.command == "ablation":
        cmd_ablation(ablation_config(args), args.out)


def main(argv: Sequence[str] | None = None) -> int:
    """Run a command and map its outcome to an exit code."""
    setup_console_logging()
    try:
        args = build_parser().parse_args(argv)
        root = output_root(args)
        if root:
            getFoMa().set_root(root)
        _dispatch(args)
    except (ConfigurationError, DatasetError, ValueError) as e:
        error(f"Invalid input: {e}")
        return EXIT_INVALID
    except Exception:  # noqa: BLE001
        # any other failure of a command is reported as a runtime failure
        error()
        return EXIT_FAILURE
    return EXIT_OK


def run() -> NoReturn:
    sys.exit(main())
