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

from collections.abc import Mapping
from configparser import ConfigParser
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any

from .core import ConditioningMode, ModelConfig, SequenceSpec
from .ErrorMessage import ConfigurationError, error
from .training import TrainSettings

MODES = ("baseline", "conditioned-once", "conditioned-repeated", "temporal-phase1", "temporal-phase2")

# ini sections read into a RunConfig; [synth] and [eval] are read by the respective commands
RUN_SECTIONS = ("model", "train", "data")


class Config(ConfigParser):
    """Convenience wrapper around ConfigParser to quickly access config files."""

    def __init__(self, file_name: Path | str) -> None:
        """Create a Config instance.

        Args:
            file_name: The path (Path object or string) to the ini file.
        """
        super().__init__()

        # keep the case of keys
        self.optionxform = str  # type: ignore[assignment,method-assign]

        self.file_name = Path(file_name)

    def is_file(self) -> bool:
        return self.file_name.is_file()

    def load_file(self) -> bool:
        try:
            if not self.is_file():
                msg = f"The config file {self.file_name!s} does not exist and thus cannot be read."
                raise FileNotFoundError(msg)
            with self.file_name.open("r", encoding="utf-8") as cf:
                self.read_file(cf)
        except (OSError, ValueError):
            error()
            return False

        return True

    def create_file(self) -> bool:
        try:
            if not self.is_file():
                self.file_name.parent.mkdir(parents=True, exist_ok=True)
                with self.file_name.open("w", encoding="utf-8") as cf:
                    self.write(cf)
                return True
        except OSError:
            error()

        return False

    def set_option(self, section: str, option: str, value: str) -> bool:
        try:
            if self.is_file():
                self.load_file()
            if not self.has_section(section):
                self.add_section(section)
            self.set(section, option, value)
            self.file_name.parent.mkdir(parents=True, exist_ok=True)
            with self.file_name.open("w", encoding="utf-8") as cf:
                self.write(cf)
        except (OSError, ValueError):
            error()
            return False

        return True

    def get_sections(self) -> list[str]:
        if self.load_file():
            return self.sections()
        return []

    def get_options(self, section: str) -> dict[str, str]:
        if self.load_file() and section in self:
            return dict(self[section])
        return {}

    def get_values(self) -> dict[str, dict[str, str]]:
        return {section: self.get_options(section) for section in self.get_sections()}


def _optional(text: str) -> str | None:
    return None if text.strip().lower() in ("", "none", "null") else text.strip()


def _to_bool(value: object) -> bool:
    if isinstance(value, str):
        if value.strip().lower() in ("1", "true", "yes", "on"):
            return True
        if value.strip().lower() in ("0", "false", "no", "off"):
            return False
        msg = f"Cannot interpret '{value}' as a boolean."
        raise ValueError(msg)
    return bool(value)


def _to_int_list(value: object) -> list[int] | None:
    if value is None:
        return None
    if isinstance(value, str):
        text = _optional(value)
        return None if text is None else [int(item) for item in text.replace(",", " ").split()]
    return [int(item) for item in value]  # type: ignore[attr-defined]


def _to_size(value: object) -> list[int] | None:
    if value is None:
        return None
    if isinstance(value, str):
        text = _optional(value)
        return None if text is None else [int(item) for item in text.lower().replace("x", " ").split()]
    return [int(item) for item in value]  # type: ignore[attr-defined]


@dataclass
class RunConfig:
    """Everything a command needs to reproduce a run. It is stored as JSON inside every checkpoint."""

    mode: str = "baseline"
    # model
    num_stages: int = 3
    input_size: int = 128
    heatmap_size: int = 16
    gaussian_sigma: float = 1.0
    channel_multiplier: float = 0.25
    stage_kernel: int = 7
    stage_depth: int = 5
    branch_kernel: int = 7
    subpixel_decoding: bool = False
    conditioning: str = "none"
    conditioned_stages: list[int] | None = None
    seq_l: int = 2
    # optimizer
    learning_rate: float = 1e-3
    iterations: int = 200
    batch_size: int = 8
    seed: int = 0
    grad_clip: float | None = None
    flip_prob: float = 0.5
    # data
    dataset: str | None = None
    output_dir: str | None = None
    estimator_checkpoint: str | None = None
    phase1_checkpoint: str | None = None
    frame_size: list[int] | None = None

    def __post_init__(self) -> None:
        self.validate()

    @classmethod
    def supported_parameters(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def _coerce(self, key: str, value: Any) -> Any:  # noqa: ANN401, PLR0911
        default = getattr(RunConfig, key, None)
        if key == "conditioned_stages":
            return _to_int_list(value)
        if key == "frame_size":
            return _to_size(value)
        if key == "grad_clip":
            text = _optional(value) if isinstance(value, str) else value
            return None if text is None else float(text)
        if key in ("dataset", "output_dir", "estimator_checkpoint", "phase1_checkpoint"):
            return _optional(str(value)) if value is not None else None
        if isinstance(default, bool):
            return _to_bool(value)
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
        return str(value).strip()

    def set_parameters(self, parameters: Mapping[str, Any] | None = None) -> None:
        """Overwrite parameters, e.g. from an ini file section or command-line flags.

        Args:
            parameters: Dictionary mapping from keys-to-overwrite to the new values; string values are converted to
                the type of the parameter.

        Raises:
            ValueError: If a key is not a parameter of a run.
            ConfigurationError: If the resulting configuration is invalid.
        """
        if not parameters:
            return
        supported = self.supported_parameters()
        unsupported = [key for key in parameters if key not in supported]
        if unsupported:
            msg = (
                f"Parameter(s) '{', '.join(unsupported)}' not supported. "
                f"Supported parameters are: {', '.join(supported)}"
            )
            raise ValueError(msg)
        for key, value in parameters.items():
            setattr(self, key, self._coerce(key, value))
        self.validate()

    def validate(self) -> None:
        if self.mode not in MODES:
            msg = f"Unknown train mode '{self.mode}'. Supported modes: {', '.join(MODES)}"
            raise ConfigurationError(msg)
        try:
            ConditioningMode(self.conditioning)
        except ValueError as e:
            msg = f"Unknown conditioning '{self.conditioning}'. Supported: none, once, repeated"
            raise ConfigurationError(msg) from e
        if self.iterations < 1 or self.batch_size < 1 or self.learning_rate <= 0:
            msg = "iterations and batch_size must be >= 1 and learning_rate must be positive."
            raise ConfigurationError(msg)
        if not 0.0 <= self.flip_prob <= 1.0:
            msg = f"flip_prob must lie in [0, 1], got {self.flip_prob}."
            raise ConfigurationError(msg)
        # raises ConfigurationError for inconsistent architecture parameters
        self.model_config()

    @property
    def conditioning_mode(self) -> ConditioningMode:
        """The conditioning of the trained model; the conditioned modes imply it."""
        if self.mode == "conditioned-once":
            return ConditioningMode.ONCE
        if self.mode == "conditioned-repeated":
            return ConditioningMode.REPEATED
        if self.mode == "baseline":
            return ConditioningMode.NONE
        return ConditioningMode(self.conditioning)

    @property
    def is_temporal(self) -> bool:
        return self.mode.startswith("temporal")

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            num_stages=self.num_stages,
            input_size=self.input_size,
            heatmap_size=self.heatmap_size,
            gaussian_sigma=self.gaussian_sigma,
            conditioning_mode=self.conditioning_mode,
            conditioned_stages=None if self.conditioned_stages is None else tuple(self.conditioned_stages),
            seq_spec=SequenceSpec(self.seq_l if self.is_temporal else 0),
            channel_multiplier=self.channel_multiplier,
            stage_kernel=self.stage_kernel,
            stage_depth=self.stage_depth,
            branch_kernel=self.branch_kernel,
            subpixel_decoding=self.subpixel_decoding,
        )

    def train_settings(self) -> TrainSettings:
        return TrainSettings(
            learning_rate=self.learning_rate,
            iterations=self.iterations,
            batch_size=self.batch_size,
            seed=self.seed,
            grad_clip=self.grad_clip,
            # mirroring would reverse the direction of motion the temporal branches learn
            flip_prob=0.0 if self.is_temporal else self.flip_prob,
        )

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, values: Mapping[str, Any]) -> RunConfig:
        config = cls()
        config.set_parameters(values)
        return config

    @classmethod
    def from_sources(cls, file_name: str | Path | None = None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
        """Combine the defaults, the [model], [train] and [data] sections of an ini file and explicit overrides.

        Later sources take precedence: defaults < config file < overrides.
        """
        config = cls()
        if file_name is not None:
            ini = Config(file_name)
            if not ini.is_file():
                msg = f"The config file {file_name!s} does not exist."
                raise ConfigurationError(msg)
            for section in RUN_SECTIONS:
                config.set_parameters(ini.get_options(section))
        config.set_parameters({key: value for key, value in (overrides or {}).items() if value is not None})
        return config


def read_section(file_name: str | Path | None, section: str) -> dict[str, str]:
    """The options of one ini section, or nothing without a file."""
    if file_name is None:
        return {}
    return Config(file_name).get_options(section)
