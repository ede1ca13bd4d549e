"""Experiment configuration: presets, JSON overrides and Django-settings defaults."""

import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from pathlib import Path

from django.conf import settings

from busybot.board.generate import GenerationConfig
from busybot.exceptions import ConfigurationError
from busybot.interact.training import InteractionConfig
from busybot.plan.episode import PlanConfig
from busybot.reason.training import ReasonConfig

PRESET_NAMES = ("desk", "paper")


@dataclass(frozen=True)
class SplitSizes:
    train: int = 500
    novel_config: int = 100
    novel_object: int = 100

    def validate(self):
        if min(self.train, self.novel_config, self.novel_object) < 1:
            raise ConfigurationError(f"every split needs at least one board, got {self}")
        return self

    def as_dict(self):
        return {"train": self.train, "novel_config": self.novel_config,
                "novel_object": self.novel_object}


@dataclass(frozen=True)
class EvaluationConfig:
    interaction_boards: int = 50
    interaction_steps: int = 10
    reason_boards: int = 100

    def validate(self):
        if min(self.interaction_boards, self.interaction_steps, self.reason_boards) < 1:
            raise ConfigurationError(f"evaluation sizes must be positive, got {self}")
        return self


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    preset: str = "desk"
    out_dir: str = "runs"
    splits: SplitSizes = field(default_factory=SplitSizes)
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    interaction: InteractionConfig = field(default_factory=InteractionConfig)
    reason: ReasonConfig = field(default_factory=ReasonConfig)
    plan: PlanConfig = field(default_factory=PlanConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)

    def validate(self):
        if self.preset not in PRESET_NAMES:
            raise ConfigurationError(f"unknown preset {self.preset!r}, expected one of {PRESET_NAMES}")
        for part in (self.splits, self.generation, self.interaction, self.reason, self.plan,
                     self.evaluation):
            part.validate()
        return self

    @property
    def run_dir(self):
        return Path(self.out_dir) / f"{self.preset}-seed{self.seed}"

    def as_dict(self):
        return asdict(self)


def desk_preset():
    return ExperimentConfig(preset="desk")


def paper_preset():
    return ExperimentConfig(
        preset="paper",
        splits=SplitSizes(10_000, 2_000, 2_000),
        generation=GenerationConfig(height=480, width=640),
        interaction=InteractionConfig(
            epochs=400, warmup_epochs=10, phase2_start=100, phase3_start=120,
            boards_per_epoch=16, buffer_capacity=6400, position_decay=40, direction_decay=80,
            window=10, position_down=(32, 64, 128, 256), position_up=(128, 64, 32, 2),
            direction_channels=(32, 64, 64, 128, 128, 256, 256), direction_hidden=(256, 128),
        ),
        reason=ReasonConfig(boards=10_000, epochs=200, batch=64, width=128, action_width=128,
                            embedding=256),
        evaluation=EvaluationConfig(interaction_boards=2_000, reason_boards=2_000),
    )


PRESETS = {"desk": desk_preset, "paper": paper_preset}


def _coerce(current, value, where):
    if isinstance(current, bool):
        if not isinstance(value, bool):
            raise ConfigurationError(f"{where}: expected true/false, got {value!r}")
        return value
    if isinstance(current, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"{where}: expected an integer, got {value!r}")
        return value
    if isinstance(current, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if isinstance(current, str):
        if not isinstance(value, str):
            raise ConfigurationError(f"{where}: expected a string, got {value!r}")
        return value
    if isinstance(current, tuple):
        if not isinstance(value, list):
            raise ConfigurationError(f"{where}: expected a list, got {value!r}")
        return tuple(value)
    return value


def apply_overrides(instance, overrides, where="config"):
    """Copy of a config dataclass with ``overrides`` (a nested dict) applied."""
    if not isinstance(overrides, dict):
        raise ConfigurationError(f"{where}: expected an object, got {overrides!r}")
    known = {f.name for f in fields(instance)}
    changes = {}
    for key, value in overrides.items():
        if key not in known:
            raise ConfigurationError(f"{where}.{key}: unknown key")
        current = getattr(instance, key)
        if is_dataclass(current):
            changes[key] = apply_overrides(current, value, f"{where}.{key}")
        else:
            changes[key] = _coerce(current, value, f"{where}.{key}")
    return replace(instance, **changes)


def read_config_file(path):
    try:
        with open(path) as handle:
            return json.load(handle)
    except FileNotFoundError as exc:
        raise ConfigurationError(f"config file {path} does not exist") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from exc


def load_config(seed=None, preset=None, out_dir=None, path=None, overrides=None):
    """Settings defaults, then the config file, then explicit arguments.

    ``overrides`` is a nested dict shaped like the config file; it is applied
    after the file, so command-line stage flags win over file values.
    """
    from_file = read_config_file(path) if path else {}
    if not isinstance(from_file, dict):
        raise ConfigurationError(f"config file {path} must hold a JSON object")
    name = preset or from_file.get("preset") or settings.BUSYBOT_PRESET
    if name not in PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}, expected one of {PRESET_NAMES}")
    config = replace(PRESETS[name](), seed=settings.BUSYBOT_SEED, out_dir=str(settings.BUSYBOT_OUT_DIR))
    config = apply_overrides(config, {k: v for k, v in from_file.items() if k != "preset"})
    if overrides:
        config = apply_overrides(config, overrides, "flags")
    flags = {"seed": seed, "out_dir": None if out_dir is None else str(out_dir)}
    config = replace(config, **{k: v for k, v in flags.items() if v is not None})
    return config.validate()
