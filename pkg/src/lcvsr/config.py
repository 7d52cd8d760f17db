"""Run configuration: one JSON document with model / train / data / eval sections.

Unknown keys are rejected at every level so typos fail loudly. Defaults follow
the published training recipe; ``preset("desk")`` shrinks the model and the
iteration budget to something a single CPU core finishes in minutes.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from lcvsr.model import ModelConfig
from lcvsr.tensor import ConfigError


def _from_dict(cls, raw: dict, section: str):
    if not isinstance(raw, dict):
        raise ConfigError(f"config section {section!r} must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown keys in {section!r}: {', '.join(unknown)}")
    return cls(**raw)


@dataclass
class TrainConfig:
    iterations: int = 800_000
    batch_size: int = 12
    initial_lr: float = 1e-4
    decayed_lr: float = 1e-5
    decay_step: int = 700_000
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    clip_norm: float | None = None
    checkpoint_every: int = 10_000
    deterministic: bool = True
    threads: int | None = None

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.iterations < 0:
            raise ConfigError("iterations must be >= 0")


@dataclass
class SyntheticSpec:
    count: int = 50
    frames: int = 7
    height: int = 48
    width: int = 48


@dataclass
class DataConfig:
    index: str | None = None
    synthetic: dict | None = None
    patch: int = 32
    sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if (self.index is None) == (self.synthetic is None):
            raise ConfigError("data needs exactly one of 'index' or 'synthetic'")
        if self.synthetic is not None:
            _from_dict(SyntheticSpec, self.synthetic, "data.synthetic")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def synthetic_spec(self) -> SyntheticSpec | None:
        return None if self.synthetic is None else SyntheticSpec(**self.synthetic)


@dataclass
class EvalConfig:
    crop: int = 0
    swing: str = "studio"

    def __post_init__(self):
        if self.swing not in ("studio", "full"):
            raise ConfigError(f"eval.swing must be 'studio' or 'full', got {self.swing!r}")


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    data: DataConfig = field(default_factory=lambda: DataConfig(synthetic={}))
    eval: EvalConfig = field(default_factory=EvalConfig)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("run config must be a JSON object")
        unknown = sorted(set(raw) - {"model", "train", "data", "eval"})
        if unknown:
            raise ConfigError(f"unknown config sections: {', '.join(unknown)}")
        return cls(
            model=ModelConfig.from_dict(raw.get("model", {})),
            train=_from_dict(TrainConfig, raw.get("train", {}), "train"),
            data=_from_dict(DataConfig, raw.get("data", {"synthetic": {}}), "data"),
            eval=_from_dict(EvalConfig, raw.get("eval", {}), "eval"),
        )

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "train": dataclasses.asdict(self.train),
            "data": dataclasses.asdict(self.data),
            "eval": dataclasses.asdict(self.eval),
        }

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


DESK_MODEL = dict(
    r=2,
    lfgn_widths=(16, 32, 32),
    grn_widths=(8, 16, 16, 16, 8),
    resblocks_per_subblock=1,
    groups=7,
)


def preset(name: str) -> RunConfig:
    if name == "full":
        return RunConfig()
    if name == "desk":
        return RunConfig(
            model=ModelConfig(**DESK_MODEL),
            train=TrainConfig(iterations=2000, batch_size=4, initial_lr=2e-3, decayed_lr=2e-4, decay_step=1500, checkpoint_every=500),
            data=DataConfig(synthetic=dataclasses.asdict(SyntheticSpec()), patch=12),
        )
    raise ConfigError(f"unknown preset {name!r}; expected 'full' or 'desk'")
