"""Model configuration: encoder widths, pattern kind, loss weights."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..nn.tensor import LossConfig

PATTERN_KINDS = ("uniform-6p", "non-uniform-6p", "non-uniform-3p", "rigid-3p")
_PATTERN_N = {"uniform-6p": 6, "non-uniform-6p": 6, "non-uniform-3p": 3, "rigid-3p": 3}

FULL_WIDTHS = (64, 128, 256, 512, 512, 512)
MINI_WIDTHS = (16, 32, 64, 128, 128, 128)


class ConfigError(ValueError):
    pass


@dataclass
class EncoderConfig:
    widths: tuple = MINI_WIDTHS
    global_dim: int = 128
    image_size: tuple = (137, 137)
    in_channels: int = 3
    vgg16_exact: bool = False

    def __post_init__(self):
        self.widths = tuple(int(w) for w in self.widths)
        if len(self.widths) != 6:
            raise ConfigError(f"encoder needs six scale widths, got {len(self.widths)}")
        if any(w <= 0 for w in self.widths) or self.global_dim <= 0:
            raise ConfigError("encoder widths must be positive")
        if self.vgg16_exact and self.widths != FULL_WIDTHS:
            raise ConfigError("vgg16_exact requires the full width set")

    @property
    def convs_per_stage(self):
        # VGG-16's 13 conv layers sit in five blocks; the sixth scale is
        # then just the pooled deepest map
        return (2, 2, 3, 3, 3, 0) if self.vgg16_exact else (2, 2, 2, 2, 2, 2)

    @property
    def local_feature_dim(self):
        return sum(self.widths)


def mini_encoder_config(**kw) -> EncoderConfig:
    return EncoderConfig(widths=MINI_WIDTHS, global_dim=128, **kw)


def full_encoder_config(**kw) -> EncoderConfig:
    return EncoderConfig(widths=FULL_WIDTHS, global_dim=1024, **kw)


@dataclass
class PatternConfig:
    kind: str = "non-uniform-6p"
    l: float = 0.2

    def __post_init__(self):
        if self.kind not in PATTERN_KINDS:
            raise ConfigError(f"unknown pattern kind {self.kind!r}; pick from {PATTERN_KINDS}")
        if self.l <= 0:
            raise ConfigError(f"pattern edge l must be positive, got {self.l}")

    @property
    def n(self) -> int:
        return _PATTERN_N[self.kind]

    @property
    def trainable(self) -> bool:
        return self.kind != "rigid-3p"


@dataclass
class ModelConfig:
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    pattern: PatternConfig = field(default_factory=PatternConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    seed: int = 0

    def to_dict(self):
        return {
            "encoder": {
                "widths": list(self.encoder.widths),
                "global_dim": self.encoder.global_dim,
                "image_size": list(self.encoder.image_size),
                "in_channels": self.encoder.in_channels,
                "vgg16_exact": self.encoder.vgg16_exact,
            },
            "pattern": {"kind": self.pattern.kind, "l": self.pattern.l},
            "loss": {
                "omega1": self.loss.omega1,
                "omega2": self.loss.omega2,
                "delta": self.loss.delta,
            },
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d):
        enc = d.get("encoder", {})
        pat = d.get("pattern", {})
        loss = d.get("loss", {})
        return cls(
            encoder=EncoderConfig(
                widths=tuple(enc.get("widths", MINI_WIDTHS)),
                global_dim=enc.get("global_dim", 128),
                image_size=tuple(enc.get("image_size", (137, 137))),
                in_channels=enc.get("in_channels", 3),
                vgg16_exact=enc.get("vgg16_exact", False),
            ),
            pattern=PatternConfig(kind=pat.get("kind", "non-uniform-6p"), l=pat.get("l", 0.2)),
            loss=LossConfig(
                omega1=loss.get("omega1", 4.0),
                omega2=loss.get("omega2", 1.0),
                delta=loss.get("delta", 0.01),
            ),
            seed=d.get("seed", 0),
        )

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))
