from .config import (
    ConfigError,
    EncoderConfig,
    FULL_WIDTHS,
    MINI_WIDTHS,
    ModelConfig,
    PATTERN_KINDS,
    PatternConfig,
    full_encoder_config,
    mini_encoder_config,
)
from .encoder import Encoder
from .network import PatternSdfNetwork
from .pattern import init_pattern

__all__ = [
    "ConfigError",
    "Encoder",
    "EncoderConfig",
    "FULL_WIDTHS",
    "MINI_WIDTHS",
    "ModelConfig",
    "PATTERN_KINDS",
    "PatternConfig",
    "PatternSdfNetwork",
    "full_encoder_config",
    "init_pattern",
    "mini_encoder_config",
]
