"""Multi-scale convolutional image encoder.

Six stages of (3x3 conv + relu) blocks with 2x2 ceil-mode max pooling
between stages. The per-scale feature maps are taken after each stage's
convolutions (before its pool), giving spatial sizes 137, 69, 35, 18, 9, 5
on the standard canvas. The global feature is the deepest map under global
average pooling followed by one linear+relu.
"""

from __future__ import annotations

import numpy as np

from ..nn import tensor as T
from .config import ConfigError, EncoderConfig


def he_conv(rng, c_out, c_in, dtype=np.float64):
    std = np.sqrt(2.0 / (c_in * 9))
    return rng.normal(0.0, std, size=(c_out, c_in, 3, 3)).astype(dtype)


def he_linear(rng, fan_in, fan_out, dtype=np.float64):
    std = np.sqrt(2.0 / fan_in)
    return rng.normal(0.0, std, size=(fan_in, fan_out)).astype(dtype)


class Encoder:
    def __init__(self, cfg: EncoderConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.params = {}
        c_in = cfg.in_channels
        for s, (width, n_convs) in enumerate(zip(cfg.widths, cfg.convs_per_stage), start=1):
            for c in range(1, n_convs + 1):
                self.params[f"encoder.stage{s}.conv{c}.weight"] = T.parameter(
                    he_conv(rng, width, c_in), name=f"encoder.stage{s}.conv{c}.weight"
                )
                self.params[f"encoder.stage{s}.conv{c}.bias"] = T.parameter(
                    np.zeros(width), name=f"encoder.stage{s}.conv{c}.bias"
                )
                c_in = width
        self.deepest_channels = c_in
        self.params["encoder.global.weight"] = T.parameter(
            he_linear(rng, c_in, cfg.global_dim), name="encoder.global.weight"
        )
        self.params["encoder.global.bias"] = T.parameter(
            np.zeros(cfg.global_dim), name="encoder.global.bias"
        )

    def forward(self, image):
        """image: (H, W, C) array in [0,1] -> (six maps, global feature)."""
        img = np.asarray(image)
        w, h = self.cfg.image_size
        if img.shape != (h, w, self.cfg.in_channels):
            raise ConfigError(
                f"encoder expects image shape {(h, w, self.cfg.in_channels)}, got {img.shape}"
            )
        dtype = self.params["encoder.global.weight"].data.dtype
        x = T.Tensor(np.ascontiguousarray(img.transpose(2, 0, 1), dtype=dtype))
        maps = []
        for s, n_convs in enumerate(self.convs_per_stage, start=1):
            for c in range(1, n_convs + 1):
                x = T.relu(
                    T.conv2d(
                        x,
                        self.params[f"encoder.stage{s}.conv{c}.weight"],
                        self.params[f"encoder.stage{s}.conv{c}.bias"],
                        stride=1,
                    )
                )
            maps.append(x)
            if s < 6:
                x = T.max_pool2d(x)
        pooled = T.reshape(T.global_avg_pool(maps[-1]), (1, self.deepest_channels))
        global_feat = T.reshape(
            T.relu(
                T.linear(
                    pooled,
                    self.params["encoder.global.weight"],
                    self.params["encoder.global.bias"],
                )
            ),
            (self.cfg.global_dim,),
        )
        return maps, global_feat

    @property
    def convs_per_stage(self):
        return self.cfg.convs_per_stage
