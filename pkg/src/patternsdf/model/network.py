"""The reconstruction network: encoder, pattern generator, per-scale
aggregation, and the dual-head SDF regressor.

One forward pass encodes the image once, surrounds each query point with its
spatial pattern, projects all 1+n points to the canvas, gathers bilinear
features from every scale of the pyramid, fuses them per scale, and predicts
the signed distance as the sum of a global head (image feature + point) and
a local head (fused local feature + point).
"""

from __future__ import annotations

import numpy as np

from ..nn import tensor as T
from .config import ModelConfig
from .encoder import Encoder, he_linear
from .pattern import init_pattern


class PatternSdfNetwork:
    def __init__(self, config: ModelConfig = None, dtype=np.float64):
        self.config = config or ModelConfig()
        rng = np.random.default_rng(self.config.seed)
        self.encoder = Encoder(self.config.encoder, rng)
        self.params = dict(self.encoder.params)
        n = self.config.pattern.n
        dims = self.config.encoder.widths

        def add_linear(name, fan_in, fan_out, zero=False):
            w = np.zeros((fan_in, fan_out)) if zero else he_linear(rng, fan_in, fan_out)
            self.params[f"{name}.weight"] = T.parameter(w, name=f"{name}.weight")
            self.params[f"{name}.bias"] = T.parameter(np.zeros(fan_out), name=f"{name}.bias")

        if self.config.pattern.trainable:
            add_linear("generator.lift1", 3, 64)
            add_linear("generator.lift2", 64, 256)
            add_linear("generator.lift3", 256, 512)
            add_linear("generator.fuse1", (1 + n) * 512, 512)
            add_linear("generator.fuse2", 512, 256)
            # zero init: offsets start at tanh(0) = 0, the pattern begins
            # exactly at its analytic initialization
            add_linear("generator.out", 256, n * 3, zero=True)

        for s, d in enumerate(dims, start=1):
            add_linear(f"aggregate.scale{s}", (1 + n) * d, d)

        add_linear("sdf.lift1", 3, 64)
        add_linear("sdf.lift2", 64, 256)
        add_linear("sdf.lift3", 256, 512)
        add_linear("sdf.head_a1", self.config.encoder.global_dim + 512, 512)
        add_linear("sdf.head_a2", 512, 256)
        add_linear("sdf.head_a3", 256, 1)
        add_linear("sdf.head_b1", self.config.encoder.local_feature_dim + 512, 512)
        add_linear("sdf.head_b2", 512, 256)
        add_linear("sdf.head_b3", 256, 1)

        if dtype is not np.float64:
            self.astype(dtype)

    # -- parameter plumbing --------------------------------------------------

    def named_parameters(self):
        return dict(self.params)

    def parameters(self):
        return list(self.params.values())

    def astype(self, dtype):
        for p in self.params.values():
            p.data = p.data.astype(dtype)
            p.grad = None
        return self

    @property
    def dtype(self):
        return self.params["sdf.lift1.weight"].data.dtype

    def state_dict(self):
        return {name: p.data.copy() for name, p in self.params.items()}

    def load_state_dict(self, state):
        missing = set(self.params) - set(state)
        surplus = set(state) - set(self.params)
        if missing or surplus:
            raise KeyError(
                f"state mismatch: missing {sorted(missing)[:3]}, surplus {sorted(surplus)[:3]}"
            )
        for name, value in state.items():
            p = self.params[name]
            value = np.asarray(value)
            if value.shape != p.data.shape:
                raise ValueError(
                    f"shape mismatch for {name}: {value.shape} vs {p.data.shape}"
                )
            p.data = value.astype(p.data.dtype)
            p.grad = None

    def _mlp(self, x, names, final=None):
        """Chain of linear layers with relu between, `final` on the last."""
        for i, name in enumerate(names):
            x = T.linear(x, self.params[f"{name}.weight"], self.params[f"{name}.bias"])
            if i < len(names) - 1:
                x = T.relu(x)
            elif final is not None:
                x = final(x)
        return x

    # -- stages ----------------------------------------------------------------

    def encode(self, image):
        return self.encoder.forward(image)

    def generate_pattern(self, query):
        """Pattern points for queries (P, 3): init + learned offsets.

        Returns a (P, n, 3) Tensor. The generator sees coordinates only, so
        its output is image independent and may be cached per query set.
        """
        query = np.asarray(query, dtype=self.dtype)
        p, n = len(query), self.config.pattern.n
        init = init_pattern(query, self.config.pattern).astype(self.dtype)
        if not self.config.pattern.trainable:
            return T.Tensor(init)
        all_pts = np.concatenate([query[:, None, :], init], axis=1)  # (P, 1+n, 3)
        lifted = self._mlp(
            T.Tensor(all_pts.reshape(p * (1 + n), 3)),
            ["generator.lift1", "generator.lift2", "generator.lift3"],
            final=T.relu,
        )
        fused = T.reshape(lifted, (p, (1 + n) * 512))
        offsets = self._mlp(
            fused,
            ["generator.fuse1", "generator.fuse2", "generator.out"],
            final=T.tanh,
        )
        return T.add(T.reshape(offsets, (p, n, 3)), T.Tensor(init))

    def pattern_offsets(self, query):
        """Offsets alone, (P, n, 3) ndarray (zero for the rigid pattern)."""
        with T.no_grad():
            pattern = self.generate_pattern(query)
        init = init_pattern(np.asarray(query), self.config.pattern)
        return np.asarray(pattern.data, dtype=np.float64) - init

    def gather_local(self, maps, pose, points):
        """Bilinear features of (P, 1+n, 3) points on every pyramid scale.

        Returns a list of six (P, 1+n, D_s) Tensors. Projection uses the
        shared pixel-reset rule; gradients reach pattern offsets through the
        projected coordinates when `points` is tracked.
        """
        pts = points if isinstance(points, T.Tensor) else T.Tensor(np.asarray(points, dtype=self.dtype))
        p, k, _ = pts.data.shape
        flat = T.reshape(pts, (p * k, 3))
        uv = T.project_pinhole(flat, pose)
        feats = []
        for fmap in maps:
            sampled = T.bilinear_sample(fmap, uv, self.config.encoder.image_size)
            feats.append(T.reshape(sampled, (p, k, fmap.data.shape[0])))
        return feats

    def aggregate(self, feats):
        """Fuse per-scale (P, 1+n, D_s) features to one (P, sum D_s) vector."""
        fused = []
        for s, f in enumerate(feats, start=1):
            p, k, d = f.data.shape
            flat = T.reshape(f, (p, k * d))
            fused.append(T.relu(T.linear(
                flat,
                self.params[f"aggregate.scale{s}.weight"],
                self.params[f"aggregate.scale{s}.bias"],
            )))
        return T.concat(fused, axis=1)

    def predict_sdf(self, query, local, global_feat, return_parts: bool = False):
        """Dual-head regression: s = head_A(F_g, P_f) + head_B(local, P_f)."""
        query = np.asarray(query, dtype=self.dtype)
        p = len(query)
        point_feat = self._mlp(
            T.Tensor(query), ["sdf.lift1", "sdf.lift2", "sdf.lift3"], final=T.relu
        )
        g = T.expand_rows(global_feat, p)
        head_a = self._mlp(
            T.concat([g, point_feat], axis=1),
            ["sdf.head_a1", "sdf.head_a2", "sdf.head_a3"],
        )
        head_b = self._mlp(
            T.concat([local, point_feat], axis=1),
            ["sdf.head_b1", "sdf.head_b2", "sdf.head_b3"],
        )
        out = T.reshape(T.add(head_a, head_b), (p,))
        if return_parts:
            return out, T.reshape(head_a, (p,)), T.reshape(head_b, (p,))
        return out

    def forward_with_pyramid(self, maps, global_feat, pose, query, pattern=None):
        """Forward for queries (P, 3) reusing a precomputed pyramid.

        `pattern` short-circuits the generator with cached (P, n, 3) points
        (Tensor or array) for inference paths that share a query grid.
        """
        query = np.asarray(query, dtype=self.dtype)
        if pattern is None:
            pattern = self.generate_pattern(query)
        elif not isinstance(pattern, T.Tensor):
            pattern = T.Tensor(np.asarray(pattern, dtype=self.dtype))
        all_points = T.concat([T.Tensor(query[:, None, :]), pattern], axis=1)
        feats = self.gather_local(maps, pose, all_points)
        local = self.aggregate(feats)
        return self.predict_sdf(query, local, global_feat)

    def forward(self, image, pose, query):
        """Full pass: image + pose + queries (P, 3) -> predicted SDF (P,)."""
        maps, global_feat = self.encode(image)
        return self.forward_with_pyramid(maps, global_feat, pose, query)
