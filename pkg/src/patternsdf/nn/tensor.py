"""Tape-based reverse-mode autodiff over numpy arrays.

A Tensor wraps an ndarray plus an optional gradient slot. Ops record their
parents and a backward closure; Tensor.backward() runs the tape in reverse
topological order. The op set is exactly what the network needs: dense and
convolutional primitives, pooling, pointwise nonlinearities, shape plumbing,
bilinear map sampling, pinhole projection, and the weighted SDF loss.

Gradients accumulate with += so shared subgraphs (one image pyramid feeding
many query points) combine correctly. Dtype follows the input arrays: float64
for oracle-grade runs, float32 permitted for training throughput.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

_grad_enabled = True


@contextmanager
def no_grad():
    """Disable graph recording inside the block (inference mode)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def grad_enabled() -> bool:
    return _grad_enabled


class ShapeError(ValueError):
    pass


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad: bool = False, name: str = None):
        self.data = np.asarray(data)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None
        self.name = name

    # -- graph construction ------------------------------------------------

    @staticmethod
    def _result(data, parents, backward):
        """Wrap an op result, recording the tape only when needed."""
        track = _grad_enabled and any(p.requires_grad for p in parents)
        out = Tensor(data, requires_grad=track)
        if track:
            out._parents = tuple(parents)
            out._backward = backward
        return out

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=self.data.dtype, copy=True)
        else:
            self.grad += g

    def backward(self):
        if self.data.size != 1:
            raise ShapeError("backward() requires a scalar loss tensor")
        topo = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- numpy conveniences --------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def detach(self):
        return Tensor(self.data)

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # operator sugar, all routed through the free functions below
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __matmul__(self, other):
        return matmul(self, other)

    def relu(self):
        return relu(self)

    def tanh(self):
        return tanh(self)

    def sum(self):
        return tensor_sum(self)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(data, name: str = None) -> Tensor:
    return Tensor(np.asarray(data), requires_grad=True, name=name)


def _unbroadcast(grad, shape):
    """Reduce a broadcast gradient back to the original operand shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# -- elementwise and shape ops ---------------------------------------------


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data + b.data

    def backward(g):
        if a.requires_grad or a._backward:
            a._accumulate(_unbroadcast(g, a.data.shape))
        if b.requires_grad or b._backward:
            b._accumulate(_unbroadcast(g, b.data.shape))

    return Tensor._result(out_data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data * b.data

    def backward(g):
        if a.requires_grad or a._backward:
            a._accumulate(_unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad or b._backward:
            b._accumulate(_unbroadcast(g * a.data, b.data.shape))

    return Tensor._result(out_data, (a, b), backward)


def relu(x) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0
    # np.maximum, not np.where: a NaN must stay NaN so divergence is
    # caught by the trainer's non-finite guard instead of masked to zero
    out_data = np.maximum(x.data, 0.0)

    def backward(g):
        x._accumulate(g * mask)

    return Tensor._result(out_data, (x,), backward)


def tanh(x) -> Tensor:
    x = as_tensor(x)
    out_data = np.tanh(x.data)

    def backward(g):
        x._accumulate(g * (1.0 - out_data * out_data))

    return Tensor._result(out_data, (x,), backward)


def reshape(x, shape) -> Tensor:
    x = as_tensor(x)
    out_data = x.data.reshape(shape)

    def backward(g):
        x._accumulate(g.reshape(x.data.shape))

    return Tensor._result(out_data, (x,), backward)


def concat(tensors, axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        pieces = np.split(g, splits, axis=axis)
        for t, piece in zip(tensors, pieces):
            if t.requires_grad or t._backward:
                t._accumulate(piece)

    return Tensor._result(out_data, tuple(tensors), backward)


def tensor_sum(x) -> Tensor:
    x = as_tensor(x)
    out_data = np.asarray(x.data.sum())

    def backward(g):
        x._accumulate(np.broadcast_to(g, x.data.shape))

    return Tensor._result(out_data, (x,), backward)


def expand_rows(x, n: int) -> Tensor:
    """Tile a (D,) vector to (n, D); gradient sums over the tiled rows."""
    x = as_tensor(x)
    if x.data.ndim != 1:
        raise ShapeError(f"expand_rows expects a vector, got shape {x.data.shape}")
    out_data = np.broadcast_to(x.data, (n, x.data.shape[0])).copy()

    def backward(g):
        x._accumulate(g.sum(axis=0))

    return Tensor._result(out_data, (x,), backward)


# -- dense algebra -----------------------------------------------------------


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError(
            f"matmul expects 2D operands, got {a.data.shape} @ {b.data.shape}"
        )
    if a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.data.shape} @ {b.data.shape}")
    out_data = a.data @ b.data

    def backward(g):
        if a.requires_grad or a._backward:
            a._accumulate(g @ b.data.T)
        if b.requires_grad or b._backward:
            b._accumulate(a.data.T @ g)

    return Tensor._result(out_data, (a, b), backward)


def linear(x, weight, bias=None) -> Tensor:
    """y = x @ weight + bias, x: (N, in), weight: (in, out), bias: (out,)."""
    x, weight = as_tensor(x), as_tensor(weight)
    if x.data.shape[-1] != weight.data.shape[0]:
        raise ShapeError(
            f"linear: input dim {x.data.shape[-1]} != weight rows {weight.data.shape[0]}"
        )
    y = matmul(x, weight)
    return add(y, bias) if bias is not None else y


# -- convolutional ops --------------------------------------------------------


def _im2col(data, k, stride, pad):
    c, h, w = data.shape
    padded = np.pad(data, ((0, 0), (pad, pad), (pad, pad)))
    ho = (h + 2 * pad - k) // stride + 1
    wo = (w + 2 * pad - k) // stride + 1
    s0, s1, s2 = padded.strides
    view = np.lib.stride_tricks.as_strided(
        padded,
        shape=(c, k, k, ho, wo),
        strides=(s0, s1, s2, s1 * stride, s2 * stride),
        writeable=False,
    )
    return view.reshape(c * k * k, ho * wo), ho, wo, padded.shape


def conv2d(x, weight, bias=None, stride: int = 1, pad: int = 1) -> Tensor:
    """3x3 convolution over a (C_in, H, W) map.

    weight: (C_out, C_in, 3, 3); bias: (C_out,). Output (C_out, H_out, W_out)
    with H_out = (H + 2*pad - 3) // stride + 1.
    """
    x, weight = as_tensor(x), as_tensor(weight)
    bias = as_tensor(bias) if bias is not None else None
    c_out, c_in, kh, kw = weight.data.shape
    if kh != 3 or kw != 3:
        raise ShapeError(f"conv2d supports 3x3 kernels, got {kh}x{kw}")
    if x.data.ndim != 3 or x.data.shape[0] != c_in:
        raise ShapeError(
            f"conv2d: input shape {x.data.shape} does not match weight {weight.data.shape}"
        )
    if stride not in (1, 2):
        raise ShapeError(f"conv2d stride must be 1 or 2, got {stride}")

    cols, ho, wo, padded_shape = _im2col(x.data, 3, stride, pad)
    w_mat = weight.data.reshape(c_out, c_in * 9)
    out = (w_mat @ cols).reshape(c_out, ho, wo)
    if bias is not None:
        out = out + as_tensor(bias).data[:, None, None]

    def backward(g):
        g_mat = g.reshape(c_out, ho * wo)
        if weight.requires_grad or weight._backward:
            weight._accumulate((g_mat @ cols.T).reshape(weight.data.shape))
        if bias is not None and (bias.requires_grad or bias._backward):
            bias._accumulate(g.sum(axis=(1, 2)))
        if x.requires_grad or x._backward:
            dcols = (w_mat.T @ g_mat).reshape(c_in, 3, 3, ho, wo)
            dpad = np.zeros(padded_shape, dtype=g.dtype)
            for ki in range(3):
                for kj in range(3):
                    dpad[
                        :,
                        ki : ki + stride * (ho - 1) + 1 : stride,
                        kj : kj + stride * (wo - 1) + 1 : stride,
                    ] += dcols[:, ki, kj]
            h, w = x.data.shape[1:]
            x._accumulate(dpad[:, pad : pad + h, pad : pad + w])

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor._result(out, parents, backward)


def max_pool2d(x) -> Tensor:
    """2x2 max pooling, stride 2, ceil mode (odd edges padded with -inf)."""
    x = as_tensor(x)
    c, h, w = x.data.shape
    h2 = -(-h // 2) * 2
    w2 = -(-w // 2) * 2
    padded = np.full((c, h2, w2), -np.inf, dtype=x.data.dtype)
    padded[:, :h, :w] = x.data
    ho, wo = h2 // 2, w2 // 2
    windows = padded.reshape(c, ho, 2, wo, 2).transpose(0, 1, 3, 2, 4).reshape(c, ho, wo, 4)
    flat_idx = windows.argmax(axis=3)
    out = np.take_along_axis(windows, flat_idx[..., None], axis=3)[..., 0]

    def backward(g):
        di, dj = np.divmod(flat_idx, 2)
        ci = np.arange(c)[:, None, None]
        hi = np.arange(ho)[None, :, None] * 2 + di
        wj = np.arange(wo)[None, None, :] * 2 + dj
        dpad = np.zeros((c, h2, w2), dtype=g.dtype)
        np.add.at(dpad, (np.broadcast_to(ci, flat_idx.shape), hi, wj), g)
        x._accumulate(dpad[:, :h, :w])

    return Tensor._result(out, (x,), backward)


def global_avg_pool(x) -> Tensor:
    """(C, H, W) -> (C,) spatial mean."""
    x = as_tensor(x)
    c, h, w = x.data.shape
    out = x.data.mean(axis=(1, 2))

    def backward(g):
        x._accumulate(np.broadcast_to(g[:, None, None] / (h * w), x.data.shape))

    return Tensor._result(out, (x,), backward)


# -- sampling and projection --------------------------------------------------


def bilinear_sample(feature_map, queries, image_size) -> Tensor:
    """Sample a (C, Hm, Wm) map at continuous pixel queries (P, 2) as (u, v).

    Queries are expressed on the full image canvas; the lookup rescales them
    to map resolution with aligned corners, which matches upsampling the map
    to image size and interpolating there. Gradients always flow to the map;
    they flow to the query coordinates too when `queries` is a tracked
    Tensor, enabling learnable pattern offsets.
    """
    feature_map = as_tensor(feature_map)
    q = as_tensor(queries)
    c, hm, wm = feature_map.data.shape
    img_w, img_h = image_size
    qd = q.data
    if qd.ndim != 2 or qd.shape[1] != 2:
        raise ShapeError(f"queries must be (P, 2), got {qd.shape}")

    sx = (wm - 1) / (img_w - 1) if img_w > 1 else 0.0
    sy = (hm - 1) / (img_h - 1) if img_h > 1 else 0.0
    mx = qd[:, 0] * sx
    my = qd[:, 1] * sy
    x0 = np.clip(np.floor(mx).astype(np.int64), 0, max(wm - 2, 0))
    y0 = np.clip(np.floor(my).astype(np.int64), 0, max(hm - 2, 0))
    x1 = np.minimum(x0 + 1, wm - 1)
    y1 = np.minimum(y0 + 1, hm - 1)
    # int64 - f32 would promote to f64; keep weights in the query dtype
    tx = np.clip(mx - x0.astype(mx.dtype), 0.0, 1.0)
    ty = np.clip(my - y0.astype(my.dtype), 0.0, 1.0)

    f = feature_map.data
    # rows of the (cell, channel) view are contiguous, so corner lookups
    # are cache-friendly row gathers instead of strided channel gathers
    ft = np.ascontiguousarray(f.reshape(c, -1).T)
    i00 = y0 * wm + x0
    i01 = y0 * wm + x1
    i10 = y1 * wm + x0
    i11 = y1 * wm + x1
    w00 = (1 - tx) * (1 - ty)
    w01 = tx * (1 - ty)
    w10 = (1 - tx) * ty
    w11 = tx * ty

    parents = (feature_map, q) if isinstance(queries, Tensor) else (feature_map,)
    tracked = _grad_enabled and any(p.requires_grad for p in parents)
    if not tracked and ft.dtype == w00.dtype:
        # inference fast path; nothing has to survive for backward
        if hm * wm <= 512:
            # few distinct cells: one dense interpolation-weight GEMM beats
            # four scattered gathers
            wmat = np.zeros((qd.shape[0], hm * wm), dtype=ft.dtype)
            rows = np.arange(qd.shape[0])
            wmat[rows, i00] += w00
            wmat[rows, i01] += w01
            wmat[rows, i10] += w10
            wmat[rows, i11] += w11
            return Tensor(wmat @ ft)
        out = ft[i00]
        out *= w00[:, None]
        for idx, ww in ((i01, w01), (i10, w10), (i11, w11)):
            t = ft[idx]
            t *= ww[:, None]
            out += t
        return Tensor(out)

    f00 = ft[i00]
    f01 = ft[i01]
    f10 = ft[i10]
    f11 = ft[i11]
    out = (
        f00 * w00[:, None] + f01 * w01[:, None]
        + f10 * w10[:, None] + f11 * w11[:, None]
    )  # (P, C)

    def backward(g):
        if feature_map.requires_grad or feature_map._backward:
            # bincount on (cell, channel) linear indices; np.add.at is
            # unbuffered and an order of magnitude slower here
            chan = np.arange(c, dtype=np.int64)[None, :]
            acc = np.zeros(hm * wm * c)
            for idx, ww in ((i00, w00), (i01, w01), (i10, w10), (i11, w11)):
                flat = (idx[:, None] * c + chan).ravel()
                acc += np.bincount(flat, weights=(g * ww[:, None]).ravel(),
                                   minlength=hm * wm * c)
            dmap = acc.reshape(hm * wm, c).T.reshape(c, hm, wm).astype(f.dtype)
            feature_map._accumulate(dmap)
        if isinstance(queries, Tensor) and (q.requires_grad or q._backward):
            dmx = ((1 - ty)[:, None] * (f01 - f00) + ty[:, None] * (f11 - f10)) * g
            dmy = ((1 - tx)[:, None] * (f10 - f00) + tx[:, None] * (f11 - f01)) * g
            dq = np.stack([dmx.sum(axis=1) * sx, dmy.sum(axis=1) * sy], axis=1)
            q._accumulate(dq)

    return Tensor._result(out, parents, backward)


PROJECTION_Z_FLOOR = 1e-3


def project_pinhole(points, pose) -> Tensor:
    """Differentiable pinhole projection of (P, 3) world points to pixels.

    Matches camera.project including the per-axis reset; a clamped coordinate
    passes zero gradient (the reset is flat). Depth is floored at a small
    positive value instead of raising: learned pattern offsets can push a
    companion point behind the camera mid-training, and the floor sends it
    to the canvas edge exactly as the pixel reset does for lateral overshoot,
    keeping the step total. Floored points pass no gradient at all.
    """
    pts = as_tensor(points)
    # pose matrices are stored at 64-bit; compute in the points' dtype so an
    # f32 model does not silently promote its whole downstream graph
    dt = pts.data.dtype if np.issubdtype(pts.data.dtype, np.floating) else np.float64
    R = pose.transform[:3, :3].astype(dt)
    t = pose.transform[:3, 3].astype(dt)
    cam = pts.data @ R.T + t
    z_raw = cam[:, 2]
    z = np.maximum(z_raw, PROJECTION_Z_FLOOR)
    f = pose.focal
    cx, cy = pose.principal
    u_raw = f * cam[:, 0] / z + cx
    v_raw = f * cam[:, 1] / z + cy
    w, h = pose.image_size
    u = np.clip(u_raw, 0.0, w - 1.0)
    v = np.clip(v_raw, 0.0, h - 1.0)
    out = np.stack([u, v], axis=1)

    def backward(g):
        gu = g[:, 0] * (u_raw == u)
        gv = g[:, 1] * (v_raw == v)
        # du/dcam = f * [1/z, 0, -x/z^2]; dv/dcam = f * [0, 1/z, -y/z^2]
        inv_z = (z_raw == z) / z
        dcam = np.empty_like(cam)
        dcam[:, 0] = gu * f * inv_z
        dcam[:, 1] = gv * f * inv_z
        dcam[:, 2] = -f * inv_z * inv_z * (gu * cam[:, 0] + gv * cam[:, 1])
        pts._accumulate(dcam @ R)

    return Tensor._result(out, (pts,), backward)


# -- loss ---------------------------------------------------------------------


@dataclass
class LossConfig:
    omega1: float = 4.0
    omega2: float = 1.0
    delta: float = 0.01

    def __post_init__(self):
        if self.omega1 <= 0 or self.omega2 <= 0 or self.delta <= 0:
            raise ValueError("loss weights and delta must be positive")


def weighted_sdf_loss(pred, gt, cfg: LossConfig = None) -> Tensor:
    """Sum over points of w * |pred - gt|, w = omega1 near the surface
    (|gt| < delta) and omega2 elsewhere.
    """
    cfg = cfg or LossConfig()
    pred = as_tensor(pred)
    gt = np.asarray(gt.data if isinstance(gt, Tensor) else gt)
    if pred.data.shape != gt.shape:
        raise ShapeError(f"loss shapes differ: {pred.data.shape} vs {gt.shape}")
    weights = np.where(np.abs(gt) < cfg.delta, cfg.omega1, cfg.omega2)
    diff = pred.data - gt
    out = np.asarray((weights * np.abs(diff)).sum())

    def backward(g):
        pred._accumulate(g * weights * np.sign(diff))

    return Tensor._result(out, (pred,), backward)
