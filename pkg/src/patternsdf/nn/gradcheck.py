"""Central finite-difference verification of analytic gradients."""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .tensor import Tensor


def numeric_gradient(fn, tensor: Tensor, indices=None, h: float = 1e-5):
    """Central differences of scalar fn() w.r.t. selected entries of tensor.

    fn must re-evaluate the full forward using tensor.data in place.
    Returns (indices, numeric values) over flat positions.
    """
    flat = tensor.data.reshape(-1)
    if indices is None:
        indices = np.arange(flat.size)
    grads = np.empty(len(indices), dtype=np.float64)
    for out_i, i in enumerate(indices):
        orig = flat[i]
        step = h * max(1.0, abs(orig))
        flat[i] = orig + step
        hi = float(fn().data)
        flat[i] = orig - step
        lo = float(fn().data)
        flat[i] = orig
        grads[out_i] = (hi - lo) / (2.0 * step)
    return np.asarray(indices), grads


def check_gradients(fn, tensors, max_entries: int = 64, h: float = 1e-5,
                    tol: float = 1e-4, rng_seed: int = 0):
    """Compare analytic and numeric gradients for each tensor.

    fn() builds the forward graph and returns the scalar loss. At most
    max_entries randomly chosen entries per tensor are probed. Returns the
    worst relative error; raises AssertionError above tol.
    """
    rng = np.random.default_rng(rng_seed)
    for t in tensors:
        t.grad = None
    loss = fn()
    loss.backward()
    worst = 0.0
    for t in tensors:
        assert t.grad is not None, f"no gradient reached {t.name or t}"
        analytic = t.grad.reshape(-1)
        n = analytic.size
        if n > max_entries:
            indices = rng.choice(n, size=max_entries, replace=False)
        else:
            indices = np.arange(n)
        _, numeric = numeric_gradient(fn, t, indices=indices, h=h)
        for idx, num in zip(indices, numeric):
            ana = float(analytic[idx])
            denom = max(abs(ana), abs(num), 1e-8)
            rel = abs(ana - num) / denom
            worst = max(worst, rel)
            assert rel < tol, (
                f"gradient mismatch in {t.name or 'tensor'}[{idx}]: "
                f"analytic {ana:.8g} vs numeric {num:.8g} (rel {rel:.3g})"
            )
    return worst


def _away_from_kinks(values, margin: float = 0.05):
    # nudge entries off the relu kink so central differences stay one-sided
    shift = np.where(np.abs(values) < margin, margin * np.sign(values) + margin, 0.0)
    return values + shift


def op_gradient_cases(rng_seed: int = 0):
    """Named finite-difference cases covering every differentiable op.

    Returns [(op name, fn, tensors)] ready for check_gradients, so callers
    can run the ops independently and report each one.
    """
    from ..camera import look_at

    rng = np.random.default_rng(rng_seed)
    results = []

    def run(name, fn, tensors):
        results.append((name, fn, tensors))

    a = T.parameter(rng.normal(size=(4, 5)), "a")
    b = T.parameter(rng.normal(size=(4, 5)), "b")
    w = rng.normal(size=(4, 5))
    run("add", lambda: T.tensor_sum(T.mul(T.add(a, b), Tensor(w))), [a, b])

    c = T.parameter(rng.normal(size=(5,)), "c")
    run("mul_broadcast", lambda: T.tensor_sum(T.mul(a, c)), [a, c])

    r = T.parameter(_away_from_kinks(rng.normal(size=(6, 3))), "r")
    wr = rng.normal(size=(6, 3))
    run("relu", lambda: T.tensor_sum(T.mul(T.relu(r), Tensor(wr))), [r])

    t = T.parameter(rng.normal(size=(6,)), "t")
    wt = rng.normal(size=6)
    run("tanh", lambda: T.tensor_sum(T.mul(T.tanh(t), Tensor(wt))), [t])

    run("reshape", lambda: T.tensor_sum(T.mul(T.reshape(a, (2, 10)), Tensor(w.reshape(2, 10)))), [a])
    run("concat", lambda: T.tensor_sum(T.mul(T.concat([a, b], axis=1), Tensor(np.tile(w, (1, 2))))), [a, b])
    we = rng.normal(size=(3, 5))
    run("expand_rows", lambda: T.tensor_sum(T.mul(T.expand_rows(c, 3), Tensor(we))), [c])
    run("tensor_sum", lambda: T.tensor_sum(a), [a])

    m1 = T.parameter(rng.normal(size=(3, 4)), "m1")
    m2 = T.parameter(rng.normal(size=(4, 2)), "m2")
    wm = rng.normal(size=(3, 2))
    run("matmul", lambda: T.tensor_sum(T.mul(T.matmul(m1, m2), Tensor(wm))), [m1, m2])

    lx = T.parameter(rng.normal(size=(3, 4)), "lx")
    lw = T.parameter(rng.normal(size=(4, 2)), "lw")
    lb = T.parameter(rng.normal(size=(2,)), "lb")
    run("linear", lambda: T.tensor_sum(T.mul(T.linear(lx, lw, lb), Tensor(wm))), [lx, lw, lb])

    img = T.parameter(rng.normal(size=(2, 5, 5)), "img")
    cw = T.parameter(rng.normal(size=(3, 2, 3, 3)) * 0.4, "cw")
    cb = T.parameter(rng.normal(size=(3,)), "cb")
    w1 = rng.normal(size=(3, 5, 5))
    run("conv2d_s1", lambda: T.tensor_sum(T.mul(T.conv2d(img, cw, cb, stride=1), Tensor(w1))), [img, cw, cb])
    w2 = rng.normal(size=(3, 3, 3))
    run("conv2d_s2", lambda: T.tensor_sum(T.mul(T.conv2d(img, cw, cb, stride=2), Tensor(w2))), [img, cw, cb])

    pool_in = T.parameter(rng.normal(size=(2, 5, 5)), "pool_in")
    wp = rng.normal(size=(2, 3, 3))
    run("max_pool2d", lambda: T.tensor_sum(T.mul(T.max_pool2d(pool_in), Tensor(wp))), [pool_in])

    gap_in = T.parameter(rng.normal(size=(3, 4, 4)), "gap_in")
    wg = rng.normal(size=3)
    run("global_avg_pool", lambda: T.tensor_sum(T.mul(T.global_avg_pool(gap_in), Tensor(wg))), [gap_in])

    fmap = T.parameter(rng.normal(size=(3, 5, 5)), "fmap")
    uv = T.parameter(rng.uniform(0.7, 6.2, size=(6, 2)), "uv")
    wbl = rng.normal(size=(6, 3))
    run("bilinear_sample", lambda: T.tensor_sum(T.mul(T.bilinear_sample(fmap, uv, (8, 8)), Tensor(wbl))), [fmap, uv])
    tiny = T.parameter(rng.normal(size=(2, 1, 1)), "tiny_map")
    run("bilinear_1x1", lambda: T.tensor_sum(T.mul(T.bilinear_sample(tiny, uv, (8, 8)), Tensor(wbl[:, :2]))), [tiny, uv])

    pose = look_at((0.0, 0.0, -2.0), (0.0, 0.0, 0.0), focal=4.0, image_size=(8, 8))
    pts = T.parameter(rng.uniform(-0.35, 0.35, size=(5, 3)), "pts")
    wpr = rng.normal(size=(5, 2))
    run("project_pinhole", lambda: T.tensor_sum(T.mul(T.project_pinhole(pts, pose), Tensor(wpr))), [pts])

    pred = T.parameter(rng.normal(size=(8,)) * 0.2, "pred")
    gt = rng.normal(size=8) * 0.05
    run("weighted_sdf_loss", lambda: T.weighted_sdf_loss(pred, Tensor(gt)), [pred])

    return results


def op_gradient_suite(rng_seed: int = 0):
    """Run every op case; returns [(op name, worst relative error)].

    Raises AssertionError on the first op whose analytic gradient disagrees
    with central differences beyond the default tolerance.
    """
    return [
        (name, check_gradients(fn, tensors, rng_seed=rng_seed))
        for name, fn, tensors in op_gradient_cases(rng_seed)
    ]
