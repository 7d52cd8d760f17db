"""Central finite-difference check of reverse-mode gradients."""

from __future__ import annotations

from typing import Callable

import numpy as np

from lcvsr import ops
from lcvsr.tensor import Tensor, backward, no_grad, precision


def _projected(out: Tensor, weights: np.ndarray | None) -> float:
    data = out.data.astype(np.float64)
    if weights is None:
        return float(data.sum())
    return float((data * weights).sum())


def _same_pattern(a: list, b: list) -> bool:
    return len(a) == len(b) and all(np.array_equal(x, y) for x, y in zip(a, b))


def grad_check(
    f: Callable[[Tensor], Tensor],
    point,
    eps: float = 1e-3,
    samples: int = 100,
    seed: int = 0,
    floor_frac: float = 1e-3,
    fd_dtype=np.float64,
    return_details: bool = False,
):
    """Max relative error between backward() and central differences of ``f`` at ``point``.

    A non-scalar output is contracted with fixed random weights so every
    output element contributes. Perturbed points are float32; ``f`` is
    re-evaluated there in ``fd_dtype`` (float64 by default, so the oracle's
    own rounding noise stays far below the tolerance being checked) and the
    difference is divided by the perturbation actually realised.
    The relative-error denominator is ``max(|analytic|, |numeric|, floor)``
    where ``floor = floor_frac * max |analytic|`` over the sampled coordinates.

    A coordinate whose probes ``x +- eps`` change the sign pattern of any
    LeakyReLU straddles a kink, where the central difference averages two
    slopes and is no oracle for the gradient at ``x``. Such coordinates are
    skipped and replaced by further random draws; the number skipped is in
    the details.
    """
    if not 1e-5 < eps < 1e-1:
        raise ValueError(f"eps must lie in (1e-5, 1e-1), got {eps}")
    rng = np.random.default_rng(seed)
    point = np.asarray(point, dtype=np.float32)

    x = Tensor(point.copy(), requires_grad=True)
    out = f(x)
    weights = None
    if out.size == 1:
        loss = ops.reshape(out, ()) if out.ndim else out
    else:
        w = rng.standard_normal(out.shape).astype(np.float32)
        weights = w.astype(np.float64)
        loss = ops.sum_all(ops.mul(out, Tensor(w)))
    backward(loss)
    analytic = np.zeros(point.shape, np.float64) if x.grad is None else x.grad.astype(np.float64)

    n = point.size
    order = rng.permutation(n)
    want = min(samples, n)
    idx, num, skipped = [], [], 0
    with no_grad(), precision(fd_dtype):
        with ops.record_kinks() as base:
            f(Tensor(point))
        for flat_i in order:
            if len(idx) == want:
                break
            xp = point.copy().reshape(-1)
            xm = point.copy().reshape(-1)
            xp[flat_i] += np.float32(eps)
            xm[flat_i] -= np.float32(eps)
            h = float(xp[flat_i]) - float(xm[flat_i])
            with ops.record_kinks() as kp:
                fp = _projected(f(Tensor(xp.reshape(point.shape))), weights)
            with ops.record_kinks() as km:
                fm = _projected(f(Tensor(xm.reshape(point.shape))), weights)
            if not (_same_pattern(base, kp) and _same_pattern(base, km)):
                skipped += 1
                continue
            idx.append(flat_i)
            num.append((fp - fm) / h)
    idx = np.asarray(idx, dtype=np.int64)
    num = np.asarray(num, dtype=np.float64)
    ana = analytic.reshape(-1)[idx]
    floor = floor_frac * float(np.max(np.abs(ana))) if len(ana) else 0.0
    denom = np.maximum(np.maximum(np.abs(ana), np.abs(num)), max(floor, 1e-30))
    rel = np.abs(ana - num) / denom
    err = float(rel.max()) if len(rel) else 0.0
    if return_details:
        return err, {"index": idx, "analytic": ana, "numeric": num, "relative": rel, "skipped": skipped, "checked": len(idx)}
    return err
