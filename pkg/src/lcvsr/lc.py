"""Dynamic local filtering: filter-bank layout, the locally-connected layer, pixel shuffle."""

from __future__ import annotations

import numpy as np

from lcvsr import ops
from lcvsr.tensor import ShapeError, Tensor, as_tensor, make_result


def _flat_to_bank(a: np.ndarray, C: int, s: int, L: int) -> np.ndarray:
    n, _, h, w = a.shape
    t = a.reshape(n, C, s, s, L, h, w).transpose(0, 1, 5, 2, 6, 3, 4)  # n, k, i, u, j, v, l
    return np.ascontiguousarray(t).reshape(n, C, s * h, s * w, L)


def _bank_to_flat(a: np.ndarray, s: int) -> np.ndarray:
    n, C, sh, sw, L = a.shape
    h, w = sh // s, sw // s
    t = a.reshape(n, C, h, s, w, s, L).transpose(0, 1, 3, 5, 6, 2, 4)  # n, k, u, v, l, i, j
    return np.ascontiguousarray(t).reshape(n, C * s * s * L, h, w)


def resize_to_filterbank(flat, C: int, s: int, L: int) -> Tensor:
    """Rearrange ``N x C*s*s*L x H x W`` generator output into ``N x C x sH x sW x L``.

    Channel ``c'`` splits as ``(k, u, v, l)`` in row-major order and lands at
    ``theta[k, s*i + u, s*j + v, l]``.
    """
    flat = as_tensor(flat)
    if flat.ndim != 4:
        raise ShapeError(f"resize_to_filterbank: expected N x C' x H x W, got {flat.shape}")
    cp = flat.shape[1]
    if cp != C * s * s * L:
        raise ShapeError(f"resize_to_filterbank: depth {cp} != C*s^2*L = {C * s * s * L}")
    out = _flat_to_bank(flat.data, C, s, L)
    return make_result(out, (flat,), lambda g: (_bank_to_flat(g, s),), "resize_to_filterbank")


def filterbank_to_flat(theta, s: int) -> Tensor:
    """Inverse of :func:`resize_to_filterbank`."""
    theta = as_tensor(theta)
    if theta.ndim != 5 or theta.shape[2] % s or theta.shape[3] % s:
        raise ShapeError(f"filterbank_to_flat: {theta.shape} is not a bank with filter side {s}")
    _, C, _, _, L = theta.shape
    out = _bank_to_flat(theta.data, s)
    return make_result(out, (theta,), lambda g: (_flat_to_bank(g, C, s, L),), "filterbank_to_flat")


def lc_apply(frames, theta) -> Tensor:
    """Apply one ``s x s x C`` filter per output pixel and per map.

    ``out[n, l, i, j] = sum_{k,u,v} theta[n, k, s*i+u, s*j+v, l] * Y[n, k, i+u-d, j+v-d]``
    with zero samples outside the frame.
    """
    frames, theta = as_tensor(frames), as_tensor(theta)
    if frames.ndim != 4 or theta.ndim != 5:
        raise ShapeError(f"lc_apply: expected N x C x H x W and N x C x sH x sW x L, got {frames.shape}, {theta.shape}")
    n, c, h, w = frames.shape
    if theta.shape[:2] != (n, c) or theta.shape[2] % h or theta.shape[3] % w:
        raise ShapeError(f"lc_apply: filter bank {theta.shape} does not match frames {frames.shape}")
    s = theta.shape[2] // h
    if s % 2 == 0 or theta.shape[3] != s * w:
        raise ShapeError(f"lc_apply: filter side must be odd and equal on both axes, bank {theta.shape}")
    d = s // 2
    L = theta.shape[4]

    padded = np.pad(frames.data, ((0, 0), (0, 0), (d, d), (d, d)))
    # patches[n, k, i, u, j, v] = padded[n, k, i+u, j+v]
    patches = np.empty((n, c, h, s, w, s), dtype=padded.dtype)
    for u in range(s):
        for v in range(s):
            patches[:, :, :, u, :, v] = padded[:, :, u : u + h, v : v + w]
    tv = theta.data.reshape(n, c, h, s, w, s, L)
    # contract (k, u, v) per pixel: move pixel axes to the front of a batched matmul
    tm = tv.transpose(0, 2, 4, 1, 3, 5, 6).reshape(n, h, w, c * s * s, L)
    pm = patches.transpose(0, 2, 4, 1, 3, 5).reshape(n, h, w, 1, c * s * s)
    out = np.matmul(pm, tm)[:, :, :, 0, :].transpose(0, 3, 1, 2)
    out = np.ascontiguousarray(out)

    def backward_fn(g):
        # g: n, L, h, w
        gm = g.transpose(0, 2, 3, 1)[:, :, :, None, :]  # n, h, w, 1, L
        dtheta = dframes = None
        if theta.requires_grad:
            dt = np.matmul(pm.transpose(0, 1, 2, 4, 3), gm)  # n, h, w, K, L
            dt = dt.reshape(n, h, w, c, s, s, L).transpose(0, 3, 1, 4, 2, 5, 6)
            dtheta = np.ascontiguousarray(dt).reshape(n, c, h * s, w * s, L)
        if frames.requires_grad:
            dp = np.matmul(gm, tm.transpose(0, 1, 2, 4, 3))[:, :, :, 0, :]  # n, h, w, K
            dp = dp.reshape(n, h, w, c, s, s).transpose(0, 3, 1, 4, 2, 5)  # n, k, i, u, j, v
            dpad = np.zeros_like(padded)
            for u in range(s):
                for v in range(s):
                    dpad[:, :, u : u + h, v : v + w] += dp[:, :, :, u, :, v]
            dframes = dpad[:, :, d : d + h, d : d + w]
        return dframes, dtheta

    return make_result(out, (frames, theta), backward_fn, "lc_apply")


def pixel_shuffle(maps, r: int) -> Tensor:
    """``N x r*r x H x W`` -> ``N x 1 x rH x rW`` with ``out[y, x] = maps[(y%r)*r + x%r, y//r, x//r]``."""
    maps = as_tensor(maps)
    if maps.ndim != 4:
        raise ShapeError(f"pixel_shuffle: expected N x L x H x W, got {maps.shape}")
    n, L, h, w = maps.shape
    if L != r * r:
        raise ShapeError(f"pixel_shuffle: {L} maps cannot form a x{r} shuffle (need r^2 = {r * r})")
    t = ops.reshape(maps, (n, r, r, h, w))
    t = ops.permute(t, (0, 3, 1, 4, 2))  # n, i, a, j, b
    return ops.reshape(t, (n, 1, h * r, w * r))


def pixel_unshuffle(plane, r: int) -> Tensor:
    plane = as_tensor(plane)
    n, one, hr, wr = plane.shape
    if one != 1 or hr % r or wr % r:
        raise ShapeError(f"pixel_unshuffle: {plane.shape} is not 1-channel and divisible by {r}")
    h, w = hr // r, wr // r
    t = ops.reshape(plane, (n, h, r, w, r))
    t = ops.permute(t, (0, 2, 4, 1, 3))
    return ops.reshape(t, (n, r * r, h, w))
