"""Degradation model (3x3 Gaussian blur then decimation) and bicubic resampling."""

from __future__ import annotations

import numpy as np


def gaussian_kernel_3x3(sigma: float = 1.0) -> np.ndarray:
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    ax = np.arange(-1, 2, dtype=np.float64)
    k = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_blur_3x3(plane: np.ndarray, sigma: float = 1.0) -> np.ndarray:
    """Blur an H x W plane with edge-replicated borders."""
    k = gaussian_kernel_3x3(sigma)
    plane = np.asarray(plane, dtype=np.float64)
    h, w = plane.shape
    padded = np.pad(plane, 1, mode="edge")
    out = np.zeros((h, w), dtype=np.float64)
    for u in range(3):
        for v in range(3):
            out += k[u, v] * padded[u : u + h, v : v + w]
    return out


def decimate(plane: np.ndarray, r: int) -> np.ndarray:
    """Top-left anchored stride sampling: ``out[i, j] = plane[r*i, r*j]``."""
    if r < 1:
        raise ValueError(f"decimation factor must be >= 1, got {r}")
    plane = np.asarray(plane)
    h, w = plane.shape[0] // r, plane.shape[1] // r
    return np.ascontiguousarray(plane[: h * r : r, : w * r : r])


def degrade(plane: np.ndarray, r: int, sigma: float | None = 1.0) -> np.ndarray:
    """HR plane -> LR plane. ``sigma=None`` or ``0`` skips the blur."""
    if sigma:
        plane = gaussian_blur_3x3(plane, sigma)
    return decimate(plane, r)


def _keys(x: np.ndarray, a: float = -0.5) -> np.ndarray:
    x = np.abs(x)
    x2, x3 = x * x, x * x * x
    near = (a + 2) * x3 - (a + 3) * x2 + 1
    far = a * x3 - 5 * a * x2 + 8 * a * x - 4 * a
    return np.where(x <= 1, near, np.where(x < 2, far, 0.0))


def bicubic_matrix(n_in: int, n_out: int, a: float = -0.5, align: str = "center") -> np.ndarray:
    """n_out x n_in resampling matrix with edge replication.

    ``align="center"`` maps pixel centres (the usual image-resize convention);
    ``align="corner"`` puts input sample ``i`` at output position ``i * n_out / n_in``,
    matching the grid left by top-left anchored decimation.
    """
    if align not in ("center", "corner"):
        raise ValueError(f"align must be 'center' or 'corner', got {align!r}")
    m = np.zeros((n_out, n_in), dtype=np.float64)
    scale = n_in / n_out
    for o in range(n_out):
        src = (o + 0.5) * scale - 0.5 if align == "center" else o * scale
        base = int(np.floor(src))
        for tap in range(base - 1, base + 3):
            m[o, min(max(tap, 0), n_in - 1)] += _keys(np.array(src - tap), a)
    return m


def bicubic_resize(plane: np.ndarray, height: int, width: int, align: str = "center") -> np.ndarray:
    """Keys (a = -0.5) bicubic resampling of an H x W plane."""
    if height < 1 or width < 1:
        raise ValueError(f"target size must be positive, got {height}x{width}")
    plane = np.asarray(plane, dtype=np.float64)
    h, w = plane.shape
    if (h, w) == (height, width):
        return plane.copy()
    return bicubic_matrix(h, height, align=align) @ plane @ bicubic_matrix(w, width, align=align).T
