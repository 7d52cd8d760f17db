"""Temporal profiles and dynamic-filter tile images (8-bit arrays)."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from lcvsr.data.io import to_uint8


def temporal_profile(frames: Sequence[np.ndarray], row: int) -> np.ndarray:
    """Stack row ``row`` of each frame: output row ``n`` is frame ``n``'s row."""
    frames = [np.asarray(f, dtype=np.float64) for f in frames]
    if not frames:
        raise ValueError("temporal_profile needs at least one frame")
    shapes = {f.shape for f in frames}
    if len(shapes) != 1:
        raise ValueError(f"frames differ in size: {sorted(shapes)}")
    h = frames[0].shape[0]
    if not 0 <= row < h:
        raise ValueError(f"row {row} outside [0, {h})")
    return to_uint8(np.stack([f[row] for f in frames]))


def visualize_filters(
    theta: np.ndarray,
    s: int,
    region: tuple[int, int, int, int],
    frame: int = 0,
    fmap: int = 0,
) -> np.ndarray:
    """Tile the ``s x s`` filters of an ``h x w`` pixel region into one image.

    ``theta`` is a ``C x sH x sW x L`` bank (a leading batch axis of 1 is
    dropped). ``region`` is ``(i0, j0, h, w)`` in LR pixel units. Tiles are
    min-max normalised together; a constant region renders mid-gray.
    """
    theta = np.asarray(theta)
    if theta.ndim == 5:
        theta = theta[0]
    C, sh, sw, L = theta.shape
    H, W = sh // s, sw // s
    i0, j0, h, w = region
    if h < 1 or w < 1 or i0 < 0 or j0 < 0 or i0 + h > H or j0 + w > W:
        raise ValueError(f"region {region} outside the {H}x{W} frame")
    if not 0 <= frame < C or not 0 <= fmap < L:
        raise ValueError(f"frame {frame} / map {fmap} outside C={C}, L={L}")
    tiles = theta[frame, s * i0 : s * (i0 + h), s * j0 : s * (j0 + w), fmap].astype(np.float64)
    lo, hi = tiles.min(), tiles.max()
    if hi == lo:
        return np.full(tiles.shape, 128, dtype=np.uint8)
    return to_uint8((tiles - lo) / (hi - lo))
