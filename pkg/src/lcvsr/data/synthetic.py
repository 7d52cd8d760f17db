"""Synthetic moving-texture sequences for desk-scale training and tests."""

from __future__ import annotations

import numpy as np


def moving_texture_sequence(
    rng: np.random.Generator,
    frames: int = 7,
    height: int = 48,
    width: int = 48,
    components: int = 24,
    max_speed: float = 1.5,
    max_freq: float = 0.35,
    texture: float = 0.3,
) -> np.ndarray:
    """``frames x height x width`` Y sequence in [0, 1] under a global sub-pixel pan.

    Content is a linear gradient plus a random sum of oriented sinusoids
    (a band-limited noise texture with amplitude falling as 1/sqrt(f)) and
    one soft edge, all evaluated analytically at translated coordinates so
    motion is exact.
    """
    vy, vx = rng.uniform(-max_speed, max_speed, size=2)
    theta = rng.uniform(0, 2 * np.pi, components)
    freq = np.exp(rng.uniform(np.log(0.02), np.log(max_freq), components))
    phase = rng.uniform(0, 2 * np.pi, components)
    amp = rng.standard_normal(components) * texture * np.sqrt(0.05 / freq) / np.sqrt(components)
    ky, kx = freq * np.sin(theta), freq * np.cos(theta)
    grad_dir = rng.uniform(0, 2 * np.pi)
    grad_amp = rng.uniform(0.1, 0.4)
    edge_dir = rng.uniform(0, 2 * np.pi)
    edge_off = rng.uniform(-0.3, 0.3) * min(height, width)
    edge_amp = rng.uniform(-0.25, 0.25)
    base = rng.uniform(0.35, 0.65)

    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    cy, cx = (height - 1) / 2, (width - 1) / 2
    t0 = (frames - 1) / 2
    out = np.empty((frames, height, width))
    for f in range(frames):
        y = yy - cy - vy * (f - t0)
        x = xx - cx - vx * (f - t0)
        ramp = grad_amp * (np.cos(grad_dir) * x + np.sin(grad_dir) * y) / max(height, width)
        proj = np.cos(edge_dir) * x + np.sin(edge_dir) * y - edge_off
        edge = edge_amp * np.tanh(proj / 1.5)
        tex = np.tensordot(amp, np.cos(2 * np.pi * (ky[:, None, None] * y + kx[:, None, None] * x) + phase[:, None, None]), 1)
        out[f] = base + ramp + edge + tex
    return np.clip(out, 0.0, 1.0)


def synthetic_dataset(count: int, seed: int, frames: int = 7, height: int = 48, width: int = 48) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [moving_texture_sequence(rng, frames, height, width) for _ in range(count)]


def horizontal_pan(frames: int, height: int, width: int, speed: int = 1, start: int = 3) -> np.ndarray:
    """Dark frames with a bright 1 px vertical bar moving ``speed`` px right per frame."""
    out = np.zeros((frames, height, width))
    for f in range(frames):
        out[f, :, (start + f * speed) % width] = 1.0
    return out
