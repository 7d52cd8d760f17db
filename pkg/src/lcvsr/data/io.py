"""Frame I/O: 8-bit PNG and binary NetPBM (P5/P6), and sequence directories."""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np
from PIL import Image

FRAME_SUFFIXES = (".png", ".ppm", ".pgm", ".pnm")


def read_rgb(path) -> np.ndarray:
    """Read an 8-bit image as H x W x 3 uint8 (grayscale is replicated)."""
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode not in ("RGB", "L"):
                im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.uint8)
    except (OSError, ValueError) as exc:
        raise OSError(f"cannot read frame {path}: {exc}") from exc
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    return arr


def write_image(path, arr: np.ndarray) -> None:
    """Write uint8 H x W (gray) or H x W x 3 (RGB); format follows the suffix."""
    arr = np.asarray(arr)
    if arr.dtype != np.uint8:
        raise TypeError(f"write_image expects uint8, got {arr.dtype}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr).save(path)


def to_uint8(plane: np.ndarray) -> np.ndarray:
    return np.round(np.clip(plane, 0.0, 1.0) * 255.0).astype(np.uint8)


def frame_paths(seq_dir) -> list[Path]:
    seq_dir = Path(seq_dir)
    if not seq_dir.is_dir():
        raise FileNotFoundError(f"sequence directory {seq_dir} does not exist")
    paths = sorted(p for p in seq_dir.iterdir() if p.suffix.lower() in FRAME_SUFFIXES)
    if not paths:
        raise FileNotFoundError(f"no frames in {seq_dir}")
    return paths


def read_sequence(seq_dir) -> list[np.ndarray]:
    """All frames of a sequence directory in name order; dimensions must agree."""
    frames = [read_rgb(p) for p in frame_paths(seq_dir)]
    shapes = {f.shape for f in frames}
    if len(shapes) > 1:
        raise ValueError(f"mixed frame dimensions in {seq_dir}: {sorted(shapes)}")
    return frames


def write_sequence(seq_dir, frames, fmt: str = "frame_{:04d}.png") -> list[Path]:
    out = []
    for i, f in enumerate(frames):
        p = Path(seq_dir) / fmt.format(i)
        write_image(p, f)
        out.append(p)
    return out


def read_index(path) -> list[Path]:
    """Dataset index file: a JSON list of sequence directories (relative to the index)."""
    path = Path(path)
    with open(path) as fh:
        entries = json.load(fh)
    if not isinstance(entries, list) or not all(isinstance(e, str) for e in entries):
        raise ValueError(f"{path}: dataset index must be a JSON list of directory paths")
    return [Path(e) if os.path.isabs(e) else path.parent / e for e in entries]


def write_index(path, seq_dirs) -> None:
    path = Path(path)
    rel = [os.path.relpath(d, path.parent) for d in seq_dirs]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(rel, indent=1) + "\n")
