"""Y-channel PSNR and SSIM, and the per-sequence metric report."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from lcvsr.data.color import YCbCrImage, rgb_to_ycbcr
from lcvsr.data.io import frame_paths, read_rgb

SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5


def _plane(x) -> np.ndarray:
    return x.y if isinstance(x, YCbCrImage) else np.asarray(x, dtype=np.float64)


def _crop(a: np.ndarray, crop: int) -> np.ndarray:
    if crop < 0:
        raise ValueError(f"crop must be >= 0, got {crop}")
    if crop == 0:
        return a
    if 2 * crop >= min(a.shape):
        raise ValueError(f"crop {crop} too large for a {a.shape[0]}x{a.shape[1]} frame")
    return a[crop:-crop, crop:-crop]


def psnr_y(pred, truth, crop: int = 0) -> float:
    """PSNR in dB of Y planes in [0, 1]; ``inf`` for identical planes."""
    a, b = _plane(pred), _plane(truth)
    if a.shape != b.shape:
        raise ValueError(f"psnr: dimension mismatch {a.shape} vs {b.shape}")
    a, b = _crop(a, crop), _crop(b, crop)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def gaussian_window_1d(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    ax = np.arange(size, dtype=np.float64) - (size - 1) / 2
    g = np.exp(-(ax**2) / (2 * sigma * sigma))
    return g / g.sum()


def _filter_valid(a: np.ndarray, g: np.ndarray) -> np.ndarray:
    rows = sliding_window_view(a, len(g), axis=0) @ g
    return sliding_window_view(rows, len(g), axis=1) @ g


def ssim(pred, truth, crop: int = 0) -> float:
    """Mean SSIM over valid 11x11 Gaussian windows, dynamic range 1."""
    x, y = _crop(_plane(pred), crop), _crop(_plane(truth), crop)
    if x.shape != y.shape:
        raise ValueError(f"ssim: dimension mismatch {x.shape} vs {y.shape}")
    if min(x.shape) < SSIM_WINDOW:
        raise ValueError(f"ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} images, got {x.shape}")
    g = gaussian_window_1d()
    c1, c2 = SSIM_K1**2, SSIM_K2**2
    mx, my = _filter_valid(x, g), _filter_valid(y, g)
    sxx = _filter_valid(x * x, g) - mx * mx
    syy = _filter_valid(y * y, g) - my * my
    sxy = _filter_valid(x * y, g) - mx * my
    num = (2 * mx * my + c1) * (2 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))


def _json_db(v: float):
    return "infinite" if math.isinf(v) else round(v, 6)


@dataclass
class FrameMetrics:
    name: str
    psnr: float
    ssim: float


@dataclass
class MetricReport:
    frames: list[FrameMetrics] = field(default_factory=list)
    crop: int = 0
    swing: str = "studio"

    @property
    def mean_psnr(self) -> float:
        return float(np.mean([f.psnr for f in self.frames])) if self.frames else math.nan

    @property
    def mean_ssim(self) -> float:
        return float(np.mean([f.ssim for f in self.frames])) if self.frames else math.nan

    def to_dict(self) -> dict:
        return {
            "frames": [{"name": f.name, "psnr": _json_db(f.psnr), "ssim": round(f.ssim, 6)} for f in self.frames],
            "mean_psnr": _json_db(self.mean_psnr),
            "mean_ssim": round(self.mean_ssim, 6),
            "config": {"crop": self.crop, "swing": self.swing},
        }

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    def write_csv(self, path) -> None:
        lines = ["name,psnr_db,ssim"]
        lines += [f"{f.name},{_json_db(f.psnr)},{f.ssim:.6f}" for f in self.frames]
        Path(path).write_text("\n".join(lines) + "\n")


def evaluate_frames(pred_frames, truth_frames, names, crop: int = 0, swing: str = "studio") -> MetricReport:
    report = MetricReport(crop=crop, swing=swing)
    for name, p, t in zip(names, pred_frames, truth_frames):
        py, ty = rgb_to_ycbcr(p, swing), rgb_to_ycbcr(t, swing)
        report.frames.append(FrameMetrics(name, psnr_y(py, ty, crop), ssim(py, ty, crop)))
    return report


def evaluate_dirs(pred_dir, truth_dir, crop: int = 0, swing: str = "studio") -> MetricReport:
    """Compare same-named frames of two directories on the Y channel."""
    truth = {p.name: p for p in frame_paths(truth_dir)}
    pred = [p for p in frame_paths(pred_dir) if p.name in truth]
    if not pred:
        raise FileNotFoundError(f"no frame names shared between {pred_dir} and {truth_dir}")
    return evaluate_frames(
        (read_rgb(p) for p in pred), (read_rgb(truth[p.name]) for p in pred), [p.name for p in pred], crop, swing
    )
