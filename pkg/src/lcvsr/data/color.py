"""BT.601 RGB <-> YCbCr conversion (studio swing by default)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# rows: Y, Cb, Cr; columns: R, G, B (inputs in [0, 1])
_STUDIO = np.array(
    [
        [65.481, 128.553, 24.966],
        [-37.797, -74.203, 112.0],
        [112.0, -93.786, -18.214],
    ]
) / 255.0
_STUDIO_OFFSET = np.array([16.0, 128.0, 128.0]) / 255.0

_FULL = np.array(
    [
        [0.299, 0.587, 0.114],
        [-0.168736, -0.331264, 0.5],
        [0.5, -0.418688, -0.081312],
    ]
)
_FULL_OFFSET = np.array([0.0, 0.5, 0.5])

SWINGS = ("studio", "full")


def _matrices(swing: str):
    if swing == "studio":
        return _STUDIO, _STUDIO_OFFSET
    if swing == "full":
        return _FULL, _FULL_OFFSET
    raise ValueError(f"unknown swing {swing!r}; expected one of {SWINGS}")


@dataclass
class YCbCrImage:
    y: np.ndarray
    cb: np.ndarray
    cr: np.ndarray

    def __post_init__(self):
        if not (self.y.shape == self.cb.shape == self.cr.shape) or self.y.ndim != 2:
            raise ValueError(f"planes must be equal 2-D shapes: {self.y.shape}, {self.cb.shape}, {self.cr.shape}")
        self.y = np.clip(np.asarray(self.y, dtype=np.float64), 0.0, 1.0)
        self.cb = np.clip(np.asarray(self.cb, dtype=np.float64), 0.0, 1.0)
        self.cr = np.clip(np.asarray(self.cr, dtype=np.float64), 0.0, 1.0)

    @property
    def shape(self) -> tuple[int, int]:
        return self.y.shape


def _as_unit_rgb(img) -> np.ndarray:
    arr = np.asarray(img)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"RGB image must be H x W x 3, got {arr.shape}")
    if arr.dtype == np.uint8:
        return arr.astype(np.float64) / 255.0
    return arr.astype(np.float64)


def rgb_to_ycbcr(img, swing: str = "studio") -> YCbCrImage:
    """``img`` is H x W x 3, either uint8 or floats in [0, 1]."""
    m, off = _matrices(swing)
    ycc = _as_unit_rgb(img) @ m.T + off
    return YCbCrImage(ycc[..., 0], ycc[..., 1], ycc[..., 2])


def ycbcr_to_rgb_float(ycc: YCbCrImage, swing: str = "studio") -> np.ndarray:
    m, off = _matrices(swing)
    stacked = np.stack([ycc.y, ycc.cb, ycc.cr], axis=-1) - off
    return np.clip(stacked @ np.linalg.inv(m).T, 0.0, 1.0)


def ycbcr_to_rgb(ycc: YCbCrImage, swing: str = "studio") -> np.ndarray:
    """Back to an 8-bit H x W x 3 image."""
    return np.round(ycbcr_to_rgb_float(ycc, swing) * 255.0).astype(np.uint8)


def rgb_to_y(img, swing: str = "studio") -> np.ndarray:
    return rgb_to_ycbcr(img, swing).y
