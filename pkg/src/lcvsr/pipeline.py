"""Inference: Y through the network, chroma through bicubic, and held-out scoring."""

from __future__ import annotations

import numpy as np

from lcvsr.data.color import YCbCrImage, rgb_to_ycbcr, ycbcr_to_rgb
from lcvsr.data.dataset import center_window
from lcvsr.data.degrade import bicubic_resize, degrade
from lcvsr.metrics import psnr_y
from lcvsr.model import ModelConfig, ParameterSet, lcvsr_forward
from lcvsr.tensor import Tensor, no_grad

# top-left anchored decimation leaves LR sample i at HR position r*i
LR_GRID = "corner"


def super_resolve_y(frames: np.ndarray, params: ParameterSet, cfg: ModelConfig, return_filters: bool = False):
    """``C x H x W`` (or ``N x C x H x W``) LR Y in [0, 1] -> ``rH x rW`` HR Y, clipped to [0, 1]."""
    frames = np.asarray(frames, dtype=np.float32)
    with no_grad():
        out, theta = lcvsr_forward(Tensor(frames), params, cfg, return_filters=True)
    hr = np.clip(out.data.astype(np.float64), 0.0, 1.0)
    hr = hr[:, 0] if hr.ndim == 4 else hr[0]
    if return_filters:
        return hr, None if theta is None else theta.data
    return hr


def super_resolve_rgb(lr_frames: list[np.ndarray], params: ParameterSet, cfg: ModelConfig, swing: str = "studio"):
    """LR RGB frames (uint8, centred window taken if more than C) -> HR RGB centre frame."""
    frames = center_window(list(lr_frames), cfg.C)
    ycc = [rgb_to_ycbcr(f, swing) for f in frames]
    y = np.stack([c.y for c in ycc])
    hr_y = super_resolve_y(y, params, cfg)
    center = ycc[len(ycc) // 2]
    h, w = hr_y.shape
    merged = YCbCrImage(hr_y, bicubic_resize(center.cb, h, w, LR_GRID), bicubic_resize(center.cr, h, w, LR_GRID))
    return ycbcr_to_rgb(merged, swing)


def holdout_scores(
    sequences: list[np.ndarray],
    params: ParameterSet,
    cfg: ModelConfig,
    sigma: float | None = 1.0,
    crop: int = 0,
) -> dict[str, float]:
    """Mean Y-PSNR of the model and of bicubic upsampling on held-out HR sequences."""
    model_db, bicubic_db = [], []
    r = cfg.r
    for seq in sequences:
        hr = center_window(seq, cfg.C)
        lr = np.stack([degrade(f, r, sigma) for f in hr])
        truth = hr[cfg.C // 2][: lr.shape[1] * r, : lr.shape[2] * r]
        pred = super_resolve_y(lr, params, cfg)
        base = np.clip(bicubic_resize(lr[cfg.C // 2], *truth.shape, align=LR_GRID), 0.0, 1.0)
        model_db.append(psnr_y(pred, truth, crop))
        bicubic_db.append(psnr_y(base, truth, crop))
    return {"model_psnr": float(np.mean(model_db)), "bicubic_psnr": float(np.mean(bicubic_db))}
