"""Report figures written straight to files (Agg backend, no display)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from lcvsr.metrics import MetricReport  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # fixed metadata keeps re-runs byte-stable
    fig.savefig(path, dpi=100, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


def plot_loss_curve(records: list[dict], path, window: int = 50) -> Path:
    from lcvsr.train import smoothed

    it = np.array([r["iter"] for r in records])
    loss = np.array([r["loss"] for r in records])
    fig, ax = plt.subplots(figsize=(6, 3.5))
    if len(loss):
        ax.semilogy(it, loss, color="0.75", lw=0.7, label="per iteration")
        ax.semilogy(it, smoothed(loss, window), color="C0", lw=1.5, label=f"moving mean ({window})")
        ax.legend(frameon=False)
    ax.set_xlabel("iteration")
    ax.set_ylabel("L2 loss")
    ax.grid(alpha=0.3, which="both")
    return _save(fig, path)


def plot_frame_metrics(report: MetricReport, path) -> Path:
    names = [f.name for f in report.frames]
    psnr = np.array([f.psnr for f in report.frames], dtype=np.float64)
    ssim = np.array([f.ssim for f in report.frames], dtype=np.float64)
    x = np.arange(len(names))
    fig, (a1, a2) = plt.subplots(2, 1, figsize=(6, 4.5), sharex=True)
    finite = np.isfinite(psnr)
    a1.plot(x[finite], psnr[finite], "o-", ms=3)
    if (~finite).any():
        top = psnr[finite].max() if finite.any() else 0.0
        a1.plot(x[~finite], np.full((~finite).sum(), top), "^", color="C3", label="identical (infinite)")
        a1.legend(frameon=False)
    a1.set_ylabel("Y-PSNR (dB)")
    a2.plot(x, ssim, "o-", ms=3, color="C1")
    a2.set_ylabel("SSIM")
    a2.set_xlabel("frame")
    a1.set_title(f"crop {report.crop}, {report.swing} swing", fontsize=9)
    for ax in (a1, a2):
        ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_gray(img: np.ndarray, path, title: str | None = None) -> Path:
    """Show an 8-bit image with nearest-neighbour pixels (profiles, filter grids)."""
    h, w = img.shape
    scale = max(1.0, 240.0 / max(h, w))
    fig, ax = plt.subplots(figsize=(w * scale / 100 + 0.5, h * scale / 100 + 0.5))
    ax.imshow(img, cmap="gray", vmin=0, vmax=255, interpolation="nearest")
    ax.set_xticks([])
    ax.set_yticks([])
    if title:
        ax.set_title(title, fontsize=8)
    return _save(fig, path)
