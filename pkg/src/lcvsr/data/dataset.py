"""Ground-truth sequence collections and the deterministic training-pair stream."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from lcvsr.data.color import rgb_to_y
from lcvsr.data.degrade import degrade
from lcvsr.data.io import read_index, read_sequence


def center_window(frames: np.ndarray, count: int) -> np.ndarray:
    """The ``count`` frames centred on the middle frame of ``frames``."""
    n = len(frames)
    if count > n or count % 2 == 0 or n % 2 == 0:
        raise ValueError(f"cannot take a centred window of {count} from {n} frames")
    mid = n // 2
    return frames[mid - count // 2 : mid + count // 2 + 1]


@dataclass
class SequenceDataset:
    """HR Y-channel sequences (each ``F x H x W`` in [0, 1]) in a fixed order."""

    sequences: list[np.ndarray]
    sources: list[str] = field(default_factory=list)

    def __post_init__(self):
        frame_counts = {len(s) for s in self.sequences}
        if len(frame_counts) > 1:
            raise ValueError(f"sequences have differing frame counts: {sorted(frame_counts)}")
        for i, s in enumerate(self.sequences):
            if s.ndim != 3:
                raise ValueError(f"sequence {i} must be F x H x W, got {s.shape}")

    def __len__(self) -> int:
        return len(self.sequences)

    def __getitem__(self, i: int) -> np.ndarray:
        return self.sequences[i]

    @property
    def frames_per_sequence(self) -> int:
        return len(self.sequences[0]) if self.sequences else 0

    @classmethod
    def from_index(cls, index_path, swing: str = "studio") -> "SequenceDataset":
        seqs, sources = [], []
        for d in read_index(index_path):
            frames = read_sequence(d)
            seqs.append(np.stack([rgb_to_y(f, swing) for f in frames]))
            sources.append(str(d))
        return cls(seqs, sources)

    @classmethod
    def from_dirs(cls, dirs, swing: str = "studio") -> "SequenceDataset":
        seqs = [np.stack([rgb_to_y(f, swing) for f in read_sequence(d)]) for d in dirs]
        return cls(seqs, [str(Path(d)) for d in dirs])


class TrainingPairs:
    """Deterministic (LR sequence patch, HR centre patch) samples.

    Each LR sequence is degraded once up front; sample ``index`` draws its
    sequence and r-aligned crop from a generator seeded by ``(seed, index)``,
    so any sample can be regenerated independently of iteration order.
    """

    def __init__(self, dataset: SequenceDataset, r: int, C: int, patch: int, seed: int, sigma: float | None = 1.0):
        if (patch * r) % 4:
            raise ValueError(f"HR patch side {patch * r} must be divisible by 4")
        if len(dataset) == 0:
            raise ValueError("dataset is empty")
        self.r, self.C, self.patch, self.seed = r, C, patch, seed
        self.hr = [center_window(s, C) for s in dataset.sequences]
        for i, s in enumerate(self.hr):
            if min(s.shape[1:]) < patch * r:
                raise ValueError(f"sequence {i} frames {s.shape[1:]} smaller than HR patch {patch * r}")
        self.lr = [np.stack([degrade(f, r, sigma) for f in s]) for s in self.hr]

    def pair(self, index: int) -> tuple[np.ndarray, np.ndarray]:
        rng = np.random.default_rng([self.seed, index])
        k = int(rng.integers(len(self.lr)))
        lr, hr = self.lr[k], self.hr[k]
        p, r = self.patch, self.r
        i0 = int(rng.integers(lr.shape[1] - p + 1))
        j0 = int(rng.integers(lr.shape[2] - p + 1))
        lr_patch = lr[:, i0 : i0 + p, j0 : j0 + p]
        hr_patch = hr[self.C // 2, r * i0 : r * (i0 + p), r * j0 : r * (j0 + p)]
        return lr_patch.astype(np.float32), hr_patch[None].astype(np.float32)

    def batch(self, iteration: int, size: int) -> tuple[np.ndarray, np.ndarray]:
        pairs = [self.pair(iteration * size + b) for b in range(size)]
        return np.stack([p[0] for p in pairs]), np.stack([p[1] for p in pairs])

    def __iter__(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        index = 0
        while True:
            yield self.pair(index)
            index += 1


def build_training_pairs(dataset: SequenceDataset, cfg, patch: int, seed: int, sigma: float | None = 1.0):
    """Infinite deterministic stream of ``(C x p x p LR, 1 x rp x rp HR)`` pairs."""
    return iter(TrainingPairs(dataset, cfg.r, cfg.C, patch, seed, sigma))
