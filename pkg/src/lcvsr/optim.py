"""Initialization, the Adam optimizer and its step learning-rate schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from lcvsr.tensor import ShapeError, Tensor


def xavier_init(shape, fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform on +-sqrt(6 / (fan_in + fan_out))."""
    if fan_in < 1 or fan_out < 1:
        raise ValueError(f"fans must be positive, got {fan_in}, {fan_out}")
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape).astype(np.float32)


@dataclass
class LRSchedule:
    initial_lr: float = 1e-4
    decayed_lr: float = 1e-5
    decay_step: int = 700_000

    def __call__(self, step: int) -> float:
        return self.initial_lr if step < self.decay_step else self.decayed_lr


@dataclass
class OptimizerState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    schedule: LRSchedule = field(default_factory=LRSchedule)

    @classmethod
    def for_params(cls, params: dict[str, Tensor], **kwargs) -> "OptimizerState":
        state = cls(**kwargs)
        for name, p in params.items():
            state.m[name] = np.zeros(p.shape, dtype=np.float32)
            state.v[name] = np.zeros(p.shape, dtype=np.float32)
        return state


def clip_grad_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    total = math.sqrt(sum(float(np.sum(g.astype(np.float64) ** 2)) for g in grads.values()))
    if total > max_norm:
        factor = np.float32(max_norm / (total + 1e-12))
        for k in grads:
            grads[k] = grads[k] * factor
    return total


def adam_step(params: dict[str, Tensor], grads: dict[str, np.ndarray], state: OptimizerState) -> float:
    """Bias-corrected Adam update in place. Returns the learning rate used.

    The schedule is evaluated at the pre-increment step count, so the update
    with index ``decay_step`` is the first to use the decayed rate.
    """
    lr = state.schedule(state.step)
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if g.shape != p.shape:
            raise ShapeError(f"adam: gradient for {name} has shape {g.shape}, parameter {p.shape}")
        m = state.m[name]
        v = state.v[name]
        m *= np.float32(b1)
        m += np.float32(1.0 - b1) * g
        v *= np.float32(b2)
        v += np.float32(1.0 - b2) * (g * g)
        update = (m / np.float32(c1)) / (np.sqrt(v / np.float32(c2)) + np.float32(state.eps))
        p.data -= np.float32(lr) * update
    return lr
