"""Training loop: sample, forward, L2 loss, backward, Adam; JSONL log and checkpoints."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from lcvsr import checkpoint, ops
from lcvsr.config import TrainConfig
from lcvsr.data.dataset import TrainingPairs
from lcvsr.model import ModelConfig, ParameterSet, check_params, init_params, lcvsr_forward
from lcvsr.optim import LRSchedule, OptimizerState, adam_step, clip_grad_norm
from lcvsr.tensor import Graph, NonFiniteError, ShapeError, Tensor, backward

log = logging.getLogger(__name__)


def l2_loss(pred, target) -> Tensor:
    """Mean squared error over all elements."""
    target = target if isinstance(target, Tensor) else Tensor(target)
    if pred.shape != target.shape:
        raise ShapeError(f"l2_loss: prediction {pred.shape} vs target {target.shape}")
    return ops.mean_all(ops.square(ops.sub(pred, target)))


def smoothed(losses, window: int = 50) -> np.ndarray:
    """Trailing moving average (shorter windows at the start)."""
    losses = np.asarray(losses, dtype=np.float64)
    c = np.cumsum(np.insert(losses, 0, 0.0))
    idx = np.arange(1, len(losses) + 1)
    lo = np.maximum(idx - window, 0)
    return (c[idx] - c[lo]) / (idx - lo)


@dataclass
class TrainResult:
    params: ParameterSet
    optimizer: OptimizerState
    records: list[dict] = field(default_factory=list)

    @property
    def losses(self) -> list[float]:
        return [r["loss"] for r in self.records]


def _optimizer_for(params: ParameterSet, hyper: TrainConfig) -> OptimizerState:
    return OptimizerState.for_params(
        params,
        beta1=hyper.beta1,
        beta2=hyper.beta2,
        eps=hyper.adam_eps,
        schedule=LRSchedule(hyper.initial_lr, hyper.decayed_lr, hyper.decay_step),
    )


def _non_finite_report(loss: Tensor, params: ParameterSet) -> str:
    bad = Graph.from_output(loss).first_non_finite()
    if bad is None:
        return "loss is non-finite"
    what = bad.name or f"output of {bad.op}"
    return f"first non-finite tensor: {what} shape {bad.shape}"


def params_from_checkpoint(ckpt: checkpoint.Checkpoint, cfg: ModelConfig | None = None) -> ParameterSet:
    params = {k: Tensor(v.copy(), requires_grad=True, name=k) for k, v in ckpt.params.items()}
    check_params(params, cfg or ckpt.config)
    return params


def make_checkpoint(cfg: ModelConfig, params: ParameterSet, opt: OptimizerState | None) -> checkpoint.Checkpoint:
    return checkpoint.Checkpoint(cfg, {k: p.data for k, p in params.items()}, opt)


def train(
    pairs: TrainingPairs,
    cfg: ModelConfig,
    hyper: TrainConfig,
    out_dir=None,
    seed: int = 0,
    resume: checkpoint.Checkpoint | None = None,
    iterations: int | None = None,
    log_fh=None,
) -> TrainResult:
    """Run ``hyper.iterations`` Adam steps (or until ``iterations`` total steps).

    Batch ``t`` is a pure function of ``(data seed, t)``, so resuming from a
    checkpoint taken after step ``t`` replays exactly the batches an
    uninterrupted run would have seen.
    """
    if resume is not None:
        if resume.config != cfg:
            raise ShapeError("checkpoint model config differs from the run config")
        params = params_from_checkpoint(resume, cfg)
        opt = resume.optimizer or _optimizer_for(params, hyper)
    else:
        params = init_params(cfg, seed)
        opt = _optimizer_for(params, hyper)
    total = hyper.iterations if iterations is None else iterations
    out_dir = Path(out_dir) if out_dir is not None else None
    own_fh = False
    if out_dir is not None and log_fh is None:
        out_dir.mkdir(parents=True, exist_ok=True)
        log_fh = open(out_dir / "train_log.jsonl", "a" if resume is not None else "w")
        own_fh = True

    result = TrainResult(params, opt)
    start = time.perf_counter()
    try:
        while opt.step < total:
            it = opt.step
            lr_batch, hr_batch = pairs.batch(it, hyper.batch_size)
            pred = lcvsr_forward(Tensor(lr_batch), params, cfg)
            loss = l2_loss(pred, hr_batch)
            if not loss.is_finite():
                raise NonFiniteError(f"iteration {it}: {_non_finite_report(loss, params)}")
            for p in params.values():
                p.grad = None
            backward(loss)
            grads = {k: p.grad for k, p in params.items() if p.grad is not None}
            for k, g in grads.items():
                if not np.isfinite(g).all():
                    raise NonFiniteError(f"iteration {it}: first non-finite tensor: gradient of {k}")
            if hyper.clip_norm:
                clip_grad_norm(grads, hyper.clip_norm)
            lr = adam_step(params, grads, opt)
            rec = {
                "iter": it,
                "loss": float(loss.item()),
                "lr": lr,
                "wallclock_ms": round((time.perf_counter() - start) * 1000.0, 3),
            }
            result.records.append(rec)
            if log_fh is not None:
                log_fh.write(json.dumps(rec) + "\n")
            if it % 100 == 0:
                log.info("iter %d loss %.6f lr %g", it, rec["loss"], lr)
            if out_dir is not None and hyper.checkpoint_every and opt.step % hyper.checkpoint_every == 0:
                checkpoint.save(out_dir / f"ckpt_{opt.step:07d}.lcvw", make_checkpoint(cfg, params, opt))
    finally:
        if own_fh:
            log_fh.close()
    if out_dir is not None:
        checkpoint.save(out_dir / "model.lcvw", make_checkpoint(cfg, params, opt))
    return result
