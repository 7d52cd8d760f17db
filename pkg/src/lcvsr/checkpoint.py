"""LCVW binary checkpoints.

Layout (all integers little-endian)::

    b"LCVW"  u32 version
    u32 len  model-config JSON (sorted keys, compact)
    u32 n    n x tensor record
    u8 flag  1 if optimizer state follows
      u64 step  f64 beta1 beta2 eps initial_lr decayed_lr  u64 decay_step
      u32 n  n x tensor record (first moments)  u32 n  n x tensor record (second moments)

    tensor record: u32 name_len, utf-8 name, u32 rank, rank x u32 dims, float32 data
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from lcvsr.model import ModelConfig
from lcvsr.optim import LRSchedule, OptimizerState

MAGIC = b"LCVW"
VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    config: ModelConfig
    params: dict[str, np.ndarray]
    optimizer: OptimizerState | None = None


def config_blob(cfg: ModelConfig) -> bytes:
    return json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":")).encode()


def _write_tensors(buf, tensors: dict[str, np.ndarray]) -> None:
    buf.write(struct.pack("<I", len(tensors)))
    for name, arr in tensors.items():
        raw = name.encode()
        arr = np.asarray(arr, dtype="<f4")
        buf.write(struct.pack("<I", len(raw)))
        buf.write(raw)
        buf.write(struct.pack("<I", arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        buf.write(np.ascontiguousarray(arr).tobytes())


def _read(buf, fmt: str):
    size = struct.calcsize(fmt)
    raw = buf.read(size)
    if len(raw) != size:
        raise CheckpointError("checkpoint truncated")
    return struct.unpack(fmt, raw)


def _read_tensors(buf) -> dict[str, np.ndarray]:
    (count,) = _read(buf, "<I")
    out = {}
    for _ in range(count):
        (nlen,) = _read(buf, "<I")
        name = buf.read(nlen).decode()
        (rank,) = _read(buf, "<I")
        dims = _read(buf, f"<{rank}I") if rank else ()
        n = int(np.prod(dims)) if rank else 1
        raw = buf.read(4 * n)
        if len(raw) != 4 * n:
            raise CheckpointError(f"checkpoint truncated inside tensor {name}")
        out[name] = np.frombuffer(raw, dtype="<f4").astype(np.float32).reshape(dims)
    return out


def dumps(ckpt: Checkpoint) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", VERSION))
    blob = config_blob(ckpt.config)
    buf.write(struct.pack("<I", len(blob)))
    buf.write(blob)
    _write_tensors(buf, ckpt.params)
    opt = ckpt.optimizer
    if opt is None:
        buf.write(b"\x00")
    else:
        buf.write(b"\x01")
        sch = opt.schedule
        buf.write(struct.pack("<Q", opt.step))
        buf.write(struct.pack("<5d", opt.beta1, opt.beta2, opt.eps, sch.initial_lr, sch.decayed_lr))
        buf.write(struct.pack("<Q", sch.decay_step))
        _write_tensors(buf, opt.m)
        _write_tensors(buf, opt.v)
    return buf.getvalue()


def loads(data: bytes) -> Checkpoint:
    buf = io.BytesIO(data)
    if buf.read(4) != MAGIC:
        raise CheckpointError("not an LCVW checkpoint (bad magic)")
    (version,) = _read(buf, "<I")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    (clen,) = _read(buf, "<I")
    cfg = ModelConfig.from_dict(json.loads(buf.read(clen).decode()))
    params = _read_tensors(buf)
    flag = buf.read(1)
    opt = None
    if flag == b"\x01":
        (step,) = _read(buf, "<Q")
        b1, b2, eps, lr0, lr1 = _read(buf, "<5d")
        (decay,) = _read(buf, "<Q")
        m = _read_tensors(buf)
        v = _read_tensors(buf)
        opt = OptimizerState(m=m, v=v, step=step, beta1=b1, beta2=b2, eps=eps, schedule=LRSchedule(lr0, lr1, decay))
    elif flag != b"\x00":
        raise CheckpointError("corrupt optimizer flag")
    if buf.read(1):
        raise CheckpointError("trailing bytes after checkpoint")
    return Checkpoint(cfg, params, opt)


def save(path, ckpt: Checkpoint) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(dumps(ckpt))
    tmp.replace(path)


def load(path) -> Checkpoint:
    return loads(Path(path).read_bytes())
