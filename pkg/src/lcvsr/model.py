"""The LCVSR network: filter generator, locally-connected layer, pixel shuffle, refinement net."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Dict

import numpy as np

from lcvsr import ops
from lcvsr.lc import lc_apply, pixel_shuffle, resize_to_filterbank
from lcvsr.ops import ConvSpec
from lcvsr.tensor import ConfigError, ShapeError, Tensor, as_tensor

ParameterSet = Dict[str, Tensor]


@dataclass(frozen=True)
class ModelConfig:
    r: int = 4
    T: int = 3
    d: int = 1
    lfgn_widths: tuple = (64, 128, 256)
    grn_widths: tuple = (32, 64, 128, 64, 32)
    resblocks_per_subblock: int = 3
    groups: int = 1
    ablate_lc: bool = False
    leaky_slope: float = 0.2

    def __post_init__(self):
        object.__setattr__(self, "lfgn_widths", tuple(int(w) for w in self.lfgn_widths))
        object.__setattr__(self, "grn_widths", tuple(int(w) for w in self.grn_widths))
        self.validate()

    @property
    def C(self) -> int:
        return 2 * self.T + 1

    @property
    def s(self) -> int:
        return 2 * self.d + 1

    @property
    def L(self) -> int:
        return self.r * self.r

    @property
    def depth(self) -> int:
        """Generator output depth C' = C * s^2 * L."""
        return self.C * self.s * self.s * self.L

    def validate(self) -> None:
        if self.r < 1:
            raise ConfigError(f"scale ratio r must be >= 1, got {self.r}")
        if self.T < 0 or self.d < 0:
            raise ConfigError(f"temporal radius T and filter radius d must be >= 0, got T={self.T}, d={self.d}")
        if len(self.lfgn_widths) != 3 or min(self.lfgn_widths) < 1:
            raise ConfigError(f"lfgn_widths needs 3 positive widths, got {self.lfgn_widths}")
        if len(self.grn_widths) != 5 or min(self.grn_widths) < 1:
            raise ConfigError(f"grn_widths needs 5 positive widths, got {self.grn_widths}")
        if self.resblocks_per_subblock < 0:
            raise ConfigError("resblocks_per_subblock must be >= 0")
        if self.groups < 1 or self.depth % self.groups:
            raise ConfigError(f"groups={self.groups} must divide the generator depth {self.depth}")
        if not 0.0 < self.leaky_slope < 1.0:
            raise ConfigError(f"leaky_slope must lie in (0, 1), got {self.leaky_slope}")

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["lfgn_widths"] = list(self.lfgn_widths)
        out["grn_widths"] = list(self.grn_widths)
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ModelConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown model config keys: {', '.join(unknown)}")
        return cls(**raw)


# ------------------------------------------------------------------ parameter layout


def _conv(shapes: dict, name: str, cout: int, cin: int, k: int, groups: int = 1) -> None:
    if cin % groups or cout % groups:
        raise ConfigError(f"{name}: groups={groups} must divide {cin} and {cout}")
    shapes[f"{name}.weight"] = (cout, cin // groups, k, k)
    shapes[f"{name}.bias"] = (cout,)


def _resblock_shapes(shapes: dict, prefix: str, cin: int, cout: int, groups_inner: int = 1) -> None:
    _conv(shapes, f"{prefix}.conv1", cout, cin, 3, groups_inner if cin == cout else 1)
    _conv(shapes, f"{prefix}.conv2", cout, cout, 3, groups_inner)
    if cin != cout:
        _conv(shapes, f"{prefix}.proj", cout, cin, 1)


def lfgn_depths(cfg: ModelConfig) -> list[int]:
    return [cfg.C, *cfg.lfgn_widths, cfg.depth]


def parameter_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Ordered name -> shape map for every trainable tensor of the model."""
    shapes: dict[str, tuple[int, ...]] = {}
    depths = lfgn_depths(cfg)
    nres = cfg.resblocks_per_subblock
    for j in range(1, 5):
        cin, cout = depths[j - 1], depths[j]
        for i in range(j - 1):
            if depths[i] != cin:
                _conv(shapes, f"lfgn.dense{i}to{j}", cin, depths[i], 1)
        # grouped convs are used where the generator is widest (C' -> C')
        g = cfg.groups if j == 4 else 1
        _resblock_shapes(shapes, f"lfgn.sub{j}.res0", cin, cout, g)
        for k in range(1, nres + 1):
            _resblock_shapes(shapes, f"lfgn.sub{j}.res{k}", cout, cout, g)
    if cfg.ablate_lc:
        _conv(shapes, "ablation.proj", cfg.L, cfg.depth, 1)

    g1, g2, g3, g4, g5 = cfg.grn_widths
    for j, (cin, cout) in enumerate([(1, g1), (g1, g2), (g2, g3), (g3, g4), (g4, g5)], start=1):
        _conv(shapes, f"grn.sub{j}.conv", cout, cin, 3)
        if j >= 4:
            # transposed weights are laid out Cin x Cout
            shapes[f"grn.sub{j}.conv.weight"] = (cin, cout, 3, 3)
        for k in range(nres):
            _resblock_shapes(shapes, f"grn.sub{j}.res{k}", cout, cout)
    if g2 != g4:
        _conv(shapes, "grn.skip2to4", g4, g2, 1)
    if g1 != g5:
        _conv(shapes, "grn.skip1to5", g5, g1, 1)
    _conv(shapes, "grn.out", 1, g5, 5)
    return shapes


def count_parameters(cfg: ModelConfig) -> int:
    return int(sum(np.prod(s) for s in parameter_shapes(cfg).values()))


def init_params(cfg: ModelConfig, seed: int = 0) -> ParameterSet:
    """Xavier-uniform weights, zero biases, drawn in a fixed name order."""
    from lcvsr.optim import xavier_init

    rng = np.random.default_rng(seed)
    params: ParameterSet = {}
    for name, shape in parameter_shapes(cfg).items():
        if name.endswith(".bias"):
            data = np.zeros(shape, dtype=np.float32)
        else:
            rf = shape[2] * shape[3]
            data = xavier_init(shape, fan_in=shape[1] * rf, fan_out=shape[0] * rf, rng=rng)
        params[name] = Tensor(data, requires_grad=True, name=name)
    return params


def check_params(params: ParameterSet, cfg: ModelConfig) -> None:
    """Raise naming the first tensor whose presence or shape disagrees with ``cfg``."""
    expected = parameter_shapes(cfg)
    for name, shape in expected.items():
        if name not in params:
            raise ShapeError(f"parameter {name} missing (config expects shape {shape})")
        if tuple(params[name].shape) != shape:
            raise ShapeError(f"parameter {name} has shape {tuple(params[name].shape)}, config expects {shape}")
    extra = [n for n in params if n not in expected]
    if extra:
        raise ShapeError(f"parameter {extra[0]} is not part of this config")


# ------------------------------------------------------------------ building blocks


def _conv_apply(x, params, name, spec=ConvSpec()):
    return ops.conv2d(x, params[f"{name}.weight"], params[f"{name}.bias"], spec)


def resblock(x: Tensor, params: ParameterSet, prefix: str, slope: float = 0.2, groups: int = 1) -> Tensor:
    """conv3x3 -> lrelu -> conv3x3 -> lrelu plus an identity or 1x1 shortcut."""
    cin = x.shape[1]
    cout = params[f"{prefix}.conv1.weight"].shape[0]
    g1 = groups if cin == cout else 1
    h = ops.leaky_relu(_conv_apply(x, params, f"{prefix}.conv1", ConvSpec(groups=g1)), slope)
    h = ops.leaky_relu(_conv_apply(h, params, f"{prefix}.conv2", ConvSpec(groups=groups)), slope)
    if f"{prefix}.proj.weight" in params:
        shortcut = _conv_apply(x, params, f"{prefix}.proj", ConvSpec(1, 1, 1, 0))
    else:
        shortcut = x
    return ops.add(shortcut, h)


def _batched(x) -> tuple[Tensor, bool]:
    x = as_tensor(x)
    if x.ndim == 3:
        return ops.reshape(x, (1, *x.shape)), True
    if x.ndim != 4:
        raise ShapeError(f"expected C x H x W or N x C x H x W, got {x.shape}")
    return x, False


def lfgn_forward(frames, params: ParameterSet, cfg: ModelConfig) -> Tensor:
    """Four densely connected sub-blocks growing depth C -> w1 -> w2 -> w3 -> C'."""
    x, squeeze = _batched(frames)
    if x.shape[1] != cfg.C:
        raise ShapeError(f"lfgn: got {x.shape[1]} frames, config expects C={cfg.C}")
    depths = lfgn_depths(cfg)
    outputs = [x]
    for j in range(1, 5):
        terms = [outputs[j - 1]]
        for i in range(j - 1):
            src = outputs[i]
            name = f"lfgn.dense{i}to{j}"
            if f"{name}.weight" in params:
                src = _conv_apply(src, params, name, ConvSpec(1, 1, 1, 0))
            terms.append(src)
        h = ops.add_many(terms)
        g = cfg.groups if j == 4 else 1
        h = resblock(h, params, f"lfgn.sub{j}.res0", cfg.leaky_slope, g)
        for k in range(1, cfg.resblocks_per_subblock + 1):
            h = resblock(h, params, f"lfgn.sub{j}.res{k}", cfg.leaky_slope, g)
        outputs.append(h)
    out = outputs[-1]
    assert out.shape[1] == depths[-1]
    return ops.reshape(out, out.shape[1:]) if squeeze else out


def grn_forward(provisional, params: ParameterSet, cfg: ModelConfig) -> Tensor:
    """Encoder/decoder refinement of the provisional HR frame; output shape == input shape."""
    x, squeeze = _batched(provisional)
    hr, wr = x.shape[2:]
    if hr % 4 or wr % 4:
        raise ShapeError(f"grn: HR size {hr}x{wr} must be divisible by 4 (two stride-2 encoder stages)")
    slope = cfg.leaky_slope
    nres = cfg.resblocks_per_subblock

    def subblock(h, j, spec):
        name = f"grn.sub{j}.conv"
        if spec.transposed:
            h = ops.conv2d_transposed(h, params[f"{name}.weight"], params[f"{name}.bias"], spec)
        else:
            h = _conv_apply(h, params, name, spec)
        h = ops.leaky_relu(h, slope)
        for k in range(nres):
            h = resblock(h, params, f"grn.sub{j}.res{k}", slope)
        return h

    def skip(h, name):
        if f"{name}.weight" in params:
            return _conv_apply(h, params, name, ConvSpec(1, 1, 1, 0))
        return h

    e1 = subblock(x, 1, ConvSpec(stride=1))
    e2 = subblock(e1, 2, ConvSpec(stride=2))
    e3 = subblock(e2, 3, ConvSpec(stride=2))
    d4 = ops.add(subblock(e3, 4, ConvSpec(stride=2, transposed=True)), skip(e2, "grn.skip2to4"))
    d5 = ops.add(subblock(d4, 5, ConvSpec(stride=2, transposed=True)), skip(e1, "grn.skip1to5"))
    out = ops.leaky_relu(_conv_apply(d5, params, "grn.out", ConvSpec(5, 5, 1, 2)), slope)
    return ops.reshape(out, out.shape[1:]) if squeeze else out


def dlfn_forward(frames, params: ParameterSet, cfg: ModelConfig) -> tuple[Tensor, Tensor | None]:
    """Generator plus filter application: returns the L feature maps and the filter bank."""
    x, _ = _batched(frames)
    flat = lfgn_forward(x, params, cfg)
    if cfg.ablate_lc:
        maps = _conv_apply(flat, params, "ablation.proj", ConvSpec(1, 1, 1, 0))
        return maps, None
    theta = resize_to_filterbank(flat, cfg.C, cfg.s, cfg.L)
    return lc_apply(x, theta), theta


def lcvsr_forward(frames, params: ParameterSet, cfg: ModelConfig, return_filters: bool = False):
    """``C x H x W`` (or batched) LR Y frames -> ``1 x rH x rW`` reconstructed center frame."""
    x, squeeze = _batched(frames)
    h, w = x.shape[2:]
    if (cfg.r * h) % 4 or (cfg.r * w) % 4:
        raise ShapeError(f"output size {cfg.r * h}x{cfg.r * w} must be divisible by 4")
    maps, theta = dlfn_forward(x, params, cfg)
    provisional = pixel_shuffle(maps, cfg.r)
    out = grn_forward(provisional, params, cfg)
    if squeeze:
        out = ops.reshape(out, out.shape[1:])
    return (out, theta) if return_filters else out
