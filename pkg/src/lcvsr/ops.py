"""Differentiable operations used by the network.

Spatial ops take batched ``N x C x H x W`` tensors. Convolution means
cross-correlation with zero padding.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from lcvsr.tensor import ConfigError, ShapeError, Tensor, as_tensor, make_result


@dataclass(frozen=True)
class ConvSpec:
    kh: int = 3
    kw: int = 3
    stride: int = 1
    padding: int = 1
    groups: int = 1
    transposed: bool = False

    def __post_init__(self):
        if self.kh < 1 or self.kw < 1 or self.stride < 1:
            raise ConfigError(f"kernel and stride must be positive: {self}")
        if self.padding < 0:
            raise ConfigError(f"padding must be non-negative: {self}")
        if self.groups < 1:
            raise ConfigError(f"groups must be positive: {self}")

    def out_size(self, h: int, w: int) -> tuple[int, int]:
        if self.transposed:
            return self.stride * h, self.stride * w
        return (
            (h + 2 * self.padding - self.kh) // self.stride + 1,
            (w + 2 * self.padding - self.kw) // self.stride + 1,
        )


def _same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


# ---------------------------------------------------------------- elementwise


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, "add")
    return make_result(a.data + b.data, (a, b), lambda g: (g, g), "add")


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, "sub")
    return make_result(a.data - b.data, (a, b), lambda g: (g, -g), "sub")


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, "mul")
    ad, bd = a.data, b.data
    return make_result(ad * bd, (a, b), lambda g: (g * bd, g * ad), "mul")


def scale(a, alpha: float) -> Tensor:
    a = as_tensor(a)
    alpha = np.float32(alpha)
    return make_result(a.data * alpha, (a,), lambda g: (g * alpha,), "scale")


def square(a) -> Tensor:
    a = as_tensor(a)
    ad = a.data
    return make_result(ad * ad, (a,), lambda g: (2 * g * ad,), "square")


def add_many(terms: Sequence[Tensor]) -> Tensor:
    out = terms[0]
    for t in terms[1:]:
        out = add(out, t)
    return out


_kink_log: list | None = None


@contextlib.contextmanager
def record_kinks():
    """Collect the activation sign pattern of every piecewise-linear op evaluated inside."""
    global _kink_log
    prev, _kink_log = _kink_log, []
    try:
        yield _kink_log
    finally:
        _kink_log = prev


def leaky_relu(x, slope: float = 0.2) -> Tensor:
    """``x`` where ``x >= 0``, else ``slope * x``. The derivative at 0 is 1."""
    x = as_tensor(x)
    if not 0.0 < slope < 1.0:
        raise ConfigError(f"leaky_relu slope must lie in (0, 1), got {slope}")
    pos = x.data >= 0
    if _kink_log is not None:
        _kink_log.append(pos)
    factor = np.where(pos, np.float32(1.0), np.float32(slope))
    return make_result(x.data * factor, (x,), lambda g: (g * factor,), "leaky_relu")


# ---------------------------------------------------------------- reductions


def sum_all(x) -> Tensor:
    x = as_tensor(x)
    shape = x.shape
    return make_result(
        np.asarray(x.data.sum(dtype=np.float64), dtype=x.data.dtype),
        (x,),
        lambda g: (np.broadcast_to(g, shape).copy(),),
        "sum",
    )


def mean_all(x) -> Tensor:
    x = as_tensor(x)
    shape, n = x.shape, x.size
    return make_result(
        np.asarray(x.data.mean(dtype=np.float64), dtype=x.data.dtype),
        (x,),
        lambda g: (np.full(shape, g / n, dtype=g.dtype),),
        "mean",
    )


# ---------------------------------------------------------------- layout


def reshape(x, shape: Sequence[int]) -> Tensor:
    x = as_tensor(x)
    old = x.shape
    try:
        out = x.data.reshape(shape)
    except ValueError as exc:
        raise ShapeError(f"reshape: cannot view {old} as {tuple(shape)}") from exc
    return make_result(out, (x,), lambda g: (g.reshape(old),), "reshape")


def permute(x, axes: Sequence[int]) -> Tensor:
    x = as_tensor(x)
    axes = tuple(axes)
    if sorted(axes) != list(range(x.ndim)):
        raise ShapeError(f"permute: {axes} is not a permutation of {x.ndim} axes")
    inverse = tuple(np.argsort(axes))
    out = np.ascontiguousarray(x.data.transpose(axes))
    return make_result(out, (x,), lambda g: (np.ascontiguousarray(g.transpose(inverse)),), "permute")


def slice_axis(x, axis: int, start: int, stop: int) -> Tensor:
    x = as_tensor(x)
    n = x.shape[axis]
    if not 0 <= start < stop <= n:
        raise ShapeError(f"slice: [{start}:{stop}] out of range for axis {axis} of extent {n}")
    index = [slice(None)] * x.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)
    shape = x.shape

    def backward_fn(g):
        full = np.zeros(shape, dtype=g.dtype)
        full[index] = g
        return (full,)

    return make_result(np.ascontiguousarray(x.data[index]), (x,), backward_fn, "slice")


def concat_channels(inputs: Sequence[Tensor]) -> Tensor:
    """Concatenate along axis 1 (channels of ``N x C x H x W``)."""
    inputs = [as_tensor(t) for t in inputs]
    ref = inputs[0].shape
    for t in inputs[1:]:
        if t.ndim != len(ref) or t.shape[:1] + t.shape[2:] != ref[:1] + ref[2:]:
            raise ShapeError(f"concat_channels: incompatible shapes {ref} and {t.shape}")
    bounds = np.cumsum([0] + [t.shape[1] for t in inputs])

    def backward_fn(g):
        return tuple(g[:, bounds[i] : bounds[i + 1]] for i in range(len(inputs)))

    return make_result(np.concatenate([t.data for t in inputs], axis=1), inputs, backward_fn, "concat")


# ---------------------------------------------------------------- convolution kernels


def _im2col(x: np.ndarray, kh: int, kw: int, stride: int, pad: int, ho: int, wo: int) -> np.ndarray:
    """(N, C, H, W) -> (C, kh, kw, N, Ho, Wo) patch tensor."""
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    n, c = x.shape[:2]
    cols = np.empty((c, kh, kw, n, ho, wo), dtype=x.dtype)
    xt = x.transpose(1, 0, 2, 3)
    for u in range(kh):
        for v in range(kw):
            cols[:, u, v] = xt[:, :, u : u + stride * ho : stride, v : v + stride * wo : stride]
    return cols


def _col2im(cols: np.ndarray, n: int, h: int, w: int, stride: int, pad: int) -> np.ndarray:
    """Adjoint of :func:`_im2col`: scatter-add patches back to (N, C, H, W)."""
    c, kh, kw, _, ho, wo = cols.shape
    xp = np.zeros((c, n, h + 2 * pad, w + 2 * pad), dtype=cols.dtype)
    for u in range(kh):
        for v in range(kw):
            xp[:, :, u : u + stride * ho : stride, v : v + stride * wo : stride] += cols[:, u, v]
    if pad:
        xp = xp[:, :, pad : pad + h, pad : pad + w]
    return np.ascontiguousarray(xp.transpose(1, 0, 2, 3))


def _check_conv(x: np.ndarray, w: np.ndarray, spec: ConvSpec, in_ch: int, out_ch: int) -> None:
    if x.ndim != 4:
        raise ShapeError(f"conv: input must be N x C x H x W, got {x.shape}")
    if w.ndim != 4 or w.shape[2:] != (spec.kh, spec.kw):
        raise ShapeError(f"conv: weights must be O x I/g x {spec.kh} x {spec.kw}, got {w.shape}")
    g = spec.groups
    if in_ch % g or out_ch % g:
        raise ConfigError(f"conv: groups={g} must divide channel counts {in_ch} and {out_ch}")


def _conv_fwd(x: np.ndarray, w: np.ndarray, spec: ConvSpec, ho: int, wo: int):
    n = x.shape[0]
    g = spec.groups
    cout = w.shape[0]
    cols = _im2col(x, spec.kh, spec.kw, spec.stride, spec.padding, ho, wo)
    cols_g = cols.reshape(g, -1, n * ho * wo)
    w_g = w.reshape(g, cout // g, -1)
    out = np.matmul(w_g, cols_g).reshape(cout, n, ho, wo).transpose(1, 0, 2, 3)
    return np.ascontiguousarray(out), cols


def _conv_input_grad(dout: np.ndarray, w: np.ndarray, spec: ConvSpec, h: int, wd: int) -> np.ndarray:
    n, cout, ho, wo = dout.shape
    g = spec.groups
    cin = w.shape[1] * g
    d_g = dout.transpose(1, 0, 2, 3).reshape(g, cout // g, n * ho * wo)
    w_g = w.reshape(g, cout // g, -1)
    dcols = np.matmul(w_g.transpose(0, 2, 1), d_g)
    dcols = dcols.reshape(cin, spec.kh, spec.kw, n, ho, wo)
    return _col2im(dcols, n, h, wd, spec.stride, spec.padding)


def _conv_weight_grad(cols: np.ndarray, dout: np.ndarray, spec: ConvSpec, w_shape) -> np.ndarray:
    n, cout, ho, wo = dout.shape
    g = spec.groups
    d_g = dout.transpose(1, 0, 2, 3).reshape(g, cout // g, n * ho * wo)
    cols_g = cols.reshape(g, -1, n * ho * wo)
    return np.matmul(d_g, cols_g.transpose(0, 2, 1)).reshape(w_shape)


def conv2d(x, weight, bias=None, spec: ConvSpec = ConvSpec()) -> Tensor:
    """Grouped 2-D cross-correlation.

    ``weight`` is ``Cout x Cin/groups x kh x kw``; ``bias`` is ``Cout`` or None.
    """
    x, weight = as_tensor(x), as_tensor(weight)
    if spec.transposed:
        raise ConfigError("conv2d got a transposed ConvSpec; use conv2d_transposed")
    cin, cout = x.shape[1] if x.ndim == 4 else -1, weight.shape[0]
    _check_conv(x.data, weight.data, spec, cin, cout)
    if weight.shape[1] * spec.groups != cin:
        raise ShapeError(
            f"conv2d: input has {cin} channels but weights expect {weight.shape[1] * spec.groups}"
        )
    n, _, h, w = x.shape
    ho, wo = spec.out_size(h, w)
    if ho < 1 or wo < 1:
        raise ShapeError(f"conv2d: {h}x{w} input too small for {spec}")
    out, cols = _conv_fwd(x.data, weight.data, spec, ho, wo)
    parents = [x, weight]
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (cout,):
            raise ShapeError(f"conv2d: bias shape {bias.shape} != ({cout},)")
        out += bias.data.reshape(1, cout, 1, 1)
        parents.append(bias)
    wdata, wshape = weight.data, weight.shape

    def backward_fn(g):
        dx = _conv_input_grad(g, wdata, spec, h, w) if x.requires_grad else None
        dw = _conv_weight_grad(cols, g, spec, wshape) if weight.requires_grad else None
        grads = [dx, dw]
        if bias is not None:
            grads.append(g.sum(axis=(0, 2, 3)))
        return grads

    return make_result(out, parents, backward_fn, "conv2d")


def conv2d_transposed(y, weight, bias=None, spec: ConvSpec = ConvSpec(transposed=True)) -> Tensor:
    """Adjoint of :func:`conv2d` under the same geometry.

    ``weight`` is laid out as for the forward convolution this inverts, i.e.
    ``Cin x Cout/groups x kh x kw`` where ``Cin`` is the channel count of
    ``y``. Output spatial size is ``stride * H`` and must map back to ``H``
    under the forward convolution.
    """
    y, weight = as_tensor(y), as_tensor(weight)
    cin = y.shape[1] if y.ndim == 4 else -1
    cout = weight.shape[1] * spec.groups
    _check_conv(y.data, weight.data, spec, cout, cin)
    if weight.shape[0] != cin:
        raise ShapeError(f"conv2d_transposed: input has {cin} channels but weights expect {weight.shape[0]}")
    n, _, h, w = y.shape
    ht, wt = spec.stride * h, spec.stride * w
    fwd = ConvSpec(spec.kh, spec.kw, spec.stride, spec.padding, spec.groups)
    if fwd.out_size(ht, wt) != (h, w):
        raise ConfigError(f"conv2d_transposed: {spec} does not map {ht}x{wt} back to {h}x{w}")
    out = _conv_input_grad(y.data, weight.data, fwd, ht, wt)
    parents = [y, weight]
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (cout,):
            raise ShapeError(f"conv2d_transposed: bias shape {bias.shape} != ({cout},)")
        out += bias.data.reshape(1, cout, 1, 1)
        parents.append(bias)
    wdata, wshape, ydata = weight.data, weight.shape, y.data

    def backward_fn(g):
        # <convT(y, W), g> == <y, conv(g, W)>
        need_w = weight.requires_grad
        dy = None
        if y.requires_grad or need_w:
            dy, gcols = _conv_fwd(g, wdata, fwd, h, w)
        dw = _conv_weight_grad(gcols, ydata, fwd, wshape) if need_w else None
        grads = [dy if y.requires_grad else None, dw]
        if bias is not None:
            grads.append(g.sum(axis=(0, 2, 3)))
        return grads

    return make_result(out, parents, backward_fn, "conv2d_transposed")
