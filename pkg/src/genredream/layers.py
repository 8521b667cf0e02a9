"""Differentiable layer primitives: strided 1D convolution, batch norm, rectify, dense, loss."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ContractError, DegenerateBatchError, LabelError, ShapeError
from .tensor import Tensor, record_op


class Mode(str, Enum):
    TRAINING = "training"
    INFERENCE = "inference"


@dataclass
class ConvLayer:
    weight: Tensor  # [out_channels, in_channels, kernel]
    bias: Tensor  # [out_channels]
    stride: int

    @property
    def kernel(self) -> int:
        return self.weight.shape[2]


@dataclass
class BatchNormLayer:
    gamma: Tensor
    beta: Tensor
    running_mean: Tensor
    running_var: Tensor
    eps: float = 1e-5
    momentum: float = 0.1


@dataclass
class DenseLayer:
    weight: Tensor  # [out, in]
    bias: Tensor  # [out]


def conv1d(x: Tensor, weight: Tensor, bias: Tensor, stride: int) -> Tensor:
    """Valid cross-correlation ``out[n,o,t] = b[o] + sum_{c,k} w[o,c,k] x[n,c,t*stride+k]``.

    ``x`` is ``[N, C, L]``, or ``[C, L]`` for a single example (the output
    then drops the batch axis too).
    """
    single = x.data.ndim == 2
    xv = x.data[None] if single else x.data
    if xv.ndim != 3 or weight.data.ndim != 3:
        raise ShapeError(f"conv1d expects x [N,C,L] and weight [O,C,K], got {x.shape}, {weight.shape}")
    n, c, length = xv.shape
    o, cw, k = weight.shape
    if cw != c:
        raise ShapeError(f"conv1d: input has {c} channels, weight expects {cw}")
    if bias.shape != (o,):
        raise ShapeError(f"conv1d: bias shape {bias.shape} != ({o},)")
    if stride < 1:
        raise ShapeError(f"conv1d: stride must be >= 1, got {stride}")
    if length < k:
        raise ShapeError(f"conv1d: input length {length} shorter than kernel {k}")

    t_out = (length - k) // stride + 1
    windows = sliding_window_view(xv, k, axis=2)[:, :, ::stride, :]  # [N,C,T,K]
    cols = windows.transpose(0, 2, 1, 3).reshape(n * t_out, c * k)
    wmat = weight.data.reshape(o, c * k)
    out = (cols @ wmat.T).reshape(n, t_out, o).transpose(0, 2, 1) + bias.data[None, :, None]
    if single:
        out = out[0]

    def vjp(g, needs):
        g3 = g[None] if single else g
        gmat = g3.transpose(0, 2, 1).reshape(n * t_out, o)
        gx = gw = gb = None
        if needs[0]:
            dcols = (gmat @ wmat).reshape(n, t_out, c, k).transpose(0, 2, 1, 3)
            gx = np.zeros((n, c, length))
            span = stride * (t_out - 1) + 1
            for j in range(k):
                gx[:, :, j : j + span : stride] += dcols[:, :, :, j]
            if single:
                gx = gx[0]
        if needs[1]:
            gw = (gmat.T @ cols).reshape(o, c, k)
        if needs[2]:
            gb = g3.sum(axis=(0, 2))
        return gx, gw, gb

    return record_op(out, (x, weight, bias), vjp)


def conv1d_forward(x: Tensor, layer: ConvLayer) -> Tensor:
    return conv1d(x, layer.weight, layer.bias, layer.stride)


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    mean: np.ndarray | None = None,
    var: np.ndarray | None = None,
    eps: float = 1e-5,
) -> tuple[Tensor, np.ndarray, np.ndarray]:
    """Per-channel normalization of ``x`` ``[N, C, L]``.

    With ``mean``/``var`` omitted, statistics are taken over the batch and
    time axes (population variance) and the gradient flows through them.
    Otherwise the supplied statistics are treated as constants.

    Returns:
        The normalized tensor and the statistics that were used.
    """
    xv = x.data
    if xv.ndim != 3:
        raise ShapeError(f"batch_norm expects [N,C,L], got {list(x.shape)}")
    n, c, length = xv.shape
    if gamma.shape != (c,) or beta.shape != (c,):
        raise ShapeError(f"batch_norm: gamma/beta must have shape ({c},)")
    batch_stats = mean is None
    if batch_stats:
        count = n * length
        if count < 2:
            raise DegenerateBatchError(f"batch statistics need N*L >= 2, got {count}")
        # shifting by one sample per channel keeps constant channels exactly centred
        shift = xv[:1, :, :1]
        mean = (shift + (xv - shift).mean(axis=(0, 2), keepdims=True)).reshape(c)
        centred = xv - mean[None, :, None]
        var = (centred**2).mean(axis=(0, 2))
    else:
        mean = np.asarray(mean, dtype=np.float64).reshape(c)
        var = np.asarray(var, dtype=np.float64).reshape(c)
        centred = xv - mean[None, :, None]
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centred * inv_std[None, :, None]
    g_, b_ = gamma.data, beta.data
    out = g_[None, :, None] * xhat + b_[None, :, None]

    def vjp(g, needs):
        gx = ggamma = gbeta = None
        if needs[0]:
            dxhat = g * g_[None, :, None]
            if batch_stats:
                m1 = dxhat.mean(axis=(0, 2), keepdims=True)
                m2 = (dxhat * xhat).mean(axis=(0, 2), keepdims=True)
                gx = (dxhat - m1 - xhat * m2) * inv_std[None, :, None]
            else:
                gx = dxhat * inv_std[None, :, None]
        if needs[1]:
            ggamma = (g * xhat).sum(axis=(0, 2))
        if needs[2]:
            gbeta = g.sum(axis=(0, 2))
        return gx, ggamma, gbeta

    return record_op(out, (x, gamma, beta), vjp), mean, var


def batchnorm_forward(x: Tensor, layer: BatchNormLayer, mode: Mode) -> Tensor:
    """Apply ``layer``; in training mode also advance its running statistics in place."""
    if Mode(mode) is Mode.TRAINING:
        y, mean, var = batch_norm(x, layer.gamma, layer.beta, eps=layer.eps)
        m = layer.momentum
        layer.running_mean = Tensor._wrap((1.0 - m) * layer.running_mean.data + m * mean)
        layer.running_var = Tensor._wrap((1.0 - m) * layer.running_var.data + m * var)
        return y
    y, _, _ = batch_norm(
        x, layer.gamma, layer.beta, layer.running_mean.data, layer.running_var.data, layer.eps
    )
    return y


def rectify(x: Tensor) -> Tensor:
    xv = x.data

    def vjp(g, needs):
        return (np.where(xv > 0.0, g, 0.0),)

    return record_op(np.maximum(xv, 0.0), (x,), vjp)


def dense(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """``x [N, D] @ weight.T + bias`` with ``weight`` of shape ``[O, D]``."""
    xv, wv = x.data, weight.data
    if xv.ndim != 2 or wv.ndim != 2 or xv.shape[1] != wv.shape[1]:
        raise ShapeError(f"dense: incompatible shapes {list(x.shape)} and {list(weight.shape)}")
    if bias.shape != (wv.shape[0],):
        raise ShapeError(f"dense: bias shape {list(bias.shape)} != [{wv.shape[0]}]")

    def vjp(g, needs):
        return (
            g @ wv if needs[0] else None,
            g.T @ xv if needs[1] else None,
            g.sum(axis=0) if needs[2] else None,
        )

    return record_op(xv @ wv.T + bias.data, (x, weight, bias), vjp)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def softmax_cross_entropy(logits: Tensor, labels) -> Tensor:
    """Mean negative log-likelihood of ``labels`` under ``softmax(logits)``."""
    lv = logits.data
    if lv.ndim != 2:
        raise ShapeError(f"logits must be [N, K], got {list(logits.shape)}")
    n, k = lv.shape
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise ContractError(f"expected {n} labels, got shape {labels.shape}")
    if not np.issubdtype(labels.dtype, np.integer):
        if not np.all(labels == np.round(labels)):
            raise LabelError("labels must be integer class indices")
        labels = labels.astype(np.int64)
    if np.any(labels < 0) or np.any(labels >= k):
        raise LabelError(f"labels must lie in 0..{k - 1}")
    logp = log_softmax(lv)
    rows = np.arange(n)
    loss = -logp[rows, labels].mean()

    def vjp(g, needs):
        d = np.exp(logp)
        d[rows, labels] -= 1.0
        return (d * (g.reshape(-1)[0] / n),)

    return record_op(np.array([loss]), (logits,), vjp)
