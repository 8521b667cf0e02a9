"""The genre classifier: three strided conv blocks (conv -> batch norm -> rectify) and a dense head."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ShapeError
from .layers import (
    BatchNormLayer,
    ConvLayer,
    DenseLayer,
    Mode,
    batchnorm_forward,
    conv1d_forward,
    dense,
    rectify,
)
from .tensor import Tensor, reshape

GENRES = ("alternative", "electronica", "pop", "rap", "rock")


@dataclass(frozen=True)
class Architecture:
    input_length: int = 40000
    channels: int = 16
    kernels: tuple = (8, 32, 128)
    stride: int = 8
    n_classes: int = len(GENRES)

    def frames(self) -> tuple:
        """Output length of each conv layer under valid convolution."""
        out = []
        length = self.input_length
        for k in self.kernels:
            if length < k:
                raise ShapeError(f"layer with kernel {k} receives only {length} frames")
            length = (length - k) // self.stride + 1
            out.append(length)
        return tuple(out)

    @property
    def dense_in(self) -> int:
        return self.channels * self.frames()[-1]

    def in_channels(self, layer: int) -> int:
        return 1 if layer == 0 else self.channels


FULL_ARCH = Architecture()


@dataclass
class GenreNet:
    arch: Architecture
    convs: list
    norms: list
    head: DenseLayer
    mode: Mode = field(default=Mode.INFERENCE)

    def parameters(self) -> dict:
        """Trainable tensors by name, in checkpoint order."""
        params = {}
        for i, (conv, bn) in enumerate(zip(self.convs, self.norms), start=1):
            params[f"conv{i}.weight"] = conv.weight
            params[f"conv{i}.bias"] = conv.bias
            params[f"bn{i}.gamma"] = bn.gamma
            params[f"bn{i}.beta"] = bn.beta
        params["dense.weight"] = self.head.weight
        params["dense.bias"] = self.head.bias
        return params

    def state(self) -> dict:
        """All tensors including running statistics, in checkpoint order."""
        state = {}
        for i, (conv, bn) in enumerate(zip(self.convs, self.norms), start=1):
            state[f"conv{i}.weight"] = conv.weight
            state[f"conv{i}.bias"] = conv.bias
            state[f"bn{i}.gamma"] = bn.gamma
            state[f"bn{i}.beta"] = bn.beta
            state[f"bn{i}.running_mean"] = bn.running_mean
            state[f"bn{i}.running_var"] = bn.running_var
        state["dense.weight"] = self.head.weight
        state["dense.bias"] = self.head.bias
        return state

    def expected_shapes(self) -> dict:
        a = self.arch
        shapes = {}
        for i, k in enumerate(a.kernels, start=1):
            shapes[f"conv{i}.weight"] = (a.channels, a.in_channels(i - 1), k)
            shapes[f"conv{i}.bias"] = (a.channels,)
            for name in ("gamma", "beta", "running_mean", "running_var"):
                shapes[f"bn{i}.{name}"] = (a.channels,)
        shapes["dense.weight"] = (a.n_classes, a.dense_in)
        shapes["dense.bias"] = (a.n_classes,)
        return shapes

    def load_state(self, values: dict) -> None:
        """Replace tensors by name. Values may be arrays or tensors."""
        shapes = self.expected_shapes()
        for name, value in values.items():
            if name not in shapes:
                raise KeyError(name)
            t = value if isinstance(value, Tensor) else Tensor(value)
            if t.shape != shapes[name]:
                raise ShapeError(f"{name}: expected shape {shapes[name]}, got {t.shape}")
            layer, attr = name.split(".")
            if layer == "dense":
                setattr(self.head, attr, t)
            elif layer.startswith("conv"):
                setattr(self.convs[int(layer[4:]) - 1], attr, t)
            else:
                setattr(self.norms[int(layer[2:]) - 1], attr, t)

    def copy(self) -> "GenreNet":
        # tensors are immutable, so copying the containers is enough
        return GenreNet(
            self.arch,
            [copy.copy(c) for c in self.convs],
            [copy.copy(b) for b in self.norms],
            copy.copy(self.head),
            self.mode,
        )

    def num_parameters(self) -> int:
        return sum(t.size for t in self.parameters().values())


def _glorot(rng: np.random.Generator, shape: tuple, fan_in: int, fan_out: int) -> Tensor:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor._wrap(rng.uniform(-bound, bound, size=shape))


def init_parameters(seed: int, arch: Architecture = FULL_ARCH) -> GenreNet:
    """Glorot-uniform weights, zero biases, identity batch norm. Fully determined by ``seed``."""
    arch.frames()  # validates the shape ledger
    rng = np.random.default_rng(seed)
    ch = arch.channels
    convs, norms = [], []
    for i, k in enumerate(arch.kernels):
        cin = arch.in_channels(i)
        w = _glorot(rng, (ch, cin, k), cin * k, ch * k)
        convs.append(ConvLayer(w, Tensor._wrap(np.zeros(ch)), arch.stride))
        norms.append(
            BatchNormLayer(
                gamma=Tensor._wrap(np.ones(ch)),
                beta=Tensor._wrap(np.zeros(ch)),
                running_mean=Tensor._wrap(np.zeros(ch)),
                running_var=Tensor._wrap(np.ones(ch)),
            )
        )
    d_in = arch.dense_in
    head = DenseLayer(
        _glorot(rng, (arch.n_classes, d_in), d_in, arch.n_classes),
        Tensor._wrap(np.zeros(arch.n_classes)),
    )
    return GenreNet(arch, convs, norms, head)


class ForwardResult(NamedTuple):
    logits: Tensor
    activations: list  # post-rectify output of each conv block, [N, C, T]
    preactivations: list  # batch-norm outputs feeding each rectify


def forward(net: GenreNet, batch, mode: Mode | None = None) -> ForwardResult:
    """Run ``batch`` (``[N, 1, input_length]``) through the network.

    In training mode batch statistics are used and the running statistics of
    ``net`` are updated in place.
    """
    x = batch if isinstance(batch, Tensor) else Tensor(batch)
    expected = (1, net.arch.input_length)
    if x.data.ndim != 3 or x.shape[1:] != expected:
        raise ShapeError(f"batch must have shape [N, {expected[0]}, {expected[1]}], got {list(x.shape)}")
    mode = Mode(mode if mode is not None else net.mode)
    acts, pre = [], []
    h = x
    for conv, bn in zip(net.convs, net.norms):
        z = batchnorm_forward(conv1d_forward(h, conv), bn, mode)
        h = rectify(z)
        pre.append(z)
        acts.append(h)
    flat = reshape(h, (h.shape[0], h.shape[1] * h.shape[2]))
    logits = dense(flat, net.head.weight, net.head.bias)
    return ForwardResult(logits, acts, pre)
