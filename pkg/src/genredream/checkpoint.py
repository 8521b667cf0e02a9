"""Versioned binary checkpoints.

Layout (all integers unsigned 32-bit little-endian)::

    "GNET" | version | input_length | n_conv
    n_conv x (out_channels, in_channels, kernel, stride)
    dense_out | dense_in
    per tensor, in GenreNet.state() order:
        rank | dims... | float64 little-endian data, row-major
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .errors import (
    ArchitectureMismatchError,
    BadMagicError,
    CheckpointError,
    TruncatedCheckpointError,
    UnsupportedVersionError,
)
from .genre_net import Architecture, GenreNet, init_parameters
from .layers import Mode
from .tensor import Tensor

MAGIC = b"GNET"
VERSION = 1
N_CONV = 3


def checkpoint_bytes(net: GenreNet) -> bytes:
    a = net.arch
    parts = [MAGIC, struct.pack("<III", VERSION, a.input_length, len(a.kernels))]
    for i, k in enumerate(a.kernels):
        parts.append(struct.pack("<IIII", a.channels, a.in_channels(i), k, a.stride))
    parts.append(struct.pack("<II", a.n_classes, a.dense_in))
    for t in net.state().values():
        parts.append(struct.pack(f"<{1 + len(t.shape)}I", len(t.shape), *t.shape))
        parts.append(t.data.astype("<f8").tobytes())
    return b"".join(parts)


def checkpoint_save(net: GenreNet, destination=None) -> bytes:
    """Serialize ``net``; also write to ``destination`` (path or binary file) when given."""
    blob = checkpoint_bytes(net)
    if destination is None:
        return blob
    if hasattr(destination, "write"):
        destination.write(blob)
    else:
        with open(destination, "wb") as fh:
            fh.write(blob)
    return blob


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedCheckpointError(f"stream ends inside {what} at byte {self.pos}")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self, what: str, count: int = 1) -> tuple:
        return struct.unpack(f"<{count}I", self.take(4 * count, what))


def _read_source(source) -> bytes:
    if isinstance(source, (bytes, bytearray, memoryview)):
        return bytes(source)
    if hasattr(source, "read"):
        return source.read()
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return fh.read()
    raise TypeError(f"cannot read a checkpoint from {type(source).__name__}")


def _read_architecture(r: _Reader) -> Architecture:
    (input_length, n_conv) = r.u32("header", 2)
    if n_conv != N_CONV:
        raise ArchitectureMismatchError(f"expected {N_CONV} conv layers, found {n_conv}")
    layers = [r.u32(f"conv{i + 1} constants", 4) for i in range(n_conv)]
    dense_out, dense_in = r.u32("dense constants", 2)
    channels, stride = layers[0][0], layers[0][3]
    for i, (out_ch, in_ch, _, s) in enumerate(layers):
        if out_ch != channels or s != stride or in_ch != (1 if i == 0 else channels):
            raise ArchitectureMismatchError(f"conv{i + 1} constants {layers[i]} are inconsistent")
    try:
        arch = Architecture(input_length, channels, tuple(l[2] for l in layers), stride, dense_out)
        expected_in = arch.dense_in
    except ValueError as exc:
        raise ArchitectureMismatchError(str(exc)) from None
    if dense_in != expected_in:
        raise ArchitectureMismatchError(f"dense input {dense_in} does not match conv output {expected_in}")
    return arch


def checkpoint_load(source) -> GenreNet:
    """Rebuild a network in inference mode. Nothing is returned unless the whole stream is valid."""
    r = _Reader(_read_source(source))
    magic = r.take(4, "magic")
    if magic != MAGIC:
        raise BadMagicError(f"expected magic {MAGIC!r}, got {magic!r}")
    (version,) = r.u32("version")
    if version != VERSION:
        raise UnsupportedVersionError(f"checkpoint version {version} is not supported (need {VERSION})")
    arch = _read_architecture(r)

    net = init_parameters(0, arch)
    values = {}
    for name, shape in net.expected_shapes().items():
        (rank,) = r.u32(f"{name} rank")
        dims = r.u32(f"{name} dims", rank) if rank else ()
        if tuple(dims) != shape:
            raise ArchitectureMismatchError(f"{name}: header shape {list(dims)} != expected {list(shape)}")
        count = int(np.prod(shape))
        raw = r.take(8 * count, f"{name} data")
        values[name] = Tensor._wrap(np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape))
    if r.pos != len(r.data):
        raise CheckpointError(f"{len(r.data) - r.pos} unexpected trailing bytes")
    net.load_state(values)
    net.mode = Mode.INFERENCE
    return net
