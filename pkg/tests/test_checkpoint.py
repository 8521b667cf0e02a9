import io
import struct

import numpy as np
import pytest

from conftest import TINY_ARCH, randomized_tiny_net
from genredream.checkpoint import checkpoint_load, checkpoint_save
from genredream.errors import (
    ArchitectureMismatchError,
    BadMagicError,
    CheckpointError,
    TruncatedCheckpointError,
    UnsupportedVersionError,
)
from genredream.genre_net import FULL_ARCH, forward, init_parameters
from genredream.layers import Mode


@pytest.fixture
def net():
    return randomized_tiny_net(9)


def test_round_trip_bit_exact(net):
    loaded = checkpoint_load(checkpoint_save(net))
    assert loaded.arch == TINY_ARCH and loaded.mode == Mode.INFERENCE
    for k, t in net.state().items():
        assert t.data.tobytes() == loaded.state()[k].data.tobytes()
    x = np.random.default_rng(0).uniform(-1, 1, (3, 1, 64))
    a = forward(net, x, Mode.INFERENCE).logits.data
    b = forward(loaded, x, Mode.INFERENCE).logits.data
    assert a.tobytes() == b.tobytes()


def test_magic_and_determinism(net):
    blob = checkpoint_save(net)
    assert blob[:4] == bytes([0x47, 0x4E, 0x45, 0x54])
    assert struct.unpack_from("<I", blob, 4) == (1,)
    assert checkpoint_save(net) == blob


def test_layout_size_for_full_net():
    blob = checkpoint_save(init_parameters(0))
    n_floats = sum(t.size for t in init_parameters(0).state().values())
    header = 4 + 4 + 4 + 4 + 3 * 16 + 8
    # 20 tensors; dims: conv w 3x3, conv b 3x1, bn 12x1, dense w 2, dense b 1
    shape_headers = 4 * 20 + 4 * (9 + 3 + 12 + 2 + 1)
    assert len(blob) == header + shape_headers + 8 * n_floats
    assert checkpoint_load(blob).arch == FULL_ARCH


def test_file_and_stream_destinations(net, tmp_path):
    path = tmp_path / "model.gnet"
    blob = checkpoint_save(net, path)
    assert path.read_bytes() == blob
    buf = io.BytesIO()
    checkpoint_save(net, buf)
    assert buf.getvalue() == blob
    assert checkpoint_load(path).arch == checkpoint_load(io.BytesIO(blob)).arch


def test_bad_magic(net):
    with pytest.raises(BadMagicError):
        checkpoint_load(b"XNET" + checkpoint_save(net)[4:])


def test_unsupported_version(net):
    blob = bytearray(checkpoint_save(net))
    blob[4:8] = struct.pack("<I", 2)
    with pytest.raises(UnsupportedVersionError):
        checkpoint_load(bytes(blob))


@pytest.mark.parametrize("cut", [2, 6, 30, 100, -1, -9])
def test_truncation(net, cut):
    with pytest.raises(TruncatedCheckpointError):
        checkpoint_load(checkpoint_save(net)[:cut])


def test_shape_header_mismatch(net):
    blob = bytearray(checkpoint_save(net))
    # first tensor header sits right after the architecture block: rank=3, dims (3, 1, 4)
    offset = 4 + 4 + 8 + 3 * 16 + 8
    assert struct.unpack_from("<4I", blob, offset) == (3, 3, 1, 4)
    struct.pack_into("<I", blob, offset + 12, 5)
    with pytest.raises(ArchitectureMismatchError):
        checkpoint_load(bytes(blob))


def test_inconsistent_architecture_constants(net):
    blob = bytearray(checkpoint_save(net))
    struct.pack_into("<I", blob, 16 + 16 + 4, 7)  # conv2 in_channels
    with pytest.raises(ArchitectureMismatchError):
        checkpoint_load(bytes(blob))


def test_trailing_bytes_rejected(net):
    with pytest.raises(CheckpointError):
        checkpoint_load(checkpoint_save(net) + b"\x00")
