"""Dense float64 tensors with tape-based reverse-mode differentiation.

Every operation returns a fresh, read-only :class:`Tensor`. When a
:class:`GradTape` is active in the current context and an operand is being
tracked (a leaf with ``requires_grad`` or the output of a recorded op), the
operation appends a node holding its vector-Jacobian product. ``backward``
replays those nodes in reverse order::

    x = Tensor([1.0, 2.0, 3.0], requires_grad=True)
    with GradTape() as tape:
        loss = reduce_sum(mul(x, x))
    grads = backward(loss, tape)
    grads[x].data  # -> [2., 4., 6.]
"""

from __future__ import annotations

import contextvars
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ContractError, ShapeError

# vjp(grad_output, needs) -> one gradient array (or None) per input
Vjp = Callable[[np.ndarray, tuple], tuple]

_ACTIVE_TAPE: contextvars.ContextVar[Optional["GradTape"]] = contextvars.ContextVar(
    "genredream_active_tape", default=None
)


def _check_dims(shape: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in shape)
    if any(d < 1 for d in dims):
        raise ShapeError(f"all dimensions must be >= 1, got {list(dims)}")
    return dims


class Tensor:
    """Immutable row-major array of 64-bit floats.

    Scalars are stored with shape ``(1,)``.
    """

    __slots__ = ("_data", "requires_grad")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        _check_dims(arr.shape)
        arr.flags.writeable = False
        self._data = arr
        self.requires_grad = bool(requires_grad)

    @classmethod
    def _wrap(cls, arr: np.ndarray, requires_grad: bool = False) -> "Tensor":
        # Takes ownership of a freshly computed array without copying.
        t = cls.__new__(cls)
        arr = np.ascontiguousarray(arr, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        arr.flags.writeable = False
        t._data = arr
        t.requires_grad = requires_grad
        return t

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def flat(self) -> np.ndarray:
        return self._data.reshape(-1)

    @property
    def shape(self) -> tuple[int, ...]:
        return self._data.shape

    @property
    def size(self) -> int:
        return self._data.size

    def numpy(self) -> np.ndarray:
        """Writable copy of the data."""
        return self._data.copy()

    def item(self) -> float:
        if self._data.size != 1:
            raise ContractError(f"item() needs a single element, tensor has shape {self.shape}")
        return float(self._data.reshape(-1)[0])

    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __mul__(self, other: "Tensor") -> "Tensor":
        return mul(self, other)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={list(self.shape)}{flag})"


@dataclass(frozen=True)
class _Node:
    output: Tensor
    inputs: tuple
    needs: tuple
    vjp: Vjp


class GradTape:
    """Ordered record of differentiable operations for one forward/backward pair.

    A tape is bound to the context that entered it and must not be shared
    across threads while live.
    """

    def __init__(self):
        self._nodes: list[_Node] = []
        self._outputs: set[int] = set()
        self._leaves: dict[int, Tensor] = {}
        self._token = None

    def __enter__(self) -> "GradTape":
        if self._token is not None:
            raise ContractError("tape is already active")
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, *exc) -> None:
        _ACTIVE_TAPE.reset(self._token)
        self._token = None

    def __len__(self) -> int:
        return len(self._nodes)

    def tracks(self, t: Tensor) -> bool:
        return t.requires_grad or id(t) in self._outputs

    def _record(self, out: Tensor, inputs: tuple, needs: tuple, vjp: Vjp) -> None:
        for t in inputs:
            if t.requires_grad and id(t) not in self._leaves:
                self._leaves[id(t)] = t
        self._nodes.append(_Node(out, inputs, needs, vjp))
        self._outputs.add(id(out))


def record_op(out: np.ndarray, inputs: tuple, vjp: Vjp) -> Tensor:
    """Wrap ``out`` as a tensor and record ``vjp`` on the active tape if needed."""
    result = Tensor._wrap(out)
    tape = _ACTIVE_TAPE.get()
    if tape is not None:
        needs = tuple(tape.tracks(t) for t in inputs)
        if any(needs):
            tape._record(result, inputs, needs, vjp)
    return result


def backward(loss: Tensor, tape: GradTape) -> dict:
    """Gradients of a scalar ``loss`` for every ``requires_grad`` leaf on ``tape``.

    Returns a dict keyed by the leaf tensors themselves. Leaves that were
    recorded but do not influence ``loss`` receive zeros.
    """
    if loss.size != 1:
        raise ContractError(f"loss must be scalar, got shape {list(loss.shape)}")
    if not tape.tracks(loss):
        raise ContractError("loss was not produced through this tape")

    pending: dict[int, np.ndarray] = {id(loss): np.ones(loss.shape)}
    leaf_grads: dict[int, np.ndarray] = {}
    if loss.requires_grad:
        leaf_grads[id(loss)] = pending[id(loss)]

    for node in reversed(tape._nodes):
        g = pending.pop(id(node.output), None)
        if g is None:
            continue
        in_grads = node.vjp(g, node.needs)
        for t, need, gi in zip(node.inputs, node.needs, in_grads):
            if not need or gi is None:
                continue
            target = leaf_grads if t.requires_grad else pending
            prev = target.get(id(t))
            target[id(t)] = gi if prev is None else prev + gi

    out = {}
    for key, leaf in tape._leaves.items():
        g = leaf_grads.get(key)
        out[leaf] = Tensor._wrap(np.zeros(leaf.shape) if g is None else g.reshape(leaf.shape))
    if loss.requires_grad and loss not in out:
        out[loss] = Tensor._wrap(np.ones(loss.shape))
    return out


def tensor_new(shape: Sequence[int], fill: float = 0.0) -> Tensor:
    dims = _check_dims(shape)
    return Tensor._wrap(np.full(dims, float(fill)))


def _same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {list(a.shape)} vs {list(b.shape)}")


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "add")

    def vjp(g, needs):
        return (g if needs[0] else None, g if needs[1] else None)

    return record_op(a.data + b.data, (a, b), vjp)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "mul")
    av, bv = a.data, b.data

    def vjp(g, needs):
        return (g * bv if needs[0] else None, g * av if needs[1] else None)

    return record_op(av * bv, (a, b), vjp)


def reduce_sum(a: Tensor) -> Tensor:
    shape = a.shape

    def vjp(g, needs):
        return (np.full(shape, g.reshape(-1)[0]),)

    return record_op(np.array([a.data.sum()]), (a,), vjp)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    dims = _check_dims(shape)
    if int(np.prod(dims)) != a.size:
        raise ShapeError(f"cannot reshape {list(a.shape)} to {list(dims)}")
    src = a.shape

    def vjp(g, needs):
        return (g.reshape(src),)

    return record_op(a.data.reshape(dims).copy(), (a,), vjp)
