"""Audio "dreaming": gradient ascent on a clip to amplify the summed activations of chosen layers."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .genre_net import GenreNet, forward
from .layers import Mode
from .tensor import GradTape, Tensor, add, backward, reduce_sum, reshape

ALL_LAYERS = frozenset({1, 2, 3})


def parse_layers(text: str) -> frozenset:
    """``"all"`` or a comma-separated subset of 1, 2, 3."""
    text = text.strip().lower()
    if text == "all":
        return ALL_LAYERS
    try:
        layers = frozenset(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"cannot parse layer selection {text!r}") from None
    return _check_selection(layers)


def _check_selection(layers) -> frozenset:
    layers = frozenset(layers)
    if not layers:
        raise ConfigError("layer selection must not be empty")
    if not layers <= ALL_LAYERS:
        raise ConfigError(f"layers must be drawn from 1, 2, 3, got {sorted(layers)}")
    return layers


@dataclass(frozen=True)
class DreamConfig:
    layers: frozenset = ALL_LAYERS
    steps: int = 100
    step_size: float = 0.01
    normalize_gradient: bool = True

    def __post_init__(self):
        object.__setattr__(self, "layers", _check_selection(self.layers))
        if self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        if not self.step_size > 0:
            raise ConfigError(f"step_size must be positive, got {self.step_size}")


@dataclass
class DreamTrace:
    objective_per_step: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["step", "objective"])
        for i, value in enumerate(self.objective_per_step):
            writer.writerow([i, repr(value)])
        return buf.getvalue()


def _as_input(net: GenreNet, clip) -> np.ndarray:
    x = np.asarray(getattr(clip, "samples", clip), dtype=np.float64).reshape(-1)
    if x.size != net.arch.input_length:
        raise ConfigError(f"clip has {x.size} samples, network expects {net.arch.input_length}")
    return x


def dream_objective(net: GenreNet, clip, layers) -> Tensor:
    """Sum of the post-rectify activations of the selected layers, in inference mode.

    Differentiable with respect to ``clip`` when it is a tracked tensor.
    """
    layers = _check_selection(layers)
    x = clip if isinstance(clip, Tensor) else Tensor(_as_input(net, clip))
    result = forward(net, reshape(x, (1, 1, net.arch.input_length)), Mode.INFERENCE)
    total = None
    for i in sorted(layers):
        s = reduce_sum(result.activations[i - 1])
        total = s if total is None else add(total, s)
    return total


def objective_and_gradient(net: GenreNet, clip, layers) -> tuple[float, np.ndarray]:
    x = Tensor(_as_input(net, clip), requires_grad=True)
    with GradTape() as tape:
        s = dream_objective(net, x, layers)
    grads = backward(s, tape)
    return s.item(), grads[x].data


def ascent_update(clip: np.ndarray, grad: np.ndarray, cfg: DreamConfig) -> np.ndarray:
    if cfg.normalize_gradient:
        grad = grad / (np.mean(np.abs(grad)) + 1e-8)
    return np.clip(clip + cfg.step_size * grad, -1.0, 1.0)


def dream_step(net: GenreNet, clip, cfg: DreamConfig) -> tuple[np.ndarray, float]:
    """One ascent step; returns the new clip and the objective at the old one."""
    x = _as_input(net, clip)
    value, grad = objective_and_gradient(net, x, cfg.layers)
    return ascent_update(x, grad, cfg), value


def dream(net: GenreNet, clip, cfg: DreamConfig = DreamConfig()) -> tuple[np.ndarray, DreamTrace]:
    """Apply ``cfg.steps`` ascent steps, recording the objective before and after each one.

    The network is only read; its parameters and running statistics are untouched.
    """
    x = _as_input(net, clip)
    trace = DreamTrace()
    for step in range(cfg.steps + 1):
        value, grad = objective_and_gradient(net, x, cfg.layers)
        trace.objective_per_step.append(value)
        if step < cfg.steps:
            x = ascent_update(x, grad, cfg)
    return x, trace
