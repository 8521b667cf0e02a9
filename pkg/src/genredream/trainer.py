"""Mini-batch training with Nesterov momentum, epoch logging and per-genre evaluation."""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import ConfigError, LabelError
from .genre_net import GENRES, GenreNet, forward
from .layers import Mode, softmax_cross_entropy
from .tensor import GradTape, Tensor, backward

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 32
    learning_rate: float = 0.01
    momentum: float = 0.9
    shuffle_seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 2:
            raise ConfigError(f"batch_size must be >= 2 for batch norm, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0 <= self.momentum < 1:
            raise ConfigError(f"momentum must lie in [0, 1), got {self.momentum}")


class EpochRecord(NamedTuple):
    epoch: int
    loss: float
    seconds: float


@dataclass
class TrainState:
    velocity: dict = field(default_factory=dict)
    epoch_log: list = field(default_factory=list)

    @property
    def epoch(self) -> int:
        return self.epoch_log[-1].epoch if self.epoch_log else 0

    def log_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["epoch", "loss", "seconds"])
        for rec in self.epoch_log:
            writer.writerow([rec.epoch, repr(rec.loss), repr(rec.seconds)])
        return buf.getvalue()


def nesterov_step(
    params: dict,
    velocity: dict,
    grad_fn: Callable[[dict], dict],
    lr: float,
    mu: float,
) -> tuple[dict, dict]:
    """One lookahead Nesterov update.

    ``grad_fn`` is evaluated at ``theta + mu * v``; then ``v' = mu * v - lr * g``
    and ``theta' = theta + v'``. Missing velocities start at zero.

    Returns:
        New parameter and velocity dicts; the inputs are left untouched.
    """
    theta = {k: np.asarray(p, dtype=np.float64) for k, p in params.items()}
    vel = {k: np.asarray(velocity.get(k, np.zeros_like(t)), dtype=np.float64) for k, t in theta.items()}
    lookahead = {k: theta[k] + mu * vel[k] for k in theta}
    grads = grad_fn(lookahead)
    new_vel = {k: mu * vel[k] - lr * np.asarray(grads[k], dtype=np.float64) for k in theta}
    new_theta = {k: theta[k] + new_vel[k] for k in theta}
    return new_theta, new_vel


def _validate_data(clips, labels) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(clips, dtype=np.float64)
    y = np.asarray(labels)
    if x.size == 0:
        raise ConfigError("dataset is empty")
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ConfigError(f"clips must form a [count, samples] array, got shape {x.shape}")
    if y.shape != (x.shape[0],):
        raise ConfigError(f"{x.shape[0]} clips but labels have shape {y.shape}")
    if np.any(y < 0) or np.any(y >= len(GENRES)):
        raise LabelError(f"labels must lie in 0..{len(GENRES) - 1}")
    return x, y.astype(np.int64)


def batch_slices(n: int, batch_size: int) -> list:
    """Consecutive batch boundaries; a trailing batch of one example is dropped."""
    out = [(s, min(s + batch_size, n)) for s in range(0, n, batch_size)]
    if out and out[-1][1] - out[-1][0] < 2:
        out.pop()
    return out


def _loss_and_grads(net: GenreNet, x: np.ndarray, y: np.ndarray, theta: dict) -> tuple[float, dict]:
    leaves = {k: Tensor._wrap(v, requires_grad=True) for k, v in theta.items()}
    net.load_state(leaves)
    with GradTape() as tape:
        result = forward(net, x[:, None, :], Mode.TRAINING)
        loss = softmax_cross_entropy(result.logits, y)
    grads = backward(loss, tape)
    return loss.item(), {k: grads[t].data for k, t in leaves.items()}


def train_epoch(net: GenreNet, clips, labels, cfg: TrainConfig, state: TrainState) -> TrainState:
    """One shuffled pass over the data, one Nesterov step per batch. Mutates ``net`` and ``state``."""
    x, y = _validate_data(clips, labels)
    batches = batch_slices(x.shape[0], cfg.batch_size)
    if not batches:
        raise ConfigError("dataset yields no batch of at least two clips")
    epoch = state.epoch + 1
    order = np.random.default_rng([cfg.shuffle_seed, epoch]).permutation(x.shape[0])

    start = time.monotonic()
    params = {k: t.data for k, t in net.parameters().items()}
    losses = []
    for lo, hi in batches:
        idx = order[lo:hi]
        xb, yb = x[idx], y[idx]
        batch_loss = []

        def grad_fn(theta):
            loss, grads = _loss_and_grads(net, xb, yb, theta)
            batch_loss.append(loss)
            return grads

        params, state.velocity = nesterov_step(
            params, state.velocity, grad_fn, cfg.learning_rate, cfg.momentum
        )
        losses.append(batch_loss[0])
    net.load_state(params)
    elapsed = time.monotonic() - start

    record = EpochRecord(epoch, float(np.mean(losses)), elapsed)
    state.epoch_log.append(record)
    logger.info("epoch %d loss %.5f (%.2fs)", *record)
    return state


def train(net: GenreNet, clips, labels, cfg: TrainConfig = TrainConfig(), state: TrainState | None = None):
    """Run ``cfg.epochs`` epochs; returns the trained net and its state."""
    state = state if state is not None else TrainState()
    net.mode = Mode.TRAINING
    for _ in range(cfg.epochs):
        train_epoch(net, clips, labels, cfg, state)
    net.mode = Mode.INFERENCE
    return net, state


def predict(net: GenreNet, clips, chunk: int = 32) -> np.ndarray:
    """Inference-mode class predictions; ties go to the lowest index."""
    x = np.asarray(clips, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    out = []
    for s in range(0, x.shape[0], chunk):
        logits = forward(net, x[s : s + chunk, None, :], Mode.INFERENCE).logits.data
        out.append(np.argmax(logits, axis=1))  # argmax returns the first maximum
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


@dataclass
class EvalReport:
    per_genre_accuracy: list
    overall_accuracy: float
    confusion: np.ndarray  # rows: true genre, columns: predicted genre

    @classmethod
    def from_predictions(cls, labels, predictions) -> "EvalReport":
        y = np.asarray(labels, dtype=np.int64)
        p = np.asarray(predictions, dtype=np.int64)
        k = len(GENRES)
        confusion = np.zeros((k, k), dtype=np.int64)
        np.add.at(confusion, (y, p), 1)
        counts = confusion.sum(axis=1)
        diag = np.diag(confusion)
        per_genre = [float(d / c) if c else 0.0 for d, c in zip(diag, counts)]
        overall = float(diag.sum() / max(counts.sum(), 1))
        return cls(per_genre, overall, confusion)

    def format(self) -> str:
        lines = [f"{g} {100 * a:.1f}%" for g, a in zip(GENRES, self.per_genre_accuracy)]
        lines.append(f"overall {100 * self.overall_accuracy:.1f}%")
        return "\n".join(lines)

    def to_json(self) -> str:
        return json.dumps(
            {
                "genres": list(GENRES),
                "per_genre_accuracy": {g: a for g, a in zip(GENRES, self.per_genre_accuracy)},
                "overall_accuracy": self.overall_accuracy,
                "confusion": self.confusion.tolist(),
            },
            indent=2,
        )


def evaluate(net: GenreNet, clips, labels) -> EvalReport:
    x, y = _validate_data(clips, labels)
    return EvalReport.from_predictions(y, predict(net, x))
