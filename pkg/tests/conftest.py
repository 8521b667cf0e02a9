import time

import numpy as np
import pytest

from genredream.genre_net import Architecture, init_parameters
from genredream.layers import Mode
from genredream.synthetic import tone_corpus
from genredream.trainer import TrainConfig, TrainState, evaluate, train_epoch

# Same code paths as the full network, small enough for exhaustive finite differences.
TINY_ARCH = Architecture(input_length=64, channels=3, kernels=(4, 4, 4), stride=2, n_classes=5)

ACCEPTANCE_RESULTS = []


def record_acceptance(number: int, title: str, ok: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS.append((number, title, ok, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:>2}. {title}  {detail}")


def randomized_tiny_net(seed: int = 0):
    """Tiny net with non-trivial biases, affine and running statistics."""
    net = init_parameters(seed, TINY_ARCH)
    rng = np.random.default_rng(seed + 1000)
    updates = {}
    for name, t in net.state().items():
        if name.endswith("bias") or name.endswith("beta") or name.endswith("running_mean"):
            updates[name] = rng.uniform(-0.3, 0.3, t.shape)
        elif name.endswith("gamma"):
            updates[name] = rng.uniform(0.5, 1.5, t.shape)
        elif name.endswith("running_var"):
            updates[name] = rng.uniform(0.5, 2.0, t.shape)
    net.load_state(updates)
    return net


@pytest.fixture
def tiny_net():
    return randomized_tiny_net()


class TrainedToy:
    def __init__(self, net, clips, labels, state, accuracy, seconds):
        self.net = net
        self.clips = clips
        self.labels = labels
        self.state = state
        self.accuracy = accuracy
        self.seconds = seconds


def train_toy(seed: int = 0, max_epochs: int = 200, target: float = 0.95) -> TrainedToy:
    clips, labels = tone_corpus(per_class=20, seed=seed)
    net = init_parameters(seed)
    cfg = TrainConfig(shuffle_seed=seed)
    state = TrainState()
    start = time.monotonic()
    accuracy = 0.0
    for _ in range(max_epochs):
        train_epoch(net, clips, labels, cfg, state)
        accuracy = evaluate(net, clips, labels).overall_accuracy
        if accuracy >= target:
            break
    net.mode = Mode.INFERENCE
    return TrainedToy(net, clips, labels, state, accuracy, time.monotonic() - start)


@pytest.fixture(scope="session")
def trained_toy():
    return train_toy()


def snapshot(net):
    return {k: t.data.copy() for k, t in net.state().items()}


@pytest.fixture(scope="session")
def default_runs():
    """Two complete default-config training runs on the tone corpus with identical seeds."""
    from genredream.trainer import train

    clips, labels = tone_corpus(per_class=20, seed=0)
    runs = []
    for _ in range(2):
        start = time.monotonic()
        net, state = train(init_parameters(0), clips, labels, TrainConfig(shuffle_seed=0))
        runs.append((net, state, time.monotonic() - start))
    return runs
