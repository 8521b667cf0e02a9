"""Synthetic tone corpus standing in for real genre data in tests and demos."""

from __future__ import annotations

import numpy as np

from .audio import CLIP_LENGTH, TARGET_RATE

TONE_FREQUENCIES = (220.0, 440.0, 880.0, 1760.0, 3000.0)


def tone_corpus(
    per_class: int = 20,
    seed: int = 0,
    length: int = CLIP_LENGTH,
    rate: int = TARGET_RATE,
    noise: float = 0.05,
    frequencies=TONE_FREQUENCIES,
) -> tuple[np.ndarray, np.ndarray]:
    """One sine frequency per class with random phase and amplitude plus Gaussian noise.

    Returns:
        clips ``[len(frequencies) * per_class, length]`` in [-1, 1] and integer labels,
        ordered class by class.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(length) / rate
    clips, labels = [], []
    for label, freq in enumerate(frequencies):
        for _ in range(per_class):
            amp = rng.uniform(0.3, 0.8)
            phase = rng.uniform(0.0, 2 * np.pi)
            x = amp * np.sin(2 * np.pi * freq * t + phase) + noise * rng.standard_normal(length)
            clips.append(np.clip(x, -1.0, 1.0))
            labels.append(label)
    return np.array(clips), np.array(labels, dtype=np.int64)
