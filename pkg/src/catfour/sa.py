"""Simulated annealing over categorical variables with softmax Gibbs moves.

Each move picks one variable uniformly at random, evaluates the surrogate
at all k levels of that variable with the others held fixed, and resamples
the variable from Softmax({-f_hat(x_i = level, x_-i) / s(t)}), where the
temperature follows the exponential decay s(t) = exp(-decay * t / n).
Only the surrogate is evaluated here, never the true black box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import CategoricalSpace


@dataclass
class SaConfig:
    decay: float = 3.0
    iterations: int | None = None  # defaults to 3n at call time
    init_point: np.ndarray | None = None  # warm start; None = uniform random

    def __post_init__(self):
        if self.decay <= 0.0:
            raise ValueError("decay must be positive")
        if self.iterations is not None and self.iterations < 1:
            raise ValueError("iterations must be >= 1")


def temperature(decay: float, t: int, n: int) -> float:
    return math.exp(-decay * t / n)


def softmax_levels(values: np.ndarray, temp: float) -> np.ndarray:
    """Softmax over -values / temp with max-subtraction for stability."""
    logits = -np.asarray(values, dtype=np.float64) / max(temp, 1e-300)
    logits -= logits.max()
    probs = np.exp(logits)
    return probs / probs.sum()


def sa_minimize(
    surrogate_batch,
    space: CategoricalSpace,
    config: SaConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Run the annealing chain and return the final point.

    surrogate_batch maps an integer array of shape (B, n) to (B,) values;
    it is called exactly once per move with the k candidate points.
    """
    n, k = space.n, space.k
    iterations = config.iterations if config.iterations is not None else 3 * n
    if config.init_point is not None:
        x = space.validate(np.asarray(config.init_point)).copy()
    else:
        x = space.random_point(rng)

    levels = np.arange(k)
    for t in range(iterations):
        i = int(rng.integers(n))
        candidates = np.repeat(x[None, :], k, axis=0)
        candidates[:, i] = levels
        values = np.asarray(surrogate_batch(candidates), dtype=np.float64)
        if not np.all(np.isfinite(values)):
            raise ValueError("surrogate returned a non-finite value")
        probs = softmax_levels(values, temperature(config.decay, t, n))
        x[i] = rng.choice(k, p=probs)
    return x
