"""Online exponential-weights surrogate over a Fourier basis (ECO-F / ECO-G).

Each basis term is an expert with a split nonnegative coefficient pair
(alpha_plus, alpha_minus); the model prediction is
sum_j (alpha_plus_j - alpha_minus_j) * psi_j(x). After every black-box
observation the coefficients receive a multiplicative exponential update
and the total mass is renormalized to the sparsity parameter lambda.

The learning rate follows the anytime schedule
    eta_t = min(1 / e_{t-1}, c * sqrt(ln(2d) / v_{t-1}))
where e_t is the smallest power of two bounding the largest pairwise range
of signed per-expert losses seen so far and v_t is the cumulative weighted
variance of those losses under the (simplex-normalized) weights.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSpec

# c = sqrt(2(sqrt(2)-1)/(e-2)) from the anytime learning-rate schedule.
LR_CONST = math.sqrt(2.0 * (math.sqrt(2.0) - 1.0) / (math.e - 2.0))

WEIGHT_FLOOR = 1e-300  # underflow clamp; preserves mass conservation


@dataclass
class LrState:
    """Running statistics behind the anytime learning rate.

    e_prev is the dyadic range bound (0.0 until a nonzero loss range is
    seen), v_prev the cumulative weighted loss variance, max_range the raw
    running range that e_prev rounds up from.
    """

    e_prev: float = 0.0
    v_prev: float = 0.0
    max_range: float = 0.0

    def eta(self, d: int) -> float:
        """Learning rate from last step's statistics."""
        candidates = []
        if self.e_prev > 0.0:
            candidates.append(1.0 / self.e_prev)
        if self.v_prev > 0.0:
            candidates.append(LR_CONST * math.sqrt(math.log(2.0 * d) / self.v_prev))
        if not candidates:
            # First step: e_0, v_0 are undefined; cap the fallback at 1.
            return min(1.0, LR_CONST * math.sqrt(math.log(2.0 * d)))
        return min(candidates)

    def observe(self, z: np.ndarray, weights: np.ndarray) -> None:
        """Fold this step's signed losses z (length 2d) into (e, v).

        weights must be the pre-update coefficients normalized to sum 1.
        """
        rng = float(z.max() - z.min())
        if rng > self.max_range:
            self.max_range = rng
            self.e_prev = 2.0 ** math.ceil(math.log2(rng))
        mean = float(weights @ z)
        self.v_prev += float(weights @ (z - mean) ** 2)


class EcoModel:
    """Split-weight exponential-weights learner over a BasisSpec."""

    def __init__(self, spec: BasisSpec, sparsity: float = 1.0):
        if sparsity <= 0.0:
            raise ValueError("sparsity must be positive")
        self.spec = spec
        self.sparsity = sparsity
        d = spec.d
        self.alpha_plus = np.full(d, sparsity / (2.0 * d))
        self.alpha_minus = np.full(d, sparsity / (2.0 * d))
        self.lr_state = LrState()

    @property
    def coefficients(self) -> np.ndarray:
        return self.alpha_plus - self.alpha_minus

    def predict(self, point: np.ndarray) -> float:
        return float(self.spec.eval_point(point) @ self.coefficients)

    def predict_batch(self, points: np.ndarray) -> np.ndarray:
        return self.spec.eval_batch(points) @ self.coefficients

    def update(self, point: np.ndarray, observed: float,
               eta: float | None = None) -> "EcoModel":
        """One exponential-weights step on a true observation (in place).

        eta overrides the anytime learning rate (tests only).
        """
        if not math.isfinite(observed):
            raise ValueError(f"observed value must be finite, got {observed!r}")
        lam = self.sparsity
        feats = self.spec.eval_point(point)
        mixture_loss = float(feats @ self.coefficients) - observed
        per_expert = 2.0 * lam * mixture_loss * feats  # ell_i

        if eta is None:
            eta = self.lr_state.eta(self.spec.d)

        # Signed losses z_{j}^{gamma} = -gamma * ell_j and the weights that
        # held when they arrived, for the (e_t, v_t) refresh below.
        z = np.concatenate([-per_expert, per_expert])
        weights = np.concatenate([self.alpha_plus, self.alpha_minus]) / lam

        # Work in log space and subtract the max exponent before
        # exponentiating: the renormalization below cancels any common
        # factor, so this is exact and overflow-proof.
        shift = float(np.max(np.abs(eta * per_expert)))
        self.alpha_plus *= np.exp(-eta * per_expert - shift)
        self.alpha_minus *= np.exp(eta * per_expert - shift)
        np.maximum(self.alpha_plus, WEIGHT_FLOOR, out=self.alpha_plus)
        np.maximum(self.alpha_minus, WEIGHT_FLOOR, out=self.alpha_minus)
        total = self.alpha_plus.sum() + self.alpha_minus.sum()
        self.alpha_plus *= lam / total
        self.alpha_minus *= lam / total

        self.lr_state.observe(z, weights)
        return self

    def save_snapshot(self, path) -> None:
        """Debug CSV of the coefficient state (not a stable format)."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["term", "alpha_plus", "alpha_minus"])
            for j in range(self.spec.d):
                writer.writerow([j, repr(self.alpha_plus[j]), repr(self.alpha_minus[j])])
