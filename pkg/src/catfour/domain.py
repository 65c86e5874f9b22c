"""Core domain types: categorical spaces and points, black-box interface,
evaluation records, trace CSV I/O.

Points are plain numpy integer vectors with levels in {0, ..., k-1}.
All user-facing I/O (CSV, logs) uses the same 0-based convention.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


class BudgetExhaustedError(RuntimeError):
    """Raised when a black box would exceed its evaluation budget."""


class DimensionMismatchError(ValueError):
    """Raised when a point does not fit the target categorical space."""


@dataclass(frozen=True)
class CategoricalSpace:
    """Domain [k]^n: n variables, each over k unordered levels (0-based)."""

    n: int
    k: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")

    @property
    def size(self) -> int:
        """Total domain size k^n as an exact python int (reporting only)."""
        return self.k**self.n

    def validate(self, point: np.ndarray) -> np.ndarray:
        point = np.asarray(point)
        if point.shape != (self.n,):
            raise DimensionMismatchError(
                f"point shape {point.shape} does not match n={self.n}"
            )
        if not np.issubdtype(point.dtype, np.integer):
            raise DimensionMismatchError(f"point dtype {point.dtype} is not integer")
        if point.min() < 0 or point.max() >= self.k:
            raise DimensionMismatchError(
                f"point levels must lie in [0, {self.k})"
            )
        return point

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(0, self.k, size=self.n)


@dataclass(frozen=True)
class EvaluationRecord:
    """One true black-box evaluation: step is 1-based, best_so_far is the
    running minimum of value over steps 1..step."""

    step: int
    point: np.ndarray
    value: float
    best_so_far: float


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed))


def split_seed(seed: int, n_children: int = 2):
    """Derive independent child generators from one seed.

    Used to keep black-box noise streams independent of optimizer streams."""
    children = np.random.SeedSequence(seed).spawn(n_children)
    return [np.random.default_rng(c) for c in children]


class BlackBox:
    """Base evaluation interface: point -> real score with budget accounting.

    Subclasses implement _evaluate; observation noise (where configured)
    is applied inside the subclass so learners only ever see noisy values.
    Single-writer: the evaluation counter mutates on every call.
    """

    def __init__(self, space: CategoricalSpace, budget: int | None = None):
        self.space = space
        self.budget = budget
        self.num_evaluations = 0

    def evaluate(self, point: np.ndarray) -> float:
        point = self.space.validate(point)
        if self.budget is not None and self.num_evaluations >= self.budget:
            raise BudgetExhaustedError(
                f"budget of {self.budget} evaluations exhausted"
            )
        self.num_evaluations += 1
        return float(self._evaluate(point))

    def _evaluate(self, point: np.ndarray) -> float:
        raise NotImplementedError


def argmin_trace(records: list[EvaluationRecord]) -> np.ndarray:
    """Queried point with minimal observed value; ties break to earliest step."""
    if not records:
        raise ValueError("empty trace")
    best = min(records, key=lambda r: (r.value, r.step))
    return best.point


def format_point(point: np.ndarray) -> str:
    return "|".join(str(int(v)) for v in point)


def parse_point(text: str) -> np.ndarray:
    return np.array([int(v) for v in text.split("|")], dtype=np.int64)


def write_trace(path, records: list[EvaluationRecord]) -> None:
    """Persist a run trace as CSV: header step,value,best_so_far,point."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "value", "best_so_far", "point"])
        for rec in records:
            writer.writerow(
                [rec.step, repr(rec.value), repr(rec.best_so_far), format_point(rec.point)]
            )


def read_trace(path) -> list[EvaluationRecord]:
    records = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(
                EvaluationRecord(
                    step=int(row["step"]),
                    point=parse_point(row["point"]),
                    value=float(row["value"]),
                    best_so_far=float(row["best_so_far"]),
                )
            )
    return records
