"""Fourier bases over categorical domains.

Two representations, enumerated up to a maximum interaction order m:

* one_hot_fourier -- multilinear monomials over one-hot indicator variables,
  at most one indicator per parent categorical variable per monomial.
  Indicators live in {-1,+1} by default (level k-1 is the all-+1 reference
  level); a {0,1} convention is available for the Bayesian surrogate.
* group_fourier -- real/imaginary parts of the characters of the group
  (Z/kZ)^n, i.e. cos and sin of 2*pi*<x, I>/k for frequency vectors I with
  support size <= m. The all-zero imaginary term is excluded (sin(0) == 0),
  giving d = 2 * sum_i C(n,i) (k-1)^i - 1.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .domain import CategoricalSpace, DimensionMismatchError

ONE_HOT_FOURIER = "one_hot_fourier"
GROUP_FOURIER = "group_fourier"

# {-1,+1} indicators (default) or {0,1} indicators for one_hot_fourier.
PM_ONE = "pm1"
ZERO_ONE = "01"

DEFAULT_TERM_CAP = 5_000_000
DEFAULT_DOMAIN_CAP = 65_536


@dataclass(frozen=True)
class MonomialTerm:
    """Product of one-hot indicators x_{ij}, at most one per variable i.

    pairs holds (variable, level) with strictly increasing variable indices;
    the empty product is the constant term.
    """

    pairs: tuple

    @property
    def order(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class GroupCharacterTerm:
    """One real-valued character: cos (real) or sin (imaginary part) of
    2*pi*<x, I>/k, with I given sparsely as (variable, frequency) pairs."""

    freq: tuple
    imaginary: bool

    @property
    def order(self) -> int:
        return len(self.freq)


def count_terms(n: int, k: int, kind: str, max_order: int) -> int:
    base = sum(math.comb(n, i) * (k - 1) ** i for i in range(max_order + 1))
    if kind == ONE_HOT_FOURIER:
        return base
    if kind == GROUP_FOURIER:
        return 2 * base - 1
    raise ValueError(f"unknown basis kind {kind!r}")


class BasisSpec:
    """Enumerated, deterministically ordered basis over a categorical space.

    Immutable after construction; all evaluation methods are pure and safe
    for concurrent readers. Construct via enumerate_basis.
    """

    def __init__(self, space, kind, max_order, terms, convention=PM_ONE):
        self.space = space
        self.kind = kind
        self.max_order = max_order
        self.terms = tuple(terms)
        self.d = len(self.terms)
        self.convention = convention
        self._build_arrays()

    def _build_arrays(self):
        # Padded (d, m) index arrays so batched evaluation is pure numpy.
        m = max(self.max_order, 1)
        d = self.d
        self._vars = np.zeros((d, m), dtype=np.int64)
        self._idx = np.zeros((d, m), dtype=np.int64)
        self._mask = np.zeros((d, m), dtype=bool)
        self._imag = np.zeros(d, dtype=bool)
        for t, term in enumerate(self.terms):
            if self.kind == ONE_HOT_FOURIER:
                entries = term.pairs
            else:
                entries = term.freq
                self._imag[t] = term.imaginary
            for slot, (var, idx) in enumerate(entries):
                self._vars[t, slot] = var
                self._idx[t, slot] = idx
                self._mask[t, slot] = True
        self._length = self._mask.sum(axis=1).astype(np.int64)
        k = self.space.k
        angles = 2.0 * np.pi * np.arange(k) / k
        self._cos_table = np.cos(angles)
        self._sin_table = np.sin(angles)

    # -- evaluation ---------------------------------------------------------

    def eval_batch(self, points: np.ndarray) -> np.ndarray:
        """Evaluate all d terms at a batch of points, shape (B, n) -> (B, d)."""
        points = np.asarray(points)
        if points.ndim != 2 or points.shape[1] != self.space.n:
            raise DimensionMismatchError(
                f"batch shape {points.shape} does not match n={self.space.n}"
            )
        if self.kind == ONE_HOT_FOURIER:
            return self._eval_one_hot(points)
        return self._eval_group(points)

    def eval_point(self, point: np.ndarray) -> np.ndarray:
        return self.eval_batch(np.asarray(point)[None, :])[0]

    def _eval_one_hot(self, points):
        out = np.empty((points.shape[0], self.d))
        _one_hot_kernel(
            np.ascontiguousarray(points, dtype=np.int64),
            self._vars, self._idx, self._length,
            self.convention == ZERO_ONE, out,
        )
        return out

    def _eval_group(self, points):
        out = np.empty((points.shape[0], self.d))
        _group_kernel(
            np.ascontiguousarray(points, dtype=np.int64),
            self._vars, self._idx, self._length, self._imag,
            self.space.k, self._cos_table, self._sin_table, out,
        )
        return out

    def eval_all_levels(self, point: np.ndarray, variable: int) -> np.ndarray:
        """Evaluate all d terms at the k variants of `point` obtained by
        setting `variable` to each level, shape (k, d). Equivalent to
        eval_batch over the k candidate points; used by the annealing moves."""
        k = self.space.k
        candidates = np.repeat(np.asarray(point, dtype=np.int64)[None, :], k, axis=0)
        candidates[:, variable] = np.arange(k)
        return self.eval_batch(candidates)

    def to_json(self) -> str:
        """Config-echo serialization; terms are re-derived, never stored."""
        return json.dumps(
            {
                "kind": self.kind,
                "n": self.space.n,
                "k": self.space.k,
                "m": self.max_order,
                "d": self.d,
            }
        )


@njit(cache=True)
def _one_hot_kernel(points, vars_, idx, length, zero_one, out):
    B, d = out.shape
    for b in range(B):
        for j in range(d):
            value = 1.0
            for s in range(length[j]):
                hit = points[b, vars_[j, s]] == idx[j, s]
                if zero_one:
                    if not hit:
                        value = 0.0
                        break
                elif hit:
                    value = -value
            out[b, j] = value


@njit(cache=True)
def _group_kernel(points, vars_, idx, length, imag, k, cos_table, sin_table, out):
    B, d = out.shape
    for b in range(B):
        for j in range(d):
            phase = 0
            for s in range(length[j]):
                phase += idx[j, s] * points[b, vars_[j, s]]
            phase %= k
            out[b, j] = sin_table[phase] if imag[j] else cos_table[phase]


def enumerate_basis(
    space: CategoricalSpace,
    kind: str,
    max_order: int,
    convention: str = PM_ONE,
    term_cap: int = DEFAULT_TERM_CAP,
) -> BasisSpec:
    """Enumerate the basis deterministically.

    Ordering: ascending interaction order, then lexicographic by variable
    index tuple, then by level/frequency tuple, with the real part before
    the imaginary part for group characters.
    """
    n, k = space.n, space.k
    if not 0 <= max_order <= n:
        raise ValueError(f"max_order must lie in [0, {n}], got {max_order}")
    if kind not in (ONE_HOT_FOURIER, GROUP_FOURIER):
        raise ValueError(f"unknown basis kind {kind!r}")
    if convention not in (PM_ONE, ZERO_ONE):
        raise ValueError(f"unknown one-hot convention {convention!r}")
    d = count_terms(n, k, kind, max_order)
    if d > term_cap:
        raise ValueError(f"basis would have d={d} terms, above cap {term_cap}")

    terms = []
    if kind == ONE_HOT_FOURIER:
        for order in range(max_order + 1):
            for variables in itertools.combinations(range(n), order):
                for levels in itertools.product(range(k - 1), repeat=order):
                    terms.append(MonomialTerm(tuple(zip(variables, levels))))
    else:
        for order in range(max_order + 1):
            for variables in itertools.combinations(range(n), order):
                for freqs in itertools.product(range(1, k), repeat=order):
                    entry = tuple(zip(variables, freqs))
                    terms.append(GroupCharacterTerm(entry, imaginary=False))
                    if order > 0:  # sin of the zero frequency is identically 0
                        terms.append(GroupCharacterTerm(entry, imaginary=True))
    assert len(terms) == d
    return BasisSpec(space, kind, max_order, terms, convention=convention)


def eval_term(term, point: np.ndarray, space: CategoricalSpace,
              convention: str = PM_ONE) -> float:
    """Direct single-term evaluation (reference path; eval_batch is the
    production path)."""
    point = space.validate(np.asarray(point))
    if isinstance(term, MonomialTerm):
        value = 1.0
        for var, level in term.pairs:
            if convention == PM_ONE:
                value *= -1.0 if point[var] == level else 1.0
            else:
                value *= 1.0 if point[var] == level else 0.0
        return value
    inner = sum(int(point[var]) * f for var, f in term.freq)
    angle = 2.0 * math.pi * inner / space.k
    return math.sin(angle) if term.imaginary else math.cos(angle)


def full_domain(space: CategoricalSpace, cap: int = DEFAULT_DOMAIN_CAP) -> np.ndarray:
    """All k^n points in lexicographic order, shape (k^n, n). Test scale only."""
    if space.size > cap:
        raise ValueError(f"domain size {space.size} exceeds cap {cap}")
    grids = np.meshgrid(*[np.arange(space.k)] * space.n, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)


def design_matrix(spec: BasisSpec, cap: int = DEFAULT_DOMAIN_CAP) -> np.ndarray:
    """(k^n x d) matrix: row per domain point (lexicographic), column per term."""
    return spec.eval_batch(full_domain(spec.space, cap=cap))
