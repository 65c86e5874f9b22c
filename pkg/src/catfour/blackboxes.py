"""Built-in benchmark black boxes.

* LatinSquareBox -- penalty of (k - #distinct) per row and column of the
  k x k matrix, plus Gaussian observation noise; 0 iff a Latin square.
* NussinovFolder -- internal O(L^3) base-pair-maximization folder standing
  in for a thermodynamic package at desk scale (energy = -pair count).
* ExternalProcessFolder -- adapter for an RNAfold-style executable.
* RnaOptimizationBox -- MFE of the decoded sequence.
* RnaDesignBox -- normalized Hamming distance between the folded structure
  and a dot-bracket target.
* ExternalCommandBox -- plugin slot speaking `v0|v1|...` -> decimal score.
"""

from __future__ import annotations

import shlex
import re
import subprocess

import numpy as np
from numba import njit

from .domain import BlackBox, CategoricalSpace, DimensionMismatchError

LEVEL_TO_BASE = "ACGU"
BASE_TO_LEVEL = {b: i for i, b in enumerate(LEVEL_TO_BASE)}

# Canonical pairs incl. wobble: AU, UA, CG, GC, GU, UG (levels 0A 1C 2G 3U).
_CAN_PAIR = np.zeros((4, 4), dtype=np.bool_)
for _a, _b in [(0, 3), (3, 0), (1, 2), (2, 1), (2, 3), (3, 2)]:
    _CAN_PAIR[_a, _b] = True

DEFAULT_MIN_LOOP = 3


class FolderError(RuntimeError):
    """External folding process failed to produce a parsable structure."""


def decode_sequence(point: np.ndarray) -> str:
    return "".join(LEVEL_TO_BASE[int(v)] for v in point)


def encode_sequence(sequence: str) -> np.ndarray:
    try:
        return np.array([BASE_TO_LEVEL[ch] for ch in sequence], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"invalid RNA letter {exc.args[0]!r}") from None


@njit(cache=True)
def _pair_table(codes, min_loop, can_pair):  # pragma: no cover - jitted
    L = codes.shape[0]
    dp = np.zeros((L, L), dtype=np.int64)
    for span in range(min_loop + 1, L):
        for i in range(L - span):
            j = i + span
            best = 0
            if can_pair[codes[i], codes[j]]:
                v = dp[i + 1, j - 1] + 1
                if v > best:
                    best = v
            for k in range(i, j):
                v = dp[i, k] + dp[k + 1, j]
                if v > best:
                    best = v
            dp[i, j] = best
    return dp


def _traceback(dp, codes, min_loop):
    """Deterministic pair recovery: prefer pairing (i,j) over splitting,
    prefer the smallest split index."""
    L = len(codes)
    pairs = []
    stack = [(0, L - 1)]
    while stack:
        i, j = stack.pop()
        if j - i <= min_loop or dp[i, j] == 0:
            continue
        if _CAN_PAIR[codes[i], codes[j]] and dp[i, j] == dp[i + 1, j - 1] + 1:
            pairs.append((i, j))
            stack.append((i + 1, j - 1))
            continue
        for k in range(i, j):
            if dp[i, j] == dp[i, k] + dp[k + 1, j]:
                stack.append((i, k))
                stack.append((k + 1, j))
                break
    return pairs


class NussinovFolder:
    """Maximize non-crossing canonical pairs with a hairpin-loop constraint.

    Deterministic; returns (energy, dot_bracket) with energy = -pair count.
    Not a thermodynamic model: every pair scores -1.
    """

    def __init__(self, min_loop: int = DEFAULT_MIN_LOOP):
        self.min_loop = min_loop
        self._cache: dict[str, tuple[float, str]] = {}

    def fold(self, sequence: str) -> tuple[float, str]:
        if not sequence:
            raise ValueError("empty sequence")
        hit = self._cache.get(sequence)
        if hit is not None:
            return hit
        codes = encode_sequence(sequence)
        dp = _pair_table(codes, self.min_loop, _CAN_PAIR)
        pairs = _traceback(dp, codes, self.min_loop)
        structure = ["."] * len(sequence)
        for i, j in pairs:
            structure[i] = "("
            structure[j] = ")"
        result = (-float(dp[0, len(sequence) - 1]), "".join(structure))
        if len(self._cache) < 200_000:
            self._cache[sequence] = result
        return result


# Dot-bracket line followed by a parenthesized energy, RNAfold-style,
# e.g. "((((...)))) ( -5.40)".
_EXTERNAL_RE = re.compile(r"([.()]+)\s*\(\s*(-?\d+(?:\.\d+)?)\s*\)")


class ExternalProcessFolder:
    """Spawn an external folding command per call.

    Protocol: sequence plus newline on stdin; the last line of stdout that
    matches `structure (energy)` wins. Calls are serialized (one in flight).
    """

    def __init__(self, command):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)

    def fold(self, sequence: str) -> tuple[float, str]:
        if not sequence or any(ch not in BASE_TO_LEVEL for ch in sequence):
            raise ValueError(f"invalid sequence {sequence!r}")
        try:
            proc = subprocess.run(
                self.command,
                input=sequence + "\n",
                capture_output=True,
                text=True,
                timeout=300,
            )
        except OSError as exc:
            raise FolderError(f"failed to spawn {self.command}: {exc}") from exc
        if proc.returncode != 0:
            raise FolderError(
                f"{self.command} exited with {proc.returncode}: {proc.stderr.strip()}"
            )
        matches = _EXTERNAL_RE.findall(proc.stdout)
        matches = [m for m in matches if len(m[0]) == len(sequence)]
        if not matches:
            raise FolderError(f"no structure line in output: {proc.stdout!r}")
        structure, energy = matches[-1]
        return float(energy), structure


class LatinSquareBox(BlackBox):
    """Noisy Latin-square penalty over n = k^2 variables with k levels.

    Noiseless values lie in [0, 2k(k-1)]; 0 corresponds to a Latin square.
    Noise is drawn from the box's own RNG stream, independent of any
    optimizer RNG.
    """

    def __init__(self, k: int, noise_sigma: float = 0.1,
                 budget: int | None = None,
                 noise_rng: np.random.Generator | None = None):
        super().__init__(CategoricalSpace(k * k, k), budget=budget)
        self.k = k
        self.noise_sigma = noise_sigma
        self.noise_rng = noise_rng if noise_rng is not None else np.random.default_rng(0)

    def penalty(self, point: np.ndarray) -> float:
        """Noiseless repetition penalty."""
        k = self.k
        square = np.asarray(point).reshape(k, k)
        rows = sum(k - len(np.unique(square[r])) for r in range(k))
        cols = sum(k - len(np.unique(square[:, c])) for c in range(k))
        return float(rows + cols)

    def _evaluate(self, point):
        value = self.penalty(point)
        if self.noise_sigma > 0.0:
            value += self.noise_rng.normal(0.0, self.noise_sigma)
        return value


class RnaOptimizationBox(BlackBox):
    """Fold energy of the decoded length-n sequence (lower = more stable)."""

    def __init__(self, n: int, folder=None, budget: int | None = None):
        super().__init__(CategoricalSpace(n, 4), budget=budget)
        self.folder = folder if folder is not None else NussinovFolder()

    def _evaluate(self, point):
        energy, _ = self.folder.fold(decode_sequence(point))
        return energy


class RnaDesignBox(BlackBox):
    """Normalized Hamming distance between fold(sequence) and a target."""

    def __init__(self, target: str, folder=None, budget: int | None = None):
        target = target.strip()
        if not target or any(ch not in ".()" for ch in target):
            raise ValueError(f"invalid dot-bracket target {target!r}")
        super().__init__(CategoricalSpace(len(target), 4), budget=budget)
        self.target = target
        self.folder = folder if folder is not None else NussinovFolder()

    def _evaluate(self, point):
        _, structure = self.folder.fold(decode_sequence(point))
        if len(structure) != len(self.target):
            raise DimensionMismatchError(
                f"structure length {len(structure)} != target length {len(self.target)}"
            )
        mismatches = sum(a != b for a, b in zip(structure, self.target))
        return mismatches / len(self.target)


class ExternalCommandBox(BlackBox):
    """Plugin slot: executable taking one `v0|v1|...|v{n-1}` line on stdin
    and answering a decimal score (e.g. a pest-control simulator)."""

    def __init__(self, command, space: CategoricalSpace, budget: int | None = None):
        super().__init__(space, budget=budget)
        self.command = shlex.split(command) if isinstance(command, str) else list(command)

    def _evaluate(self, point):
        line = "|".join(str(int(v)) for v in point)
        try:
            proc = subprocess.run(
                self.command, input=line + "\n", capture_output=True,
                text=True, timeout=300,
            )
        except OSError as exc:
            raise FolderError(f"failed to spawn {self.command}: {exc}") from exc
        if proc.returncode != 0:
            raise FolderError(f"{self.command} exited with {proc.returncode}")
        try:
            return float(proc.stdout.strip().splitlines()[-1])
        except (IndexError, ValueError):
            raise FolderError(f"unparsable score output: {proc.stdout!r}") from None


class PermutedLevelsBox(BlackBox):
    """Apply a fixed permutation to the level labels before evaluating."""

    def __init__(self, inner: BlackBox, permutation):
        super().__init__(inner.space, budget=inner.budget)
        self.inner = inner
        self.permutation = np.asarray(permutation, dtype=np.int64)
        if sorted(self.permutation.tolist()) != list(range(inner.space.k)):
            raise ValueError("permutation must cover all k levels")

    def _evaluate(self, point):
        return self.inner._evaluate(self.permutation[point])
