"""UCT Monte Carlo tree search over sequential construction of a point.

States are partial slot assignments; the tree policy is
    argmax_a Q(s,a) + c * sqrt(ln N(s) / N(s,a))
with untried actions (N(s,a) = 0) forced first in a seeded-random order.
Rollouts are uniform over legal actions; the terminal reward is
r = -surrogate(decoded point), so lower predicted objective wins.
The search maximizes the surrogate reward only; the true black box is
never called here.

Design schemas come from dot-bracket targets: matched brackets become
paired slots with the four action dimers {GC, CG, AU, UA}, dots become
unpaired slots with the four single-letter actions. Generic categorical
spaces are handled as n unpaired-style slots with k abstract actions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import CategoricalSpace

UNPAIRED = "unpaired"
PAIRED = "paired"
GENERIC = "generic"

# RNA levels: 0=A, 1=C, 2=G, 3=U (see blackboxes.LEVEL_TO_BASE).
# Paired action dimers GC, CG, AU, UA as (5'-level, 3'-level).
PAIR_FIRST = np.array([2, 1, 0, 3], dtype=np.int64)
PAIR_SECOND = np.array([1, 2, 3, 0], dtype=np.int64)


@dataclass(frozen=True)
class SlotSpec:
    kind: str
    positions: tuple  # (pos,) for unpaired/generic, (i, j) with i < j for paired
    num_actions: int


class DesignSchema:
    """Ordered construction slots covering every sequence position once."""

    def __init__(self, slots, order, space: CategoricalSpace):
        self.slots = tuple(slots)
        self.order = tuple(order)
        self.space = space
        self.height = len(self.slots)
        if sorted(self.order) != list(range(self.height)):
            raise ValueError("order must be a permutation of the slots")
        covered = [p for s in self.slots for p in s.positions]
        if sorted(covered) != list(range(space.n)):
            raise ValueError("slots must cover every position exactly once")
        self.visit_slots = tuple(self.slots[i] for i in self.order)
        self.action_counts = np.array(
            [s.num_actions for s in self.visit_slots], dtype=np.int64
        )

    def decode_batch(self, assignments: np.ndarray) -> np.ndarray:
        """Map (B, height) action arrays to (B, n) categorical points."""
        assignments = np.asarray(assignments)
        points = np.zeros((assignments.shape[0], self.space.n), dtype=np.int64)
        for depth, slot in enumerate(self.visit_slots):
            actions = assignments[:, depth]
            if slot.kind == PAIRED:
                i, j = slot.positions
                points[:, i] = PAIR_FIRST[actions]
                points[:, j] = PAIR_SECOND[actions]
            else:
                points[:, slot.positions[0]] = actions
        return points

    def decode(self, assignment) -> np.ndarray:
        return self.decode_batch(np.asarray(assignment, dtype=np.int64)[None, :])[0]

    def random_assignment(self, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(0, self.action_counts)

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        """Uniform rollout through the schema (legal by construction)."""
        return self.decode(self.random_assignment(rng))


def build_schema(target: str, rng: np.random.Generator) -> DesignSchema:
    """Parse a dot-bracket target into paired/unpaired slots.

    The slot visiting order is a random permutation drawn from rng once.
    """
    target = target.strip()
    if not target or any(ch not in ".()" for ch in target):
        raise ValueError(f"invalid dot-bracket string {target!r}")
    stack, pairs, dots = [], [], []
    for pos, ch in enumerate(target):
        if ch == "(":
            stack.append(pos)
        elif ch == ")":
            if not stack:
                raise ValueError("unbalanced brackets: unmatched ')'")
            pairs.append((stack.pop(), pos))
        else:
            dots.append(pos)
    if stack:
        raise ValueError("unbalanced brackets: unmatched '('")
    slots = [SlotSpec(PAIRED, p, 4) for p in sorted(pairs)]
    slots += [SlotSpec(UNPAIRED, (p,), 4) for p in dots]
    slots.sort(key=lambda s: s.positions[0])
    order = tuple(int(i) for i in rng.permutation(len(slots)))
    return DesignSchema(slots, order, CategoricalSpace(len(target), 4))


def generic_schema(space: CategoricalSpace) -> DesignSchema:
    """Index-order construction of a generic point, k actions per slot."""
    slots = [SlotSpec(GENERIC, (i,), space.k) for i in range(space.n)]
    return DesignSchema(slots, range(space.n), space)


@dataclass
class MctsConfig:
    exploration: float = 0.5
    playouts: int | None = None  # defaults to 30 * height at call time

    def __post_init__(self):
        if self.exploration < 0.0:
            raise ValueError("exploration must be >= 0")
        if self.playouts is not None and self.playouts < 1:
            raise ValueError("playouts must be >= 1")


class TreeNode:
    __slots__ = ("counts", "values", "try_order")

    def __init__(self, num_actions: int, rng: np.random.Generator):
        self.counts = np.zeros(num_actions, dtype=np.int64)
        self.values = np.zeros(num_actions, dtype=np.float64)
        self.try_order = rng.permutation(num_actions)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def select(self, c: float) -> int:
        untried = self.counts[self.try_order] == 0
        if untried.any():
            return int(self.try_order[np.argmax(untried)])
        ucb = self.values + c * np.sqrt(np.log(self.total) / self.counts)
        return int(np.argmax(ucb))


def mcts_maximize(
    surrogate_batch,
    schema: DesignSchema,
    config: MctsConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Run the playout budget and return the best complete point found.

    surrogate_batch maps (B, n) points to (B,) values; one call per playout.
    """
    height = schema.height
    playouts = config.playouts if config.playouts is not None else 30 * height
    tree: dict[tuple, TreeNode] = {(): TreeNode(int(schema.action_counts[0]), rng)}
    best_reward = -np.inf
    best_assignment = None

    for _ in range(playouts):
        state: tuple = ()
        path = []
        # Selection: follow the tree policy while states are in the tree.
        while len(state) < height and state in tree:
            action = tree[state].select(config.exploration)
            path.append((state, action))
            state = state + (action,)
        # Expansion: one new leaf per playout, children zero-initialized.
        if len(state) < height and state not in tree:
            tree[state] = TreeNode(int(schema.action_counts[len(state)]), rng)
        # Rollout: uniform default policy to a terminal state.
        rollout = list(state)
        while len(rollout) < height:
            rollout.append(int(rng.integers(schema.action_counts[len(rollout)])))
        assignment = np.array(rollout, dtype=np.int64)
        point = schema.decode(assignment)
        value = float(np.asarray(surrogate_batch(point[None, :]))[0])
        if not np.isfinite(value):
            raise ValueError("surrogate returned a non-finite value")
        reward = -value
        # Backup: Monte-Carlo running mean along the visited path.
        for node_state, action in path:
            node = tree[node_state]
            node.counts[action] += 1
            node.values[action] += (reward - node.values[action]) / node.counts[action]
        if reward > best_reward:
            best_reward = reward
            best_assignment = assignment
    return schema.decode(best_assignment)
