"""Outer optimization drivers: surrogate + acquisition optimizer + black box.

Algorithms: eco_f / eco_g (exponential-weights surrogate, SA or MCTS as
acquisition optimizer), tco_f (horseshoe posterior + Thompson sampling),
plus the rs and plain_sa baselines. Every driver consumes exactly `budget`
true black-box calls (plain_sa may leave up to k-1 unused: each of its
moves costs k true evaluations) and emits one EvaluationRecord per call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import blackboxes
from .basis import GROUP_FOURIER, ONE_HOT_FOURIER, PM_ONE, ZERO_ONE, enumerate_basis
from .domain import BlackBox, CategoricalSpace, EvaluationRecord, split_seed
from .eco import EcoModel
from .mcts import DesignSchema, MctsConfig, build_schema, generic_schema, mcts_maximize
from .sa import SaConfig, sa_minimize, softmax_levels, temperature
from .tco import DEFAULT_ACQ_LAMBDA, McmcConfig, TcoModel, acquisition_batch

ALGORITHMS = ("eco_f", "eco_g", "tco_f", "rs", "plain_sa")
AFOS = ("sa", "mcts")


@dataclass(frozen=True)
class BoxSpec:
    """Declarative black-box choice, resolved per run seed."""

    name: str  # latin_square | rna_optimize | rna_design | external
    k: int = 5  # latin_square order
    n: int = 30  # rna_optimize length
    target: str = ""  # rna_design dot-bracket target
    command: str = ""  # external box / external folder command
    noise_sigma: float = 0.1
    min_loop: int = 3
    level_permutation: tuple = ()  # optional relabeling of levels

    def make(self, budget: int, noise_rng: np.random.Generator) -> BlackBox:
        if self.name == "latin_square":
            box = blackboxes.LatinSquareBox(
                self.k, noise_sigma=self.noise_sigma, budget=budget, noise_rng=noise_rng
            )
        elif self.name == "rna_optimize":
            box = blackboxes.RnaOptimizationBox(
                self.n, folder=self._folder(), budget=budget
            )
        elif self.name == "rna_design":
            box = blackboxes.RnaDesignBox(
                self.target, folder=self._folder(), budget=budget
            )
        elif self.name == "external":
            box = blackboxes.ExternalCommandBox(
                self.command, CategoricalSpace(self.n, self.k), budget=budget
            )
        else:
            raise ValueError(f"unknown box {self.name!r}")
        if self.level_permutation:
            box = blackboxes.PermutedLevelsBox(box, self.level_permutation)
        return box

    def _folder(self):
        if self.command:
            return blackboxes.ExternalProcessFolder(self.command)
        return blackboxes.NussinovFolder(min_loop=self.min_loop)

    @property
    def is_design(self) -> bool:
        return self.name == "rna_design"


@dataclass(frozen=True)
class ExperimentConfig:
    algorithm: str
    box: BoxSpec
    afo: str = "sa"
    budget: int = 500
    max_order: int = 2
    sparsity: float = 1.0  # exponential-weights mass
    sa_decay: float = 3.0
    sa_iterations: int | None = None  # None -> 3n (ECO) / 6n (TCO)
    mcts_exploration: float | None = None  # None -> 0.5 (ECO) / 0.25 (TCO)
    mcts_playouts: int | None = None  # None -> 30 * height
    tco_warmup_observations: int = 5
    acq_lambda: float = DEFAULT_ACQ_LAMBDA
    mcmc_warmup: int = 200
    nu: float = 1.0
    s2: float = 1.0
    # Extra exponential-weights updates per step, replayed from the most
    # recent observations. A single online pass cannot fit ~10^4 expert
    # coefficients from a few hundred samples; replaying recent data lets
    # the learner re-descend on what it has already paid for.
    eco_replay_updates: int = 100
    eco_replay_window: int = 100
    # Gain applied to surrogate predictions inside the acquisition search.
    # The mass constraint keeps predictions within [-lambda, lambda] and in
    # practice far inside it, so against the fixed annealing temperature
    # schedule the raw values would leave the chain near-uniform for most of
    # its moves. The gain rescales the objective to a sane dynamic range;
    # it is monotone, so the surrogate's ranking of points is unchanged.
    eco_prediction_gain: float = 10.0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.afo not in AFOS:
            raise ValueError(f"unknown afo {self.afo!r}")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")


class _Recorder:
    """Appends one EvaluationRecord per true black-box call."""

    def __init__(self, box: BlackBox):
        self.box = box
        self.records: list[EvaluationRecord] = []
        self._best = math.inf

    def evaluate(self, point: np.ndarray) -> float:
        value = self.box.evaluate(point)
        self._best = min(self._best, value)
        self.records.append(
            EvaluationRecord(
                step=len(self.records) + 1,
                point=np.array(point, dtype=np.int64),
                value=value,
                best_so_far=self._best,
            )
        )
        return value

    @property
    def remaining(self) -> int:
        return self.box.budget - self.box.num_evaluations


def _is_eco(algorithm: str) -> bool:
    return algorithm in ("eco_f", "eco_g")


def _search_space(config: ExperimentConfig, schema: DesignSchema | None,
                  space: CategoricalSpace) -> CategoricalSpace:
    # SA over a design schema resamples whole slots (4 actions each), which
    # keeps paired positions legal by construction.
    if schema is not None:
        return CategoricalSpace(schema.height, int(schema.action_counts.max()))
    return space


def _afo_minimize(eval_batch, config: ExperimentConfig, space: CategoricalSpace,
                  schema: DesignSchema | None, rng: np.random.Generator,
                  init_point: np.ndarray | None = None) -> np.ndarray:
    """Minimize the surrogate/acquisition; returns a point in the black
    box's space (decoded through the schema where one applies). init_point
    warm-starts the annealing chain; it is ignored by MCTS (the tree is
    rebuilt from the root each call) and by schema runs (whose chain moves
    in slot space, not black-box space)."""
    if config.afo == "mcts":
        sch = schema if schema is not None else generic_schema(space)
        default_c = 0.5 if _is_eco(config.algorithm) else 0.25
        mcfg = MctsConfig(
            exploration=config.mcts_exploration if config.mcts_exploration is not None else default_c,
            playouts=config.mcts_playouts,
        )
        return mcts_maximize(eval_batch, sch, mcfg, rng)
    factor = 3 if _is_eco(config.algorithm) else 6
    search = _search_space(config, schema, space)
    iters = config.sa_iterations if config.sa_iterations is not None else factor * search.n
    if schema is not None:
        sa_cfg = SaConfig(decay=config.sa_decay, iterations=iters)
        assignment = sa_minimize(
            lambda a: eval_batch(schema.decode_batch(a)), search, sa_cfg, rng
        )
        return schema.decode(assignment)
    sa_cfg = SaConfig(decay=config.sa_decay, iterations=iters, init_point=init_point)
    return sa_minimize(eval_batch, search, sa_cfg, rng)


def _random_query(space, schema, rng):
    if schema is not None:
        return schema.random_point(rng)
    return space.random_point(rng)


def run_experiment(config: ExperimentConfig, seed: int) -> list[EvaluationRecord]:
    """One full optimization run; deterministic given (config, seed)."""
    rng, noise_rng = split_seed(seed)
    box = config.box.make(config.budget, noise_rng)
    schema = None
    if config.box.is_design:
        # Per-run random slot permutation, drawn before any playout.
        schema = build_schema(config.box.target, rng)
    recorder = _Recorder(box)

    if _is_eco(config.algorithm):
        _run_eco(config, recorder, box.space, schema, rng)
    elif config.algorithm == "tco_f":
        _run_tco(config, recorder, box.space, schema, rng, seed)
    elif config.algorithm == "rs":
        for _ in range(config.budget):
            recorder.evaluate(_random_query(box.space, schema, rng))
    else:
        _run_plain_sa(config, recorder, box.space, schema, rng)
    return recorder.records


class _RunningStandardizer:
    """Online rescaling of observations fed to the exponential-weights
    learner. The total coefficient mass (sparsity lambda) bounds the
    surrogate's predictions to [-lambda, lambda], so raw observations of
    larger magnitude would collapse all mass onto the constant expert.
    Observations are centered by the running mean, divided by the running
    standard deviation and shrunk by a fixed factor well inside the
    representable band. Affine transforms do not change the surrogate's
    ranking of points, so the AFO objective is unaffected."""

    def __init__(self, scale: float = 0.2):
        self.scale = scale
        self.count = 0
        self.mean = 0.0
        self.m2 = 0.0

    def push(self, value: float) -> None:
        self.count += 1
        delta = value - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (value - self.mean)

    def transform(self, value: float) -> float:
        std = math.sqrt(self.m2 / self.count) if self.count else 0.0
        if std < 1e-12:
            return 0.0
        return self.scale * (value - self.mean) / std


def _run_eco(config, recorder, space, schema, rng):
    kind = ONE_HOT_FOURIER if config.algorithm == "eco_f" else GROUP_FOURIER
    spec = enumerate_basis(space, kind, config.max_order)
    model = EcoModel(spec, sparsity=config.sparsity)
    scaler = _RunningStandardizer(scale=0.2 * config.sparsity)
    best_value, incumbent = math.inf, None
    history: list[tuple[np.ndarray, float]] = []
    # The gain rescales the objective to the annealing schedule's dynamic
    # range; UCT balances its exploration constant against raw reward
    # magnitudes, so the tree search sees unscaled predictions.
    gain = config.eco_prediction_gain if config.afo == "sa" else 1.0

    def objective(points):
        return gain * model.predict_batch(points)

    for _ in range(config.budget):
        x = _afo_minimize(objective, config, space, schema, rng,
                          init_point=incumbent)
        y = recorder.evaluate(x)
        if y < best_value:
            best_value, incumbent = y, np.array(x, dtype=np.int64)
        scaler.push(y)
        history.append((np.array(x, dtype=np.int64), y))
        model.update(x, scaler.transform(y))
        pool = history[-config.eco_replay_window:]
        for _ in range(min(config.eco_replay_updates, len(history) - 1)):
            xi, yi = pool[rng.integers(len(pool))]
            model.update(xi, scaler.transform(yi))


def _run_tco(config, recorder, space, schema, rng, seed):
    from .tco import HorseshoeHyper

    spec = enumerate_basis(space, ONE_HOT_FOURIER, config.max_order, convention=ZERO_ONE)
    model = TcoModel(
        spec,
        hyper=HorseshoeHyper(nu=config.nu, s2=config.s2),
        sampler_config=McmcConfig(warmup_draws=config.mcmc_warmup, chain_seed=seed),
    )
    warmup = min(config.tco_warmup_observations, config.budget)
    for _ in range(warmup):
        x = _random_query(space, schema, rng)
        model.observe(x, recorder.evaluate(x))
    for _ in range(config.budget - warmup):
        coeffs = model.sample_coefficients()
        x = _afo_minimize(
            lambda pts: acquisition_batch(spec, coeffs, pts, config.acq_lambda),
            config, space, schema, rng,
        )
        model.observe(x, recorder.evaluate(x))


def _run_plain_sa(config, recorder, space, schema, rng):
    """Algorithm-1 annealing directly against the true black box: each
    move's k candidate evaluations consume budget."""
    search = _search_space(config, schema, space)
    n, k = search.n, search.k
    x = search.random_point(rng)
    levels = np.arange(k)

    def true_value(assignment):
        point = schema.decode(assignment) if schema is not None else assignment
        return recorder.evaluate(point)

    t = 0
    while recorder.remaining >= k:
        i = int(rng.integers(n))
        values = np.empty(k)
        for level in levels:
            candidate = x.copy()
            candidate[i] = level
            values[level] = true_value(candidate)
        probs = softmax_levels(values, temperature(config.sa_decay, t, n))
        x[i] = rng.choice(k, p=probs)
        t += 1
