"""Command-line front end and multi-seed experiment harness.

Subcommands:
  optimize  -- one algorithm, one box, one seed; prints the best point/value
  campaign  -- multi-seed comparison from an INI config file
  fold      -- fold one sequence with the internal or external folder
  verify    -- run the built-in correctness oracles and print pass/fail
"""

from __future__ import annotations

import argparse
import configparser
import csv
import itertools
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import basis, blackboxes
from .domain import CategoricalSpace, EvaluationRecord, argmin_trace, format_point, write_trace
from .loop import ALGORITHMS, BoxSpec, ExperimentConfig, run_experiment

EXTERNAL_FOLDER_ENV = "CATFOUR_EXTERNAL_FOLDER"


class ConfigError(ValueError):
    """Campaign config validation failure, naming the offending field."""


@dataclass
class CampaignSummary:
    """Per-algorithm aggregates over seeds: arrays are length budget."""

    budget: int
    seeds: tuple
    mean_best: dict  # algorithm -> np.ndarray
    sem_best: dict  # algorithm -> np.ndarray
    seconds_per_step: dict  # algorithm -> float
    final_best: dict  # algorithm -> float (mean best at last step)


def _best_curve(records: list[EvaluationRecord], budget: int) -> np.ndarray:
    curve = np.array([r.best_so_far for r in records])
    if len(curve) < budget:  # plain SA may leave a partial final move unused
        pad = curve[-1] if len(curve) else math.nan
        curve = np.concatenate([curve, np.full(budget - len(curve), pad)])
    return curve[:budget]


def _campaign_cell(args):
    config, seed = args
    start = time.perf_counter()
    records = run_experiment(config, seed)
    return config.algorithm, seed, records, time.perf_counter() - start


def run_cells(configs: dict, seeds, jobs: int = 1):
    """Execute all (algorithm x seed) cells; aggregation order is fixed by
    sorting, independent of completion order."""
    cells = [(configs[name], seed) for name in sorted(configs) for seed in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_campaign_cell, cells))
    else:
        results = [_campaign_cell(c) for c in cells]
    results.sort(key=lambda r: (r[0], r[1]))
    return results


def summarize(results, budget: int, seeds) -> CampaignSummary:
    mean_best, sem_best, seconds, final = {}, {}, {}, {}
    by_algo = {}
    for algo, seed, records, elapsed in results:
        by_algo.setdefault(algo, []).append((records, elapsed))
    for algo, runs in by_algo.items():
        curves = np.stack([_best_curve(recs, budget) for recs, _ in runs])
        mean_best[algo] = curves.mean(axis=0)
        if curves.shape[0] > 1:
            sem_best[algo] = curves.std(axis=0, ddof=1) / math.sqrt(curves.shape[0])
        else:
            sem_best[algo] = np.zeros(budget)
        seconds[algo] = float(np.mean([el for _, el in runs])) / budget
        final[algo] = float(mean_best[algo][-1])
    return CampaignSummary(budget, tuple(seeds), mean_best, sem_best, seconds, final)


def write_summary(summary: CampaignSummary, out_dir) -> None:
    with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["algorithm", "step", "mean", "sem"])
        for algo in sorted(summary.mean_best):
            for step in range(summary.budget):
                writer.writerow(
                    [algo, step + 1,
                     repr(float(summary.mean_best[algo][step])),
                     repr(float(summary.sem_best[algo][step]))]
                )
    with open(os.path.join(out_dir, "timing.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["algorithm", "seconds_per_step"])
        for algo in sorted(summary.seconds_per_step):
            writer.writerow([algo, f"{summary.seconds_per_step[algo]:.6f}"])


# -- config parsing ----------------------------------------------------------

_BOX_FIELDS = {"k": int, "n": int, "target": str, "command": str,
               "noise_sigma": float, "min_loop": int}
_RUN_FIELDS = {
    "afo": str, "budget": int, "max_order": int, "sparsity": float,
    "sa_decay": float, "sa_iterations": int, "mcts_exploration": float,
    "mcts_playouts": int, "tco_warmup_observations": int, "acq_lambda": float,
    "mcmc_warmup": int, "nu": float, "s2": float,
    "eco_replay_updates": int, "eco_replay_window": int,
    "eco_prediction_gain": float,
}


def _read_target(value: str) -> str:
    if os.path.exists(value):
        with open(value) as fh:
            return fh.read().strip()
    return value.strip()


def load_campaign_config(path, overrides=None):
    """Parse the INI campaign file into per-algorithm ExperimentConfigs."""
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ConfigError(f"cannot read config file {path}")
    if "campaign" not in parser:
        raise ConfigError("missing [campaign] section")
    camp = dict(parser["campaign"])
    camp.update(overrides or {})

    try:
        budget = int(camp.get("budget", 500))
        seeds = [int(s) for s in str(camp.get("seeds", "0")).replace(",", " ").split()]
        jobs = int(camp.get("jobs", 1))
    except ValueError as exc:
        raise ConfigError(f"invalid campaign field: {exc}") from exc
    out_dir = camp.get("out", "results")

    box_kwargs = {}
    for name, cast in _BOX_FIELDS.items():
        if name in camp:
            box_kwargs[name] = cast(camp[name])
    if "target" in box_kwargs:
        box_kwargs["target"] = _read_target(box_kwargs["target"])
    box_name = camp.get("box", "latin_square")
    try:
        box = BoxSpec(box_name, **box_kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid box config: {exc}") from exc

    algo_names = str(camp.get("algorithms", "")).replace(",", " ").split()
    if not algo_names:
        raise ConfigError("field 'algorithms' must list at least one algorithm")
    configs = {}
    for name in algo_names:
        if name not in ALGORITHMS:
            raise ConfigError(
                f"field 'algorithms': unknown algorithm {name!r} "
                f"(expected one of {', '.join(ALGORITHMS)})"
            )
        kwargs = {"budget": budget}
        section = parser[name] if name in parser else {}
        for key in section:
            if key not in _RUN_FIELDS:
                raise ConfigError(f"section [{name}]: unknown field {key!r}")
            kwargs[key] = _RUN_FIELDS[key](section[key])
        if box.is_design and "afo" not in kwargs and name not in ("rs", "plain_sa"):
            kwargs["afo"] = "mcts"
        configs[name] = ExperimentConfig(algorithm=name, box=box, **kwargs)
    return configs, seeds, jobs, out_dir


def cmd_campaign(args) -> int:
    overrides = {}
    if args.budget is not None:
        overrides["budget"] = str(args.budget)
    if args.out is not None:
        overrides["out"] = args.out
    if args.jobs is not None:
        overrides["jobs"] = str(args.jobs)
    try:
        configs, seeds, jobs, out_dir = load_campaign_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    os.makedirs(out_dir, exist_ok=True)
    results = run_cells(configs, seeds, jobs=jobs)
    budget = next(iter(configs.values())).budget
    for algo, seed, records, _ in results:
        write_trace(os.path.join(out_dir, f"{algo}_{seed}.csv"), records)
    summary = summarize(results, budget, seeds)
    write_summary(summary, out_dir)
    for algo in sorted(summary.final_best):
        print(f"{algo}: best@{budget} = {summary.final_best[algo]:.4f} "
              f"+/- {summary.sem_best[algo][-1]:.4f} "
              f"({summary.seconds_per_step[algo]:.3f} s/step)")
    return 0


def _box_from_args(args) -> BoxSpec:
    kwargs = {}
    if args.box == "latin_square":
        kwargs["k"] = args.k
    elif args.box == "rna_optimize":
        kwargs["n"] = args.n
    elif args.box == "rna_design":
        if not args.target:
            raise ConfigError("rna_design requires --target")
        kwargs["target"] = _read_target(args.target)
    elif args.box == "external":
        kwargs.update(command=args.command or "", n=args.n, k=args.k)
    command = os.environ.get(EXTERNAL_FOLDER_ENV)
    if command and args.box in ("rna_optimize", "rna_design"):
        kwargs["command"] = command
    return BoxSpec(args.box, **kwargs)


def cmd_optimize(args) -> int:
    try:
        box = _box_from_args(args)
        config = ExperimentConfig(
            algorithm=args.algorithm, box=box, budget=args.budget,
            afo="mcts" if box.is_design and args.algorithm not in ("rs", "plain_sa") else "sa",
        )
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    records = run_experiment(config, args.seed)
    best_point = argmin_trace(records)
    best_value = min(r.value for r in records)
    print(f"best value: {best_value}")
    print(f"best point: {format_point(best_point)}")
    return 0


def cmd_fold(args) -> int:
    sequence = args.sequence.strip().upper()
    command = args.external or os.environ.get(EXTERNAL_FOLDER_ENV)
    folder = (blackboxes.ExternalProcessFolder(command) if command
              else blackboxes.NussinovFolder(min_loop=args.min_loop))
    try:
        energy, structure = folder.fold(sequence)
    except (ValueError, blackboxes.FolderError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(structure)
    print(f"energy: {energy}")
    return 0


# -- verify oracles ----------------------------------------------------------


def _exhaustive_pair_count(seq: str, min_loop: int = 3) -> int:
    """Max non-crossing canonical pairs by interval recursion (oracle)."""
    codes = blackboxes.encode_sequence(seq)
    memo = {}

    def best(i, j):
        if j - i <= min_loop:
            return 0
        if (i, j) in memo:
            return memo[i, j]
        value = best(i + 1, j)
        for t in range(i + min_loop + 1, j + 1):
            if blackboxes._CAN_PAIR[codes[i], codes[t]]:
                value = max(value, 1 + best(i + 1, t - 1) + best(t + 1, j))
        memo[i, j] = value
        return value

    return best(0, len(seq) - 1)


def cmd_verify(args) -> int:
    rng = np.random.default_rng(0)
    checks = []

    def check(name, passed):
        checks.append(passed)
        print(f"{'PASS' if passed else 'FAIL'}  {name}")

    for n, k in itertools.product((1, 2, 3), (2, 3, 4)):
        spec = basis.enumerate_basis(CategoricalSpace(n, k), basis.ONE_HOT_FOURIER, n)
        A = basis.design_matrix(spec)
        sv = np.linalg.svd(A, compute_uv=False)
        check(f"one-hot design matrix full rank (n={n}, k={k})",
              A.shape == (k**n, k**n) and sv[-1] > 1e-8)

    for n, k in [(2, 3), (2, 5), (3, 4)]:
        space = CategoricalSpace(n, k)
        points = basis.full_domain(space)
        freqs = basis.full_domain(space)  # frequency vectors = [0,k)^n
        phases = points @ freqs.T
        chars = np.exp(2j * np.pi * phases / k)
        gram = chars.conj().T @ chars
        check(f"group character orthogonality (n={n}, k={k})",
              np.allclose(gram, k**n * np.eye(k**n), atol=1e-9))

    folder = blackboxes.NussinovFolder()
    ok = True
    for _ in range(50):
        length = int(rng.integers(1, 13))
        seq = "".join(rng.choice(list("ACGU"), size=length))
        energy, structure = folder.fold(seq)
        if -energy != _exhaustive_pair_count(seq):
            ok = False
            break
    check("nussinov DP equals exhaustive pair maximum (50 random seqs)", ok)

    return 0 if all(checks) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="catfour")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="single run of one algorithm on one box")
    p.add_argument("--algorithm", required=True, choices=ALGORITHMS)
    p.add_argument("--box", default="latin_square",
                   choices=["latin_square", "rna_optimize", "rna_design", "external"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=500)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--target", help="dot-bracket string or file path")
    p.add_argument("--command", help="external box command line")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("campaign", help="multi-seed comparison from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--budget", type=int)
    p.add_argument("--out")
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("fold", help="fold a sequence (debug utility)")
    p.add_argument("sequence")
    p.add_argument("--external", help="external folder command line")
    p.add_argument("--min-loop", type=int, default=3)
    p.set_defaults(func=cmd_fold)

    p = sub.add_parser("verify", help="run the property-test oracles")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
