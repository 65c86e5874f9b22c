"""Combinatorial black-box optimization over categorical variables with
Fourier-basis surrogate models (exponential-weights or sparse Bayesian)
and simulated-annealing / MCTS acquisition optimizers."""

from .basis import BasisSpec, enumerate_basis
from .domain import BlackBox, CategoricalSpace, EvaluationRecord
from .eco import EcoModel
from .loop import BoxSpec, ExperimentConfig, run_experiment
from .tco import TcoModel

__all__ = [
    "BasisSpec",
    "BlackBox",
    "BoxSpec",
    "CategoricalSpace",
    "EcoModel",
    "EvaluationRecord",
    "ExperimentConfig",
    "TcoModel",
    "enumerate_basis",
    "run_experiment",
]
