"""Cold-user recommendation testbed.

Trains a latent-factor model on warm users, runs Q-learning agents and
non-personalized ranking baselines through a simulated cold-user interview,
and reports per-strategy RMSE with pairwise significance tests.
"""

from ._kernels import BACKEND as SGD_BACKEND
from .agent import AgentConfig, QAgent, ReplayBuffer, Transition, Variant
from .dataset import (
    Dataset,
    Interaction,
    SplitResult,
    SyntheticConfig,
    generate_synthetic,
    load_interactions,
    split_cold_warm,
)
from .environment import EnvState, InterviewEnv, build_pool, evaluate_strategy
from .harness import ExperimentConfig, ResultsTable, run_evaluation, run_sweep, run_training
from .mf import FactorModel, MFHyper, fold_in_user, mf_rmse, predict, train_mf
from .neural import HeadKind, MLPParams, OptimizerState
from .strategies import StrategyKind, random_strategy, rank_items, score_item

__version__ = "0.1.0"

__all__ = [
    "AgentConfig",
    "Dataset",
    "EnvState",
    "ExperimentConfig",
    "FactorModel",
    "HeadKind",
    "Interaction",
    "InterviewEnv",
    "MFHyper",
    "MLPParams",
    "OptimizerState",
    "QAgent",
    "ReplayBuffer",
    "ResultsTable",
    "SGD_BACKEND",
    "SplitResult",
    "StrategyKind",
    "SyntheticConfig",
    "Transition",
    "Variant",
    "build_pool",
    "evaluate_strategy",
    "fold_in_user",
    "generate_synthetic",
    "load_interactions",
    "mf_rmse",
    "predict",
    "random_strategy",
    "rank_items",
    "run_evaluation",
    "run_sweep",
    "run_training",
    "score_item",
    "split_cold_warm",
    "train_mf",
]
