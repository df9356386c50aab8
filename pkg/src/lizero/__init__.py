"""Lifelong Monte Carlo tree search with transferred upper confidence bounds."""
from .baselines import LRMaxBounds, RMaxState, lrmax_agent, lrmax_combined_bound, rmax_act, rmax_observe
from .distance import (
    DistanceEstimate,
    WeightedSample,
    certified_epsilon,
    draw_weighted_samples,
    estimate_adaptive,
    estimate_stationary,
    exact_distance,
    kappa,
    pair_delta,
    required_samples,
)
from .dynamics import DynModelParams, FitSpec, LipschitzEstimate, estimate_lipschitz, fit_model, param_distance, parametric_bound
from .envs import TaskSequence, TightTaskConfig, generate_sequence, generate_task
from .harness import EpochRecord, ExperimentConfig, MetricsSummary, emit, run_experiment, summarize
from .knowledge import (
    AccelerationReport,
    KnowledgeBase,
    TaskKnowledge,
    acceleration_factor,
    auct_bound,
    confidence_term,
)
from .mcts import MctsConfig, SearchNode, SearchTree, backpropagate, run_search, run_simulation, select_action
from .mdp import QTable, TabularMdp, Transition, Violation, load_mdp, sample_step, save_mdp, validate_mdp, value_iteration

__all__ = [
    "acceleration_factor",
    "AccelerationReport",
    "auct_bound",
    "backpropagate",
    "certified_epsilon",
    "confidence_term",
    "DistanceEstimate",
    "draw_weighted_samples",
    "DynModelParams",
    "emit",
    "EpochRecord",
    "estimate_adaptive",
    "estimate_lipschitz",
    "estimate_stationary",
    "exact_distance",
    "ExperimentConfig",
    "fit_model",
    "FitSpec",
    "generate_sequence",
    "generate_task",
    "kappa",
    "KnowledgeBase",
    "LipschitzEstimate",
    "load_mdp",
    "lrmax_agent",
    "lrmax_combined_bound",
    "LRMaxBounds",
    "MctsConfig",
    "MetricsSummary",
    "pair_delta",
    "param_distance",
    "parametric_bound",
    "QTable",
    "required_samples",
    "rmax_act",
    "rmax_observe",
    "RMaxState",
    "run_experiment",
    "run_search",
    "run_simulation",
    "sample_step",
    "save_mdp",
    "SearchNode",
    "SearchTree",
    "select_action",
    "summarize",
    "TabularMdp",
    "TaskKnowledge",
    "TaskSequence",
    "TightTaskConfig",
    "Transition",
    "validate_mdp",
    "value_iteration",
    "Violation",
    "WeightedSample",
]

__version__ = "0.1.0"
