"""Class-balanced reinforced active learning on graphs.

A GCN node classifier is trained incrementally while an A2C-trained policy
(or a reference baseline) picks which node to label next, trading off
classifier improvement against class balance of the labeled set.
"""

from .baselines import run_baseline
from .config import ExperimentConfig
from .env import RewardConfig, build_state, finalize, reset, step
from .graphs import (DataSplit, Graph, SbmConfig, generate_sbm,
                     imbalance_ratio, load_graph, make_split,
                     normalized_adjacency, pagerank)
from .policy import (Policy, TrainConfig, evaluate_policy, load_policy,
                     save_policy, train_policy)

__version__ = "0.1.0"

__all__ = [
    "DataSplit", "ExperimentConfig", "Graph", "Policy", "RewardConfig",
    "SbmConfig", "TrainConfig", "build_state", "evaluate_policy", "finalize",
    "generate_sbm", "imbalance_ratio", "load_graph", "load_policy",
    "make_split", "normalized_adjacency", "pagerank", "reset", "run_baseline",
    "save_policy", "step", "train_policy",
]
