"""Reference selection strategies run under the identical episode protocol."""

from __future__ import annotations

import numpy as np

from .env import feature_uncertainty, finalize, reset, step
from .graphs import DataSplit, Graph
from .policy import EvalRecord, summarize, valid_action_mask

RANDOM = "random"
MAX_ENTROPY = "max-entropy"
STRATEGIES = (RANDOM, MAX_ENTROPY)


def baseline_select(kind: str, env, g: Graph,
                    rng: np.random.Generator | None = None) -> int:
    """Pick the next node to label from the unlabeled train pool.

    random: uniform draw. max-entropy: highest prediction entropy under the
    current classifier, ties broken by lowest node id.
    """
    pool = np.flatnonzero(valid_action_mask(env))
    if pool.size == 0:
        raise ValueError("no unlabeled train nodes left")
    if kind == RANDOM:
        return int(pool[rng.integers(pool.size)])
    if kind == MAX_ENTROPY:
        ent = feature_uncertainty(env.prev_predictions[pool], g.num_classes)
        return int(pool[np.argmax(ent)])
    raise ValueError(f"unknown baseline strategy {kind!r}")


def baseline_seeds(seed: int, n: int):
    """Canonical (classifier, selection) seed pairs for n runs."""
    root = np.random.default_rng(np.random.SeedSequence(seed))
    clf_seeds = root.integers(0, 2 ** 62, size=n)
    pick_seeds = root.integers(0, 2 ** 62, size=n)
    return clf_seeds, pick_seeds


def run_baseline_one(kind: str, g: Graph, split: DataSplit, reward_cfg,
                     budget: int, seed_index: int, clf_seed: int,
                     pick_seed: int, clf_hidden: int = 64,
                     clf_lr: float = 0.01, max_epochs: int = 200,
                     patience: int = 20) -> EvalRecord:
    """One baseline episode plus finalize under one seed pair."""
    if kind not in STRATEGIES:
        raise ValueError(f"unknown baseline strategy {kind!r}")
    if budget > split.train_idx.size:
        raise ValueError(f"budget {budget} exceeds train pool "
                         f"{split.train_idx.size}")
    env = reset(g, split, reward_cfg, budget, clf_seed, clf_hidden, clf_lr)
    rng = np.random.default_rng(pick_seed)
    trace = []
    for _ in range(budget):
        node = baseline_select(kind, env, g, rng)
        trace.append(step(env, g, split, node))
    fin = finalize(env, g, split, max_epochs, patience)
    return EvalRecord(
        seed=seed_index, micro_f1=fin.micro_f1, macro_f1=fin.macro_f1,
        imbalance_ratio=fin.imbalance_ratio,
        class_histogram=tuple(int(c) for c in env.class_counts),
        selected=tuple(env.labeled),
        trace=tuple(res.trace_row() for res in trace))


def run_baseline(kind: str, g: Graph, split: DataSplit, reward_cfg,
                 budget: int, n_seeds: int, seed: int,
                 clf_hidden: int = 64, clf_lr: float = 0.01,
                 max_epochs: int = 200, patience: int = 20):
    """Episode + finalize protocol identical to policy evaluation.

    Returns (records, summary) with the same record schema.
    """
    clf_seeds, pick_seeds = baseline_seeds(seed, n_seeds)
    records = [
        run_baseline_one(kind, g, split, reward_cfg, budget, r,
                         int(clf_seeds[r]), int(pick_seeds[r]),
                         clf_hidden, clf_lr, max_epochs, patience)
        for r in range(n_seeds)
    ]
    return records, summarize(records)
