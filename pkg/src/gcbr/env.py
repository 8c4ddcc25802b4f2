"""The active-learning episode: state features, step transition, metrics.

One step = label a node, train the node classifier for one full-batch epoch
on the labeled set, and pay out a reward mixing validation Macro-F1 gain with
a class-diversity score (minus a majority-class penalty for the "gcbr++"
variant). The per-node state matrix has five columns for "gcbr" and six for
"gcbr++", assembled in a fixed order and min-max normalized per column.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphs import DataSplit, Graph, imbalance_ratio
from .nn import (AdamState, GcnParams, adam_step, gcn_backward, gcn_forward,
                 init_gcn_params, row_softmax, softmax_cross_entropy)

GCBR = "gcbr"
GCBR_PLUS_PLUS = "gcbr++"
VARIANTS = (GCBR, GCBR_PLUS_PLUS)

FEATURE_NAMES = ("centrality", "uncertainty", "class_diversity",
                 "selectivity", "criteria_similarity", "majority_score")
CRITERIA_FEATURES = FEATURE_NAMES[:4]

TRACE_HEADER = ("step", "node_id", "true_class", "g", "h", "penalty",
                "reward", "valid_macro_f1", "imbalance_ratio_so_far")


@dataclass(frozen=True)
class RewardConfig:
    """Reward mixing weight, penalty size and method variant."""

    alpha: float = 0.5
    eta: float = 0.05
    variant: str = GCBR

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.eta < 0.0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, "
                             f"got {self.variant!r}")


def combine_reward(alpha: float, gain: float, diversity: float,
                   penalty: float) -> float:
    return alpha * gain + (1.0 - alpha) * diversity - penalty


@dataclass
class EnvState:
    """Mutable episode state; one instance per episode, single-threaded."""

    step_t: int
    labeled: list
    labeled_mask: np.ndarray
    train_mask: np.ndarray
    class_counts: np.ndarray
    clf: GcnParams
    clf_opt: AdamState
    clf_lr: float
    prev_predictions: np.ndarray
    prev_valid_macro_f1: float
    budget: int
    reward_cfg: RewardConfig
    # classifier forward cache (hidden, logits) kept in sync with clf
    fw_cache: tuple = field(default=None, repr=False)


@dataclass(frozen=True)
class StepResult:
    step: int
    node: int
    true_class: int
    gain: float
    diversity: float
    penalty: float
    reward: float
    valid_macro_f1: float
    imbalance_ratio: float

    def trace_row(self):
        return (self.step, self.node, self.true_class, self.gain,
                self.diversity, self.penalty, self.reward,
                self.valid_macro_f1, self.imbalance_ratio)


@dataclass(frozen=True)
class FinalizeResult:
    micro_f1: float
    macro_f1: float
    imbalance_ratio: float
    epochs_run: int
    best_valid_macro_f1: float


def reset(g: Graph, split: DataSplit, cfg: RewardConfig, budget: int,
          seed: int, clf_hidden: int = 64, clf_lr: float = 0.01) -> EnvState:
    """Fresh episode: empty labeled set, newly initialized classifier.

    The untrained classifier is evaluated once so the first step's
    performance gain has a baseline.
    """
    if g.num_classes < 2:
        raise ValueError("environments need at least 2 classes")
    if budget < 1 or budget > split.train_idx.size:
        raise ValueError(f"budget {budget} not in [1, {split.train_idx.size}] "
                         "(train pool size)")
    rng = np.random.default_rng(seed)
    clf = init_gcn_params(rng, g.feature_dim, clf_hidden, g.num_classes)
    train_mask = np.zeros(g.num_nodes, dtype=bool)
    train_mask[split.train_idx] = True
    env = EnvState(
        step_t=0,
        labeled=[],
        labeled_mask=np.zeros(g.num_nodes, dtype=bool),
        train_mask=train_mask,
        class_counts=np.zeros(g.num_classes, dtype=np.int64),
        clf=clf,
        clf_opt=AdamState.for_params(clf),
        clf_lr=clf_lr,
        prev_predictions=None,
        prev_valid_macro_f1=0.0,
        budget=int(budget),
        reward_cfg=cfg,
    )
    _refresh_classifier_outputs(env, g, split)
    return env


def _refresh_classifier_outputs(env: EnvState, g: Graph, split: DataSplit):
    hidden, logits = gcn_forward(g.norm_adj, g.features, env.clf)
    env.fw_cache = (hidden, logits)
    env.prev_predictions = row_softmax(logits)
    pred = env.prev_predictions.argmax(axis=1)
    env.prev_valid_macro_f1 = macro_f1(pred, g.labels, split.valid_idx,
                                       g.num_classes)


def _classifier_epoch(env: EnvState, g: Graph):
    """One full-batch gradient step on the labeled cross-entropy."""
    hidden, logits = env.fw_cache
    _, grad = softmax_cross_entropy(logits, g.labels, np.asarray(env.labeled))
    grads = gcn_backward(g.norm_adj, g.features, env.clf, hidden, grad)
    adam_step(env.clf, grads, env.clf_opt, env.clf_lr)
    env.fw_cache = None


def feature_uncertainty(predictions: np.ndarray, m: int) -> np.ndarray:
    """Prediction entropy per node, normalized by log(m); 0*log(0) = 0."""
    if m == 1:
        return np.zeros(predictions.shape[0])
    plogp = np.zeros_like(predictions)
    nz = predictions > 0.0
    plogp[nz] = predictions[nz] * np.log(predictions[nz])
    return -plogp.sum(axis=1) / np.log(m)


def feature_class_diversity(mixed_predictions: np.ndarray,
                            class_counts: np.ndarray) -> np.ndarray:
    """Inverse-selection-count weighted probability mass per node."""
    weights = 1.0 / np.maximum(1, np.asarray(class_counts))
    return (mixed_predictions * weights).sum(axis=1)


def feature_selectivity(labeled_set, num_nodes: int) -> np.ndarray:
    """1.0 for already-labeled nodes, else 0.0."""
    out = np.zeros(num_nodes)
    idx = np.asarray(list(labeled_set), dtype=np.int64)
    if idx.size:
        out[idx] = 1.0
    return out


def feature_criteria_similarity(criteria: np.ndarray, labeled_set) -> np.ndarray:
    """Min Euclidean distance from each node's criteria row to a labeled one.

    All zeros when the labeled set (or the criteria matrix) is empty; a
    labeled node's own value is 0 by self-distance.
    """
    idx = np.asarray(list(labeled_set), dtype=np.int64)
    if idx.size == 0 or criteria.shape[1] == 0:
        return np.zeros(criteria.shape[0])
    diffs = criteria[:, None, :] - criteria[None, idx, :]
    dists = np.sqrt((diffs * diffs).sum(axis=2))
    return dists.min(axis=1)


def majority_class_set(class_counts, budget: int, m: int) -> np.ndarray:
    """Classes whose selection count has reached budget/m, ascending."""
    counts = np.asarray(class_counts)[:m]
    return np.flatnonzero(counts >= budget / m)


def feature_majority_score(mixed_predictions: np.ndarray,
                           major_set) -> np.ndarray:
    """Probability mass each node places on the majority classes."""
    major = np.asarray(major_set, dtype=np.int64)
    if major.size == 0:
        return np.zeros(mixed_predictions.shape[0])
    return mixed_predictions[:, np.sort(major)].sum(axis=1)


def mixed_predictions(env: EnvState, g: Graph) -> np.ndarray:
    """Previous-step predictions with labeled rows replaced by one-hot truth."""
    mixed = env.prev_predictions.copy()
    if env.labeled:
        idx = np.asarray(env.labeled, dtype=np.int64)
        mixed[idx] = 0.0
        mixed[idx, g.labels[idx]] = 1.0
    return mixed


def minmax_normalize(column: np.ndarray) -> np.ndarray:
    """Map to [0, 1]; constant columns map to all zeros."""
    lo, hi = column.min(), column.max()
    if hi == lo:
        return np.zeros_like(column)
    return (column - lo) / (hi - lo)


def active_features(variant: str, ablation=frozenset()) -> tuple:
    """Feature names present in the state matrix, in column order."""
    unknown = set(ablation) - set(FEATURE_NAMES)
    if unknown:
        raise ValueError(f"unknown feature name(s) in ablation: {sorted(unknown)}")
    names = FEATURE_NAMES if variant == GCBR_PLUS_PLUS else FEATURE_NAMES[:5]
    return tuple(n for n in names if n not in ablation)


def state_width(variant: str, ablation=frozenset()) -> int:
    return len(active_features(variant, ablation))


def build_state(env: EnvState, g: Graph, ablation=frozenset()) -> np.ndarray:
    """Assemble the per-node state matrix.

    Columns (minus ablated ones) in order: centrality, uncertainty,
    class diversity, selectivity, criteria similarity, and for "gcbr++"
    the majority score. Every column is min-max normalized; the criteria
    similarity is computed from the normalized first-four columns.
    """
    active = active_features(env.reward_cfg.variant, ablation)
    m = g.num_classes
    mixed = mixed_predictions(env, g)

    raw = {}
    if "centrality" in active:
        raw["centrality"] = g.centrality
    if "uncertainty" in active:
        raw["uncertainty"] = feature_uncertainty(env.prev_predictions, m)
    if "class_diversity" in active:
        raw["class_diversity"] = feature_class_diversity(mixed, env.class_counts)
    if "selectivity" in active:
        raw["selectivity"] = feature_selectivity(env.labeled, g.num_nodes)
    columns = {name: minmax_normalize(col) for name, col in raw.items()}

    if "criteria_similarity" in active:
        crit_names = [n for n in CRITERIA_FEATURES if n in columns]
        criteria = (np.column_stack([columns[n] for n in crit_names])
                    if crit_names else np.zeros((g.num_nodes, 0)))
        csim = feature_criteria_similarity(criteria, env.labeled)
        columns["criteria_similarity"] = minmax_normalize(csim)

    if "majority_score" in active:
        major = majority_class_set(env.class_counts, env.budget, m)
        score = feature_majority_score(mixed, major)
        columns["majority_score"] = minmax_normalize(score)

    return np.column_stack([columns[name] for name in active])


def step(env: EnvState, g: Graph, split: DataSplit, node: int) -> StepResult:
    """Label one node, train one epoch, compute the reward.

    The diversity score and the majority-class penalty both use the
    pre-update class counts; the performance gain compares validation
    Macro-F1 after this epoch against the previous step's value.
    """
    node = int(node)
    if env.step_t >= env.budget:
        raise ValueError(f"budget of {env.budget} exhausted")
    if not env.train_mask[node]:
        raise ValueError(f"node {node} is not in the train pool")
    if env.labeled_mask[node]:
        raise ValueError(f"node {node} is already labeled")

    cfg = env.reward_cfg
    true_class = int(g.labels[node])
    diversity = 1.0 / max(1, int(env.class_counts[true_class]))
    penalty = 0.0
    if cfg.variant == GCBR_PLUS_PLUS:
        major = majority_class_set(env.class_counts, env.budget, g.num_classes)
        if true_class in major:
            penalty = cfg.eta

    env.labeled.append(node)
    env.labeled_mask[node] = True
    env.class_counts[true_class] += 1
    env.step_t += 1

    baseline_f1 = env.prev_valid_macro_f1
    _classifier_epoch(env, g)
    _refresh_classifier_outputs(env, g, split)

    gain = env.prev_valid_macro_f1 - baseline_f1
    reward = combine_reward(cfg.alpha, gain, diversity, penalty)
    return StepResult(
        step=env.step_t, node=node, true_class=true_class, gain=gain,
        diversity=diversity, penalty=penalty, reward=reward,
        valid_macro_f1=env.prev_valid_macro_f1,
        imbalance_ratio=imbalance_ratio(env.class_counts))


def finalize(env: EnvState, g: Graph, split: DataSplit, max_epochs: int = 200,
             patience: int = 20) -> FinalizeResult:
    """Train to convergence with early stopping on validation Macro-F1.

    Restores the best-validation checkpoint before computing test metrics.
    """
    if env.step_t != env.budget:
        raise ValueError(f"budget not exhausted: {env.step_t}/{env.budget}")
    best_valid = env.prev_valid_macro_f1
    best_params = env.clf.copy()
    epochs = 0
    stale = 0
    while epochs < max_epochs:
        _classifier_epoch(env, g)
        _refresh_classifier_outputs(env, g, split)
        epochs += 1
        if env.prev_valid_macro_f1 > best_valid:
            best_valid = env.prev_valid_macro_f1
            best_params = env.clf.copy()
            stale = 0
        else:
            stale += 1
            if stale > patience:
                break
    env.clf = best_params
    env.clf_opt = AdamState.for_params(best_params)
    _refresh_classifier_outputs(env, g, split)
    pred = env.prev_predictions.argmax(axis=1)
    return FinalizeResult(
        micro_f1=micro_f1(pred, g.labels, split.test_idx),
        macro_f1=macro_f1(pred, g.labels, split.test_idx, g.num_classes),
        imbalance_ratio=imbalance_ratio(env.class_counts),
        epochs_run=epochs,
        best_valid_macro_f1=best_valid)


def micro_f1(pred, truth, index_set) -> float:
    """Globally pooled F1; equals accuracy for single-label multiclass."""
    idx = np.asarray(index_set, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("empty index set")
    return float(np.mean(np.asarray(pred)[idx] == np.asarray(truth)[idx]))


def macro_f1(pred, truth, index_set, m: int) -> float:
    """Unweighted mean of per-class F1 over all m classes; 0/0 counts as 0."""
    idx = np.asarray(index_set, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("empty index set")
    p = np.asarray(pred)[idx]
    t = np.asarray(truth)[idx]
    total = 0.0
    for c in range(m):
        tp = int(np.sum((p == c) & (t == c)))
        fp = int(np.sum((p == c) & (t != c)))
        fn = int(np.sum((t == c) & (p != c)))
        prec = tp / (tp + fp) if tp + fp > 0 else 0.0
        rec = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = 2.0 * prec * rec / (prec + rec) if prec + rec > 0 else 0.0
        total += f1
    return total / m
