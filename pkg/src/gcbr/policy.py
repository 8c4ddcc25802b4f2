"""Actor-critic query policy: masked node selection and A2C training.

The actor is a two-layer GCN over the state matrix with a linear scoring
head; action probabilities come from a masked softmax over unlabeled train
nodes (invalid actions get probability exactly 0, implemented as score
exclusion, never post-hoc renormalization). The critic is a second GCN whose
node outputs are mean-pooled into a state value. Updates are batched every F
actions; advantages are treated as constants in the actor loss.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import env as envmod
from .env import (EnvState, RewardConfig, build_state, finalize, reset,
                  state_width, step)
from .graphs import DataSplit, Graph, imbalance_ratio
from .nn import (AdamState, GcnParams, adam_step, gcn_backward, gcn_forward,
                 init_gcn_params, params_from_json, params_to_json)

CHECKPOINT_FORMAT = "gcbr-policy-v1"


@dataclass
class Policy:
    """Actor and critic networks plus their optimizer states."""

    actor: GcnParams
    critic: GcnParams
    actor_opt: AdamState
    critic_opt: AdamState
    state_dim: int
    hidden: int
    variant: str
    ablation: tuple = ()


@dataclass(frozen=True)
class Transition:
    """One environment step as seen by the A2C update."""

    state: np.ndarray
    valid_mask: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    terminal: bool


@dataclass(frozen=True)
class TrainConfig:
    """A2C training hyperparameters."""

    budget: int = 35
    update_freq: int = 7
    episodes: int = 4000
    gamma: float = 0.99
    actor_lr: float = 0.001
    critic_lr: float = 0.001
    parallel: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.update_freq < 1:
            raise ValueError("update_freq (F) must be >= 1")
        if self.budget < 1 or self.budget % self.update_freq != 0:
            raise ValueError(
                f"B must be a multiple of F (budget={self.budget}, "
                f"update_freq={self.update_freq})")
        if not (0.0 <= self.gamma <= 1.0):
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.episodes < 1 or self.parallel < 1:
            raise ValueError("episodes and parallel must be >= 1")


@dataclass(frozen=True)
class EpisodeRecord:
    episode: int
    instance: int
    cumulative_reward: float
    final_valid_macro_f1: float


@dataclass
class TrainingLog:
    episodes: list = field(default_factory=list)
    selected: list = field(default_factory=list)  # node sequence per (ep, inst)
    updates: int = 0
    updates_per_episode: list = field(default_factory=list)


def make_policy(state_dim: int, seed: int, hidden: int = 8,
                variant: str = envmod.GCBR, ablation=()) -> Policy:
    """Initialize actor (state_dim -> hidden -> hidden -> score) and critic
    (state_dim -> hidden -> 1)."""
    rng = np.random.default_rng(seed)
    actor = init_gcn_params(rng, state_dim, hidden, hidden, with_head=True)
    critic = init_gcn_params(rng, state_dim, hidden, 1)
    return Policy(actor=actor, critic=critic,
                  actor_opt=AdamState.for_params(actor),
                  critic_opt=AdamState.for_params(critic),
                  state_dim=state_dim, hidden=hidden, variant=variant,
                  ablation=tuple(sorted(ablation)))


def _actor_forward(policy: Policy, norm_adj, state):
    hidden, gcn_out = gcn_forward(norm_adj, state, policy.actor)
    scores = (gcn_out @ policy.actor.head_w)[:, 0] + policy.actor.head_b[0]
    return scores, hidden, gcn_out


def actor_distribution(policy: Policy, norm_adj, state: np.ndarray,
                       valid_mask: np.ndarray) -> np.ndarray:
    """Masked softmax over node scores; invalid nodes get exactly 0."""
    valid = np.flatnonzero(valid_mask)
    if valid.size == 0:
        raise ValueError("no valid actions left")
    scores, _, _ = _actor_forward(policy, norm_adj, state)
    shifted = scores[valid] - scores[valid].max()
    e = np.exp(shifted)
    probs = np.zeros(state.shape[0])
    probs[valid] = e / e.sum()
    return probs


def select_action(dist: np.ndarray, mode: str,
                  rng: np.random.Generator | None = None) -> int:
    """Draw from the distribution ("sample") or argmax it ("greedy").

    Greedy ties break toward the lowest node id.
    """
    if mode == "greedy":
        return int(np.argmax(dist))
    if mode == "sample":
        cum = np.cumsum(dist)
        u = rng.random() * cum[-1]
        return int(np.searchsorted(cum, u, side="right").clip(0, len(dist) - 1))
    raise ValueError(f"unknown selection mode {mode!r}")


def critic_value(policy: Policy, norm_adj, state: np.ndarray) -> float:
    """Mean-pooled scalar output of the critic GCN."""
    _, out = gcn_forward(norm_adj, state, policy.critic)
    return float(out.mean())


def td_target(reward: float, gamma: float, next_value: float,
              terminal: bool) -> float:
    """Bootstrapped one-step target; terminal states bootstrap 0."""
    return reward + (0.0 if terminal else gamma * next_value)


def _zero_grads(params: GcnParams):
    return {k: np.zeros_like(v) for k, v in params.arrays().items()}


def a2c_gradients(policy: Policy, norm_adj, batch, gamma: float):
    """Losses and parameter gradients for one batched A2C update.

    Targets use the current critic on each next state and are treated as
    constants (semi-gradient); advantages are constants in the actor loss,
    so no gradient flows from the actor loss into the critic.
    """
    n_tr = len(batch)
    if n_tr == 0:
        raise ValueError("empty transition batch")
    critic_grads = _zero_grads(policy.critic)
    actor_grads = _zero_grads(policy.actor)

    targets = np.empty(n_tr)
    values = np.empty(n_tr)
    critic_caches = []
    for j, tr in enumerate(batch):
        next_value = 0.0 if tr.terminal else critic_value(policy, norm_adj,
                                                          tr.next_state)
        targets[j] = td_target(tr.reward, gamma, next_value, tr.terminal)
        hidden, out = gcn_forward(norm_adj, tr.state, policy.critic)
        values[j] = out.mean()
        critic_caches.append((hidden, out))
    advantages = targets - values
    critic_loss = float(np.mean((targets - values) ** 2))

    actor_loss = 0.0
    for j, tr in enumerate(batch):
        hidden_c, out_c = critic_caches[j]
        n = tr.state.shape[0]
        d_out = np.full((n, 1), -2.0 * (targets[j] - values[j]) / (n_tr * n))
        for k, v in gcn_backward(norm_adj, tr.state, policy.critic,
                                 hidden_c, d_out).items():
            critic_grads[k] += v

        scores, hidden_a, gcn_out = _actor_forward(policy, norm_adj, tr.state)
        valid = np.flatnonzero(tr.valid_mask)
        shifted = scores[valid] - scores[valid].max()
        e = np.exp(shifted)
        probs_valid = e / e.sum()
        pos = int(np.flatnonzero(valid == tr.action)[0])
        log_prob = float(shifted[pos] - np.log(e.sum()))
        actor_loss -= log_prob * advantages[j] / n_tr

        d_scores = np.zeros(n)
        d_scores[valid] = advantages[j] / n_tr * probs_valid
        d_scores[tr.action] -= advantages[j] / n_tr
        actor_grads["head_w"] += gcn_out.T @ d_scores[:, None]
        actor_grads["head_b"] += np.array([d_scores.sum()])
        d_gcn_out = d_scores[:, None] @ policy.actor.head_w.T
        for k, v in gcn_backward(norm_adj, tr.state, policy.actor,
                                 hidden_a, d_gcn_out).items():
            actor_grads[k] += v

    return critic_loss, float(actor_loss), actor_grads, critic_grads


def a2c_update(policy: Policy, norm_adj, batch, gamma: float,
               actor_lr: float, critic_lr: float):
    """Compute batched gradients and apply one Adam step to each network."""
    critic_loss, actor_loss, actor_grads, critic_grads = a2c_gradients(
        policy, norm_adj, batch, gamma)
    adam_step(policy.critic, critic_grads, policy.critic_opt, critic_lr)
    adam_step(policy.actor, actor_grads, policy.actor_opt, actor_lr)
    return critic_loss, actor_loss


def valid_action_mask(env: EnvState) -> np.ndarray:
    """Unlabeled train-pool indicator."""
    return env.train_mask & ~env.labeled_mask


def train_policy(g: Graph, split: DataSplit, reward_cfg: RewardConfig,
                 cfg: TrainConfig, ablation=frozenset(),
                 clf_hidden: int = 64, clf_lr: float = 0.01,
                 policy_hidden: int = 8):
    """A2C training over episodes on a fully labeled source graph.

    Runs `parallel` environment instances per episode round-robin with a
    shared policy; every update_freq steps their transition batches are
    concatenated into one update (equivalent to averaging per-instance
    gradients). Deterministic for a fixed config and seed.

    Returns (policy, TrainingLog).
    """
    if cfg.budget > split.train_idx.size:
        raise ValueError(f"budget {cfg.budget} exceeds train pool "
                         f"{split.train_idx.size}")
    width = state_width(reward_cfg.variant, ablation)
    root = np.random.SeedSequence(cfg.seed)
    pol_ss, act_ss, clf_ss = root.spawn(3)
    policy = make_policy(width, seed=pol_ss, hidden=policy_hidden,
                         variant=reward_cfg.variant, ablation=ablation)
    action_rng = np.random.default_rng(act_ss)
    clf_seeds = np.random.default_rng(clf_ss).integers(
        0, 2 ** 62, size=(cfg.episodes, cfg.parallel))

    norm_adj = g.norm_adj
    log = TrainingLog()
    for ep in range(cfg.episodes):
        instances = [reset(g, split, reward_cfg, cfg.budget,
                           int(clf_seeds[ep, i]), clf_hidden, clf_lr)
                     for i in range(cfg.parallel)]
        states = [build_state(e, g, ablation) for e in instances]
        pending = [[] for _ in instances]
        chosen = [[] for _ in instances]
        cumulative = np.zeros(cfg.parallel)
        ep_updates = 0
        for t in range(1, cfg.budget + 1):
            for i, inst in enumerate(instances):
                mask = valid_action_mask(inst)
                dist = actor_distribution(policy, norm_adj, states[i], mask)
                action = select_action(dist, "sample", action_rng)
                result = step(inst, g, split, action)
                next_state = build_state(inst, g, ablation)
                pending[i].append(Transition(
                    state=states[i], valid_mask=mask, action=action,
                    reward=result.reward, next_state=next_state,
                    terminal=t == cfg.budget))
                states[i] = next_state
                chosen[i].append(action)
                cumulative[i] += result.reward
            if t % cfg.update_freq == 0:
                batch = [tr for trs in pending for tr in trs]
                a2c_update(policy, norm_adj, batch, cfg.gamma,
                           cfg.actor_lr, cfg.critic_lr)
                pending = [[] for _ in instances]
                ep_updates += 1
        for i, inst in enumerate(instances):
            log.episodes.append(EpisodeRecord(
                episode=ep, instance=i,
                cumulative_reward=float(cumulative[i]),
                final_valid_macro_f1=inst.prev_valid_macro_f1))
            log.selected.append(((ep, i), chosen[i]))
        log.updates += ep_updates
        log.updates_per_episode.append(ep_updates)
    return policy, log


@dataclass(frozen=True)
class EvalRecord:
    seed: int
    micro_f1: float
    macro_f1: float
    imbalance_ratio: float
    class_histogram: tuple
    selected: tuple
    trace: tuple


@dataclass(frozen=True)
class EvalSummary:
    n_seeds: int
    micro_f1_mean: float
    micro_f1_std: float
    macro_f1_mean: float
    macro_f1_std: float
    imbalance_ratio_mean: float
    imbalance_ratio_std: float


def summarize(records) -> EvalSummary:
    micro = np.array([r.micro_f1 for r in records])
    macro = np.array([r.macro_f1 for r in records])
    imb = np.array([r.imbalance_ratio for r in records])
    std = (lambda a: float(np.std(a, ddof=1)) if len(a) > 1 else 0.0)
    return EvalSummary(
        n_seeds=len(records),
        micro_f1_mean=float(micro.mean()), micro_f1_std=std(micro),
        macro_f1_mean=float(macro.mean()), macro_f1_std=std(macro),
        imbalance_ratio_mean=float(imb.mean()), imbalance_ratio_std=std(imb))


def _greedy_episode(policy, g, split, reward_cfg, ablation, budget, clf_seed,
                    clf_hidden, clf_lr, max_epochs, patience):
    e = reset(g, split, reward_cfg, budget, clf_seed, clf_hidden, clf_lr)
    norm_adj = g.norm_adj
    trace = []
    for _ in range(budget):
        state = build_state(e, g, ablation)
        mask = valid_action_mask(e)
        dist = actor_distribution(policy, norm_adj, state, mask)
        action = select_action(dist, "greedy")
        trace.append(step(e, g, split, action))
    fin = finalize(e, g, split, max_epochs, patience)
    return e, fin, trace


def eval_seeds(seed: int, n: int) -> np.ndarray:
    """Canonical per-evaluation classifier seed derivation."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return rng.integers(0, 2 ** 62, size=n)


def evaluate_one(policy: Policy, g: Graph, split: DataSplit,
                 reward_cfg: RewardConfig, test_budget: int,
                 seed_index: int, clf_seed: int, ablation=frozenset(),
                 clf_hidden: int = 64, clf_lr: float = 0.01,
                 max_epochs: int = 200, patience: int = 20) -> EvalRecord:
    """One greedy episode plus finalize under one classifier seed."""
    check_compatible(policy, reward_cfg.variant, ablation)
    if test_budget > split.train_idx.size:
        raise ValueError(f"test budget {test_budget} exceeds train pool "
                         f"{split.train_idx.size}")
    e, fin, trace = _greedy_episode(
        policy, g, split, reward_cfg, ablation, test_budget,
        clf_seed, clf_hidden, clf_lr, max_epochs, patience)
    return EvalRecord(
        seed=seed_index, micro_f1=fin.micro_f1, macro_f1=fin.macro_f1,
        imbalance_ratio=fin.imbalance_ratio,
        class_histogram=tuple(int(c) for c in e.class_counts),
        selected=tuple(e.labeled),
        trace=tuple(res.trace_row() for res in trace))


def evaluate_policy(policy: Policy, g: Graph, split: DataSplit,
                    reward_cfg: RewardConfig, test_budget: int,
                    n_seeds: int, seed: int, ablation=frozenset(),
                    clf_hidden: int = 64, clf_lr: float = 0.01,
                    max_epochs: int = 200, patience: int = 20):
    """Greedy frozen-policy evaluation over independent classifier seeds.

    Returns (records, summary); each record carries test Micro/Macro-F1, the
    selected-set imbalance ratio, the per-class selection histogram and the
    per-step trace.
    """
    seeds = eval_seeds(seed, n_seeds)
    records = [
        evaluate_one(policy, g, split, reward_cfg, test_budget, r,
                     int(seeds[r]), ablation, clf_hidden, clf_lr,
                     max_epochs, patience)
        for r in range(n_seeds)
    ]
    return records, summarize(records)


def check_compatible(policy: Policy, variant: str, ablation) -> None:
    """Refuse evaluation when the checkpoint and environment disagree."""
    width = state_width(variant, ablation)
    if policy.state_dim != width or policy.variant != variant \
            or tuple(sorted(ablation)) != policy.ablation:
        raise ValueError(
            f"incompatible checkpoint: trained for variant={policy.variant!r} "
            f"state_dim={policy.state_dim} ablation={list(policy.ablation)}, "
            f"environment wants variant={variant!r} state_dim={width} "
            f"ablation={sorted(ablation)}")


def save_policy(policy: Policy, path) -> None:
    blob = {
        "format": CHECKPOINT_FORMAT,
        "state_dim": policy.state_dim,
        "hidden": policy.hidden,
        "variant": policy.variant,
        "ablation": list(policy.ablation),
        "actor": params_to_json(policy.actor),
        "critic": params_to_json(policy.critic),
    }
    Path(path).write_text(json.dumps(blob))


def load_policy(path) -> Policy:
    blob = json.loads(Path(path).read_text())
    if blob.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a policy checkpoint")
    actor = params_from_json(blob["actor"])
    critic = params_from_json(blob["critic"])
    return Policy(actor=actor, critic=critic,
                  actor_opt=AdamState.for_params(actor),
                  critic_opt=AdamState.for_params(critic),
                  state_dim=int(blob["state_dim"]), hidden=int(blob["hidden"]),
                  variant=blob["variant"], ablation=tuple(blob["ablation"]))
