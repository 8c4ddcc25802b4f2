"""Experiment configuration: a sectioned key = value file.

Every experiment directory gets a resolved copy of its config written next
to the outputs, so any artifact can be reproduced from its own directory.
Defaults follow the published hyperparameters where they exist (budget 35,
update frequency 7, 5 parallel instances, alpha 0.5, eta 0.05, learning
rates, hidden sizes, 20-per-class test budgets, 50 evaluation seeds).
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass
from pathlib import Path

from .env import GCBR, VARIANTS, FEATURE_NAMES, RewardConfig
from .graphs import Graph, SbmConfig, generate_sbm, load_graph
from .policy import TrainConfig


class ConfigError(ValueError):
    """A config value is missing, malformed or inconsistent."""


DEFAULTS = {
    "graph": {
        "source": "sbm",
        "path": "",
        "format": "auto",
        "features_path": "",
        "nodes": "1000",
        "proportions": "0.6, 0.2, 0.1, 0.06, 0.04",
        "intra_prob": "0.05",
        "inter_prob": "0.005",
        "feature_dim": "16",
        "feature_signal": "1.5",
        "sbm_seed": "7",
    },
    "split": {"seed": "1", "valid_size": "200", "test_size": "300"},
    "reward": {"variant": GCBR, "alpha": "0.5", "eta": "0.05"},
    "policy": {"hidden": "8", "actor_lr": "0.001", "critic_lr": "0.001"},
    "classifier": {"hidden": "64", "lr": "0.01"},
    "train": {
        "budget": "35",
        "update_freq": "7",
        "episodes": "4000",
        "gamma": "0.99",
        "parallel": "5",
        "seed": "0",
    },
    "eval": {
        "test_budget": "20x",
        "seeds": "50",
        "seed": "100",
        "max_epochs": "200",
        "patience": "20",
    },
    "ablation": {"drop": ""},
    "output": {"dir": ""},
}


def _parse(parser, section, key, conv, what):
    raw = parser.get(section, key)
    try:
        return conv(raw)
    except ValueError:
        raise ConfigError(
            f"[{section}] {key}: expected {what}, got {raw!r}") from None


@dataclass
class ExperimentConfig:
    graph_source: str
    graph_path: str
    graph_format: str
    features_path: str
    sbm: SbmConfig
    sbm_seed: int
    split_seed: int
    valid_size: int
    test_size: int
    reward: RewardConfig
    policy_hidden: int
    actor_lr: float
    critic_lr: float
    clf_hidden: int
    clf_lr: float
    budget: int
    update_freq: int
    episodes: int
    gamma: float
    parallel: int
    train_seed: int
    test_budget_spec: str
    eval_seeds: int
    eval_seed: int
    max_epochs: int
    patience: int
    ablation: tuple
    out_dir: str

    @classmethod
    def from_ini(cls, path=None, text=None) -> "ExperimentConfig":
        parser = configparser.ConfigParser()
        parser.read_dict(DEFAULTS)
        if path is not None:
            path = Path(path)
            if not path.exists():
                raise ConfigError(f"config file not found: {path}")
            parser.read(path)
        if text is not None:
            parser.read_string(text)
        for section in parser.sections():
            if section not in DEFAULTS:
                raise ConfigError(f"unknown config section [{section}]")
            for key in parser[section]:
                if key not in DEFAULTS[section]:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")

        source = parser.get("graph", "source")
        if source not in ("sbm", "file"):
            raise ConfigError(f"[graph] source: must be 'sbm' or 'file', "
                              f"got {source!r}")
        if source == "file" and not parser.get("graph", "path"):
            raise ConfigError("[graph] path: required when source = file")
        props = _parse(parser, "graph", "proportions",
                       lambda s: tuple(float(p) for p in s.split(",")),
                       "comma-separated fractions")
        try:
            sbm = SbmConfig(
                num_nodes=_parse(parser, "graph", "nodes", int, "an integer"),
                class_proportions=props,
                intra_edge_prob=_parse(parser, "graph", "intra_prob", float,
                                       "a probability"),
                inter_edge_prob=_parse(parser, "graph", "inter_prob", float,
                                       "a probability"),
                feature_dim=_parse(parser, "graph", "feature_dim", int,
                                   "an integer"),
                feature_signal=_parse(parser, "graph", "feature_signal", float,
                                      "a number"),
            )
        except ValueError as exc:
            raise ConfigError(f"[graph] {exc}") from None

        variant = parser.get("reward", "variant")
        if variant not in VARIANTS:
            raise ConfigError(f"[reward] variant: must be one of {VARIANTS}, "
                              f"got {variant!r}")
        try:
            reward = RewardConfig(
                alpha=_parse(parser, "reward", "alpha", float, "a number"),
                eta=_parse(parser, "reward", "eta", float, "a number"),
                variant=variant)
        except ValueError as exc:
            raise ConfigError(f"[reward] {exc}") from None

        drop = parser.get("ablation", "drop").strip()
        ablation = tuple(sorted({p.strip() for p in drop.split(",") if p.strip()}))
        unknown = set(ablation) - set(FEATURE_NAMES)
        if unknown:
            raise ConfigError(f"[ablation] drop: unknown feature(s) "
                              f"{sorted(unknown)}; valid: {FEATURE_NAMES}")

        spec = parser.get("eval", "test_budget").strip()
        if spec.endswith("x"):
            _parse_budget_mult(spec)
        else:
            _parse(parser, "eval", "test_budget", int, "an integer or '<k>x'")

        cfg = cls(
            graph_source=source,
            graph_path=parser.get("graph", "path"),
            graph_format=parser.get("graph", "format"),
            features_path=parser.get("graph", "features_path"),
            sbm=sbm,
            sbm_seed=_parse(parser, "graph", "sbm_seed", int, "an integer"),
            split_seed=_parse(parser, "split", "seed", int, "an integer"),
            valid_size=_parse(parser, "split", "valid_size", int, "an integer"),
            test_size=_parse(parser, "split", "test_size", int, "an integer"),
            reward=reward,
            policy_hidden=_parse(parser, "policy", "hidden", int, "an integer"),
            actor_lr=_parse(parser, "policy", "actor_lr", float, "a number"),
            critic_lr=_parse(parser, "policy", "critic_lr", float, "a number"),
            clf_hidden=_parse(parser, "classifier", "hidden", int, "an integer"),
            clf_lr=_parse(parser, "classifier", "lr", float, "a number"),
            budget=_parse(parser, "train", "budget", int, "an integer"),
            update_freq=_parse(parser, "train", "update_freq", int,
                               "an integer"),
            episodes=_parse(parser, "train", "episodes", int, "an integer"),
            gamma=_parse(parser, "train", "gamma", float, "a number"),
            parallel=_parse(parser, "train", "parallel", int, "an integer"),
            train_seed=_parse(parser, "train", "seed", int, "an integer"),
            test_budget_spec=spec,
            eval_seeds=_parse(parser, "eval", "seeds", int, "an integer"),
            eval_seed=_parse(parser, "eval", "seed", int, "an integer"),
            max_epochs=_parse(parser, "eval", "max_epochs", int, "an integer"),
            patience=_parse(parser, "eval", "patience", int, "an integer"),
            ablation=ablation,
            out_dir=parser.get("output", "dir"),
        )
        cfg.make_train_config()  # surfaces B = kF violations early
        return cfg

    def make_train_config(self) -> TrainConfig:
        try:
            return TrainConfig(
                budget=self.budget, update_freq=self.update_freq,
                episodes=self.episodes, gamma=self.gamma,
                actor_lr=self.actor_lr, critic_lr=self.critic_lr,
                parallel=self.parallel, seed=self.train_seed)
        except ValueError as exc:
            raise ConfigError(f"[train] {exc}") from None

    def load_graph(self) -> Graph:
        if self.graph_source == "sbm":
            return generate_sbm(self.sbm, self.sbm_seed)
        return load_graph(self.graph_path, self.graph_format,
                          self.features_path or None)

    def resolve_test_budget(self, num_classes: int) -> int:
        spec = self.test_budget_spec
        if spec.endswith("x"):
            return _parse_budget_mult(spec) * num_classes
        return int(spec)

    def to_ini(self) -> str:
        parser = configparser.ConfigParser()
        parser.read_dict({
            "graph": {
                "source": self.graph_source,
                "path": self.graph_path,
                "format": self.graph_format,
                "features_path": self.features_path,
                "nodes": str(self.sbm.num_nodes),
                "proportions": ", ".join(repr(p) for p in
                                         self.sbm.class_proportions),
                "intra_prob": repr(self.sbm.intra_edge_prob),
                "inter_prob": repr(self.sbm.inter_edge_prob),
                "feature_dim": str(self.sbm.feature_dim),
                "feature_signal": repr(self.sbm.feature_signal),
                "sbm_seed": str(self.sbm_seed),
            },
            "split": {
                "seed": str(self.split_seed),
                "valid_size": str(self.valid_size),
                "test_size": str(self.test_size),
            },
            "reward": {
                "variant": self.reward.variant,
                "alpha": repr(self.reward.alpha),
                "eta": repr(self.reward.eta),
            },
            "policy": {
                "hidden": str(self.policy_hidden),
                "actor_lr": repr(self.actor_lr),
                "critic_lr": repr(self.critic_lr),
            },
            "classifier": {
                "hidden": str(self.clf_hidden),
                "lr": repr(self.clf_lr),
            },
            "train": {
                "budget": str(self.budget),
                "update_freq": str(self.update_freq),
                "episodes": str(self.episodes),
                "gamma": repr(self.gamma),
                "parallel": str(self.parallel),
                "seed": str(self.train_seed),
            },
            "eval": {
                "test_budget": self.test_budget_spec,
                "seeds": str(self.eval_seeds),
                "seed": str(self.eval_seed),
                "max_epochs": str(self.max_epochs),
                "patience": str(self.patience),
            },
            "ablation": {"drop": ", ".join(self.ablation)},
            "output": {"dir": self.out_dir},
        })
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()


def _parse_budget_mult(spec: str) -> int:
    try:
        return int(spec[:-1])
    except ValueError:
        raise ConfigError(f"[eval] test_budget: expected an integer or "
                          f"'<k>x', got {spec!r}") from None
