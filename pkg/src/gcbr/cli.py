"""Command-line front end.

Commands: train, evaluate, baseline, sweep, ablate, gen-sbm. Every command
resolves a config file (all defaults materialized), writes its outputs plus
a copy of the resolved config into --out, and is byte-identical across reruns
with the same config and seeds. Sweep points and evaluation seeds can fan out
over a process pool (--workers); result ordering in the CSVs is canonical
regardless of completion order.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from pathlib import Path

from . import baselines, reports
from .config import ConfigError, ExperimentConfig
from .env import TRACE_HEADER, active_features
from .graphs import LoadError, make_split, save_edgelist, save_json_bundle
from .policy import (check_compatible, eval_seeds, evaluate_one, load_policy,
                     save_policy, summarize, train_policy)

TRAIN_LOG_HEADER = ("episode", "instance", "cumulative_reward",
                    "final_valid_macro_f1")
SWEEP_HEADER = ("axis", "value", "method", "seed", "micro_f1", "macro_f1",
                "imbalance_ratio")
ABLATION_HEADER = ("row", "dropped_feature", "seeds", "micro_f1_mean",
                   "micro_f1_std", "macro_f1_mean", "macro_f1_std",
                   "imbalance_ratio_mean", "imbalance_ratio_std")
SWEEP_AXES = ("test_budget", "alpha", "eta", "train_budget")


@lru_cache(maxsize=4)
def _graph_and_split_cached(cfg_text: str):
    cfg = ExperimentConfig.from_ini(text=cfg_text)
    g = cfg.load_graph()
    split = make_split(g, cfg.split_seed, cfg.valid_size, cfg.test_size)
    return g, split


def _prepare(cfg: ExperimentConfig):
    return _graph_and_split_cached(cfg.to_ini())


def _run_tasks(fn, payloads, workers: int):
    if workers <= 1:
        return [fn(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, payloads))


def _eval_task(payload):
    cfg_text, checkpoint, budget, seed_index, clf_seed = payload
    cfg = ExperimentConfig.from_ini(text=cfg_text)
    g, split = _graph_and_split_cached(cfg_text)
    pol = load_policy(checkpoint)
    return evaluate_one(pol, g, split, cfg.reward, budget, seed_index,
                        clf_seed, frozenset(cfg.ablation), cfg.clf_hidden,
                        cfg.clf_lr, cfg.max_epochs, cfg.patience)


def _baseline_task(payload):
    cfg_text, kind, budget, seed_index, clf_seed, pick_seed = payload
    cfg = ExperimentConfig.from_ini(text=cfg_text)
    g, split = _graph_and_split_cached(cfg_text)
    return baselines.run_baseline_one(
        kind, g, split, cfg.reward, budget, seed_index, clf_seed, pick_seed,
        cfg.clf_hidden, cfg.clf_lr, cfg.max_epochs, cfg.patience)


def _train_and_eval(cfg: ExperimentConfig, checkpoint_path=None):
    """Full pipeline for one config: train a policy, then evaluate it."""
    g, split = _prepare(cfg)
    pol, log = train_policy(
        g, split, cfg.reward, cfg.make_train_config(),
        ablation=frozenset(cfg.ablation), clf_hidden=cfg.clf_hidden,
        clf_lr=cfg.clf_lr, policy_hidden=cfg.policy_hidden)
    if checkpoint_path is not None:
        save_policy(pol, checkpoint_path)
    budget = cfg.resolve_test_budget(g.num_classes)
    seeds = eval_seeds(cfg.eval_seed, cfg.eval_seeds)
    records = [
        evaluate_one(pol, g, split, cfg.reward, budget, r, int(seeds[r]),
                     frozenset(cfg.ablation), cfg.clf_hidden, cfg.clf_lr,
                     cfg.max_epochs, cfg.patience)
        for r in range(cfg.eval_seeds)
    ]
    return records, summarize(records), log


def _sweep_task(payload):
    cfg_text, method, axis, value = payload
    cfg = ExperimentConfig.from_ini(text=cfg_text)
    if method == "policy":
        records, summary, _ = _train_and_eval(cfg)
    else:
        g, split = _graph_and_split_cached(cfg_text)
        budget = cfg.resolve_test_budget(g.num_classes)
        records, summary = baselines.run_baseline(
            method, g, split, cfg.reward, budget, cfg.eval_seeds,
            cfg.eval_seed, cfg.clf_hidden, cfg.clf_lr, cfg.max_epochs,
            cfg.patience)
    return axis, value, method, records, summary


def _ablate_task(payload):
    cfg_text, label, dropped = payload
    cfg = ExperimentConfig.from_ini(text=cfg_text)
    records, summary, _ = _train_and_eval(cfg)
    return label, dropped, records, summary


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_ini(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.train_seed = args.seed
        cfg.eval_seed = args.seed
    if getattr(args, "out", None):
        cfg.out_dir = args.out
    return cfg


def _out_dir(cfg: ExperimentConfig) -> Path:
    if not cfg.out_dir:
        raise ConfigError("[output] dir: no output directory configured "
                          "(set it or pass --out)")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _resolved_config(cfg: ExperimentConfig) -> str:
    """Config copy written next to outputs; the directory itself is where
    the copy lives, so the dir field stays blank and run dirs stay
    byte-comparable and relocatable."""
    saved = cfg.out_dir
    cfg.out_dir = ""
    try:
        return cfg.to_ini()
    finally:
        cfg.out_dir = saved


def cmd_train(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(cfg)
    g, split = _prepare(cfg)
    pol, log = train_policy(
        g, split, cfg.reward, cfg.make_train_config(),
        ablation=frozenset(cfg.ablation), clf_hidden=cfg.clf_hidden,
        clf_lr=cfg.clf_lr, policy_hidden=cfg.policy_hidden)
    save_policy(pol, out / "policy.json")
    rows = [(r.episode, r.instance, r.cumulative_reward,
             r.final_valid_macro_f1) for r in log.episodes]
    reports.write_csv(out / "train_log.csv", TRAIN_LOG_HEADER, rows)
    (out / "config.ini").write_text(_resolved_config(cfg))
    print(f"trained {cfg.reward.variant} policy "
          f"(state_dim={pol.state_dim}, {log.updates} updates) -> "
          f"{out / 'policy.json'}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(cfg)
    g, split = _prepare(cfg)
    pol = load_policy(args.checkpoint)
    budget = cfg.resolve_test_budget(g.num_classes)
    # surface incompatible checkpoints before spawning workers
    check_compatible(pol, cfg.reward.variant, frozenset(cfg.ablation))
    if budget > split.train_idx.size:
        raise ConfigError(f"[eval] test_budget: {budget} exceeds train pool "
                          f"{split.train_idx.size}")
    seeds = eval_seeds(cfg.eval_seed, cfg.eval_seeds)
    payloads = [(cfg.to_ini(), str(args.checkpoint), budget, r, int(seeds[r]))
                for r in range(cfg.eval_seeds)]
    records = _run_tasks(_eval_task, payloads, args.workers)
    records.sort(key=lambda r: r.seed)
    summary = summarize(records)
    _write_metrics_and_trace(out, cfg, cfg.reward.variant, records, summary, g)
    print(f"evaluated {cfg.reward.variant} on {cfg.eval_seeds} seeds: "
          f"micro={summary.micro_f1_mean:.4f} macro={summary.macro_f1_mean:.4f} "
          f"imbalance={summary.imbalance_ratio_mean:.4f}")
    return 0


def _write_metrics_and_trace(out, cfg, method, records, summary, g):
    header, rows = reports.metrics_rows(method, records, summary,
                                        g.num_classes)
    reports.write_csv(out / "metrics.csv", header, rows)
    reports.write_csv(out / "trace.csv", ("seed",) + TRACE_HEADER,
                      reports.trace_rows(records))
    (out / "config.ini").write_text(_resolved_config(cfg))


def cmd_baseline(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(cfg)
    g, split = _prepare(cfg)
    budget = cfg.resolve_test_budget(g.num_classes)
    if budget > split.train_idx.size:
        raise ConfigError(f"[eval] test_budget: {budget} exceeds train pool "
                          f"{split.train_idx.size}")
    clf_seeds, pick_seeds = baselines.baseline_seeds(cfg.eval_seed,
                                                     cfg.eval_seeds)
    payloads = [(cfg.to_ini(), args.strategy, budget, r, int(clf_seeds[r]),
                 int(pick_seeds[r])) for r in range(cfg.eval_seeds)]
    records = _run_tasks(_baseline_task, payloads, args.workers)
    records.sort(key=lambda r: r.seed)
    summary = summarize(records)
    _write_metrics_and_trace(out, cfg, args.strategy, records, summary, g)
    print(f"{args.strategy} baseline on {cfg.eval_seeds} seeds: "
          f"micro={summary.micro_f1_mean:.4f} macro={summary.macro_f1_mean:.4f} "
          f"imbalance={summary.imbalance_ratio_mean:.4f}")
    return 0


def _apply_axis(cfg_text: str, axis: str, value) -> str:
    cfg = ExperimentConfig.from_ini(text=cfg_text)
    if axis == "test_budget":
        cfg.test_budget_spec = str(int(value))
    elif axis == "alpha":
        cfg.reward = type(cfg.reward)(alpha=float(value), eta=cfg.reward.eta,
                                      variant=cfg.reward.variant)
    elif axis == "eta":
        cfg.reward = type(cfg.reward)(alpha=cfg.reward.alpha, eta=float(value),
                                      variant=cfg.reward.variant)
    elif axis == "train_budget":
        cfg.budget = int(value)
        cfg.make_train_config()  # validates B = kF for the new budget
    else:
        raise ConfigError(f"unknown sweep axis {axis!r}")
    return cfg.to_ini()


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(cfg)
    values = _parse_axis_values(args.axis, args.values)
    payloads = [(_apply_axis(cfg.to_ini(), args.axis, v), args.method,
                 args.axis, v) for v in values]
    results = _run_tasks(_sweep_task, payloads, args.workers)
    results.sort(key=lambda r: r[1])
    rows = []
    for axis, value, method, records, summary in results:
        for r in sorted(records, key=lambda r: r.seed):
            rows.append((axis, value, method, r.seed, r.micro_f1, r.macro_f1,
                         r.imbalance_ratio))
        rows.append((axis, value, method, "mean", summary.micro_f1_mean,
                     summary.macro_f1_mean, summary.imbalance_ratio_mean))
        rows.append((axis, value, method, "std", summary.micro_f1_std,
                     summary.macro_f1_std, summary.imbalance_ratio_std))
    reports.write_csv(out / "sweep.csv", SWEEP_HEADER, rows)
    (out / "config.ini").write_text(_resolved_config(cfg))
    xs = [value for _, value, _, _, _ in results]
    for metric, pick in (("micro_f1", lambda s: s.micro_f1_mean),
                         ("macro_f1", lambda s: s.macro_f1_mean),
                         ("imbalance_ratio",
                          lambda s: s.imbalance_ratio_mean)):
        ys = [pick(summary) for _, _, _, _, summary in results]
        reports.svg_line_chart(
            out / "charts" / f"sweep_{args.axis}_{metric}.svg",
            f"{metric} vs {args.axis}", args.axis, metric,
            {args.method: (xs, ys)})
    print(f"swept {args.axis} over {values} -> {out / 'sweep.csv'}")
    return 0


def _parse_axis_values(axis: str, text: str):
    if axis not in SWEEP_AXES:
        raise ConfigError(f"--axis must be one of {SWEEP_AXES}, got {axis!r}")
    conv = int if axis in ("test_budget", "train_budget") else float
    try:
        values = [conv(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--values: expected comma-separated "
                          f"{conv.__name__}s, got {text!r}") from None
    if not values:
        raise ConfigError("--values: empty")
    return sorted(values)


def cmd_ablate(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(cfg)
    features = active_features(cfg.reward.variant, frozenset(cfg.ablation))
    payloads = [(cfg.to_ini(), "full", "")]
    for name in features:
        row_cfg = ExperimentConfig.from_ini(text=cfg.to_ini())
        row_cfg.ablation = tuple(sorted(set(cfg.ablation) | {name}))
        payloads.append((row_cfg.to_ini(), f"no_{name}", name))
    results = _run_tasks(_ablate_task, payloads, args.workers)
    order = {label: i for i, (_, label, _) in enumerate(payloads)}
    results.sort(key=lambda r: order[r[0]])
    rows = [(label, dropped, len(records), s.micro_f1_mean, s.micro_f1_std,
             s.macro_f1_mean, s.macro_f1_std, s.imbalance_ratio_mean,
             s.imbalance_ratio_std)
            for label, dropped, records, s in results]
    reports.write_csv(out / "ablation.csv", ABLATION_HEADER, rows)
    (out / "config.ini").write_text(_resolved_config(cfg))
    print(f"ablation table ({len(rows)} rows) -> {out / 'ablation.csv'}")
    return 0


def cmd_gen_sbm(args) -> int:
    cfg = _load_config(args)
    g = cfg.load_graph() if cfg.graph_source == "sbm" else None
    if g is None:
        raise ConfigError("[graph] source: gen-sbm needs source = sbm")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.format == "json":
        save_json_bundle(g, out)
    else:
        save_edgelist(g, out)
    print(f"generated SBM graph: {g.num_nodes} nodes, "
          f"{g.undirected_edges().shape[0]} edges, {g.num_classes} classes "
          f"-> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gcbr",
        description="Class-balanced reinforced active learning on graphs")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--config", required=True, help="config file (ini)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override train/eval master seeds")
        p.add_argument("--workers", type=int, default=1,
                       help="process pool size for independent tasks")

    p = sub.add_parser("train", help="train a query policy")
    common(p)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a frozen policy checkpoint")
    common(p)
    p.add_argument("--checkpoint", required=True, help="policy.json path")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("baseline", help="run a reference selection strategy")
    common(p)
    p.add_argument("--strategy", required=True,
                   choices=list(baselines.STRATEGIES))
    p.set_defaults(fn=cmd_baseline)

    p = sub.add_parser("sweep", help="sweep one axis, emit CSV + SVG charts")
    common(p)
    p.add_argument("--axis", required=True, choices=list(SWEEP_AXES))
    p.add_argument("--values", required=True,
                   help="comma-separated axis values")
    p.add_argument("--method", default="policy",
                   choices=["policy"] + list(baselines.STRATEGIES))
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("ablate", help="state-feature ablation table")
    common(p)
    p.set_defaults(fn=cmd_ablate)

    p = sub.add_parser("gen-sbm", help="generate and save a synthetic graph")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output graph path")
    p.add_argument("--seed", type=int, default=None, help="unused; accepted "
                   "for flag uniformity")
    p.add_argument("--format", default="json", choices=["json", "edgelist"])
    p.set_defaults(fn=cmd_gen_sbm)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, LoadError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
