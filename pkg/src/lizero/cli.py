"""Command-line entry point: ``run``, ``summarize``, ``distance`` and ``accel``."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import harness
from .distance import (
    DistanceEstimate,
    coverage_mixture,
    default_b,
    draw_weighted_samples,
    estimate_adaptive,
    estimate_stationary,
    exact_distance,
    kappa,
    required_samples,
)
from .dynamics import FitSpec, estimate_lipschitz, fit_model, param_distance, parametric_bound
from .knowledge import acceleration_factor, load_knowledge
from .mdp import Transition, load_mdp, sample_next_states, value_iteration


class CliError(Exception):
    pass


def _csv_list(text: str, cast=str) -> tuple:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise CliError("empty list")
    try:
        return tuple(cast(t) for t in items)
    except ValueError as exc:
        raise CliError(f"bad list entry: {exc}") from exc


def _build_config(args) -> harness.ExperimentConfig:
    if args.config:
        config = harness.load_config(args.config)
    elif args.profile == "full":
        config = harness.full_profile()
    else:
        config = harness.reduced_profile()
    overrides = {}
    if args.seeds:
        overrides["seeds"] = _csv_list(args.seeds, int)
    if args.algorithms:
        overrides["algorithms"] = _csv_list(args.algorithms)
    if args.tasks is not None:
        overrides["n_tasks"] = args.tasks
    if args.epochs is not None:
        overrides["epochs_per_task"] = args.epochs
    if args.out:
        overrides["output_dir"] = args.out
    return replace(config, **overrides) if overrides else config


def cmd_run(args) -> int:
    config = _build_config(args)
    detailed = harness.run_experiment_detailed(config, jobs=args.jobs)
    optimal = harness.optimal_returns(config)
    summary = harness.summarize(detailed.records, optimal, config.smoothing_window)
    out = Path(config.output_dir)
    harness.emit(summary, detailed.records, out, detailed.distances, config.smoothing_window)
    (out / "config.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")
    if args.snapshot:
        harness.save_final_snapshot(config, config.seeds[0], out)
    _print_table(summary)
    return 0


def cmd_summarize(args) -> int:
    src = Path(args.input)
    records_path = src / "records.csv"
    if not records_path.exists():
        raise CliError(f"no records.csv in {src}")
    records = harness.parse_records(records_path.read_text())
    optimal = None
    if (src / "optimal.csv").exists():
        optimal = harness.parse_optimal((src / "optimal.csv").read_text())
    window = 20
    if (src / "config.json").exists():
        window = json.loads((src / "config.json").read_text()).get("smoothing_window", 20)
    summary = harness.summarize(records, optimal, window)
    out = Path(args.out) if args.out else src
    harness.emit(summary, records, out, window=window)
    _print_table(summary)
    return 0


def _print_table(summary: harness.MetricsSummary) -> None:
    print(f"{'algorithm':10s} {'total':>9s} {'std':>7s}  median epochs to 60/70/80%")
    for alg in summary.algorithms:
        med = summary.median_epochs_to.get(alg, {})
        meds = "/".join(f"{med[str(p)]:.0f}" for p in harness.THRESHOLDS) if med else "-"
        print(f"{alg:10s} {summary.total_mean[alg]:9.2f} {summary.total_std[alg]:7.2f}  {meds}")


def cmd_distance(args) -> int:
    m, mp = load_mdp(args.a), load_mdp(args.b)
    rng = np.random.default_rng(args.seed)
    gap = args.gap
    if args.method == "exact":
        est = exact_distance(m, mp, gap)
    elif args.method in ("stationary", "adaptive"):
        n_pairs = m.n_states * m.n_actions
        p_u, alpha = 1.0 / n_pairs, args.floor / n_pairs
        b = default_b(m.gamma, m.r_max, m.n_states, gap)
        n = required_samples(args.epsilon, args.delta, b, p_u, alpha, args.method)
        k = 1 if args.method == "stationary" else args.policies
        policies = [coverage_mixture(rng.random((m.n_states, m.n_actions)), args.floor)
                    for _ in range(k)]
        samples = draw_weighted_samples(m, mp, policies, n, rng, gap)
        estimator = estimate_stationary if args.method == "stationary" else estimate_adaptive
        est = estimator(samples, args.delta, b, p_u, alpha)
    else:
        spec = FitSpec(seed=args.seed)
        models = []
        for mdp in (m, mp):
            states, actions = np.divmod(np.arange(mdp.n_states * mdp.n_actions), mdp.n_actions)
            samples = []
            for _ in range(args.samples_per_pair):
                nxt = sample_next_states(mdp, states, actions, rng)
                samples += [Transition(int(s), int(a), int(x), float(mdp.rewards[s, a]))
                            for s, a, x in zip(states, actions, nxt)]
            models.append(fit_model(samples, spec, mdp.n_states, mdp.n_actions))
        rho = param_distance(*models)
        if rho == 0.0:
            value = 0.0
        else:
            probes = [(int(s), int(a)) for s in range(m.n_states) for a in range(m.n_actions)]
            l_net = estimate_lipschitz([tuple(models)], probes).l_net
            k = kappa(m.gamma, m.r_max) / (m.n_states if gap == "mean" else 1)
            value = parametric_bound(rho, l_net, k)
        est = DistanceEstimate(value, "parametric")
    print(json.dumps(est.to_dict(), sort_keys=True))
    return 0


def cmd_accel(args) -> int:
    kb = load_knowledge(args.knowledge)
    task = load_mdp(args.task)
    missing = [e.label or str(i) for i, e in enumerate(kb.entries) if e.distance_to_current is None]
    if missing:
        raise CliError(f"knowledge entries without a distance to the task: {missing}")
    report = acceleration_factor(value_iteration(task), kb)
    print(json.dumps({
        "gamma_factor": report.gamma_factor,
        "s1": len(report.s1),
        "s0": len(report.s0),
        "pruned_fraction": report.pruned_fraction,
    }, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lizero", description="Lifelong MCTS with transferred bounds.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the lifelong benchmark")
    run.add_argument("--config", help="JSON experiment config")
    run.add_argument("--profile", choices=("reduced", "full"), default="reduced")
    run.add_argument("--out", help="output directory")
    run.add_argument("--seeds", help="comma-separated master seeds")
    run.add_argument("--algorithms", help="comma-separated algorithm tags")
    run.add_argument("--tasks", type=int)
    run.add_argument("--epochs", type=int)
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--snapshot", action="store_true",
                     help="also store the last task and a knowledge base for `accel`")
    run.set_defaults(func=cmd_run)

    summ = sub.add_parser("summarize", help="recompute the summary of a finished run")
    summ.add_argument("--in", dest="input", required=True)
    summ.add_argument("--out")
    summ.set_defaults(func=cmd_summarize)

    dist = sub.add_parser("distance", help="distance between two serialised MDPs")
    dist.add_argument("a")
    dist.add_argument("b")
    dist.add_argument("--method", choices=("exact", "stationary", "adaptive", "parametric"),
                      default="exact")
    dist.add_argument("--gap", choices=("l1", "mean"), default="l1")
    dist.add_argument("--epsilon", type=float, default=0.1)
    dist.add_argument("--delta", type=float, default=0.05)
    dist.add_argument("--floor", type=float, default=0.5, help="uniform share of sampling policies")
    dist.add_argument("--policies", type=int, default=10, help="policy count for --method adaptive")
    dist.add_argument("--samples-per-pair", type=int, default=20)
    dist.add_argument("--seed", type=int, default=0)
    dist.set_defaults(func=cmd_distance)

    acc = sub.add_parser("accel", help="acceleration factor of a knowledge snapshot on a task")
    acc.add_argument("--knowledge", required=True)
    acc.add_argument("--task", required=True)
    acc.set_defaults(func=cmd_accel)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, OSError, KeyError) as exc:
        print(f"lizero {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
