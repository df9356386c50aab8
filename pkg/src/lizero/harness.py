"""Lifelong benchmark: run every algorithm over a seeded task sequence and summarise.

One *cell* is an (algorithm, master seed) pair. A cell walks the task
sequence in order; each task is played for ``epochs_per_task`` episodes of
``horizon`` steps from the centre cell, and the undiscounted episode return
is recorded. Between tasks the LiZero variants store the finished task's Q
table and visit counts and estimate the distance from the new task to every
earlier one (exact for U, importance-sampled over logged search policies for
P, parametric over fitted dynamics models for N).

All randomness inside a task comes from a generator keyed by
``(seed, task)``, so every algorithm sees the same task draws and, where the
algorithms agree, the same simulator outcomes.
"""
from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .baselines import DEFAULT_M_KNOWN, LRMaxBounds, RMaxState, lrmax_agent, rmax_act, rmax_observe
from .distance import (
    DistanceEstimate,
    coverage_mixture,
    default_b,
    draw_weighted_samples,
    estimate_adaptive,
    exact_distance,
    kappa,
    required_samples,
)
from .dynamics import FitSpec, estimate_lipschitz, fit_from_counts, param_distance, parametric_bound
from .envs import TightTaskConfig, generate_sequence
from .knowledge import KnowledgeBase, TaskKnowledge, save_knowledge
from .mcts import MctsConfig, SearchTree, run_episode
from .mdp import QTable, TabularMdp, sample_next_states, sample_step, save_mdp, value_iteration

ALGORITHMS = ("lizero_u", "lizero_p", "lizero_n", "mcts_r", "mcts_o", "puct", "rmax", "lrmax")
LIZERO = ("lizero_u", "lizero_p", "lizero_n")
THRESHOLDS = (0.6, 0.7, 0.8)
RECORD_FIELDS = ("algorithm", "seed", "task", "epoch", "return", "wall_ms")

_STREAM_EPISODES, _STREAM_DISTANCE = 0, 1


@dataclass(frozen=True)
class ExperimentConfig:
    env: TightTaskConfig = field(default_factory=TightTaskConfig)
    n_tasks: int = 10
    epochs_per_task: int = 1000
    horizon: int = 60
    algorithms: tuple[str, ...] = ALGORITHMS
    mcts: MctsConfig = field(default_factory=MctsConfig)
    delta: float = 0.05
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    output_dir: str = "results"
    transition_gap: str = "mean"
    m_known: int = DEFAULT_M_KNOWN
    distance_epsilon: float = 0.05
    coverage_floor: float = 0.5
    policy_snapshots: int = 10
    probe_samples: int = 10
    lipschitz_probes: int = 64
    fit: FitSpec = field(default_factory=FitSpec)
    smoothing_window: int = 20
    record_wall_time: bool = False

    def __post_init__(self):
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.algorithms:
            raise ValueError("algorithms must be nonempty")
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown:
            raise ValueError(f"unknown algorithm tag(s) {unknown}; choose from {list(ALGORITHMS)}")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ValueError("duplicate algorithm tags")
        if not self.seeds:
            raise ValueError("seeds must be nonempty")
        for name in ("n_tasks", "epochs_per_task", "horizon", "m_known", "policy_snapshots",
                     "probe_samples", "lipschitz_probes", "smoothing_window"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.transition_gap not in ("l1", "mean"):
            raise ValueError("transition_gap must be 'l1' or 'mean'")
        if not 0.0 < self.coverage_floor <= 1.0:
            raise ValueError("coverage_floor must lie in (0, 1]")
        if not self.distance_epsilon > 0:
            raise ValueError("distance_epsilon must be positive")

    def to_dict(self) -> dict:
        return {
            "env": self.env.to_dict(),
            "n_tasks": self.n_tasks,
            "epochs_per_task": self.epochs_per_task,
            "horizon": self.horizon,
            "algorithms": list(self.algorithms),
            "mcts": self.mcts.to_dict(),
            "delta": self.delta,
            "seeds": list(self.seeds),
            "output_dir": self.output_dir,
            "transition_gap": self.transition_gap,
            "m_known": self.m_known,
            "distance_epsilon": self.distance_epsilon,
            "coverage_floor": self.coverage_floor,
            "policy_snapshots": self.policy_snapshots,
            "probe_samples": self.probe_samples,
            "lipschitz_probes": self.lipschitz_probes,
            "fit": dict(self.fit.__dict__),
            "smoothing_window": self.smoothing_window,
            "record_wall_time": self.record_wall_time,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        kw = dict(d)
        unknown = set(kw) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config field(s): {sorted(unknown)}")
        if "env" in kw:
            kw["env"] = TightTaskConfig.from_dict(kw["env"])
        if "mcts" in kw:
            kw["mcts"] = MctsConfig(**kw["mcts"])
        if "fit" in kw:
            kw["fit"] = FitSpec(**kw["fit"])
        return cls(**kw)


def load_config(path: str | Path) -> ExperimentConfig:
    return ExperimentConfig.from_dict(json.loads(Path(path).read_text()))


def reduced_profile(**overrides) -> ExperimentConfig:
    """11x11 grid, 300 epochs per task: the quick benchmark."""
    base = ExperimentConfig(
        env=TightTaskConfig(grid_side=11),
        epochs_per_task=300,
        horizon=30,
        mcts=MctsConfig(exploration_c=1.0, simulations_per_move=2, rollout_depth=9, max_depth=4),
    )
    return replace(base, **overrides)


def full_profile(**overrides) -> ExperimentConfig:
    """25x25 grid, 1000 epochs per task.

    The search settings are not tuned: with them, and with every setting tried
    around them, the baseline stays near 15% of the optimal return.
    """
    base = ExperimentConfig(
        env=TightTaskConfig(grid_side=25),
        epochs_per_task=1000,
        horizon=60,
        mcts=MctsConfig(exploration_c=1.0, simulations_per_move=8, rollout_depth=20, max_depth=20),
    )
    return replace(base, **overrides)


class EpochRecord(NamedTuple):
    algorithm: str
    seed: int
    task_index: int
    epoch_index: int
    episode_return: float
    wall_time: float  # milliseconds; 0 unless wall-time recording is enabled


class DistanceRecord(NamedTuple):
    algorithm: str
    seed: int
    task_index: int
    prior_index: int
    estimate: float
    exact: float


@dataclass
class CellResult:
    records: list[EpochRecord]
    distances: list[DistanceRecord]


def task_sequence(config: ExperimentConfig, seed: int) -> list[TabularMdp]:
    return list(generate_sequence(replace(config.env, seed=seed), config.n_tasks))


def _rng(seed: int, task: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(task), stream])


# --------------------------------------------------------------------------
# distance estimators used between tasks


def _effective_kappa(config: ExperimentConfig, n_states: int) -> float:
    k = kappa(config.env.gamma)
    return k / n_states if config.transition_gap == "mean" else k


def _sampled_distances(config, task, priors, policies, rng) -> list[DistanceEstimate]:
    n_pairs = task.n_states * task.n_actions
    p_u = 1.0 / n_pairs
    alpha = config.coverage_floor / n_pairs
    b = default_b(config.env.gamma, 1.0, task.n_states, config.transition_gap)
    n = required_samples(config.distance_epsilon, config.delta, b, p_u, alpha, "adaptive")
    out = []
    for prior in priors:
        stream = draw_weighted_samples(task, prior, policies, n, rng, config.transition_gap)
        out.append(estimate_adaptive(stream, config.delta, b, p_u, alpha))
    return out


def _probe_model(config, task, rng):
    """Fit a dynamics model from ``probe_samples`` simulator draws per pair."""
    n_pairs = task.n_states * task.n_actions
    reps = config.probe_samples
    counts = np.zeros((n_pairs, task.n_states))
    states, actions = np.divmod(np.arange(n_pairs), task.n_actions)
    for _ in range(reps):
        nxt = sample_next_states(task, states, actions, rng)
        counts[np.arange(n_pairs), nxt] += 1.0
    reward_sum = task.rewards * reps
    return fit_from_counts(
        counts.reshape(task.n_states, task.n_actions, task.n_states), reward_sum, config.fit
    )


def _parametric_distances(config, model, prior_models, rng) -> list[DistanceEstimate]:
    n_states, n_actions = model.shape
    all_models = list(prior_models) + [model]
    pairs = [(all_models[i], all_models[j])
             for i in range(len(all_models)) for j in range(i + 1, len(all_models))]
    pairs = [p for p in pairs if param_distance(*p) > 0]
    flat = rng.choice(n_states * n_actions, size=min(config.lipschitz_probes, n_states * n_actions),
                      replace=False)
    probes = [(int(f // n_actions), int(f % n_actions)) for f in np.sort(flat)]
    l_net = estimate_lipschitz(pairs, probes).l_net
    k_eff = _effective_kappa(config, n_states)
    return [DistanceEstimate(parametric_bound(param_distance(model, m), l_net, k_eff), "parametric")
            for m in prior_models]


# --------------------------------------------------------------------------
# per-cell runners


def _optimal_return(task: TabularMdp, start: int, horizon: int) -> float:
    """Expected undiscounted return of the value-iteration greedy policy over ``horizon`` steps."""
    policy = value_iteration(task).greedy()
    idx = np.arange(task.n_states)
    p_pi = task.transitions[idx, policy]
    r_pi = task.rewards[idx, policy]
    dist = np.zeros(task.n_states)
    dist[start] = 1.0
    total = 0.0
    for _ in range(horizon):
        total += float(dist @ r_pi)
        dist = dist @ p_pi
    return total


def optimal_returns(config: ExperimentConfig) -> dict[tuple[int, int], float]:
    out = {}
    for seed in config.seeds:
        for k, task in enumerate(task_sequence(config, seed)):
            out[(seed, k)] = _optimal_return(task, config.env.start_state, config.horizon)
    return out


def _mcts_cell(config: ExperimentConfig, algorithm: str, seed: int, tasks) -> CellResult:
    selection = {"puct": "puct"}.get(algorithm, "auct_combined" if algorithm in LIZERO else "uct")
    mcfg = replace(config.mcts, selection=selection)
    n_states, n_actions = tasks[0].n_states, tasks[0].n_actions
    v_max = tasks[0].v_max
    start = config.env.start_state
    kb = KnowledgeBase(config.env.gamma, 1.0, config.delta)
    tree = SearchTree(n_states, n_actions, v_max)
    snapshots: list[np.ndarray] = []
    models = []
    records, dists = [], []
    every = max(1, config.epochs_per_task // config.policy_snapshots)

    for k, task in enumerate(tasks):
        if algorithm != "mcts_o":
            tree = SearchTree(n_states, n_actions, v_max)
        bound = None
        if algorithm in LIZERO:
            d_rng = _rng(seed, k, _STREAM_DISTANCE)
            if algorithm == "lizero_n":
                model = _probe_model(config, task, d_rng)
            if k > 0:
                priors = tasks[:k]
                if algorithm == "lizero_u":
                    est = [exact_distance(task, p, config.transition_gap) for p in priors]
                elif algorithm == "lizero_p":
                    policies = [coverage_mixture(v, config.coverage_floor) for v in snapshots]
                    est = _sampled_distances(config, task, priors, policies, d_rng)
                else:
                    est = _parametric_distances(config, model, models, d_rng)
                kb = kb.with_distances(est)
                bound = kb.bound_table((n_states, n_actions))
                for i, (p, d) in enumerate(zip(priors, est)):
                    exact = exact_distance(task, p, config.transition_gap).value
                    dists.append(DistanceRecord(algorithm, seed, k, i, d.value, exact))
            else:
                bound = np.full((n_states, n_actions), v_max)
            if algorithm == "lizero_n":
                models.append(model)

        rng = _rng(seed, k, _STREAM_EPISODES)
        snapshots = []
        prev = tree.n_sa.copy()
        for epoch in range(config.epochs_per_task):
            t0 = time.perf_counter()
            ret = run_episode(task, start, config.horizon, mcfg, tree, rng, bound)
            wall = (time.perf_counter() - t0) * 1e3 if config.record_wall_time else 0.0
            records.append(EpochRecord(algorithm, seed, k, epoch, ret, wall))
            if (epoch + 1) % every == 0:
                snapshots.append(tree.n_sa - prev)
                prev = tree.n_sa.copy()

        if algorithm in LIZERO:
            q = QTable(tree.q_values(), task.gamma, task.r_max)
            kb = kb.add(TaskKnowledge(q, tree.n_sa.copy(), label=f"task{k}"))
    return CellResult(records, dists)


def _rmax_cell(config: ExperimentConfig, algorithm: str, seed: int, tasks) -> CellResult:
    n_states, n_actions = tasks[0].n_states, tasks[0].n_actions
    start = config.env.start_state
    bounds = LRMaxBounds(config.env.gamma, 1.0)
    records, dists = [], []
    for k, task in enumerate(tasks):
        if algorithm == "lrmax" and k > 0:
            est = [exact_distance(task, p, config.transition_gap).value for p in tasks[:k]]
            bounds = bounds.with_distances(est)
            agent = lrmax_agent(bounds, n_states, n_actions, config.m_known)
        else:
            agent = RMaxState(n_states, n_actions, task.gamma, task.r_max, config.m_known)
        rng = _rng(seed, k, _STREAM_EPISODES)
        for epoch in range(config.epochs_per_task):
            t0 = time.perf_counter()
            s, total = start, 0.0
            for _ in range(config.horizon):
                a = rmax_act(agent, s)
                s2, r = sample_step(task, s, a, rng)
                rmax_observe(agent, s, a, r, s2)
                total += r
                s = s2
            wall = (time.perf_counter() - t0) * 1e3 if config.record_wall_time else 0.0
            records.append(EpochRecord(algorithm, seed, k, epoch, total, wall))
        if algorithm == "lrmax":
            bounds = bounds.add(agent.q, 0.0)
    return CellResult(records, dists)


def run_cell(config: ExperimentConfig, algorithm: str, seed: int) -> CellResult:
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    tasks = task_sequence(config, seed)
    if algorithm in ("rmax", "lrmax"):
        return _rmax_cell(config, algorithm, seed, tasks)
    return _mcts_cell(config, algorithm, seed, tasks)


def _run_cell_args(args):
    return run_cell(*args)


def run_experiment_detailed(config: ExperimentConfig, jobs: int = 1) -> CellResult:
    """Run every (algorithm, seed) cell; records come back sorted by (algorithm, seed, task, epoch)."""
    cells = [(config, a, s) for a in config.algorithms for s in config.seeds]
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell_args, cells))
    else:
        results = [run_cell(*c) for c in cells]
    records = sorted((r for res in results for r in res.records), key=lambda r: r[:4])
    dists = sorted((d for res in results for d in res.distances), key=lambda d: d[:4])
    return CellResult(records, dists)


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> list[EpochRecord]:
    return run_experiment_detailed(config, jobs).records


# --------------------------------------------------------------------------
# summary


def trailing_mean(returns: Sequence[float], window: int) -> np.ndarray:
    """Mean of the last ``window`` values at each epoch (fewer at the start)."""
    x = np.asarray(returns, dtype=np.float64)
    c = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(1, len(x) + 1)
    lo = np.maximum(idx - window, 0)
    return (c[idx] - c[lo]) / (idx - lo)


def epochs_to_fraction(returns: Sequence[float], optimal: float, fraction: float,
                       window: int = 20) -> int | None:
    """First epoch count at which the trailing ``window`` mean reaches ``fraction * optimal``.

    Only full windows count, so the earliest possible answer is ``window``.
    ``None`` means the threshold is never reached.
    """
    x = np.asarray(returns, dtype=np.float64)
    if len(x) < window:
        return None
    c = np.concatenate([[0.0], np.cumsum(x)])
    ma = (c[window:] - c[:-window]) / window
    hit = np.nonzero(ma >= fraction * optimal - 1e-12)[0]
    return int(hit[0]) + window if len(hit) else None


@dataclass
class MetricsSummary:
    algorithms: list[str]
    seeds: list[int]
    n_tasks: int
    epochs: int
    early_mean: dict  # algorithm -> [per task mean over seeds]
    early_std: dict
    full_mean: dict
    total_mean: dict
    total_std: dict
    seed_totals: dict  # algorithm -> {seed: total of early rewards}
    optimal: dict  # "seed/task" -> per-epoch optimal return
    epochs_to: dict  # algorithm -> {"0.7": {"seed/task": int or None}}
    median_epochs_to: dict  # algorithm -> {"0.7": median over tasks >= 2, censored}

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsSummary":
        return cls(**d)


def _key(seed, task) -> str:
    return f"{seed}/{task}"


def summarize(
    records: Iterable[EpochRecord],
    optimal: dict[tuple[int, int], float] | None = None,
    window: int = 20,
) -> MetricsSummary:
    """Early-reward table, totals and epochs-to-threshold statistics.

    Early reward is the mean return over the first ``floor(epochs / 2)``
    epochs of each task; the spread is the population std over seeds.
    Threshold crossings that never happen are ``None`` and enter medians
    censored at ``epochs + 1``.
    """
    records = list(records)
    if not records:
        raise ValueError("cannot summarise an empty record stream")
    algorithms = sorted({r.algorithm for r in records}, key=lambda a: (ALGORITHMS + (a,)).index(a))
    seeds = sorted({r.seed for r in records})
    n_tasks = max(r.task_index for r in records) + 1
    series: dict[tuple, list] = {}
    for r in sorted(records, key=lambda r: r[:4]):
        series.setdefault((r.algorithm, r.seed, r.task_index), []).append(r.episode_return)
    epochs = max(len(v) for v in series.values())
    half = epochs // 2

    early_mean, early_std, full_mean = {}, {}, {}
    total_mean, total_std, seed_totals = {}, {}, {}
    epochs_to, median_to = {}, {}
    for alg in algorithms:
        early = np.array([[np.mean(series[(alg, s, k)][:half]) for k in range(n_tasks)] for s in seeds])
        full = np.array([[np.mean(series[(alg, s, k)]) for k in range(n_tasks)] for s in seeds])
        early_mean[alg] = early.mean(axis=0).tolist()
        early_std[alg] = early.std(axis=0).tolist()
        full_mean[alg] = full.mean(axis=0).tolist()
        totals = early.sum(axis=1)
        seed_totals[alg] = {str(s): float(t) for s, t in zip(seeds, totals)}
        total_mean[alg] = float(totals.mean())
        total_std[alg] = float(totals.std())
        if optimal is not None:
            per_p, med = {}, {}
            for p in THRESHOLDS:
                hits = {
                    _key(s, k): epochs_to_fraction(series[(alg, s, k)], optimal[(s, k)], p, window)
                    for s in seeds for k in range(n_tasks)
                }
                per_p[str(p)] = hits
                later = [epochs + 1 if hits[_key(s, k)] is None else hits[_key(s, k)]
                         for s in seeds for k in range(1, n_tasks)] or [
                    epochs + 1 if h is None else h for h in hits.values()]
                med[str(p)] = float(np.median(later))
            epochs_to[alg] = per_p
            median_to[alg] = med

    opt = {} if optimal is None else {_key(s, k): float(v) for (s, k), v in sorted(optimal.items())}
    return MetricsSummary(algorithms, seeds, n_tasks, epochs, early_mean, early_std, full_mean,
                          total_mean, total_std, seed_totals, opt, epochs_to, median_to)


# --------------------------------------------------------------------------
# files


def format_records(records: Iterable[EpochRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in records:
        w.writerow([r.algorithm, r.seed, r.task_index, r.epoch_index,
                    repr(float(r.episode_return)), f"{r.wall_time:.3f}"])
    return buf.getvalue()


def parse_records(text: str) -> list[EpochRecord]:
    rows = csv.DictReader(io.StringIO(text))
    if tuple(rows.fieldnames or ()) != RECORD_FIELDS:
        raise ValueError(f"unexpected record header {rows.fieldnames}")
    return [
        EpochRecord(r["algorithm"], int(r["seed"]), int(r["task"]), int(r["epoch"]),
                    float(r["return"]), float(r["wall_ms"]))
        for r in rows
    ]


def format_plot_data(records: Iterable[EpochRecord], window: int = 20) -> str:
    """Per-task learning curves: seed-averaged trailing-window return per algorithm."""
    series: dict[tuple, list] = {}
    for r in sorted(records, key=lambda r: r[:4]):
        series.setdefault((r.algorithm, r.task_index, r.seed), []).append(r.episode_return)
    curves: dict[tuple, list] = {}
    for (alg, task, _), values in series.items():
        curves.setdefault((alg, task), []).append(trailing_mean(values, window))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("algorithm", "task", "epoch", "smoothed_return"))
    for (alg, task), arrs in sorted(curves.items()):
        mean = np.mean(np.stack(arrs), axis=0)
        for epoch, v in enumerate(mean):
            w.writerow([alg, task, epoch, f"{v:.6f}"])
    return buf.getvalue()


def format_distances(dists: Iterable[DistanceRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DistanceRecord._fields)
    for d in dists:
        w.writerow([d.algorithm, d.seed, d.task_index, d.prior_index,
                    repr(float(d.estimate)), repr(float(d.exact))])
    return buf.getvalue()


def format_optimal(optimal: dict[tuple[int, int], float]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("seed", "task", "optimal_return"))
    for (s, k), v in sorted(optimal.items()):
        w.writerow([s, k, repr(float(v))])
    return buf.getvalue()


def parse_optimal(text: str) -> dict[tuple[int, int], float]:
    return {(int(r["seed"]), int(r["task"])): float(r["optimal_return"])
            for r in csv.DictReader(io.StringIO(text))}


def _write(path: Path, text: str) -> None:
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def emit(summary: MetricsSummary, records: Sequence[EpochRecord], output_dir: str | Path,
         distances: Sequence[DistanceRecord] = (), window: int = 20) -> list[Path]:
    """Write ``records.csv``, ``summary.json`` and ``plot_data.csv`` (plus distances if any)."""
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror}") from exc
    files = {
        "records.csv": format_records(records),
        "summary.json": json.dumps(summary.to_dict(), indent=2, sort_keys=True) + "\n",
        "plot_data.csv": format_plot_data(records, window),
    }
    if summary.optimal:
        files["optimal.csv"] = format_optimal(
            {tuple(int(x) for x in k.split("/")): v for k, v in summary.optimal.items()})
    if distances:
        files["distances.csv"] = format_distances(distances)
    written = []
    for name, text in files.items():
        _write(out / name, text)
        written.append(out / name)
    return written


def save_final_snapshot(config: ExperimentConfig, seed: int, output_dir: str | Path) -> tuple[Path, Path]:
    """Store the last task and a LiZero-U knowledge base aimed at it, for the ``accel`` command.

    The knowledge entries hold the exact value-iteration Q* of each earlier
    task with a nominal visit count, which is the idealised transfer setting.
    """
    tasks = task_sequence(config, seed)
    target = tasks[-1]
    kb = KnowledgeBase(config.env.gamma, 1.0, config.delta)
    for k, prior in enumerate(tasks[:-1]):
        q = value_iteration(prior)
        counts = np.full(q.values.shape, 10_000.0)
        kb = kb.add(TaskKnowledge(q, counts, exact_distance(target, prior, config.transition_gap),
                                  label=f"task{k}"))
    out = Path(output_dir) / "snapshots"
    out.mkdir(parents=True, exist_ok=True)
    mdp_path = out / f"seed{seed}_task{len(tasks) - 1}.mdp.json"
    kb_path = out / f"seed{seed}_task{len(tasks) - 1}.kb.json"
    save_mdp(target, mdp_path)
    save_knowledge(kb, kb_path)
    return mdp_path, kb_path
