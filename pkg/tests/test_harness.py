import json
from dataclasses import replace

import numpy as np
import pytest

from lizero import harness
from lizero.envs import TightTaskConfig
from lizero.harness import (
    ALGORITHMS,
    EpochRecord,
    ExperimentConfig,
    emit,
    epochs_to_fraction,
    format_records,
    optimal_returns,
    parse_records,
    run_experiment,
    run_experiment_detailed,
    summarize,
    task_sequence,
    trailing_mean,
)
from lizero.mcts import MctsConfig, SearchTree, run_episode
from lizero.mdp import rollout_return, value_iteration


@pytest.fixture(scope="module")
def tiny():
    return ExperimentConfig(
        env=TightTaskConfig(grid_side=5),
        n_tasks=3,
        epochs_per_task=12,
        horizon=6,
        mcts=MctsConfig(simulations_per_move=2, rollout_depth=3, max_depth=3),
        seeds=(0, 1),
        smoothing_window=4,
        lipschitz_probes=8,
    )


@pytest.fixture(scope="module")
def tiny_run(tiny):
    return run_experiment_detailed(tiny)


def synthetic(returns_by_key):
    """Records from ``{(alg, seed, task): [returns]}``."""
    return [EpochRecord(a, s, k, e, float(x), 0.0)
            for (a, s, k), xs in returns_by_key.items() for e, x in enumerate(xs)]


class TestConfig:
    def test_unknown_tag_rejected(self):
        with pytest.raises(ValueError, match="unknown algorithm"):
            ExperimentConfig(algorithms=("lizero_u", "alphazero"))

    @pytest.mark.parametrize("kw", [dict(algorithms=()), dict(seeds=()), dict(n_tasks=0),
                                    dict(algorithms=("rmax", "rmax")), dict(delta=1.0),
                                    dict(transition_gap="linf")])
    def test_invalid_rejected(self, kw):
        with pytest.raises(ValueError):
            ExperimentConfig(**kw)

    def test_dict_roundtrip(self, tiny):
        back = ExperimentConfig.from_dict(json.loads(json.dumps(tiny.to_dict())))
        assert back == tiny

    def test_unknown_field_rejected(self, tiny):
        d = tiny.to_dict() | {"epochz": 3}
        with pytest.raises(ValueError, match="epochz"):
            ExperimentConfig.from_dict(d)

    def test_load_from_file(self, tmp_path, tiny):
        (tmp_path / "c.json").write_text(json.dumps(tiny.to_dict()))
        assert harness.load_config(tmp_path / "c.json") == tiny

    def test_profiles(self):
        r, f = harness.reduced_profile(), harness.full_profile()
        assert (r.env.grid_side, r.epochs_per_task) == (11, 300)
        assert (f.env.grid_side, f.epochs_per_task, f.n_tasks) == (25, 1000, 10)
        assert set(r.algorithms) == set(ALGORITHMS) and len(r.seeds) >= 5


class TestRun:
    def test_record_counts(self, tiny, tiny_run):
        recs = tiny_run.records
        for alg in ALGORITHMS:
            mine = [r for r in recs if r.algorithm == alg]
            assert len(mine) == len(tiny.seeds) * tiny.n_tasks * tiny.epochs_per_task

    def test_sorted_and_bounded(self, tiny, tiny_run):
        keys = [r[:4] for r in tiny_run.records]
        assert keys == sorted(keys)
        assert all(0.0 <= r.episode_return <= tiny.horizon for r in tiny_run.records)
        assert all(r.wall_time == 0.0 for r in tiny_run.records)

    def test_byte_identical_reruns(self, tiny, tiny_run):
        again = run_experiment(tiny)
        assert format_records(again) == format_records(tiny_run.records)

    def test_parallel_matches_serial(self, tiny, tiny_run):
        cfg = replace(tiny, algorithms=("lizero_u", "rmax"), seeds=(0,))
        assert format_records(run_experiment(cfg, jobs=2)) == format_records(run_experiment(cfg))

    def test_first_task_has_no_transfer(self, tiny_run):
        # with an empty knowledge base the combined rule equals plain UCT
        def first(alg):
            return [r.episode_return for r in tiny_run.records if r.algorithm == alg and r.task_index == 0]
        assert first("lizero_u") == first("mcts_r") == first("lizero_p") == first("lizero_n")

    def test_restart_variant_starts_fresh(self, tiny, tiny_run):
        tasks = task_sequence(tiny, 1)
        k = 2
        tree = SearchTree(tasks[k].n_states, 4, tasks[k].v_max)
        rng = harness._rng(1, k, harness._STREAM_EPISODES)
        expected = [run_episode(tasks[k], tiny.env.start_state, tiny.horizon, tiny.mcts, tree, rng)
                    for _ in range(tiny.epochs_per_task)]
        got = [r.episode_return for r in tiny_run.records
               if r.algorithm == "mcts_r" and r.seed == 1 and r.task_index == k]
        assert got == expected

    def test_exact_variant_distances(self, tiny_run):
        rows = [d for d in tiny_run.distances if d.algorithm == "lizero_u"]
        # one distance per prior: 1 + 2 over three tasks, for each seed
        assert len(rows) == 2 * 3
        assert all(d.estimate == d.exact for d in rows)

    def test_sampled_variant_close_to_exact(self, tiny_run):
        rows = [d for d in tiny_run.distances if d.algorithm == "lizero_p"]
        assert rows and all(abs(d.estimate - d.exact) <= 0.05 for d in rows)

    def test_parametric_variant_reported(self, tiny_run):
        rows = [d for d in tiny_run.distances if d.algorithm == "lizero_n"]
        assert len(rows) == 6 and all(d.estimate >= 0 for d in rows)

    def test_tasks_differ_between_seeds(self, tiny):
        a, b = task_sequence(tiny, 0), task_sequence(tiny, 1)
        assert not np.array_equal(a[0].rewards, b[0].rewards)


class TestOptimalReference:
    def test_matches_monte_carlo(self, tiny):
        task = task_sequence(tiny, 0)[1]
        exact = harness._optimal_return(task, tiny.env.start_state, 20)
        policy = value_iteration(task).greedy()
        g = np.random.default_rng(0)
        mc = [rollout_return(task, policy, tiny.env.start_state, 20, g) for _ in range(4000)]
        assert abs(np.mean(mc) - exact) <= 4 * np.std(mc) / np.sqrt(len(mc))

    def test_keys(self, tiny):
        opt = optimal_returns(tiny)
        assert sorted(opt) == [(s, k) for s in (0, 1) for k in range(3)]


class TestThresholds:
    def test_constant_stream_at_seventy_percent(self):
        xs = [7.0] * 50
        assert epochs_to_fraction(xs, 10.0, 0.6, window=20) == 20
        assert epochs_to_fraction(xs, 10.0, 0.7, window=20) == 20
        assert epochs_to_fraction(xs, 10.0, 0.8, window=20) is None

    def test_step_change(self):
        xs = [0.0] * 30 + [10.0] * 30
        # trailing 10-mean first reaches 7 once 7 of the last 10 are tens: epoch 37
        assert epochs_to_fraction(xs, 10.0, 0.7, window=10) == 37

    def test_trailing_mean(self):
        np.testing.assert_allclose(trailing_mean([1, 2, 3, 4], 2), [1, 1.5, 2.5, 3.5])


class TestSummarize:
    def test_early_window_and_totals(self):
        recs = synthetic({("mcts_r", 0, 0): [1, 3, 100, 100, 100], ("mcts_r", 0, 1): [2, 2, 0, 0, 0]})
        s = summarize(recs)
        # floor(5/2) = 2 early epochs
        assert s.early_mean["mcts_r"] == [2.0, 2.0]
        assert s.total_mean["mcts_r"] == 4.0
        assert s.full_mean["mcts_r"] == [pytest.approx(60.8), pytest.approx(0.8)]

    def test_single_seed_std_zero(self):
        s = summarize(synthetic({("puct", 3, 0): [1.0, 2.0, 5.0, 1.0]}))
        assert s.early_std["puct"] == [0.0] and s.total_std["puct"] == 0.0

    def test_std_over_seeds(self):
        s = summarize(synthetic({("puct", 0, 0): [1, 1], ("puct", 1, 0): [3, 3]}))
        assert s.early_std["puct"] == [1.0]
        assert s.seed_totals["puct"] == {"0": 1.0, "1": 3.0}

    def test_median_censors_misses(self):
        recs = synthetic({("mcts_r", 0, k): ([10.0] * 8 if k == 1 else [0.0] * 8) for k in range(3)})
        s = summarize(recs, {(0, k): 10.0 for k in range(3)}, window=4)
        assert s.epochs_to["mcts_r"]["0.7"]["0/1"] == 4
        assert s.epochs_to["mcts_r"]["0.7"]["0/2"] is None
        # tasks 2 and 3 only: median of 4 and the censored 9
        assert s.median_epochs_to["mcts_r"]["0.7"] == 6.5

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            summarize([])


class TestFiles:
    def test_csv_roundtrip(self, tiny_run):
        text = format_records(tiny_run.records)
        assert text.splitlines()[0] == "algorithm,seed,task,epoch,return,wall_ms"
        assert parse_records(text) == tiny_run.records

    def test_bad_header_rejected(self):
        with pytest.raises(ValueError):
            parse_records("a,b\n1,2\n")

    def test_emit_writes_lf_files(self, tmp_path, tiny, tiny_run):
        opt = optimal_returns(tiny)
        s = summarize(tiny_run.records, opt, tiny.smoothing_window)
        paths = emit(s, tiny_run.records, tmp_path, tiny_run.distances, tiny.smoothing_window)
        names = sorted(p.name for p in paths)
        assert names == ["distances.csv", "optimal.csv", "plot_data.csv", "records.csv", "summary.json"]
        for p in paths:
            assert b"\r\n" not in p.read_bytes()
        back = json.loads((tmp_path / "summary.json").read_text())
        assert back["total_mean"] == s.total_mean
        assert harness.parse_optimal((tmp_path / "optimal.csv").read_text()) == opt

    def test_emit_twice_identical(self, tmp_path, tiny_run):
        s = summarize(tiny_run.records)
        for d in ("a", "b"):
            emit(s, tiny_run.records, tmp_path / d)
        for name in ("records.csv", "summary.json", "plot_data.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_unwritable_path_reported(self, tmp_path, tiny_run):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError, match=str(blocker)):
            emit(summarize(tiny_run.records), tiny_run.records, blocker / "out")

    def test_plot_data_columns(self, tiny_run):
        lines = harness.format_plot_data(tiny_run.records, 4).splitlines()
        assert lines[0] == "algorithm,task,epoch,smoothed_return"
        assert len(lines) == 1 + len(ALGORITHMS) * 3 * 12

    def test_snapshot_files(self, tmp_path, tiny):
        mdp_path, kb_path = harness.save_final_snapshot(tiny, 0, tmp_path)
        kb = json.loads(kb_path.read_text())
        assert len(kb["entries"]) == tiny.n_tasks - 1
        assert mdp_path.exists()
