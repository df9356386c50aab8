import json

import numpy as np
import pytest

from lizero.mdp import (
    TabularMdp,
    dumps_mdp,
    load_mdp,
    rollout_return,
    sample_next_states,
    sample_step,
    save_mdp,
    validate_mdp,
    value_iteration,
)


def two_state():
    """s0: stay (r=1) or move (r=0); s1: back (r=0) or stay (r=2). Deterministic."""
    r = np.array([[1.0, 0.0], [0.0, 2.0]])
    p = np.zeros((2, 2, 2))
    p[0, 0, 0] = p[0, 1, 1] = p[1, 0, 0] = p[1, 1, 1] = 1.0
    return TabularMdp(r, p, 0.9, r_max=2.0)


class TestValidation:
    def test_valid_mdp_has_empty_report(self, rng, mdp_factory):
        assert validate_mdp(mdp_factory(rng)) == []

    def test_bad_row_sum_is_reported_with_location(self):
        p = np.full((2, 1, 2), 0.5)
        p[1, 0] = [0.5, 0.6]
        report = validate_mdp(TabularMdp(np.zeros((2, 1)), p, 0.9))
        assert [(v.state, v.action, v.rule) for v in report] == [(1, 0, "row_sum")]

    def test_reward_out_of_range(self):
        p = np.ones((1, 1, 1))
        report = validate_mdp(TabularMdp(np.array([[1.5]]), p, 0.9))
        assert report[0].rule == "reward_range"

    def test_gamma_one_rejected(self):
        report = validate_mdp(TabularMdp(np.zeros((1, 1)), np.ones((1, 1, 1)), 1.0))
        assert any(v.rule == "gamma" for v in report)

    def test_shape_mismatch_raises(self):
        with pytest.raises(ValueError):
            TabularMdp(np.zeros((2, 2)), np.ones((2, 2, 3)) / 3, 0.9)

    def test_arrays_are_read_only(self, rng, mdp_factory):
        m = mdp_factory(rng)
        with pytest.raises(ValueError):
            m.rewards[0, 0] = 0.5


class TestValueIteration:
    def test_two_state_closed_form(self):
        # V(s1) = 2/(1-0.9) = 20, V(s0) = 0 + 0.9*20 = 18; Q(s0, stay) = 1 + 0.9*18, Q(s1, back) = 0.9*18
        q = value_iteration(two_state(), tolerance=1e-10)
        np.testing.assert_allclose(q.values, [[17.2, 18.0], [16.2, 20.0]], atol=1e-9)
        assert list(q.greedy()) == [1, 1]

    def test_single_state_geometric_series(self):
        m = TabularMdp(np.array([[0.5]]), np.ones((1, 1, 1)), 0.8)
        assert value_iteration(m).values[0, 0] == pytest.approx(2.5, abs=1e-8)

    def test_matches_linear_solve_of_greedy_policy(self, rng, mdp_factory):
        # oracle: Q* is the fixed point, so V* solves (I - gamma P_pi) V = R_pi for its greedy pi
        m = mdp_factory(rng, n_states=6, n_actions=3)
        q = value_iteration(m, tolerance=1e-12)
        pi = q.greedy()
        idx = np.arange(6)
        v = np.linalg.solve(np.eye(6) - m.gamma * m.transitions[idx, pi], m.rewards[idx, pi])
        np.testing.assert_allclose(q.state_values(), v, atol=1e-9)

    def test_invalid_mdp_rejected(self):
        p = np.full((1, 1, 1), 0.5)
        with pytest.raises(ValueError, match="row_sum"):
            value_iteration(TabularMdp(np.zeros((1, 1)), p, 0.9))

    def test_nonpositive_tolerance_rejected(self):
        with pytest.raises(ValueError):
            value_iteration(two_state(), tolerance=0.0)

    def test_warm_start_reaches_same_fixed_point(self, rng, mdp_factory):
        m = mdp_factory(rng)
        cold = value_iteration(m, tolerance=1e-10)
        warm = value_iteration(m, tolerance=1e-10, q_init=np.full((5, 3), 10.0))
        np.testing.assert_allclose(cold.values, warm.values, atol=1e-9)


class TestSampling:
    def test_deterministic_row(self):
        m = two_state()
        g = np.random.default_rng(0)
        assert all(sample_step(m, 0, 1, g) == (1, 0.0) for _ in range(20))

    def test_empirical_frequencies(self):
        p = np.array([[[0.2, 0.5, 0.3]]] * 3)
        m = TabularMdp(np.zeros((3, 1)), p, 0.9)
        g = np.random.default_rng(1)
        draws = [sample_step(m, 0, 0, g)[0] for _ in range(20000)]
        np.testing.assert_allclose(np.bincount(draws) / 20000, [0.2, 0.5, 0.3], atol=0.015)

    def test_zero_probability_state_never_drawn(self):
        p = np.array([[[0.5, 0.0, 0.5]]] * 3)
        m = TabularMdp(np.zeros((3, 1)), p, 0.9)
        g = np.random.default_rng(2)
        assert 1 not in {sample_step(m, 0, 0, g)[0] for _ in range(2000)}

    def test_vectorised_sampler_matches_scalar(self, rng, mdp_factory):
        m = mdp_factory(rng, sparsity=0.5)
        states = rng.integers(0, 5, 500)
        actions = rng.integers(0, 3, 500)
        a = sample_next_states(m, states, actions, np.random.default_rng(9))
        g = np.random.default_rng(9)
        b = [sample_step(m, s, x, g)[0] for s, x in zip(states, actions)]
        assert list(a) == b

    def test_out_of_range_ids_rejected(self):
        with pytest.raises(ValueError):
            sample_step(two_state(), 2, 0, np.random.default_rng(0))

    def test_rollout_return_sums_rewards(self):
        m = two_state()
        assert rollout_return(m, np.array([1, 1]), 0, 4, np.random.default_rng(0)) == 6.0


class TestSerialisation:
    def test_roundtrip_through_file(self, tmp_path, rng, mdp_factory):
        m = mdp_factory(rng)
        save_mdp(m, tmp_path / "m.json")
        back = load_mdp(tmp_path / "m.json")
        np.testing.assert_array_equal(back.transitions, m.transitions)
        np.testing.assert_array_equal(back.rewards, m.rewards)
        assert back.gamma == m.gamma

    def test_flat_format_fields(self):
        d = json.loads(dumps_mdp(two_state()))
        assert d["n_states"] == 2 and d["n_actions"] == 2
        assert len(d["transitions"]) == 8 and d["r_max"] == 2.0


class TestSpecExamples:
    def test_single_state_reward_one(self):
        m = TabularMdp(np.array([[1.0]]), np.ones((1, 1, 1)), 0.9)
        assert value_iteration(m, tolerance=1e-12).values[0, 0] == pytest.approx(10.0, abs=1e-11)

    def test_two_state_chain_against_brute_force(self):
        p = np.zeros((2, 1, 2))
        p[0, 0, 1] = p[1, 0, 1] = 1.0
        m = TabularMdp(np.array([[0.0], [1.0]]), p, 0.5)
        q = value_iteration(m, tolerance=1e-12).values[:, 0]
        # hand solution: Q(s1) = 1 + 0.5 Q(s1) = 2, Q(s0) = 0.5 * 2 = 1
        brute = np.zeros(2)
        for _ in range(1000):
            brute = np.array([0.5 * brute[1], 1.0 + 0.5 * brute[1]])
        np.testing.assert_allclose(q, [1.0, 2.0], atol=1e-11)
        np.testing.assert_allclose(q, brute, atol=1e-11)

    def test_zero_rewards_give_zero_table(self, rng, mdp_factory):
        m = mdp_factory(rng)
        z = TabularMdp(np.zeros_like(m.rewards), m.transitions, m.gamma)
        assert not value_iteration(z).values.any()

    def test_half_half_row_frequency(self):
        m = TabularMdp(np.zeros((2, 1)), np.full((2, 1, 2), 0.5), 0.9)
        g = np.random.default_rng(2024)
        draws = sample_next_states(m, np.zeros(100_000, dtype=int), np.zeros(100_000, dtype=int), g)
        assert 0.48 <= np.mean(draws == 0) <= 0.52

    def test_fresh_generators_agree(self, rng, mdp_factory):
        m = mdp_factory(rng)
        a = [sample_step(m, 1, 2, np.random.default_rng(5)) for _ in range(3)]
        assert a[0] == a[1] == a[2]
