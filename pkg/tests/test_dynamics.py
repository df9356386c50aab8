import numpy as np
import pytest

from conftest import perturb, random_mdp
from lizero.distance import exact_distance, kappa
from lizero.dynamics import (
    DynModelParams,
    FitSpec,
    estimate_lipschitz,
    fit_from_counts,
    fit_model,
    initial_params,
    load_params,
    param_distance,
    parametric_bound,
    save_params,
    sufficient_stats,
)
from lizero.mdp import TabularMdp, Transition, sample_next_states


def draw(mdp, per_pair, rng):
    """``per_pair`` transitions from every state-action pair."""
    s, a = np.divmod(np.arange(mdp.n_states * mdp.n_actions), mdp.n_actions)
    s, a = np.repeat(s, per_pair), np.repeat(a, per_pair)
    nxt = sample_next_states(mdp, s, a, rng)
    return [Transition(int(x), int(y), int(z), float(mdp.rewards[x, y])) for x, y, z in zip(s, a, nxt)]


@pytest.fixture
def cycle4():
    """Deterministic 4-state, 2-action MDP: action 0 stays, action 1 advances."""
    p = np.zeros((4, 2, 4))
    for s in range(4):
        p[s, 0, s] = 1.0
        p[s, 1, (s + 1) % 4] = 1.0
    return TabularMdp(np.array([[0.1, 0.4], [0.2, 0.5], [0.3, 0.6], [0.9, 0.0]]), p, 0.9)


class TestParams:
    def test_flat_view_layout(self):
        logits = np.arange(8.0).reshape(2, 1, 2 * 2)[..., :2].reshape(2, 1, 2)
        rewards = np.array([[10.0], [20.0]])
        params = DynModelParams(logits, rewards)
        # state-major, then action, then logits followed by reward
        np.testing.assert_array_equal(params.flat_view, [0, 1, 10, 4, 5, 20])
        assert params.flat_view.size == 2 * 1 * (2 + 1)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            DynModelParams(np.full((1, 1, 1), np.nan), np.zeros((1, 1)))

    def test_rows_are_simplices(self, rng):
        params = DynModelParams(50 * rng.standard_normal((6, 3, 6)), np.zeros((6, 3)))
        rows = params.predict_rows()
        assert (rows >= 0).all()
        np.testing.assert_allclose(rows.sum(axis=2), 1.0, atol=1e-9)

    def test_serialisation_roundtrip(self, tmp_path, rng):
        params = DynModelParams(rng.standard_normal((3, 2, 3)), rng.random((3, 2)))
        save_params(params, tmp_path / "p.json")
        back = load_params(tmp_path / "p.json")
        np.testing.assert_array_equal(back.flat_view, params.flat_view)


class TestFit:
    def test_deterministic_rows_recovered(self, cycle4):
        samples = draw(cycle4, 10_000, np.random.default_rng(0))
        params = fit_model(samples, FitSpec(steps=500), 4, 2)
        tv = 0.5 * np.abs(params.predict_rows() - cycle4.transitions).sum(axis=2)
        assert tv.max() <= 0.05

    def test_rewards_converge(self, cycle4):
        params = fit_model(draw(cycle4, 100, np.random.default_rng(1)), FitSpec(), 4, 2)
        assert np.abs(params.reward_params - cycle4.rewards).max() <= 0.02

    def test_same_inputs_same_params(self, cycle4):
        samples = draw(cycle4, 20, np.random.default_rng(2))
        a = fit_model(samples, FitSpec(seed=4), 4, 2)
        b = fit_model(samples, FitSpec(seed=4), 4, 2)
        np.testing.assert_array_equal(a.flat_view, b.flat_view)

    def test_zero_steps_is_initialisation(self, cycle4):
        spec = FitSpec(steps=0, seed=9)
        fitted = fit_model(draw(cycle4, 3, np.random.default_rng(3)), spec, 4, 2)
        np.testing.assert_array_equal(fitted.flat_view, initial_params(4, 2, spec).flat_view)

    def test_empty_samples_rejected(self):
        with pytest.raises(ValueError):
            fit_model([], FitSpec(), 2, 2)

    def test_counts_path_matches_samples_path(self, cycle4):
        samples = draw(cycle4, 7, np.random.default_rng(5))
        counts, rsum = sufficient_stats(samples, 4, 2)
        assert counts.sum() == len(samples)
        a = fit_model(samples, FitSpec(), 4, 2)
        b = fit_from_counts(counts, rsum, FitSpec())
        np.testing.assert_array_equal(a.flat_view, b.flat_view)


class TestParamDistance:
    def test_identical(self, rng):
        p = DynModelParams(rng.standard_normal((3, 2, 3)), rng.random((3, 2)))
        assert param_distance(p, p) == 0.0

    def test_four_unit_offsets(self, rng):
        logits = rng.standard_normal((3, 2, 3))
        moved = logits.copy()
        moved[0, 0, :3] += 1.0
        rewards = rng.random((3, 2))
        r2 = rewards.copy()
        r2[2, 1] += 1.0
        # sqrt(1 + 1 + 1 + 1)
        assert param_distance(DynModelParams(logits, rewards), DynModelParams(moved, r2)) == pytest.approx(2.0)

    def test_symmetric(self, rng):
        a = DynModelParams(rng.standard_normal((3, 2, 3)), rng.random((3, 2)))
        b = DynModelParams(rng.standard_normal((3, 2, 3)), rng.random((3, 2)))
        assert param_distance(a, b) == param_distance(b, a)

    def test_shape_mismatch_rejected(self, rng):
        a = DynModelParams(np.zeros((3, 2, 3)), np.zeros((3, 2)))
        b = DynModelParams(np.zeros((2, 2, 2)), np.zeros((2, 2)))
        with pytest.raises(ValueError):
            param_distance(a, b)


class TestLipschitz:
    def test_direct_ratio(self):
        # logits (u, -u) vs (-u, u) give rows whose L1 gap is 2 tanh(u) = 0.3;
        # a reward offset on an unprobed pair brings rho up to 0.6
        u = np.arctanh(0.15)
        r = np.sqrt(0.36 - 8 * u**2)
        a = DynModelParams(np.array([[[u, -u]], [[0.0, 0.0]]]), np.zeros((2, 1)))
        b = DynModelParams(np.array([[[-u, u]], [[0.0, 0.0]]]), np.array([[0.0], [r]]))
        assert param_distance(a, b) == pytest.approx(0.6)
        est = estimate_lipschitz([(a, b)], [(0, 0)])
        assert est.l_net == pytest.approx(0.55)
        assert est.probe_count == 1

    def test_more_probes_never_lower(self, rng):
        a = DynModelParams(rng.standard_normal((4, 2, 4)), rng.random((4, 2)))
        b = DynModelParams(a.next_state_logits + 0.01 * rng.standard_normal((4, 2, 4)), a.reward_params)
        probes = [(s, x) for s in range(4) for x in range(2)]
        values = [estimate_lipschitz([(a, b)], probes[:k]).l_net for k in range(1, 9)]
        assert all(np.diff(values) >= 0)
        assert 0 < values[-1] < np.inf

    def test_zero_rho_rejected(self, rng):
        a = DynModelParams(rng.standard_normal((2, 1, 2)), np.zeros((2, 1)))
        with pytest.raises(ValueError, match="zero"):
            estimate_lipschitz([(a, a)], [(0, 0)])


class TestParametricBound:
    def test_arithmetic(self):
        assert parametric_bound(2.0, 0.5, 9.0) == pytest.approx(10.0)
        assert parametric_bound(0.0, 3.0, 9.0) == 0.0

    def test_monotone(self):
        base = parametric_bound(1.0, 1.0, 1.0)
        assert parametric_bound(1.5, 1.0, 1.0) >= base
        assert parametric_bound(1.0, 1.5, 1.0) >= base
        assert parametric_bound(1.0, 1.0, 1.5) >= base

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            parametric_bound(-1.0, 1.0, 1.0)

    def test_bound_covers_exact_distance(self):
        g = np.random.default_rng(11)
        spec = FitSpec()
        held = [(s, a) for s in range(4) for a in range(2)]
        ok = 0
        for _ in range(20):
            m = random_mdp(g, n_states=4, n_actions=2)
            mp = perturb(g, m, 0.3)
            fa = fit_model(draw(m, 200, g), spec, 4, 2)
            fb = fit_model(draw(mp, 200, g), spec, 4, 2)
            rho = param_distance(fa, fb)
            l_net = estimate_lipschitz([(fa, fb)], held).l_net
            ok += parametric_bound(rho, l_net, kappa(m.gamma)) >= exact_distance(m, mp).value
        assert ok >= 19
