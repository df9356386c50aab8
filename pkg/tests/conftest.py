import numpy as np
import pytest

from lizero.mdp import TabularMdp


def random_mdp(rng, n_states=5, n_actions=3, gamma=0.9, sparsity=0.0):
    """Dense random MDP with rewards in [0, 1]; ``sparsity`` zeroes a share of each row."""
    p = rng.random((n_states, n_actions, n_states))
    if sparsity:
        p[rng.random(p.shape) < sparsity] = 0.0
        p[..., 0] += 1e-3
    p /= p.sum(axis=2, keepdims=True)
    return TabularMdp(rng.random((n_states, n_actions)), p, gamma)


def perturb(rng, mdp, scale=0.1):
    """A nearby MDP: rewards and rows nudged, rows renormalised."""
    r = np.clip(mdp.rewards + scale * rng.uniform(-1, 1, mdp.rewards.shape), 0.0, 1.0)
    p = mdp.transitions + scale * rng.random(mdp.transitions.shape)
    p /= p.sum(axis=2, keepdims=True)
    return TabularMdp(r, p, mdp.gamma)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def bandit():
    """One state, two self-looping arms paying 1 and 0."""
    return TabularMdp(np.array([[1.0, 0.0]]), np.ones((1, 2, 1)), 0.9)


@pytest.fixture
def five_state():
    """Fixed stochastic 5-state, 2-action chain used for convergence checks."""
    rng = np.random.default_rng(7)
    p = rng.dirichlet(np.full(5, 0.5), size=(5, 2))
    r = rng.random((5, 2))
    return TabularMdp(r, p, 0.5)


@pytest.fixture
def mdp_factory():
    return random_mdp


def sampled_q(mdp, q_star, n, rng):
    """Unbiased ``n``-sample estimate of ``Q*``: mean of ``R + gamma V*(s')`` draws."""
    v = q_star.max(axis=1)
    cum = np.cumsum(mdp.transitions, axis=2)
    u = rng.random(mdp.rewards.shape + (n,))
    nxt = np.minimum((cum[..., None, :] <= u[..., None]).sum(axis=-1), mdp.n_states - 1)
    return mdp.rewards + mdp.gamma * v[nxt].mean(axis=-1)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def report_criterion(number: int, passed: bool, detail: str) -> None:
    """Record an acceptance verdict; printed as one line per criterion after the run."""
    ACCEPTANCE[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
