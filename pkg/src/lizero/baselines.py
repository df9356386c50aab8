"""Tabular lifelong-RL baselines: RMax and its Lipschitz-transfer extension LRMax.

RMax keeps an empirical model built from the first ``m_known`` visits of
each state-action pair. Pairs with fewer visits are "unknown" and valued
optimistically; the agent acts greedily on the optimistic Q table, which is
recomputed by value iteration each time a pair becomes known.

LRMax replaces the flat optimism ``r_max / (1 - gamma)`` for unknown pairs by
the transferred bound ``min(r_max / (1 - gamma), min_i Q_i + L d_i)`` built
from earlier tasks, with ``L = 1 / (1 - gamma)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .mdp import QTable

DEFAULT_M_KNOWN = 5


@numba.njit(cache=True)
def _optimistic_vi(q, known, r_hat, next_samples, optimism, gamma, stop, max_iter):
    n_states, n_actions = q.shape
    m = next_samples.shape[2]
    v = np.empty(n_states)
    for _ in range(max_iter):
        for s in range(n_states):
            best = q[s, 0]
            for a in range(1, n_actions):
                if q[s, a] > best:
                    best = q[s, a]
            v[s] = best
        gap = 0.0
        for s in range(n_states):
            for a in range(n_actions):
                if known[s, a]:
                    acc = 0.0
                    for k in range(m):
                        acc += v[next_samples[s, a, k]]
                    new = r_hat[s, a] + gamma * acc / m
                else:
                    new = optimism[s, a]
                diff = abs(new - q[s, a])
                if diff > gap:
                    gap = diff
                q[s, a] = new
        if gap <= stop:
            break


@dataclass(eq=False)
class RMaxState:
    """Mutable RMax agent for one task.

    ``transition_counts`` and ``reward_sums`` only accumulate the first
    ``known_threshold`` visits of a pair, so for known pairs they are exactly
    the frozen empirical model.
    """

    n_states: int
    n_actions: int
    gamma: float
    r_max: float = 1.0
    known_threshold: int = DEFAULT_M_KNOWN
    optimism: np.ndarray | None = None
    vi_tolerance: float = 1e-6
    counts: np.ndarray = field(init=False)
    reward_sums: np.ndarray = field(init=False)
    transition_counts: np.ndarray = field(init=False)
    q: QTable = field(init=False)

    def __post_init__(self):
        if self.known_threshold < 1:
            raise ValueError("known_threshold must be >= 1")
        shape = (self.n_states, self.n_actions)
        cap = self.v_max
        if self.optimism is None:
            self.optimism = np.full(shape, cap)
        else:
            self.optimism = np.minimum(np.asarray(self.optimism, dtype=np.float64), cap)
            if self.optimism.shape != shape:
                raise ValueError(f"optimism table must have shape {shape}")
        self.counts = np.zeros(shape, dtype=np.int64)
        self.reward_sums = np.zeros(shape)
        self.transition_counts = np.zeros(shape + (self.n_states,), dtype=np.int64)
        self._next_samples = np.zeros(shape + (self.known_threshold,), dtype=np.int64)
        self.q = QTable(np.array(self.optimism), self.gamma, self.r_max)

    @property
    def v_max(self) -> float:
        return self.r_max / (1.0 - self.gamma)

    @property
    def known(self) -> np.ndarray:
        return self.counts >= self.known_threshold

    def empirical_model(self) -> tuple[np.ndarray, np.ndarray]:
        """``(R_hat, P_hat)`` over visited pairs; rows of unvisited pairs are zero."""
        n = np.minimum(self.counts, self.known_threshold)
        with np.errstate(invalid="ignore", divide="ignore"):
            r_hat = np.where(n > 0, self.reward_sums / np.maximum(n, 1), 0.0)
            p_hat = self.transition_counts / np.maximum(n, 1)[..., None]
        return r_hat, p_hat

    def replan(self) -> None:
        known = self.known
        r_hat, _ = self.empirical_model()
        q = np.array(self.q.values)
        _optimistic_vi(q, known, r_hat, self._next_samples, self.optimism, self.gamma,
                       self.vi_tolerance * (1.0 - self.gamma), 100_000)
        self.q = QTable(q, self.gamma, self.r_max)


def rmax_act(agent: RMaxState, state: int) -> int:
    """Greedy action under the optimistic Q table (lowest id on ties)."""
    return int(np.argmax(agent.q.values[state]))


def rmax_observe(agent: RMaxState, state: int, action: int, reward: float, next_state: int) -> bool:
    """Record one transition; returns True when it made the pair known (and replanned)."""
    k = agent.counts[state, action]
    agent.counts[state, action] = k + 1
    if k >= agent.known_threshold:
        return False
    agent.reward_sums[state, action] += reward
    agent.transition_counts[state, action, next_state] += 1
    agent._next_samples[state, action, k] = next_state
    if k + 1 == agent.known_threshold:
        agent.replan()
        return True
    return False


@dataclass(frozen=True, eq=False)
class LRMaxBounds:
    """Transferred optimism from earlier tasks: ``U_i = Q_i + L d_i``."""

    gamma: float
    r_max: float = 1.0
    priors: tuple[tuple[QTable, float], ...] = ()

    @property
    def v_max(self) -> float:
        return self.r_max / (1.0 - self.gamma)

    @property
    def lipschitz_l(self) -> float:
        return 1.0 / (1.0 - self.gamma)

    def add(self, q: QTable, distance: float) -> "LRMaxBounds":
        return LRMaxBounds(self.gamma, self.r_max, self.priors + ((q, float(distance)),))

    def with_distances(self, distances) -> "LRMaxBounds":
        if len(distances) != len(self.priors):
            raise ValueError("need exactly one distance per prior")
        return LRMaxBounds(
            self.gamma, self.r_max, tuple((q, float(d)) for (q, _), d in zip(self.priors, distances))
        )

    def per_prior(self) -> list[np.ndarray]:
        return [q.values + self.lipschitz_l * d for q, d in self.priors]

    def combined(self, shape: tuple[int, int]) -> np.ndarray:
        out = np.full(shape, self.v_max)
        for u in self.per_prior():
            np.minimum(out, u, out=out)
        return out


def lrmax_combined_bound(bounds: LRMaxBounds, state: int, action: int) -> float:
    """``min(r_max / (1 - gamma), min_i Q_i(s, a) + L d_i)``."""
    best = bounds.v_max
    for q, d in bounds.priors:
        best = min(best, float(q.values[state, action]) + bounds.lipschitz_l * d)
    return best


def lrmax_agent(
    bounds: LRMaxBounds,
    n_states: int,
    n_actions: int,
    known_threshold: int = DEFAULT_M_KNOWN,
) -> RMaxState:
    """An RMax agent whose unknown pairs are valued by the transferred bound."""
    return RMaxState(
        n_states, n_actions, bounds.gamma, bounds.r_max, known_threshold,
        optimism=bounds.combined((n_states, n_actions)),
    )
