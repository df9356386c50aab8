"""Tabular MDPs: representation, validation, simulation and an exact Q* solver."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

ROW_SUM_TOL = 1e-9


def _frozen(a, dtype=np.float64) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TabularMdp:
    """Finite MDP with dense rewards ``(S, A)`` and transitions ``(S, A, S)``.

    Rewards are expected one-step rewards ``R[s, a]`` in ``[0, r_max]``.
    Arrays are copied and made read-only on construction so instances can be
    shared freely between workers.
    """

    rewards: np.ndarray
    transitions: np.ndarray
    gamma: float
    r_max: float = 1.0

    def __post_init__(self):
        rewards = _frozen(self.rewards)
        transitions = _frozen(self.transitions)
        if rewards.ndim != 2:
            raise ValueError(f"rewards must be 2-d (S, A), got shape {rewards.shape}")
        if transitions.shape != rewards.shape + (rewards.shape[0],):
            raise ValueError(
                f"transitions shape {transitions.shape} does not match rewards {rewards.shape}"
            )
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "transitions", transitions)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "r_max", float(self.r_max))

    @property
    def n_states(self) -> int:
        return self.rewards.shape[0]

    @property
    def n_actions(self) -> int:
        return self.rewards.shape[1]

    @property
    def v_max(self) -> float:
        """Largest attainable discounted return, ``r_max / (1 - gamma)``."""
        return self.r_max / (1.0 - self.gamma)

    def same_spaces(self, other: "TabularMdp") -> bool:
        return self.rewards.shape == other.rewards.shape

    def to_dict(self) -> dict:
        return {
            "n_states": self.n_states,
            "n_actions": self.n_actions,
            "gamma": self.gamma,
            "r_max": self.r_max,
            "rewards": self.rewards.ravel().tolist(),
            "transitions": self.transitions.ravel().tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TabularMdp":
        s, a = int(d["n_states"]), int(d["n_actions"])
        return cls(
            rewards=np.asarray(d["rewards"], dtype=np.float64).reshape(s, a),
            transitions=np.asarray(d["transitions"], dtype=np.float64).reshape(s, a, s),
            gamma=d["gamma"],
            r_max=d.get("r_max", 1.0),
        )


class Violation(NamedTuple):
    state: int | None
    action: int | None
    rule: str
    detail: str

    def __str__(self):
        where = "" if self.state is None else f"(s={self.state}, a={self.action}) "
        return f"{where}{self.rule}: {self.detail}"


@dataclass(frozen=True)
class QTable:
    """State-action values with the discount of the MDP they belong to."""

    values: np.ndarray
    gamma: float
    r_max: float = 1.0

    @property
    def v_max(self) -> float:
        return self.r_max / (1.0 - self.gamma)

    def greedy(self) -> np.ndarray:
        # argmax picks the lowest action id on ties
        return np.argmax(self.values, axis=1)

    def state_values(self) -> np.ndarray:
        return self.values.max(axis=1)


class Transition(NamedTuple):
    state: int
    action: int
    next_state: int
    reward: float


def validate_mdp(mdp: TabularMdp) -> list[Violation]:
    """Check every invariant of ``mdp`` and list what fails (empty if valid)."""
    report: list[Violation] = []
    if not 0.0 < mdp.gamma < 1.0:
        report.append(Violation(None, None, "gamma", f"gamma={mdp.gamma} not in (0, 1)"))
    if not mdp.r_max > 0.0:
        report.append(Violation(None, None, "r_max", f"r_max={mdp.r_max} not positive"))
    sums = mdp.transitions.sum(axis=2)
    negative = (mdp.transitions < 0.0).any(axis=2)
    for s, a in zip(*np.nonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)):
        report.append(Violation(int(s), int(a), "row_sum", f"row sums to {sums[s, a]!r}"))
    for s, a in zip(*np.nonzero(negative)):
        report.append(Violation(int(s), int(a), "row_negative", "negative transition probability"))
    bad_r = (mdp.rewards < 0.0) | (mdp.rewards > mdp.r_max) | ~np.isfinite(mdp.rewards)
    for s, a in zip(*np.nonzero(bad_r)):
        report.append(
            Violation(int(s), int(a), "reward_range",
                      f"reward {mdp.rewards[s, a]!r} outside [0, {mdp.r_max}]")
        )
    return report


def _require_valid(mdp: TabularMdp) -> None:
    report = validate_mdp(mdp)
    if report:
        shown = "; ".join(str(v) for v in report[:5])
        raise ValueError(f"invalid MDP ({len(report)} violations): {shown}")


def bellman_backup(mdp: TabularMdp, q: np.ndarray) -> np.ndarray:
    return mdp.rewards + mdp.gamma * (mdp.transitions @ q.max(axis=1))


def value_iteration(
    mdp: TabularMdp,
    tolerance: float = 1e-8,
    q_init: np.ndarray | None = None,
    max_iter: int = 1_000_000,
) -> QTable:
    """Solve for Q* by value iteration.

    Iterates until the sup-norm change between successive iterates is at most
    ``tolerance * (1 - gamma)``, which bounds the sup-norm error to Q* by
    ``tolerance``.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    _require_valid(mdp)
    q = np.zeros(mdp.rewards.shape) if q_init is None else np.array(q_init, dtype=np.float64)
    stop = tolerance * (1.0 - mdp.gamma)
    for _ in range(max_iter):
        q_next = bellman_backup(mdp, q)
        gap = np.max(np.abs(q_next - q))
        q = q_next
        if gap <= stop:
            break
    return QTable(values=q, gamma=mdp.gamma, r_max=mdp.r_max)


def _check_ids(mdp: TabularMdp, state: int, action: int) -> None:
    if not (0 <= state < mdp.n_states and 0 <= action < mdp.n_actions):
        raise ValueError(
            f"(state={state}, action={action}) out of range for "
            f"{mdp.n_states} states x {mdp.n_actions} actions"
        )


def sample_step(mdp: TabularMdp, state: int, action: int, rng: np.random.Generator):
    """Draw ``(next_state, reward)`` from ``mdp`` using one uniform from ``rng``."""
    _check_ids(mdp, state, action)
    row = mdp.transitions[state, action]
    u = rng.random()
    nxt = int(np.searchsorted(np.cumsum(row), u, side="right"))
    # guards against a cumulative sum that ends a hair below 1
    nxt = min(nxt, mdp.n_states - 1)
    while row[nxt] == 0.0 and nxt > 0:
        nxt -= 1
    return nxt, float(mdp.rewards[state, action])


def sample_next_states(
    mdp: TabularMdp, states: np.ndarray, actions: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Vectorised :func:`sample_step`: one uniform per pair, identical inversion rule."""
    states = np.asarray(states, dtype=np.int64)
    actions = np.asarray(actions, dtype=np.int64)
    rows = mdp.transitions[states, actions]
    u = rng.random(len(states))
    nxt = (np.cumsum(rows, axis=1) <= u[:, None]).sum(axis=1)
    nxt = np.minimum(nxt, mdp.n_states - 1)
    for i in np.nonzero(rows[np.arange(len(nxt)), nxt] == 0.0)[0]:
        while rows[i, nxt[i]] == 0.0 and nxt[i] > 0:
            nxt[i] -= 1
    return nxt


def rollout_return(
    mdp: TabularMdp,
    policy: np.ndarray,
    start: int,
    horizon: int,
    rng: np.random.Generator,
) -> float:
    """Undiscounted return of a deterministic policy over ``horizon`` steps."""
    s, total = start, 0.0
    for _ in range(horizon):
        s_next, r = sample_step(mdp, s, int(policy[s]), rng)
        total += r
        s = s_next
    return total


def save_mdp(mdp: TabularMdp, path: str | Path) -> None:
    Path(path).write_text(json.dumps(mdp.to_dict()) + "\n", newline="\n")


def load_mdp(path: str | Path) -> TabularMdp:
    return TabularMdp.from_dict(json.loads(Path(path).read_text()))


def dumps_mdp(mdp: TabularMdp) -> str:
    return json.dumps(mdp.to_dict())
