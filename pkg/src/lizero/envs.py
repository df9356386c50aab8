"""Seeded generator for the corner-goal grid-world task family.

Each task is a square grid with the start in the centre cell, four moves
(up, down, left, right), three goal cells in the top-right corner and one in
the bottom-left. Goal rewards, background ("interference") rewards and the
slip probability are redrawn per task, so a sequence of tasks shares its
state/action spaces but not its dynamics.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mdp import TabularMdp

UP, DOWN, LEFT, RIGHT = 0, 1, 2, 3
ACTION_NAMES = ("up", "down", "left", "right")
_MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1))


def _check_interval(name: str, lo_hi) -> tuple[float, float]:
    lo, hi = (float(x) for x in lo_hi)
    if not (0.0 <= lo <= hi <= 1.0):
        raise ValueError(f"{name} must satisfy 0 <= lo <= hi <= 1, got {lo_hi!r}")
    return lo, hi


@dataclass(frozen=True)
class TightTaskConfig:
    grid_side: int = 25
    goal_reward_range: tuple[float, float] = (0.9, 1.0)
    interference_range: tuple[float, float] = (0.0, 0.1)
    slip_range: tuple[float, float] = (0.0, 0.1)
    gamma: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.grid_side < 3 or self.grid_side % 2 == 0:
            raise ValueError(f"grid_side must be an odd integer >= 3, got {self.grid_side}")
        for name in ("goal_reward_range", "interference_range", "slip_range"):
            object.__setattr__(self, name, _check_interval(name, getattr(self, name)))
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a non-negative 64-bit integer")

    @property
    def n_states(self) -> int:
        return self.grid_side**2

    @property
    def start_state(self) -> int:
        half = self.grid_side // 2
        return self.grid_side * half + half

    def goal_cells(self) -> list[int]:
        n = self.grid_side
        # top-right corner plus its left and lower neighbours, then bottom-left
        return [n - 1, n - 2, 2 * n - 1, (n - 1) * n]

    def to_dict(self) -> dict:
        return {
            "grid_side": self.grid_side,
            "goal_reward_range": list(self.goal_reward_range),
            "interference_range": list(self.interference_range),
            "slip_range": list(self.slip_range),
            "gamma": self.gamma,
            "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TightTaskConfig":
        kw = dict(d)
        for name in ("goal_reward_range", "interference_range", "slip_range"):
            if name in kw:
                kw[name] = tuple(kw[name])
        return cls(**kw)


@dataclass(frozen=True)
class TaskSequence:
    tasks: list[TabularMdp]
    seeds: list[int]
    config: TightTaskConfig = field(repr=False)

    def __len__(self):
        return len(self.tasks)

    def __getitem__(self, i):
        return self.tasks[i]

    def __iter__(self):
        return iter(self.tasks)


def grid_moves(grid_side: int) -> np.ndarray:
    """``(S, A)`` table of the cell reached by each intended move (walls block)."""
    n = grid_side
    dest = np.empty((n * n, 4), dtype=np.int64)
    for r in range(n):
        for c in range(n):
            for a, (dr, dc) in enumerate(_MOVES):
                rr, cc = r + dr, c + dc
                if not (0 <= rr < n and 0 <= cc < n):
                    rr, cc = r, c
                dest[r * n + c, a] = rr * n + cc
    return dest


def generate_task(config: TightTaskConfig, task_seed: int) -> TabularMdp:
    """Build one grid task; a pure function of ``(config, task_seed)``."""
    rng = np.random.default_rng(task_seed)
    n_states, n_actions = config.n_states, 4
    goals = config.goal_cells()

    cell_reward = rng.uniform(*config.interference_range, size=n_states)
    cell_reward[goals] = rng.uniform(*config.goal_reward_range, size=len(goals))
    p_slip = rng.uniform(*config.slip_range)

    dest = grid_moves(config.grid_side)
    action_mix = np.full((n_actions, n_actions), p_slip / (n_actions - 1))
    np.fill_diagonal(action_mix, 1.0 - p_slip)

    transitions = np.zeros((n_states, n_actions, n_states))
    for s in range(n_states):
        for a in range(n_actions):
            for executed in range(n_actions):
                transitions[s, a, dest[s, executed]] += action_mix[a, executed]
    transitions[goals] = 0.0
    for g in goals:
        transitions[g, :, g] = 1.0
    transitions /= transitions.sum(axis=2, keepdims=True)

    rewards = transitions @ cell_reward
    np.clip(rewards, 0.0, 1.0, out=rewards)
    return TabularMdp(rewards=rewards, transitions=transitions, gamma=config.gamma, r_max=1.0)


def task_seeds(config: TightTaskConfig, m: int) -> list[int]:
    children = np.random.SeedSequence(int(config.seed)).spawn(m)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def generate_sequence(config: TightTaskConfig, m: int) -> TaskSequence:
    """Draw ``m`` tasks with distinct seeds derived from ``config.seed``."""
    if m < 1:
        raise ValueError(f"task count must be >= 1, got {m}")
    seeds = task_seeds(config, m)
    return TaskSequence(
        tasks=[generate_task(config, s) for s in seeds], seeds=seeds, config=config
    )
