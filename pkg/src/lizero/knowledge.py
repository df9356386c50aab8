"""Knowledge carried between tasks and the transferred upper confidence bound.

For a new task ``M`` and solved tasks ``M_i`` with estimates ``Q_i`` from
``N_i(s, a)`` samples, the transferred bound is

    U(s, a) = min_i [ Q_i(s, a) + L d(M, M_i) + P(N_i(s, a)) ]

with ``L = 1 / (1 - gamma)`` and the sampling confidence term

    P(N, N') = 2 r_max / (1 - gamma) * sqrt(ln(2 / delta) / (2 min(N, N'))).

Pairs never sampled in a source task contribute the global cap
``r_max / (1 - gamma)``; the bound is clamped to that cap as well.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

import numpy as np

from .distance import DistanceEstimate
from .mdp import QTable


def confidence_term(n: int, n_prime: int, delta: float, r_max: float, gamma: float) -> float:
    if n < 1 or n_prime < 1:
        raise ValueError("visit counts must be >= 1")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return 2.0 * r_max / (1.0 - gamma) * math.sqrt(math.log(2.0 / delta) / (2.0 * min(n, n_prime)))


def confidence_table(counts: np.ndarray, delta: float, r_max: float, gamma: float) -> np.ndarray:
    """Vectorised single-count confidence term; ``inf`` where the count is zero."""
    counts = np.asarray(counts, dtype=np.float64)
    out = np.full(counts.shape, np.inf)
    seen = counts > 0
    out[seen] = 2.0 * r_max / (1.0 - gamma) * np.sqrt(math.log(2.0 / delta) / (2.0 * counts[seen]))
    return out


@dataclass(frozen=True, eq=False)
class TaskKnowledge:
    q_values: QTable
    visit_counts: np.ndarray
    distance_to_current: DistanceEstimate | None = None
    label: str = ""

    def __post_init__(self):
        counts = np.array(self.visit_counts)
        if counts.shape != self.q_values.values.shape:
            raise ValueError("visit counts and Q table must have the same shape")
        if (counts < 0).any():
            raise ValueError("visit counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "visit_counts", counts)

    def with_distance(self, d: DistanceEstimate) -> "TaskKnowledge":
        return replace(self, distance_to_current=d)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "gamma": self.q_values.gamma,
            "r_max": self.q_values.r_max,
            "shape": list(self.q_values.values.shape),
            "q_values": self.q_values.values.ravel().tolist(),
            "visit_counts": self.visit_counts.ravel().tolist(),
            "distance": None if self.distance_to_current is None
            else self.distance_to_current.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TaskKnowledge":
        shape = tuple(d["shape"])
        q = QTable(np.asarray(d["q_values"], dtype=np.float64).reshape(shape),
                   d["gamma"], d["r_max"])
        dist = d.get("distance")
        return cls(
            q_values=q,
            visit_counts=np.asarray(d["visit_counts"], dtype=np.float64).reshape(shape),
            distance_to_current=None if dist is None else DistanceEstimate.from_dict(dist),
            label=d.get("label", ""),
        )


@dataclass(frozen=True, eq=False)
class KnowledgeBase:
    """Read-only collection of solved tasks used while searching a new task."""

    gamma: float
    r_max: float = 1.0
    delta: float = 0.05
    entries: tuple[TaskKnowledge, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        object.__setattr__(self, "entries", tuple(self.entries))

    @property
    def lipschitz_l(self) -> float:
        return 1.0 / (1.0 - self.gamma)

    @property
    def v_max(self) -> float:
        return self.r_max / (1.0 - self.gamma)

    def __len__(self) -> int:
        return len(self.entries)

    def add(self, entry: TaskKnowledge) -> "KnowledgeBase":
        return replace(self, entries=self.entries + (entry,))

    def with_distances(self, distances) -> "KnowledgeBase":
        if len(distances) != len(self.entries):
            raise ValueError("need exactly one distance per entry")
        return replace(
            self, entries=tuple(e.with_distance(d) for e, d in zip(self.entries, distances))
        )

    def entry_bounds(self, entry: TaskKnowledge) -> np.ndarray:
        """Per-pair bound transferred from a single source task."""
        if entry.distance_to_current is None:
            raise ValueError(f"entry {entry.label!r} has no distance to the current task")
        transfer = self.lipschitz_l * entry.distance_to_current.value
        conf = confidence_table(entry.visit_counts, self.delta, self.r_max, self.gamma)
        bound = entry.q_values.values + transfer + conf
        return np.where(entry.visit_counts > 0, bound, self.v_max)

    @cached_property
    def bounds(self) -> np.ndarray:
        """``(S, A)`` table of the transferred bound over all entries."""
        if not self.entries:
            return None
        out = np.full(self.entries[0].visit_counts.shape, self.v_max)
        for e in self.entries:
            np.minimum(out, self.entry_bounds(e), out=out)
        return out

    def bound_table(self, shape: tuple[int, int]) -> np.ndarray:
        if self.bounds is None:
            return np.full(shape, self.v_max)
        return np.array(self.bounds)

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "r_max": self.r_max,
            "delta": self.delta,
            "entries": [e.to_dict() for e in self.entries],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KnowledgeBase":
        return cls(
            gamma=d["gamma"],
            r_max=d["r_max"],
            delta=d["delta"],
            entries=tuple(TaskKnowledge.from_dict(e) for e in d["entries"]),
        )


def save_knowledge(kb: KnowledgeBase, path: str | Path) -> None:
    Path(path).write_text(json.dumps(kb.to_dict()) + "\n")


def load_knowledge(path: str | Path) -> KnowledgeBase:
    return KnowledgeBase.from_dict(json.loads(Path(path).read_text()))


def auct_bound(kb: KnowledgeBase, state: int, action: int) -> float:
    """Tightest transferred upper bound on ``Q*(state, action)`` of the current task."""
    best = kb.v_max
    for e in kb.entries:
        n_i = e.visit_counts[state, action]
        if n_i <= 0:
            continue
        term = (
            e.q_values.values[state, action]
            + kb.lipschitz_l * e.distance_to_current.value
            + confidence_term(n_i, n_i, kb.delta, kb.r_max, kb.gamma)
        )
        best = min(best, term)
    return float(best)


@dataclass(frozen=True)
class AccelerationReport:
    gamma_factor: float
    s1: frozenset
    s0: frozenset
    advantages: dict

    @property
    def pruned_fraction(self) -> float:
        total = len(self.s1) + len(self.s0)
        return len(self.s1) / total if total else 0.0


def acceleration_factor(q_star: QTable, kb: KnowledgeBase, optimal_tol: float = 1e-12) -> AccelerationReport:
    """Split suboptimal pairs by whether the transferred bound rules them out.

    ``S1`` holds pairs whose bound lies below the optimal value of their state,
    ``S0`` the remaining suboptimal pairs. With advantages normalised by
    ``r_max / (1 - gamma)`` the speed-up over plain UCT is

        sum_{S1 + S0} 1/adv^2  /  (|S1| + sum_{S0} 1/adv^2).
    """
    q = q_star.values
    v_star = q.max(axis=1, keepdims=True)
    adv = np.clip((v_star - q) / kb.v_max, 0.0, 1.0)
    bounds = kb.bound_table(q.shape)
    suboptimal = adv > optimal_tol
    pruned = suboptimal & (bounds < v_star)

    inv_sq = np.zeros_like(adv)
    inv_sq[suboptimal] = 1.0 / adv[suboptimal] ** 2
    numerator = inv_sq[suboptimal].sum()
    denominator = pruned.sum() + inv_sq[suboptimal & ~pruned].sum()
    gamma_factor = 1.0 if denominator == 0 else float(numerator / denominator)

    to_pairs = lambda mask: frozenset((int(s), int(a)) for s, a in zip(*np.nonzero(mask)))
    advantages = {(int(s), int(a)): float(adv[s, a]) for s, a in zip(*np.nonzero(suboptimal))}
    return AccelerationReport(gamma_factor, to_pairs(pruned), to_pairs(suboptimal & ~pruned), advantages)
