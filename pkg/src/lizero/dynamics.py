"""Tabular-logit dynamics models and the parameter-space distance bound.

A model holds one logit vector over next states and one scalar reward per
state-action pair. Models of two tasks are compared by the l2 distance of
their flattened parameters; with an empirical Lipschitz constant for the map
from parameters to predicted rows, that distance upper-bounds the MDP distance.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .mdp import Transition


@dataclass(frozen=True)
class FitSpec:
    steps: int = 300
    learning_rate: float = 5.0
    seed: int = 0
    init_scale: float = 0.01
    reward_weight: float = 1.0


@dataclass(frozen=True, eq=False)
class DynModelParams:
    next_state_logits: np.ndarray  # (S, A, S)
    reward_params: np.ndarray  # (S, A)

    def __post_init__(self):
        logits = np.array(self.next_state_logits, dtype=np.float64)
        rewards = np.array(self.reward_params, dtype=np.float64)
        if logits.ndim != 3 or logits.shape[:2] != rewards.shape or logits.shape[0] != logits.shape[2]:
            raise ValueError(f"incompatible shapes {logits.shape} and {rewards.shape}")
        if not (np.isfinite(logits).all() and np.isfinite(rewards).all()):
            raise ValueError("model parameters must be finite")
        logits.setflags(write=False)
        rewards.setflags(write=False)
        object.__setattr__(self, "next_state_logits", logits)
        object.__setattr__(self, "reward_params", rewards)

    @property
    def shape(self) -> tuple[int, int]:
        return self.reward_params.shape

    @property
    def flat_view(self) -> np.ndarray:
        """Parameters ordered state-major, then action, then logits followed by reward."""
        return np.concatenate(
            [self.next_state_logits, self.reward_params[..., None]], axis=2
        ).ravel()

    def predict_rows(self) -> np.ndarray:
        z = self.next_state_logits - self.next_state_logits.max(axis=2, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=2, keepdims=True)

    def to_dict(self) -> dict:
        s, a = self.shape
        return {"shape": [s, a, s + 1], "flat": self.flat_view.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "DynModelParams":
        s, a, k = d["shape"]
        arr = np.asarray(d["flat"], dtype=np.float64).reshape(s, a, k)
        return cls(arr[..., :-1], arr[..., -1])


def save_params(params: DynModelParams, path: str | Path) -> None:
    Path(path).write_text(json.dumps(params.to_dict()) + "\n")


def load_params(path: str | Path) -> DynModelParams:
    return DynModelParams.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class LipschitzEstimate:
    l_net: float
    probe_count: int


def initial_params(n_states: int, n_actions: int, spec: FitSpec) -> DynModelParams:
    rng = np.random.default_rng(spec.seed)
    logits = spec.init_scale * rng.standard_normal((n_states, n_actions, n_states))
    return DynModelParams(logits, np.zeros((n_states, n_actions)))


def sufficient_stats(samples: Sequence[Transition], n_states: int, n_actions: int):
    """Next-state counts ``(S, A, S)`` and reward sums ``(S, A)``."""
    arr = np.asarray(samples, dtype=np.float64).reshape(-1, 4)
    s = arr[:, 0].astype(np.int64)
    a = arr[:, 1].astype(np.int64)
    s2 = arr[:, 2].astype(np.int64)
    counts = np.zeros((n_states, n_actions, n_states))
    np.add.at(counts, (s, a, s2), 1.0)
    reward_sum = np.zeros((n_states, n_actions))
    np.add.at(reward_sum, (s, a), arr[:, 3])
    return counts, reward_sum


def fit_model(
    samples: Sequence[Transition],
    spec: FitSpec,
    n_states: int,
    n_actions: int,
) -> DynModelParams:
    """Fit logits and rewards by full-batch gradient descent.

    The loss per visited pair is the mean categorical negative log-likelihood
    of its observed next states plus ``reward_weight`` times half the squared
    reward error; unvisited pairs keep their initial parameters.
    """
    if len(samples) == 0:
        raise ValueError("cannot fit a model without samples")
    counts, reward_sum = sufficient_stats(samples, n_states, n_actions)
    return fit_from_counts(counts, reward_sum, spec)


def fit_from_counts(counts: np.ndarray, reward_sum: np.ndarray, spec: FitSpec) -> DynModelParams:
    n_states, n_actions = reward_sum.shape
    init = initial_params(n_states, n_actions, spec)
    logits = np.array(init.next_state_logits)
    reward = np.array(init.reward_params)
    n = counts.sum(axis=2)
    seen = n > 0
    target = np.zeros_like(counts)
    target[seen] = counts[seen] / n[seen][:, None]
    mean_r = np.zeros_like(reward)
    mean_r[seen] = reward_sum[seen] / n[seen]
    lr = spec.learning_rate
    for _ in range(spec.steps):
        z = logits[seen]
        z = z - z.max(axis=1, keepdims=True)
        p = np.exp(z)
        p /= p.sum(axis=1, keepdims=True)
        logits[seen] -= lr * (p - target[seen])
        reward[seen] -= min(lr, 1.0) * spec.reward_weight * (reward[seen] - mean_r[seen])
    return DynModelParams(logits, reward)


def param_distance(a: DynModelParams, b: DynModelParams) -> float:
    """l2 distance between the flattened parameter vectors."""
    if a.shape != b.shape:
        raise ValueError(f"parameter shapes differ: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a.flat_view - b.flat_view))


def estimate_lipschitz(
    pairs: Sequence[tuple[DynModelParams, DynModelParams]],
    probes: Sequence[tuple[int, int]],
    safety: float = 1.1,
) -> LipschitzEstimate:
    """Largest observed ``||row - row'||_1 / rho`` over pairs and probes, padded by ``safety``."""
    if not pairs or not probes:
        raise ValueError("need at least one model pair and one probe")
    probe_s = np.array([p[0] for p in probes])
    probe_a = np.array([p[1] for p in probes])
    worst = 0.0
    for a, b in pairs:
        rho = param_distance(a, b)
        if rho == 0.0:
            raise ValueError("a model pair with zero parameter distance has no defined ratio")
        ra = a.predict_rows()[probe_s, probe_a]
        rb = b.predict_rows()[probe_s, probe_a]
        gap = np.abs(ra - rb).sum(axis=1).max()
        worst = max(worst, gap / rho)
    return LipschitzEstimate(l_net=safety * worst, probe_count=len(probes))


def parametric_bound(rho: float, l_net: float, kappa: float) -> float:
    """Upper bound ``(1 + kappa) * l_net * rho`` on the MDP distance."""
    if rho < 0 or l_net < 0 or kappa < 0:
        raise ValueError("rho, l_net and kappa must be non-negative")
    return (1.0 + kappa) * l_net * rho
