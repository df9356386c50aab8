"""Distances between tabular MDPs and their sample-based estimators.

The per-pair gap is ``dX(s, a) = |R - R'|(s, a) + kappa * dP(s, a)`` with
``kappa = r_max * gamma / (1 - gamma)``. The transition gap ``dP`` is either
the full L1 distance between the two next-state rows (``"l1"``, default) or
that distance averaged over next states (``"mean"``), which is the literal
reading of an expectation over uniformly drawn ``(s, a, s')`` triples. The
distance itself is the uniform average of ``dX`` over all pairs.

Importance-sampled estimators reweight pairs drawn from a search policy
``pi(s, a)`` by ``p_U(s, a) / pi(s, a)`` where ``p_U = 1 / (|S| |A|)``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Literal, NamedTuple, Sequence

import numpy as np

from .mdp import TabularMdp

TransitionGap = Literal["l1", "mean"]
METHODS = ("exact", "stationary_is", "adaptive_is", "parametric")
SAMPLING_METHODS = ("stationary_is", "adaptive_is")


def kappa(gamma: float, r_max: float = 1.0) -> float:
    """Weight of the transition gap relative to the reward gap."""
    return r_max * gamma / (1.0 - gamma)


@dataclass(frozen=True)
class DistanceEstimate:
    value: float
    method: str
    n_samples: int = 0
    epsilon: float | None = None
    delta: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not self.value >= 0.0:
            raise ValueError(f"distance must be non-negative, got {self.value}")
        certified = self.epsilon is not None and self.delta is not None
        if certified != (self.method in SAMPLING_METHODS):
            raise ValueError("epsilon/delta are given exactly for sampling methods")

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "method": self.method,
            "n_samples": self.n_samples,
            "epsilon": self.epsilon,
            "delta": self.delta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DistanceEstimate":
        return cls(**d)


class WeightedSample(NamedTuple):
    state: int
    action: int
    policy_prob: float
    weight: float
    delta_x: float


def _check_pair(m: TabularMdp, m_prime: TabularMdp) -> None:
    if not m.same_spaces(m_prime):
        raise ValueError(
            f"MDPs live on different spaces: {m.rewards.shape} vs {m_prime.rewards.shape}"
        )
    if m.gamma != m_prime.gamma or m.r_max != m_prime.r_max:
        raise ValueError("MDPs must share gamma and r_max")


def pair_delta_table(
    m: TabularMdp, m_prime: TabularMdp, transition_gap: TransitionGap = "l1"
) -> np.ndarray:
    """``dX(s, a)`` for every pair as an ``(S, A)`` array."""
    _check_pair(m, m_prime)
    d_r = np.abs(m.rewards - m_prime.rewards)
    d_p = np.abs(m.transitions - m_prime.transitions).sum(axis=2)
    if transition_gap == "mean":
        d_p = d_p / m.n_states
    elif transition_gap != "l1":
        raise ValueError(f"transition_gap must be 'l1' or 'mean', got {transition_gap!r}")
    return d_r + kappa(m.gamma, m.r_max) * d_p


def pair_delta(
    m: TabularMdp,
    m_prime: TabularMdp,
    state: int,
    action: int,
    transition_gap: TransitionGap = "l1",
) -> float:
    _check_pair(m, m_prime)
    d_r = abs(m.rewards[state, action] - m_prime.rewards[state, action])
    d_p = float(np.abs(m.transitions[state, action] - m_prime.transitions[state, action]).sum())
    if transition_gap == "mean":
        d_p /= m.n_states
    return float(d_r + kappa(m.gamma, m.r_max) * d_p)


def exact_distance(
    m: TabularMdp, m_prime: TabularMdp, transition_gap: TransitionGap = "l1"
) -> DistanceEstimate:
    """Enumerate all pairs under the uniform distribution."""
    table = pair_delta_table(m, m_prime, transition_gap)
    return DistanceEstimate(value=float(table.mean()), method="exact")


def default_b(gamma: float, r_max: float = 1.0, n_states: int | None = None,
              transition_gap: TransitionGap = "l1") -> float:
    """Worst-case ``dX``: full reward range plus an L1 row gap of 2."""
    gap = 2.0 if transition_gap == "l1" else 2.0 / n_states
    return r_max + kappa(gamma, r_max) * gap


def _hoeffding_factor(mode: str) -> float:
    if mode == "stationary":
        return 0.5
    if mode == "adaptive":
        return 2.0
    raise ValueError(f"mode must be 'stationary' or 'adaptive', got {mode!r}")


def _check_bound_args(delta, b, p_u_max, alpha):
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not b > 0.0:
        raise ValueError("b must be positive")
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    if not 0.0 < p_u_max <= 1.0:
        raise ValueError("p_u_max must lie in (0, 1]")


def required_samples_real(epsilon, delta, b, p_u_max, alpha, mode="stationary") -> float:
    if not epsilon > 0.0:
        raise ValueError("epsilon must be positive")
    _check_bound_args(delta, b, p_u_max, alpha)
    c = b * p_u_max / alpha
    return _hoeffding_factor(mode) * c * c * math.log(2.0 / delta) / (epsilon * epsilon)


def required_samples(epsilon, delta, b, p_u_max, alpha, mode="stationary") -> int:
    """Smallest ``n`` for which the Hoeffding (or Azuma) bound certifies ``(epsilon, delta)``.

    ``stationary``: ``n >= b^2 (p_u_max/alpha)^2 ln(2/delta) / (2 eps^2)``;
    ``adaptive`` (martingale) needs four times as many.
    """
    return math.ceil(required_samples_real(epsilon, delta, b, p_u_max, alpha, mode))


def certified_epsilon(n, delta, b, p_u_max, alpha, mode="stationary") -> float:
    """Inverse of :func:`required_samples`: the error certified by ``n`` samples."""
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_bound_args(delta, b, p_u_max, alpha)
    c = b * p_u_max / alpha
    return c * math.sqrt(_hoeffding_factor(mode) * math.log(2.0 / delta) / n)


def _weighted_mean(samples: Sequence[WeightedSample]) -> float:
    # fixed left-to-right reduction keeps results bit-stable
    total = math.fsum(s.weight * s.delta_x for s in samples)
    return total / len(samples)


def _certificate(samples, delta, b, p_u_max, alpha, mode):
    if b is None:
        b = max(s.delta_x for s in samples) or 1.0
    if alpha is None:
        alpha = min(s.policy_prob for s in samples)
    if p_u_max is None:
        p_u_max = max(s.weight * s.policy_prob for s in samples)
    return certified_epsilon(len(samples), delta, b, p_u_max, alpha, mode)


def estimate_stationary(
    samples: Sequence[WeightedSample],
    delta: float = 0.1,
    b: float | None = None,
    p_u_max: float | None = None,
    alpha: float | None = None,
) -> DistanceEstimate:
    """Importance-sampled mean ``(1/n) sum w_i dX_i`` for a fixed sampling policy.

    The attached ``epsilon`` is what Hoeffding certifies at ``delta`` for this
    ``n``; any of ``b``, ``p_u_max``, ``alpha`` left out is read off the samples.
    """
    if not samples:
        raise ValueError("cannot estimate a distance from zero samples")
    _reject_uncovered(samples)
    eps = _certificate(samples, delta, b, p_u_max, alpha, "stationary")
    return DistanceEstimate(_weighted_mean(samples), "stationary_is", len(samples), eps, delta)


def estimate_adaptive(
    stream: Sequence[WeightedSample],
    delta: float = 0.1,
    b: float | None = None,
    p_u_max: float | None = None,
    alpha: float | None = None,
) -> DistanceEstimate:
    """Running importance-sampled mean over a stream whose policy changes per step.

    Each sample's weight must use the policy in force when it was drawn; the
    centred terms then form a martingale difference sequence and Azuma-Hoeffding
    gives the certificate.
    """
    if not stream:
        raise ValueError("cannot estimate a distance from an empty stream")
    _reject_uncovered(stream)
    eps = _certificate(stream, delta, b, p_u_max, alpha, "adaptive")
    return DistanceEstimate(_weighted_mean(stream), "adaptive_is", len(stream), eps, delta)


def _reject_uncovered(samples):
    for i, s in enumerate(samples):
        if not s.policy_prob > 0.0:
            raise ValueError(f"sample {i} has policy_prob {s.policy_prob}; coverage violated")
        if not math.isfinite(s.weight):
            raise ValueError(f"sample {i} has non-finite weight")


def draw_weighted_samples(
    m: TabularMdp,
    m_prime: TabularMdp,
    policies: Sequence[np.ndarray] | np.ndarray,
    n: int,
    rng: np.random.Generator,
    transition_gap: TransitionGap = "l1",
) -> list[WeightedSample]:
    """Draw ``n`` pairs, the k-th from ``policies[k % len(policies)]``.

    Each policy is an ``(S, A)`` array of state-action sampling probabilities.
    A single array gives a stationary sample; a list gives a non-stationary
    stream where every weight uses the policy it was drawn from.
    """
    policies = [np.asarray(policies)] if np.ndim(policies) == 2 else [np.asarray(p) for p in policies]
    n_pairs = m.n_states * m.n_actions
    p_u = 1.0 / n_pairs
    flat = [p.ravel() / p.sum() for p in policies]
    cums = [np.cumsum(p) for p in flat]
    table = pair_delta_table(m, m_prime, transition_gap).ravel()
    block = np.arange(n) % len(flat)
    u = rng.random(n)
    idx = np.empty(n, dtype=np.int64)
    probs = np.empty(n)
    for j in range(len(flat)):
        sel = block == j
        hit = np.minimum(np.searchsorted(cums[j], u[sel], side="right"), n_pairs - 1)
        idx[sel] = hit
        probs[sel] = flat[j][hit]
    states, actions = np.divmod(idx, m.n_actions)
    return [
        WeightedSample(int(s), int(a), float(p), p_u / float(p), float(x))
        for s, a, p, x in zip(states, actions, probs, table[idx])
    ]


def coverage_mixture(visits: np.ndarray, floor: float) -> np.ndarray:
    """Mix normalised visit counts with the uniform distribution.

    Every pair then has probability at least ``floor / (S A)``.
    """
    visits = np.asarray(visits, dtype=np.float64)
    uniform = np.full(visits.shape, 1.0 / visits.size)
    total = visits.sum()
    occupancy = visits / total if total > 0 else uniform
    return floor * uniform + (1.0 - floor) * occupancy


SAMPLE_LOG_FIELDS = ("step", "state", "action", "policy_prob", "delta_x")


def dumps_sample_log(samples: Iterable[WeightedSample]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SAMPLE_LOG_FIELDS)
    for k, s in enumerate(samples):
        w.writerow([k, s.state, s.action, repr(s.policy_prob), repr(s.delta_x)])
    return buf.getvalue()


def loads_sample_log(text: str, p_u: float) -> list[WeightedSample]:
    """Rebuild samples from a log; weights are recomputed as ``p_u / policy_prob``."""
    rows = list(csv.DictReader(io.StringIO(text)))
    rows.sort(key=lambda r: int(r["step"]))
    out = []
    for r in rows:
        prob = float(r["policy_prob"])
        out.append(WeightedSample(int(r["state"]), int(r["action"]), prob,
                                  p_u / prob, float(r["delta_x"])))
    return out
