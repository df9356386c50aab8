"""Monte Carlo tree search over tabular MDPs with UCT, pUCT and transfer-capped UCT.

Statistics ``N(s)``, ``N(s, a)`` and ``W(s, a)`` are stored per state, so a
state reached along different paths shares one node and its estimates feed
straight into a per-task Q table. A simulation descends by the selection
rule until it crosses an edge for the first time, reaches a state without a
node, or hits ``max_depth``; it then rolls out uniformly at random for
``rollout_depth`` steps. The pair at depth ``t`` is credited with its own
discounted return-to-go, so ``W / N`` estimates discounted state-action values.

The inner loops are compiled with numba and draw all randomness from the
caller's ``numpy.random.Generator``.
"""
from __future__ import annotations

import hashlib
import math
import weakref
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numba
import numpy as np

from .knowledge import KnowledgeBase
from .mdp import TabularMdp

SELECTION_MODES = {"uct": 0, "puct": 1, "auct_combined": 2}
_UCT, _PUCT, _COMBINED = 0, 1, 2


@dataclass(frozen=True)
class MctsConfig:
    exploration_c: float = 1.0
    simulations_per_move: int = 50
    rollout_depth: int = 10
    max_depth: int = 50
    rollout_policy: str = "uniform-random"
    selection: str = "uct"
    seed: int = 0

    def __post_init__(self):
        if not self.exploration_c > 0:
            raise ValueError("exploration_c must be positive")
        if self.simulations_per_move < 1 or self.max_depth < 1 or self.rollout_depth < 0:
            raise ValueError("simulation budget and depths must be positive")
        if self.selection not in SELECTION_MODES:
            raise ValueError(f"unknown selection rule {self.selection!r}")
        if self.rollout_policy != "uniform-random":
            raise ValueError("only the uniform-random rollout policy is available")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


# --------------------------------------------------------------------------
# compiled environment


class CompiledMdp(NamedTuple):
    """Sparse successor lists with cumulative probabilities, per flattened pair."""

    ptr: np.ndarray
    succ: np.ndarray
    cum: np.ndarray
    rewards: np.ndarray
    n_actions: int
    gamma: float
    v_max: float


_compiled: "weakref.WeakKeyDictionary[TabularMdp, CompiledMdp]" = weakref.WeakKeyDictionary()


def compile_mdp(mdp: TabularMdp) -> CompiledMdp:
    cached = _compiled.get(mdp)
    if cached is not None:
        return cached
    flat = mdp.transitions.reshape(-1, mdp.n_states)
    nz_rows, nz_cols = np.nonzero(flat)
    counts = np.bincount(nz_rows, minlength=flat.shape[0])
    ptr = np.zeros(flat.shape[0] + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    cum = np.empty(len(nz_cols))
    for i in range(flat.shape[0]):
        lo, hi = ptr[i], ptr[i + 1]
        # same partial sums as a dense cumsum, zeros add nothing
        cum[lo:hi] = np.cumsum(flat[i, nz_cols[lo:hi]])
    compiled = CompiledMdp(
        ptr=ptr,
        succ=nz_cols.astype(np.int64),
        cum=cum,
        rewards=np.ascontiguousarray(mdp.rewards.ravel()),
        n_actions=mdp.n_actions,
        gamma=mdp.gamma,
        v_max=mdp.v_max,
    )
    _compiled[mdp] = compiled
    return compiled


@numba.njit(cache=True)
def _sample_next(ptr, succ, cum, pair, u):
    lo = ptr[pair]
    hi = ptr[pair + 1]
    for k in range(lo, hi):
        if cum[k] > u:
            return succ[k]
    return succ[hi - 1]


@numba.njit(cache=True)
def _select(n_row, w_row, n_s, bound_row, mode, c, cap):
    n_actions = n_row.shape[0]
    best = -np.inf
    best_a = 0
    for a in range(n_actions):
        n = n_row[a]
        if mode == 1:
            q = w_row[a] / n if n > 0 else 0.0
            score = q + c * (1.0 / n_actions) * math.sqrt(n_s) / (1.0 + n)
        else:
            if n == 0:
                score = cap
            else:
                score = w_row[a] / n + c * math.sqrt(math.log(n_s) / n)
            if mode == 2 and bound_row[a] < score:
                score = bound_row[a]
        if score > best:
            best = score
            best_a = a
    return best_a


@numba.njit(cache=True)
def _rollout(state, steps, ptr, succ, cum, rewards, n_actions, gamma, rng):
    total = 0.0
    disc = 1.0
    s = state
    for _ in range(steps):
        a = int(rng.random() * n_actions)
        if a == n_actions:
            a = n_actions - 1
        pair = s * n_actions + a
        total += disc * rewards[pair]
        disc *= gamma
        s = _sample_next(ptr, succ, cum, pair, rng.random())
    return total


@numba.njit(cache=True)
def _descend(root, n_sa, w_sa, n_s, known, bound, mode, c, cap, max_depth, rollout_depth,
             ptr, succ, cum, rewards, gamma, rng, path_s, path_a, path_r):
    n_actions = n_sa.shape[1]
    known[root] = True
    s = root
    depth = 0
    s_next = root
    while depth < max_depth:
        a = _select(n_sa[s], w_sa[s], n_s[s], bound[s], mode, c, cap)
        pair = s * n_actions + a
        fresh_edge = n_sa[s, a] == 0
        s_next = _sample_next(ptr, succ, cum, pair, rng.random())
        path_s[depth] = s
        path_a[depth] = a
        path_r[depth] = rewards[pair]
        depth += 1
        if fresh_edge or not known[s_next]:
            known[s_next] = True
            break
        s = s_next
    leaf = _rollout(s_next, rollout_depth, ptr, succ, cum, rewards, n_actions, gamma, rng)
    return depth, leaf


@numba.njit(cache=True)
def _backprop(n_sa, w_sa, n_s, path_s, path_a, path_r, depth, leaf, gamma):
    ret = leaf
    for t in range(depth - 1, -1, -1):
        ret = path_r[t] + gamma * ret
        s = path_s[t]
        a = path_a[t]
        n_sa[s, a] += 1
        w_sa[s, a] += ret
        n_s[s] += 1


@numba.njit(cache=True)
def _search(root, n_sims, n_sa, w_sa, n_s, known, bound, mode, c, cap, max_depth,
            rollout_depth, ptr, succ, cum, rewards, gamma, rng):
    path_s = np.empty(max_depth, dtype=np.int64)
    path_a = np.empty(max_depth, dtype=np.int64)
    path_r = np.empty(max_depth)
    for _ in range(n_sims):
        depth, leaf = _descend(root, n_sa, w_sa, n_s, known, bound, mode, c, cap, max_depth,
                               rollout_depth, ptr, succ, cum, rewards, gamma, rng,
                               path_s, path_a, path_r)
        _backprop(n_sa, w_sa, n_s, path_s, path_a, path_r, depth, leaf, gamma)


@numba.njit(cache=True)
def _most_visited(n_row):
    best = 0
    for a in range(1, n_row.shape[0]):
        if n_row[a] > n_row[best]:
            best = a
    return best


@numba.njit(cache=True)
def _episode(start, horizon, n_sims, n_sa, w_sa, n_s, known, bound, mode, c, cap, max_depth,
             rollout_depth, ptr, succ, cum, rewards, gamma, rng):
    n_actions = n_sa.shape[1]
    s = start
    total = 0.0
    for _ in range(horizon):
        _search(s, n_sims, n_sa, w_sa, n_s, known, bound, mode, c, cap, max_depth,
                rollout_depth, ptr, succ, cum, rewards, gamma, rng)
        a = _most_visited(n_sa[s])
        pair = s * n_actions + a
        total += rewards[pair]
        s = _sample_next(ptr, succ, cum, pair, rng.random())
    return total


# --------------------------------------------------------------------------
# tree and node views


class Edge(NamedTuple):
    action: int
    count: int
    total_return: float

    @property
    def q(self) -> float:
        return self.total_return / self.count if self.count else 0.0


class SearchTree:
    """Per-state search statistics for one task."""

    def __init__(self, n_states: int, n_actions: int, v_max: float = math.inf):
        self.v_max = float(v_max)
        self.n_sa = np.zeros((n_states, n_actions), dtype=np.int64)
        self.w_sa = np.zeros((n_states, n_actions))
        self.n_s = np.zeros(n_states, dtype=np.int64)
        self.known = np.zeros(n_states, dtype=np.bool_)

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_sa.shape

    def __contains__(self, state: int) -> bool:
        return bool(self.known[state])

    def __len__(self) -> int:
        return int(self.known.sum())

    def node(self, state: int) -> "SearchNode":
        self.known[state] = True
        return SearchNode(self, int(state))

    def q_values(self) -> np.ndarray:
        """``W / N`` with zeros for unvisited pairs."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.n_sa > 0, self.w_sa / np.maximum(self.n_sa, 1), 0.0)

    def copy(self) -> "SearchTree":
        out = SearchTree(*self.shape, v_max=self.v_max)
        for name in ("n_sa", "w_sa", "n_s", "known"):
            getattr(out, name)[...] = getattr(self, name)
        return out

    def digest(self) -> str:
        h = hashlib.sha256()
        for name in ("n_sa", "w_sa", "n_s", "known"):
            h.update(np.ascontiguousarray(getattr(self, name)).tobytes())
        return h.hexdigest()


class SearchNode:
    """View of one state's statistics inside a :class:`SearchTree`."""

    __slots__ = ("tree", "state")

    def __init__(self, tree: SearchTree, state: int):
        self.tree = tree
        self.state = state

    @property
    def visit_total(self) -> int:
        return int(self.tree.n_s[self.state])

    @property
    def edges(self) -> tuple[Edge, ...]:
        n = self.tree.n_sa[self.state]
        w = self.tree.w_sa[self.state]
        return tuple(Edge(a, int(n[a]), float(w[a])) for a in range(len(n)))

    def __repr__(self):
        return f"SearchNode(state={self.state}, N={self.visit_total})"


def _bound_rows(tree: SearchTree, config: MctsConfig, kb: KnowledgeBase | None, cap: float):
    if config.selection == "auct_combined":
        if kb is None:
            raise ValueError("auct_combined selection needs a KnowledgeBase")
        return np.ascontiguousarray(kb.bound_table(tree.shape))
    return np.full(tree.shape, cap)


def select_action(
    node: SearchNode,
    config: MctsConfig,
    kb: KnowledgeBase | None = None,
    v_max: float | None = None,
) -> int:
    """Pick the action maximising the configured score at ``node``.

    ``uct``: ``W/N + C sqrt(ln N(s) / N(s,a))``, unvisited actions scored
    ``v_max`` (the tree's cap unless given).
    ``puct``: ``W/N + C (1/|A|) sqrt(N(s)) / (1 + N(s,a))``, unvisited ``W/N`` taken as 0.
    ``auct_combined``: the UCT score capped by the transferred bound.
    Ties go to the lowest action id.
    """
    tree = node.tree
    cap = tree.v_max if v_max is None else v_max
    if config.selection == "auct_combined":
        if kb is None:
            raise ValueError("auct_combined selection needs a KnowledgeBase")
        bound_row = np.ascontiguousarray(kb.bound_table(tree.shape)[node.state])
    else:
        bound_row = np.full(tree.shape[1], cap)
    return int(_select(tree.n_sa[node.state], tree.w_sa[node.state], tree.n_s[node.state],
                       bound_row, SELECTION_MODES[config.selection],
                       float(config.exploration_c), float(cap)))


class Simulation(NamedTuple):
    path: list  # (state, action, reward) per tree step
    g: float  # discounted rollout return from the leaf state


def run_simulation(
    tree: SearchTree,
    root: int,
    env: TabularMdp,
    config: MctsConfig,
    kb: KnowledgeBase | None,
    rng: np.random.Generator,
) -> Simulation:
    """One selection/expansion/rollout pass followed by backpropagation."""
    cm = compile_mdp(env)
    bound = _bound_rows(tree, config, kb, env.v_max)
    path_s = np.empty(config.max_depth, dtype=np.int64)
    path_a = np.empty(config.max_depth, dtype=np.int64)
    path_r = np.empty(config.max_depth)
    depth, leaf = _descend(root, tree.n_sa, tree.w_sa, tree.n_s, tree.known, bound,
                           SELECTION_MODES[config.selection], float(config.exploration_c),
                           env.v_max, config.max_depth, config.rollout_depth,
                           cm.ptr, cm.succ, cm.cum, cm.rewards, env.gamma, rng,
                           path_s, path_a, path_r)
    _backprop(tree.n_sa, tree.w_sa, tree.n_s, path_s, path_a, path_r, depth, leaf, env.gamma)
    path = [(int(path_s[t]), int(path_a[t]), float(path_r[t])) for t in range(depth)]
    return Simulation(path, float(leaf))


def backpropagate(
    path: Sequence[tuple[SearchNode, int]],
    g: float,
    rewards: Sequence[float] | None = None,
    gamma: float = 1.0,
) -> None:
    """Fold one return into every ``(node, action)`` on ``path``.

    Without ``rewards`` every pair is credited ``g`` itself. With per-step
    ``rewards`` the pair at depth ``t`` receives
    ``sum_{k>=t} gamma^(k-t) r_k + gamma^(depth-t) g``.
    """
    if not path:
        raise ValueError("empty path")
    tree = path[0][0].tree
    depth = len(path)
    path_s = np.array([node.state for node, _ in path], dtype=np.int64)
    path_a = np.array([a for _, a in path], dtype=np.int64)
    if rewards is None:
        path_r, gamma = np.zeros(depth), 1.0
    else:
        path_r = np.asarray(rewards, dtype=np.float64)
    _backprop(tree.n_sa, tree.w_sa, tree.n_s, path_s, path_a, path_r, depth, float(g), float(gamma))


class SearchResult(NamedTuple):
    action: int
    counts: np.ndarray
    q: np.ndarray
    tree: SearchTree


def run_search(
    env: TabularMdp,
    root_state: int,
    config: MctsConfig,
    kb: KnowledgeBase | None = None,
    tree: SearchTree | None = None,
    rng: np.random.Generator | None = None,
) -> SearchResult:
    """Run ``simulations_per_move`` simulations from ``root_state``.

    Passing ``tree`` continues from earlier statistics; the chosen action is
    the most visited root action (lowest id on ties).
    """
    if tree is None:
        tree = SearchTree(env.n_states, env.n_actions, env.v_max)
    if rng is None:
        rng = np.random.default_rng(config.seed)
    cm = compile_mdp(env)
    bound = _bound_rows(tree, config, kb, env.v_max)
    _search(int(root_state), config.simulations_per_move, tree.n_sa, tree.w_sa, tree.n_s,
            tree.known, bound, SELECTION_MODES[config.selection], float(config.exploration_c),
            env.v_max, config.max_depth, config.rollout_depth, cm.ptr, cm.succ, cm.cum,
            cm.rewards, env.gamma, rng)
    counts = tree.n_sa[root_state].copy()
    q = tree.q_values()[root_state]
    return SearchResult(int(_most_visited(counts)), counts, q, tree)


def run_episode(
    env: TabularMdp,
    start: int,
    horizon: int,
    config: MctsConfig,
    tree: SearchTree,
    rng: np.random.Generator,
    bound: np.ndarray | None = None,
) -> float:
    """Act for ``horizon`` steps, searching before each move; returns the undiscounted return.

    ``bound`` is a precomputed ``(S, A)`` transfer table for ``auct_combined``.
    """
    cm = compile_mdp(env)
    if bound is None:
        if config.selection == "auct_combined":
            raise ValueError("auct_combined selection needs a bound table")
        bound = np.full(tree.shape, env.v_max)
    return float(_episode(int(start), int(horizon), config.simulations_per_move, tree.n_sa,
                          tree.w_sa, tree.n_s, tree.known, np.ascontiguousarray(bound),
                          SELECTION_MODES[config.selection], float(config.exploration_c),
                          env.v_max, config.max_depth, config.rollout_depth, cm.ptr, cm.succ,
                          cm.cum, cm.rewards, env.gamma, rng))


def root_records(result: SearchResult, kb: KnowledgeBase | None, state: int) -> list[dict]:
    """Flat per-action records of the root statistics, for tracing."""
    bounds = None if kb is None or kb.bounds is None else kb.bounds[state]
    return [
        {
            "action": a,
            "N": int(result.counts[a]),
            "Q": float(result.q[a]),
            "aUCT": None if bounds is None else float(bounds[a]),
        }
        for a in range(len(result.counts))
    ]
