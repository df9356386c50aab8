"""
Tree search with UCT, pUCT and a transferred cap
================================================

Run the search on a two-armed bandit and on a small grid, then cap the bad
arm with a knowledge base and watch the visits shift to the good one.
"""

import numpy as np

from lizero.distance import DistanceEstimate
from lizero.envs import TightTaskConfig, generate_task
from lizero.knowledge import KnowledgeBase, TaskKnowledge
from lizero.mcts import MctsConfig, SearchTree, root_records, run_episode, run_search
from lizero.mdp import QTable, TabularMdp, value_iteration

bandit = TabularMdp(np.array([[1.0, 0.0]]), np.ones((1, 2, 1)), 0.9)
for rule in ("uct", "puct"):
    res = run_search(bandit, 0, MctsConfig(simulations_per_move=200, selection=rule, rollout_depth=0, max_depth=5))
    share = res.counts / res.counts.sum()
    print(f"{rule:5s} action {res.action}  visit share {np.round(share, 2)}  Q {np.round(res.q, 2)}")

# cap the zero arm at 0.4: the combined rule stops spending simulations on it
kb = KnowledgeBase(gamma=0.9).add(
    TaskKnowledge(QTable(np.array([[10.0, 0.4]]), 0.9), np.full((1, 2), 1e14), DistanceEstimate(0.0, "exact")))
res = run_search(bandit, 0, MctsConfig(simulations_per_move=200, selection="auct_combined",
                                       rollout_depth=0, max_depth=5), kb)
print("capped visit share", np.round(res.counts / res.counts.sum(), 3))
for row in root_records(res, kb, 0):
    print(row)

# on a grid the estimates approach Q* as the budget grows
grid = generate_task(TightTaskConfig(grid_side=5), 1)
start = TightTaskConfig(grid_side=5).start_state
q_star = value_iteration(grid).values[start]
for sims in (100, 1000, 20_000):
    res = run_search(grid, start, MctsConfig(simulations_per_move=sims, rollout_depth=0, max_depth=60))
    print(f"{sims:6d} sims: best action {res.action} (VI {q_star.argmax()}), "
          f"Q error {abs(res.q[res.action] - q_star.max()):.3f}")

# a full episode: search before every move, act on the most visited action
tree = SearchTree(grid.n_states, grid.n_actions, grid.v_max)
ret = run_episode(grid, start, 20, MctsConfig(simulations_per_move=50), tree, np.random.default_rng(0))
print("episode return over 20 steps:", round(ret, 3), " states in table:", len(tree))
