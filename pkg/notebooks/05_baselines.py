"""
RMax and LRMax on a sequence of tasks
=====================================

RMax treats every pair as worth the maximal return until it has been tried
a few times. LRMax starts the same agent from bounds transferred from the
previous task, so it stops exploring pairs it already knows to be poor.
"""

import numpy as np

from lizero.baselines import LRMaxBounds, RMaxState, lrmax_agent, rmax_act, rmax_observe
from lizero.distance import exact_distance
from lizero.envs import TightTaskConfig, generate_sequence
from lizero.mdp import sample_step

config = TightTaskConfig(grid_side=5, seed=2)
tasks = generate_sequence(config, 2)


def play(agent, task, episodes, horizon, rng):
    totals = []
    for _ in range(episodes):
        s, total = config.start_state, 0.0
        for _ in range(horizon):
            a = rmax_act(agent, s)
            s2, r = sample_step(task, s, a, rng)
            rmax_observe(agent, s, a, r, s2)
            total += r
            s = s2
        totals.append(total)
    return np.array(totals)


rng = np.random.default_rng(0)
first = RMaxState(25, 4, tasks[0].gamma, known_threshold=3)
returns = play(first, tasks[0], 40, 20, rng)
print("task 1, RMax, mean return per 10 episodes:", np.round(returns.reshape(4, 10).mean(axis=1), 2))
print("known pairs after task 1:", int(first.known.sum()), "of", first.known.size)

# transfer: bound each pair of task 2 by Q_1 + L d(task2, task1)
d = exact_distance(tasks[1], tasks[0], "mean").value
bounds = LRMaxBounds(tasks[0].gamma).add(first.q, d)
print("distance:", round(d, 4), " mean optimism:", round(float(bounds.combined((25, 4)).mean()), 2), "vs cap 10")

for name, agent in (("RMax", RMaxState(25, 4, tasks[1].gamma, known_threshold=3)),
                    ("LRMax", lrmax_agent(bounds, 25, 4, known_threshold=3))):
    r = play(agent, tasks[1], 40, 20, np.random.default_rng(1))
    print(f"task 2, {name:5s}: first 10 episodes {r[:10].mean():.2f}, all {r.mean():.2f}")
