"""
Transferring an upper bound from solved tasks
=============================================

Knowledge from a solved task caps the value of every pair in a new task by
Q_i + L d + P(N_i). When that cap falls below the optimal value of a state,
the pair can be ruled out without exploring it.
"""

import numpy as np

from lizero.distance import exact_distance
from lizero.knowledge import KnowledgeBase, TaskKnowledge, acceleration_factor, auct_bound, confidence_term
from lizero.mdp import QTable, TabularMdp, value_iteration

# the sampling term shrinks like 1/sqrt(N)
for n in (10, 100, 10_000, 10**8):
    print(f"P(N={n}) = {confidence_term(n, n, 0.05, 1.0, 0.9):.4f}")

# two versions of a three-armed bandit that differ slightly in the best arm
gamma = 0.9
p = np.ones((1, 3, 1))
source = TabularMdp(np.array([[0.9, 0.3, 0.1]]), p, gamma)
target = TabularMdp(np.array([[0.85, 0.3, 0.1]]), p, gamma)

d = exact_distance(target, source)
entry = TaskKnowledge(value_iteration(source), np.full((1, 3), 10**6), d, label="source")
kb = KnowledgeBase(gamma=gamma, delta=0.05).add(entry)
print("distance:", round(d.value, 4), " L:", kb.lipschitz_l)
print("transferred bounds:", [round(auct_bound(kb, 0, a), 3) for a in range(3)])

# the optimal value is 8.5; the two weaker arms are capped below it and pruned
q_star = value_iteration(target)
print("Q*:", np.round(q_star.values[0], 3))
report = acceleration_factor(q_star, kb)
print("pruned pairs:", sorted(report.s1), " acceleration factor:", round(report.gamma_factor, 3))

# with far fewer samples in the source task nothing can be pruned
weak = KnowledgeBase(gamma=gamma).add(TaskKnowledge(value_iteration(source), np.full((1, 3), 20), d))
print("with N=20:", round(acceleration_factor(q_star, weak).gamma_factor, 3))

# advantages near 1 leave little to gain: Gamma stays close to 1
close = QTable(np.array([[10.0, 0.5, 0.5]]), gamma)
print("large advantages:", round(acceleration_factor(close, kb).gamma_factor, 3))
