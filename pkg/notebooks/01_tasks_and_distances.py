"""
Task families and the distance between two MDPs
================================================

Generate two grid tasks, measure how far apart they are exactly, and then
estimate the same quantity from importance-weighted samples with a sample
size chosen to certify a given error.
"""

import numpy as np

from lizero.distance import (
    coverage_mixture,
    default_b,
    draw_weighted_samples,
    estimate_adaptive,
    estimate_stationary,
    exact_distance,
    pair_delta_table,
    required_samples,
)
from lizero.envs import TightTaskConfig, generate_sequence

# a 7x7 grid: start in the centre, goals in two corners, slip and rewards redrawn per task
config = TightTaskConfig(grid_side=7, seed=0)
tasks = generate_sequence(config, 3)
m, m2 = tasks[0], tasks[1]
print("states, actions:", m.n_states, m.n_actions)

# exact distance: the uniform average of the per-pair gap |dR| + kappa * dP
for gap in ("l1", "mean"):
    print(f"exact distance ({gap}):", round(exact_distance(m, m2, gap).value, 4))

# the per-pair gaps are largest around the goals, where rewards differ most
table = pair_delta_table(m, m2)
print("largest pair gap at state", np.unravel_index(table.argmax(), table.shape)[0])

# importance sampling from a policy that visits some pairs far more often
rng = np.random.default_rng(1)
visits = rng.gamma(0.3, size=m.rewards.shape)
pi = coverage_mixture(visits, floor=0.5)
n_pairs = m.n_states * m.n_actions
p_u, alpha = 1.0 / n_pairs, pi.min()
b = float(table.max())

n = required_samples(0.05, 0.1, b, p_u, alpha)
est = estimate_stationary(draw_weighted_samples(m, m2, pi, n, rng), 0.1, b, p_u, alpha)
print(f"stationary estimate {est.value:.4f} from n={n}, certified eps {est.epsilon:.3f}")

# a stream whose sampling policy changes over time needs four times as many samples
policies = [coverage_mixture(rng.gamma(0.3, size=m.rewards.shape), 0.5) for _ in range(5)]
alpha = min(p.min() for p in policies)
n = required_samples(0.05, 0.1, b, p_u, alpha, "adaptive")
est = estimate_adaptive(draw_weighted_samples(m, m2, policies, n, rng), 0.1, b, p_u, alpha)
print(f"adaptive estimate {est.value:.4f} from n={n}")

# without knowing the pair gaps in advance, the worst-case bound b is much larger
print("worst-case b:", default_b(m.gamma), "observed max:", round(b, 3))
