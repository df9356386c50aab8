"""
Bounding the distance through fitted dynamics models
====================================================

Fit a tabular-logit model to samples from each task, compare the models in
parameter space, and turn that comparison into an upper bound on the true
distance using an empirical Lipschitz constant.
"""

import numpy as np

from lizero.distance import exact_distance, kappa
from lizero.dynamics import FitSpec, estimate_lipschitz, fit_model, param_distance, parametric_bound
from lizero.envs import TightTaskConfig, generate_sequence
from lizero.mdp import Transition, sample_next_states


def draw(mdp, per_pair, rng):
    s, a = np.divmod(np.arange(mdp.n_states * mdp.n_actions), mdp.n_actions)
    s, a = np.repeat(s, per_pair), np.repeat(a, per_pair)
    nxt = sample_next_states(mdp, s, a, rng)
    return [Transition(int(x), int(y), int(z), float(mdp.rewards[x, y])) for x, y, z in zip(s, a, nxt)]


rng = np.random.default_rng(0)
tasks = generate_sequence(TightTaskConfig(grid_side=5, seed=3), 4)
spec = FitSpec()
models = [fit_model(draw(t, 20, rng), spec, t.n_states, t.n_actions) for t in tasks]

# rows predicted by the model stay close to the true rows
tv = 0.5 * np.abs(models[0].predict_rows() - tasks[0].transitions).sum(axis=2)
print("mean total-variation error of fitted rows:", round(float(tv.mean()), 4))

# Lipschitz constant of the parameter-to-row map, from all model pairs on random probes
pairs = [(models[i], models[j]) for i in range(4) for j in range(i + 1, 4)]
probes = [(int(s), int(a)) for s, a in zip(rng.integers(0, 25, 32), rng.integers(0, 4, 32))]
l_net = estimate_lipschitz(pairs, probes).l_net
print("l_net:", round(l_net, 4))

k = kappa(tasks[0].gamma)
for i, j in [(0, 1), (0, 2), (2, 3)]:
    rho = param_distance(models[i], models[j])
    bound = parametric_bound(rho, l_net, k)
    print(f"tasks {i},{j}: rho {rho:.3f}  bound {bound:.3f}  exact {exact_distance(tasks[i], tasks[j]).value:.3f}")
