"""
Global UCB maximization over the tree partition
===============================================

Encode the acquisition function for a fitted surrogate, solve it with
branch and bound, and compare against brute-force enumeration of cells
and against random sampling.
"""

import numpy as np

from leafgp import bench
from leafgp.acq import encode
from leafgp.gbdt import GbdtConfig, train
from leafgp.propose import midpoint, project
from leafgp.runner import rnd_acquisition
from leafgp.solver import SolveOptions, enumerate_exact, solve
from leafgp.space import ConstraintSet, Dataset, sample_uniform
from leafgp.tkgp import build_posterior, fit_hyperparams, standardize

rng = np.random.default_rng(1)
problem = bench.get("hartmann6d")
X = sample_uniform(problem.space, rng, 12)
y = np.array([problem(x) for x in X])
y_std = standardize(y)[0]
ens = train(Dataset(X, y_std), problem.space, GbdtConfig(max_depth=2, num_boost_rounds=4))
post = build_posterior(ens, fit_hyperparams(ens, X, y_std), Dataset(X, y))

acq = encode(post, kappa=1.96)
sol = solve(acq, SolveOptions(rel_gap=1e-9))
ref = enumerate_exact(acq)
print(f"branch and bound: {sol.objective:.6f} after {sol.n_nodes} nodes ({sol.status})")
print(f"enumeration:      {ref.objective:.6f} over {ref.n_nodes} cells")

x_rnd = rnd_acquisition(post, 1.96, problem.space, ConstraintSet(), 2000, rng)
print("random-sampling proposal:", np.round(x_rnd, 3))

# the next evaluation point is the midpoint of the optimal cell
x_next = project(midpoint(sol, rng), sol, problem.constraints, rng=rng).x
print("next point:", np.round(x_next, 3), " f =", round(problem(x_next), 4))
