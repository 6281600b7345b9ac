"""
Constrained Bayesian optimization on G6
=======================================

Run the tree-kernel BO loop and the projected random baseline for a few
iterations and print the best feasible values side by side.
"""

import numpy as np

from leafgp import bench
from leafgp.runner import RunConfig, aggregate, run_bo

n_iter = 15
problem = bench.get("g6")
print(bench.describe(problem), " known best", problem.known_best)

curves = {}
for alg in ("leaf-gp", "feas-random"):
    hists = [run_bo(RunConfig("g6", n_iter=n_iter, seed=s, algorithm=alg)) for s in (101, 102)]
    assert all(st.feasible for h in hists for st in h.steps)
    curves[alg] = aggregate(hists)

print("iter   leaf-gp   feas-random  (median best feasible)")
for a, b in zip(curves["leaf-gp"], curves["feas-random"]):
    print(f"{a[0]:4d}  {a[1]:9.2f}  {b[1]:11.2f}")
