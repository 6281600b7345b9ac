"""
Tree-kernel GP on a small 1-D problem
=====================================

Train a boosted ensemble, turn it into a GP kernel, and look at how the
posterior behaves inside and outside the data.
"""

import numpy as np

from leafgp.gbdt import GbdtConfig, train
from leafgp.space import Dataset, Feature, FeatureSpace
from leafgp.tkgp import build_posterior, fit_hyperparams, kernel, mean_var, standardize

rng = np.random.default_rng(0)
space = FeatureSpace([Feature.continuous(0, 1)])
X = rng.uniform(0, 0.6, (15, 1))
y = np.sin(8 * X[:, 0]) + 0.05 * rng.standard_normal(15)

# the ensemble is trained on standardized targets
y_std = standardize(y)[0]
ens = train(Dataset(X, y_std), space, GbdtConfig(max_depth=2, num_boost_rounds=10))
params = fit_hyperparams(ens, X, y_std)
post = build_posterior(ens, params, Dataset(X, y))
print("fitted sigma0^2 = %.4g, noise = %.4g" % (params.sigma0_sq, params.sigma_y_sq))

# kernel = sigma0^2 times the fraction of trees putting both points in the same leaf
for a, b in [(0.1, 0.1), (0.1, 0.12), (0.1, 0.5), (0.1, 0.95)]:
    print(f"k({a}, {b}) = {kernel(ens, params.sigma0_sq, [a], [b]):.4g}")

# the posterior is constant on each cell of the tree partition
for x in np.linspace(0, 1, 11):
    mu, var = mean_var(post, [x])
    print(f"x={x:.1f}  mean={mu:+.3f}  sd={np.sqrt(var):.3f}")
