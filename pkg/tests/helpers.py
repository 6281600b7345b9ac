"""Random instance builders and independent reference implementations."""
import itertools

import numpy as np

from leafgp.acq import encode
from leafgp.gbdt import GbdtConfig, Tree, TreeEnsemble, train
from leafgp.space import ConstraintSet, Dataset, Feature, FeatureSpace, PolyConstraint, sample_uniform
from leafgp.tkgp import KernelParams, build_posterior


def random_space(rng, n_feat, kinds=("continuous", "integer", "categorical")):
    feats = []
    for _ in range(n_feat):
        kind = kinds[rng.integers(len(kinds))]
        if kind == "continuous":
            lb = float(rng.uniform(-2, 1))
            feats.append(Feature.continuous(lb, lb + float(rng.uniform(0.5, 3))))
        elif kind == "integer":
            lb = int(rng.integers(-3, 2))
            feats.append(Feature.integer(lb, lb + int(rng.integers(2, 7))))
        else:
            feats.append(Feature.categorical([f"c{j}" for j in range(int(rng.integers(2, 5)))]))
    return FeatureSpace(feats)


def random_posterior(rng, n_feat=3, m=12, n_trees=4, depth=2, kinds=("continuous", "integer", "categorical"),
                     params=None):
    space = random_space(rng, n_feat, kinds)
    X = sample_uniform(space, rng, m)
    y = np.sin(3 * X.sum(axis=1)) + 0.3 * rng.standard_normal(m)
    data = Dataset(X, y)
    cfg = GbdtConfig(max_depth=depth, num_boost_rounds=n_trees, learning_rate=0.5)
    ens = train(Dataset(X, (y - y.mean()) / (y.std() or 1.0)), space, cfg)
    if params is None:
        params = KernelParams(float(rng.uniform(0.05, 1.0)) ** 2, float(rng.uniform(0.1, 1.0)) ** 2)
    return build_posterior(ens, params, data)


def random_linear_constraints(rng, space, count):
    """Linear inequalities that keep a random interior point feasible."""
    num = space.num_idx
    x0 = np.array([0.5 * (f.lb + f.ub) for f in space.features])
    cons = []
    for _ in range(count):
        a = rng.standard_normal(len(num))
        slack = float(rng.uniform(0.0, 0.5))
        b = float(a @ x0[num]) + slack
        terms = [(float(ai), [(i, 1)]) for ai, i in zip(a, num)] + [(-b, [])]
        cons.append(PolyConstraint(terms, "le"))
    return ConstraintSet(cons)


def random_problem(rng, kappa=None, n_cons=0, **kw):
    post = random_posterior(rng, **kw)
    cons = random_linear_constraints(rng, post.ens.space, n_cons) if n_cons else None
    kappa = float(rng.uniform(0, 3)) if kappa is None else kappa
    return encode(post, kappa, cons)


def stump(feature, threshold, left=1.0, right=2.0):
    t = Tree()
    root = t._add(feature=feature, threshold=threshold)
    t.left[root] = t._add(value=left)
    t.right[root] = t._add(value=right)
    return t.finalize()


def cat_stump(feature, left_cats, left=1.0, right=2.0):
    t = Tree()
    root = t._add(feature=feature, cat_left=frozenset(left_cats))
    t.left[root] = t._add(value=left)
    t.right[root] = t._add(value=right)
    return t.finalize()


def leaf_only(value=0.0):
    t = Tree()
    t._add(value=value)
    return t.finalize()


def ensemble(trees, space):
    return TreeEnsemble(list(trees), space)


# --- reference implementations --------------------------------------------------------

def dense_kernel_matrix(ens, sigma0_sq, X1, X2):
    """Pairwise kernel by explicit leaf comparison, one pair at a time."""
    K = np.zeros((len(X1), len(X2)))
    for i, a in enumerate(X1):
        la = [t.assign_leaf(a) for t in ens.trees]
        for j, b in enumerate(X2):
            lb = [t.assign_leaf(b) for t in ens.trees]
            K[i, j] = sigma0_sq * (sum(u == v for u, v in zip(la, lb)) / ens.n_trees)
    return K


def dense_mean_var(post, x):
    """Posterior mean and variance with an explicit matrix inverse."""
    p = post.params
    K = dense_kernel_matrix(post.ens, p.sigma0_sq, post.X, post.X)
    Kinv = np.linalg.inv(K + p.sigma_y_sq * np.eye(len(post.X)))
    k = dense_kernel_matrix(post.ens, p.sigma0_sq, [x], post.X)[0]
    mu_std = k @ Kinv @ post.y_std
    var = p.sigma0_sq - k @ Kinv @ k
    return post.y_mean + post.y_scale * mu_std, var


def qp_box_project(x0, lo, hi, A, b):
    """min |x - x0|^2 s.t. A x <= b, lo <= x <= hi by active-set enumeration.

    Every subset of the general and bound constraints of size up to n is
    tried as an equality system; the best KKT-consistent candidate wins.
    Exact for the small instances used in the tests.
    """
    n = x0.size
    G = np.vstack([A, np.eye(n), -np.eye(n)])
    h = np.concatenate([b, hi, -lo])
    best, best_d = None, np.inf
    for r in range(0, n + 1):
        for act in itertools.combinations(range(G.shape[0]), r):
            act = list(act)
            Ga = G[act]
            if r:
                if np.linalg.matrix_rank(Ga) < r:
                    continue
                # x = x0 - Ga^T lam with Ga x = h_a
                lam = np.linalg.solve(Ga @ Ga.T, Ga @ x0 - h[act])
                if np.any(lam < -1e-10):
                    continue
                x = x0 - Ga.T @ lam
            else:
                x = x0.copy()
            if np.all(G @ x <= h + 1e-9):
                d = float(np.sum((x - x0) ** 2))
                if d < best_d:
                    best, best_d = x, d
    return best, best_d
