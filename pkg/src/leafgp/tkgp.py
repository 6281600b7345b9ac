"""Gaussian process with the tree-ensemble kernel.

k(x, x') = sigma0^2 * (fraction of trees placing x and x' in the same leaf)

The Gram matrix is exactly ``sigma0^2 / T * A @ A.T`` with ``A`` the binary
point-by-leaf activation matrix, which is what the acquisition encoding
reuses.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .gbdt import TreeEnsemble

log = logging.getLogger(__name__)


class FactorizationError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class KernelParams:
    sigma0_sq: float
    sigma_y_sq: float

    def __post_init__(self):
        if not (self.sigma0_sq > 0 and self.sigma_y_sq >= 0):
            raise ValueError("kernel variances must be positive")


@dataclass(frozen=True)
class KernelBounds:
    """Box on the standard deviations ``sigma0`` and ``sigma_y`` (not variances)."""
    sigma0: tuple = (5e-4, 0.2)
    sigma_y: tuple = (0.05, 20.0)

    def contains(self, p: KernelParams, rtol=1e-9):
        s0, sy = np.sqrt(p.sigma0_sq), np.sqrt(p.sigma_y_sq)
        return (self.sigma0[0] * (1 - rtol) <= s0 <= self.sigma0[1] * (1 + rtol)
                and self.sigma_y[0] * (1 - rtol) <= sy <= self.sigma_y[1] * (1 + rtol))


def activation_matrix(ens: TreeEnsemble, X) -> np.ndarray:
    """Binary ``(m, total_leaves)`` matrix; row i marks the active leaves of point i."""
    leaves = ens.apply(X)
    A = np.zeros((leaves.shape[0], ens.total_leaves))
    rows = np.arange(leaves.shape[0])
    for t in range(ens.n_trees):
        A[rows, ens.leaf_offsets[t] + leaves[:, t]] = 1.0
    return A


def kernel(ens: TreeEnsemble, sigma0_sq, x, x2) -> float:
    la = ens.apply(np.asarray(x, dtype=float)[None, :])[0]
    lb = ens.apply(np.asarray(x2, dtype=float)[None, :])[0]
    return float(sigma0_sq * (np.count_nonzero(la == lb) / ens.n_trees))


def gram(A, n_trees, sigma0_sq):
    # scaling the agreement fraction keeps K(x, x) == sigma0^2 exactly
    return sigma0_sq * ((A @ A.T) / n_trees)


def _chol(K, scale, jitter0=1e-8, jitter_max=1e-4):
    try:
        return cholesky(K, lower=True), 0.0
    except np.linalg.LinAlgError:
        pass
    jit = jitter0
    eye = np.eye(K.shape[0])
    while jit <= jitter_max * (1 + 1e-12):
        try:
            L = cholesky(K + jit * scale * eye, lower=True)
            log.debug("cholesky needed jitter %g", jit * scale)
            return L, jit * scale
        except np.linalg.LinAlgError:
            jit *= 10
    raise FactorizationError("Gram matrix not positive definite after jitter escalation")


def log_marginal_likelihood(G, y, log_s0, log_sy, grad=False):
    """LML of ``y`` under ``N(0, s0^2 G + sy^2 I)`` in log-std coordinates.

    ``G`` is the unit-variance Gram matrix (``A A^T / T``).  With
    ``grad=True`` also returns d/d(log s0, log sy).
    """
    s0sq, sysq = np.exp(2 * log_s0), np.exp(2 * log_sy)
    m = y.shape[0]
    K = s0sq * G + sysq * np.eye(m)
    L, _ = _chol(K, s0sq)
    alpha = cho_solve((L, True), y)
    lml = -0.5 * y @ alpha - np.log(np.diag(L)).sum() - 0.5 * m * np.log(2 * np.pi)
    if not grad:
        return lml
    Kinv = cho_solve((L, True), np.eye(m))
    W = np.outer(alpha, alpha) - Kinv
    # dK/dlog s0 = 2 s0^2 G,  dK/dlog sy = 2 sy^2 I
    g0 = 0.5 * np.sum(W * (2 * s0sq * G))
    gy = 0.5 * np.trace(W) * 2 * sysq
    return lml, np.array([g0, gy])


def fit_hyperparams(ens: TreeEnsemble, X, y_std, bounds: KernelBounds = KernelBounds(),
                    epochs=200, lr=0.05, betas=(0.9, 0.999), A=None) -> KernelParams:
    """Adam ascent on the log marginal likelihood over log(sigma0), log(sigma_y).

    Starts from the geometric midpoint of the bounds and projects onto the
    bounds after every step.  The best iterate seen (initial point included)
    is returned, so the likelihood never drops below its starting value.
    """
    y = np.asarray(y_std, dtype=float)
    if A is None:
        A = activation_matrix(ens, X)
    G = A @ A.T / ens.n_trees
    lo = np.log([bounds.sigma0[0], bounds.sigma_y[0]])
    hi = np.log([bounds.sigma0[1], bounds.sigma_y[1]])
    theta = 0.5 * (lo + hi)
    mom, vel = np.zeros(2), np.zeros(2)
    b1, b2 = betas
    best_theta, best_val = theta.copy(), -np.inf
    for it in range(1, epochs + 1):
        val, g = log_marginal_likelihood(G, y, *theta, grad=True)
        if val > best_val:
            best_val, best_theta = val, theta.copy()
        mom = b1 * mom + (1 - b1) * g
        vel = b2 * vel + (1 - b2) * g ** 2
        step = lr * (mom / (1 - b1 ** it)) / (np.sqrt(vel / (1 - b2 ** it)) + 1e-8)
        theta = np.clip(theta + step, lo, hi)
    val = log_marginal_likelihood(G, y, *theta)
    if val > best_val:
        best_theta = theta
    return KernelParams(float(np.exp(2 * best_theta[0])), float(np.exp(2 * best_theta[1])))


@dataclass(frozen=True)
class GpPosterior:
    ens: TreeEnsemble
    params: KernelParams
    X: np.ndarray
    A: np.ndarray
    chol: np.ndarray
    alpha: np.ndarray
    y_std: np.ndarray
    y_mean: float = 0.0
    y_scale: float = 1.0
    jitter: float = 0.0
    noisy_variance: bool = True

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n_trees(self):
        return self.ens.n_trees

    def Kxx(self):
        return gram(self.A, self.n_trees, self.params.sigma0_sq)

    def q_inverse(self):
        """Inverse of the matrix used in the variance term.

        ``(K + sigma_y^2 I)^-1`` by default; the pseudo-inverse of the
        noise-free Gram when ``noisy_variance`` is off.
        """
        if self.noisy_variance:
            Q = cho_solve((self.chol, True), np.eye(self.m))
        else:
            Q = np.linalg.pinv(self.Kxx(), hermitian=True)
        return 0.5 * (Q + Q.T)

    def k_vector(self, x):
        leaves = self.ens.apply(np.atleast_2d(x))
        return self.k_from_leaves(leaves)

    def k_from_leaves(self, leaves):
        """Cross-covariances ``(r, m)`` for rows of per-tree leaf ids."""
        leaves = np.atleast_2d(leaves)
        cols = leaves + self.ens.leaf_offsets[:-1][None, :]
        k = np.zeros((leaves.shape[0], self.m))
        for t in range(self.n_trees):
            k += self.A[:, cols[:, t]].T
        # same operation order as the pairwise kernel so both agree bit for bit
        return self.params.sigma0_sq * (k / self.n_trees)

    def destandardize(self, mu_std):
        return self.y_mean + self.y_scale * mu_std


def standardize(y):
    y = np.asarray(y, dtype=float)
    mean = float(y.mean())
    std = float(y.std())
    if std < 1e-12:
        std = 1.0
    return (y - mean) / std, mean, std


def build_posterior(ens: TreeEnsemble, params: KernelParams, dataset, standardize_y=True,
                    noisy_variance=True) -> GpPosterior:
    """Factorize ``K + sigma_y^2 I`` and solve for the weight vector.

    With ``standardize_y`` the targets are shifted and scaled internally and
    the statistics stored on the posterior; otherwise ``dataset.y`` is taken
    as already standardized.
    """
    X = dataset.X
    if standardize_y:
        y, mean, scale = standardize(dataset.y)
    else:
        y, mean, scale = np.asarray(dataset.y, dtype=float), 0.0, 1.0
    A = activation_matrix(ens, X)
    K = gram(A, ens.n_trees, params.sigma0_sq) + params.sigma_y_sq * np.eye(A.shape[0])
    L, jit = _chol(K, params.sigma0_sq)
    alpha = cho_solve((L, True), y)
    return GpPosterior(ens, params, X, A, L, alpha, y, mean, scale, jit, noisy_variance)


def mean_var(post: GpPosterior, x, standardized=False):
    """Posterior mean and variance at ``x``.

    The mean is in original target units unless ``standardized``; the
    variance is always in standardized units, clamped to ``[0, sigma0^2]``.
    """
    k = post.k_vector(x)[0]
    mu = float(k @ post.alpha)
    s0 = post.params.sigma0_sq
    if post.noisy_variance:
        v = solve_triangular(post.chol, k, lower=True)
        var = s0 - float(v @ v)
    else:
        var = s0 - float(k @ post.q_inverse() @ k)
    var = min(max(var, 0.0), s0)
    if not standardized:
        mu = post.destandardize(mu)
    return mu, var


def ucb(post: GpPosterior, x, kappa) -> float:
    """Standardized-unit upper confidence bound at a point."""
    mu, var = mean_var(post, x, standardized=True)
    return mu + kappa * np.sqrt(var)


def dump_posterior(post: GpPosterior) -> str:
    """Gram matrix and weight vector as plain text, for fixtures."""
    lines = [f"sigma0_sq {post.params.sigma0_sq!r}", f"sigma_y_sq {post.params.sigma_y_sq!r}", "gram"]
    for row in post.Kxx():
        lines.append(" ".join(repr(float(v)) for v in row))
    lines.append("alpha")
    lines.append(" ".join(repr(float(v)) for v in post.alpha))
    return "\n".join(lines) + "\n"
