"""Benchmark problems and the tree-agreement uncertainty study.

All objectives are returned in maximization form, i.e. the negation of the
usual minimization definition.  Constraints are written with a tiny
polynomial builder so they land in the ``PolyConstraint`` language.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .space import ConstraintSet, Dataset, Feature, FeatureSpace, PolyConstraint, sample_uniform


class Poly:
    """Sparse polynomial: ``{((idx, exp), ...): coef}``."""

    def __init__(self, terms=None):
        self.terms = {k: v for k, v in (terms or {}).items() if v != 0.0}

    @classmethod
    def var(cls, i):
        return cls({((i, 1),): 1.0})

    @staticmethod
    def _lift(o):
        return o if isinstance(o, Poly) else Poly({(): float(o)})

    def __add__(self, o):
        o = self._lift(o)
        out = dict(self.terms)
        for k, v in o.terms.items():
            out[k] = out.get(k, 0.0) + v
        return Poly(out)

    __radd__ = __add__

    def __neg__(self):
        return Poly({k: -v for k, v in self.terms.items()})

    def __sub__(self, o):
        return self + (-self._lift(o))

    def __rsub__(self, o):
        return self._lift(o) - self

    def __mul__(self, o):
        o = self._lift(o)
        out = {}
        for ka, va in self.terms.items():
            for kb, vb in o.terms.items():
                exps = dict(ka)
                for i, e in kb:
                    exps[i] = exps.get(i, 0) + e
                k = tuple(sorted(exps.items()))
                out[k] = out.get(k, 0.0) + va * vb
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, k):
        out = Poly({(): 1.0})
        for _ in range(k):
            out = out * self
        return out

    def le(self, name=""):
        return PolyConstraint([(v, k) for k, v in self.terms.items()], "le", name)

    def eq(self, name=""):
        return PolyConstraint([(v, k) for k, v in self.terms.items()], "eq", name)


@dataclass(frozen=True)
class BenchmarkProblem:
    name: str
    space: FeatureSpace
    objective: Callable
    constraints: ConstraintSet = ConstraintSet()
    known_best: float | None = None

    def __call__(self, x):
        return float(self.objective(np.asarray(x, dtype=float)))

    @property
    def dim(self):
        return self.space.n


def _box(bounds, integer=()):
    return FeatureSpace([Feature.integer(lo, hi) if i in integer else Feature.continuous(lo, hi)
                         for i, (lo, hi) in enumerate(bounds)])


# --- unconstrained --------------------------------------------------------------

_HART_A = np.array([[10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
                    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
                    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
                    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0]])
_HART_C = np.array([1.0, 1.2, 3.0, 3.2])
_HART_P = np.array([[0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
                    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
                    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
                    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381]])


def hartmann6(x):
    return float(_HART_C @ np.exp(-np.sum(_HART_A * (x[None, :] - _HART_P) ** 2, axis=1)))


def rastrigin(x):
    return -float(10.0 * x.size + np.sum(x ** 2 - 10.0 * np.cos(2 * np.pi * x)))


def schwefel(x):
    return -float(418.9829 * x.size - np.sum(x * np.sin(np.sqrt(np.abs(x)))))


def styblinski_tang(x):
    return -float(0.5 * np.sum(x ** 4 - 16 * x ** 2 + 5 * x))


# --- constrained ----------------------------------------------------------------------

X = [Poly.var(i) for i in range(13)]


def _g1():
    x = X
    cons = [2 * x[0] + 2 * x[1] + x[9] + x[10] - 10,
            2 * x[0] + 2 * x[2] + x[9] + x[11] - 10,
            2 * x[1] + 2 * x[2] + x[10] + x[11] - 10,
            -8 * x[0] + x[9],
            -8 * x[1] + x[10],
            -8 * x[2] + x[11],
            -2 * x[3] - x[4] + x[9],
            -2 * x[5] - x[6] + x[10],
            -2 * x[7] - x[8] + x[11]]

    def f(z):
        return -float(5 * np.sum(z[:4]) - 5 * np.sum(z[:4] ** 2) - np.sum(z[4:13]))
    bounds = [(0.0, 100.0) if i in (9, 10, 11) else (0.0, 1.0) for i in range(13)]
    return _box(bounds), f, ConstraintSet([c.le(f"g{k + 1}") for k, c in enumerate(cons)])


def _g3(n=5):
    h = sum((X[i] ** 2 for i in range(n)), Poly()) - 1

    def f(z):
        return float(math.sqrt(n) ** n * np.prod(z[:n]))
    return _box([(0.0, 1.0)] * n), f, ConstraintSet(equalities=[h.eq("h1")])


def _g4():
    x = X
    u = 85.334407 + 0.0056858 * x[1] * x[4] + 0.0006262 * x[0] * x[3] - 0.0022053 * x[2] * x[4]
    v = 80.51249 + 0.0071317 * x[1] * x[4] + 0.0029955 * x[0] * x[1] + 0.0021813 * x[2] ** 2
    w = 9.300961 + 0.0047026 * x[2] * x[4] + 0.0012547 * x[0] * x[2] + 0.0019085 * x[2] * x[3]
    cons = [-u, u - 92.0, 90.0 - v, v - 110.0, 20.0 - w, w - 25.0]

    def f(z):
        return -float(5.3578547 * z[2] ** 2 + 0.8356891 * z[0] * z[4] + 37.293239 * z[0] - 40792.141)
    bounds = [(78.0, 102.0), (33.0, 45.0), (27.0, 45.0), (27.0, 45.0), (27.0, 45.0)]
    return _box(bounds), f, ConstraintSet([c.le(f"g{k + 1}") for k, c in enumerate(cons)])


def _g6():
    x = X
    cons = [-(x[0] - 5) ** 2 - (x[1] - 5) ** 2 + 100.0,
            (x[0] - 6) ** 2 + (x[1] - 5) ** 2 - 82.81]

    def f(z):
        return -float((z[0] - 10.0) ** 3 + (z[1] - 20.0) ** 3)
    return _box([(13.0, 100.0), (0.0, 100.0)]), f, ConstraintSet([c.le(f"g{k + 1}") for k, c in enumerate(cons)])


def _g7():
    x = X
    cons = [4 * x[0] + 5 * x[1] - 3 * x[6] + 9 * x[7] - 105,
            10 * x[0] - 8 * x[1] - 17 * x[6] + 2 * x[7],
            -8 * x[0] + 2 * x[1] + 5 * x[8] - 2 * x[9] - 12,
            3 * (x[0] - 2) ** 2 + 4 * (x[1] - 3) ** 2 + 2 * x[2] ** 2 - 7 * x[3] - 120,
            5 * x[0] ** 2 + 8 * x[1] + (x[2] - 6) ** 2 - 2 * x[3] - 40,
            0.5 * (x[0] - 8) ** 2 + 2 * (x[1] - 4) ** 2 + 3 * x[4] ** 2 - x[5] - 30,
            x[0] ** 2 + 2 * (x[1] - 2) ** 2 - 2 * x[0] * x[1] + 14 * x[4] - 6 * x[5],
            -3 * x[0] + 6 * x[1] + 12 * (x[8] - 8) ** 2 - 7 * x[9]]

    def f(z):
        return -float(z[0] ** 2 + z[1] ** 2 + z[0] * z[1] - 14 * z[0] - 16 * z[1]
                      + (z[2] - 10) ** 2 + 4 * (z[3] - 5) ** 2 + (z[4] - 3) ** 2
                      + 2 * (z[5] - 1) ** 2 + 5 * z[6] ** 2 + 7 * (z[7] - 11) ** 2
                      + 2 * (z[8] - 10) ** 2 + (z[9] - 7) ** 2 + 45)
    return _box([(-10.0, 10.0)] * 10), f, ConstraintSet([c.le(f"g{k + 1}") for k, c in enumerate(cons)])


def _g10():
    x = X
    cons = [-1 + 0.0025 * (x[3] + x[5]),
            -1 + 0.0025 * (-x[3] + x[4] + x[6]),
            -1 + 0.01 * (-x[4] + x[7]),
            100 * x[0] - x[0] * x[5] + 833.33252 * x[3] - 83333.333,
            x[1] * x[3] - x[1] * x[6] - 1250 * x[3] + 1250 * x[4],
            x[2] * x[4] - x[2] * x[7] - 2500 * x[4] + 1250000]

    def f(z):
        return -float(z[0] + z[1] + z[2])
    bounds = [(100.0, 10000.0), (1000.0, 10000.0), (1000.0, 10000.0)] + [(10.0, 1000.0)] * 5
    return _box(bounds), f, ConstraintSet([c.le(f"g{k + 1}") for k, c in enumerate(cons)])


def _alkylation():
    # the rational constraints are multiplied through by their positive denominators
    # (x0, and x3*x5 + 1000*x2); a guard x0 >= 0.1 keeps those denominators positive
    x = X
    x5 = 1.22 * x[3] - x[0]
    n8 = x[1] + x5                      # x8 = n8 / x0
    den = x[3] * x[5] + 1000.0 * x[2]    # x6 = 98000 x2 / den
    q = 1.12 * x[0] * x[0] + 0.13167 * n8 * x[0] - 0.00667 * n8 * n8   # x0^2 * (x0 * (...)) / x0
    r = (86.35 * x[0] * x[0] + 1.098 * n8 * x[0] - 0.038 * n8 * n8) * den \
        + 0.325 * (98000.0 * x[2] - 89.0 * den) * x[0] * x[0]          # (x0^2 den) * (...)
    cons = [0.99 * x[3] * x[0] - q,
            q - (100.0 / 99.0) * x[3] * x[0],
            0.99 * x[4] * x[0] * x[0] * den - r,
            r - (100.0 / 99.0) * x[4] * x[0] * x[0] * den,
            0.9 * x[5] - (35.82 - 0.222 * x[6]),
            (35.82 - 0.222 * x[6]) - (10.0 / 9.0) * x[5],
            0.99 * x[6] - (-133 + 3 * x[4]),
            (-133 + 3.0 * x[4]) - (100.0 / 99.0) * x[6],
            x5 - 2000,
            -x5,
            98000.0 * x[2] - 93.0 * den,
            85.0 * den - 98000.0 * x[2],
            n8 - 12.0 * x[0],
            3.0 * x[0] - n8,
            0.1 - x[0]]

    def f(z):
        x5v = 1.22 * z[3] - z[0]
        return float(0.063 * z[3] * z[4] - 5.04 * z[0] - 0.035 * z[1] - 10.0 * z[2] - 3.36 * x5v)
    bounds = [(0.0, 2000.0), (0.0, 16000.0), (0.0, 120.0), (0.0, 5000.0),
              (90.0, 95.0), (0.01, 4.0), (145.0, 162.0)]
    return _box(bounds), f, ConstraintSet([c.le(f"g{k + 1}") for k, c in enumerate(cons)])


def _pressure_vessel():
    # x0, x1 are integer multiples of 1/16 inch (shell and head thickness)
    x = X
    ts, th = 0.0625 * x[0], 0.0625 * x[1]
    cons = [-ts + 0.0193 * x[2],
            -th + 0.00954 * x[2],
            -math.pi * x[3] * x[2] ** 2 - (4.0 / 3.0) * math.pi * x[2] ** 3 + 1296000.0]

    def f(z):
        a, b = 0.0625 * z[0], 0.0625 * z[1]
        return -float(0.6224 * a * z[2] * z[3] + 1.7781 * b * z[2] ** 2
                      + 3.1661 * a ** 2 * z[3] + 19.84 * a ** 2 * z[2])
    bounds = [(1, 99), (1, 99), (10.0, 200.0), (10.0, 200.0)]
    return _box(bounds, integer=(0, 1)), f, ConstraintSet([c.le(f"g{k + 1}") for k, c in enumerate(cons)])


# best known values in maximization form (see tests for the refinement checks)
_REGISTRY = {
    "hartmann6d": (lambda: (_box([(0.0, 1.0)] * 6), hartmann6, ConstraintSet()), 3.32237),
    "rastrigin": (lambda: (_box([(-4.0, 5.0)] * 10), rastrigin, ConstraintSet()), 0.0),
    "schwefel": (lambda: (_box([(-500.0, 500.0)] * 10), schwefel, ConstraintSet()), -1.2727e-4),
    "styblinski_tang": (lambda: (_box([(-5.0, 5.0)] * 10), styblinski_tang, ConstraintSet()), 391.66165),
    "g1": (_g1, 15.0),
    "g3": (_g3, 1.0),
    "g4": (_g4, 30665.539),
    "g6": (_g6, 6961.81388),
    "g7": (_g7, -24.3062091),
    "g10": (_g10, -7049.248),
    "alkylation": (_alkylation, 1768.807),
    "pressure_vessel": (_pressure_vessel, -6059.714),
}


def names():
    return list(_REGISTRY)


def get(name: str) -> BenchmarkProblem:
    try:
        build, best = _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown benchmark {name!r}; known: {', '.join(_REGISTRY)}") from None
    space, f, cons = build()
    return BenchmarkProblem(name, space, f, cons, best)


def describe(problem: BenchmarkProblem) -> str:
    dom = ", ".join(f"[{f.lb:g}, {f.ub:g}]{'i' if f.kind == 'integer' else ''}" for f in problem.space.features)
    return (f"{problem.name}\tdim={problem.dim}\tineq={len(problem.constraints.inequalities)}"
            f"\teq={len(problem.constraints.equalities)}\tdomain={dom}")


# --- uncertainty study --------------------------------------------------------------

def relative_model_error(mu_at_x: float, f_true_at_x: float):
    """``|(mu - f) / mu|``, or None when the mean is too close to zero."""
    if abs(mu_at_x) < 1e-12:
        return None
    return abs((mu_at_x - f_true_at_x) / mu_at_x)


def uncertainty_sweep(bench: BenchmarkProblem, seeds, R_grid, n_train: int = 40, gbdt_cfg=None,
                      bounds=None, solve_opts=None):
    """Rows of ``(R, seed, error, mean)`` for the agreement-capped mean maximization.

    For each seed the ensemble and GP are fit once on uniform random data;
    R is swept in increasing order and every solve is warm-started from the
    previous optimum, which stays admissible because the caps are nested.
    """
    from .acq import encode, with_agreement_cap
    from .gbdt import GbdtConfig, train
    from .propose import midpoint
    from .solver import INFEASIBLE, SolveOptions, solve
    from .tkgp import KernelBounds, build_posterior, fit_hyperparams, mean_var, standardize

    if bench.constraints:
        raise ValueError("the uncertainty study needs an unconstrained benchmark")
    gbdt_cfg = gbdt_cfg or GbdtConfig()
    bounds = bounds or KernelBounds()
    solve_opts = solve_opts or SolveOptions(rel_gap=1e-9)
    rows = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        X = sample_uniform(bench.space, rng, n_train)
        y = np.array([bench(x) for x in X])
        data = Dataset(X, y)
        y_std = standardize(y)[0]
        ens = train(Dataset(X, y_std), bench.space, gbdt_cfg)
        params = fit_hyperparams(ens, X, y_std, bounds)
        post = build_posterior(ens, params, data)
        base = encode(post, 0.0)
        prev = ()
        for R in sorted(R_grid):
            p = with_agreement_cap(base, R)
            sol = solve(p, solve_opts, rng, incumbent_cells=[prev] if prev else ())
            if sol.status == INFEASIBLE:
                raise RuntimeError(f"agreement cap R={R} admits no cell (seed {seed})")
            prev = sol.leaves
            x = midpoint(sol, rng)
            over = p.overlap(ens.apply(x[None, :])[0])
            if np.any(over > R + 1e-12):
                raise AssertionError(f"overlap {over.max()} exceeds R={R}")
            mu, _ = mean_var(post, x)
            rows.append((float(R), seed, relative_model_error(mu, bench(x)), mu))
    return rows
