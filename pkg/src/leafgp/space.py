"""Search spaces, datasets, polynomial input constraints and boxes.

Points are plain float arrays with one entry per feature.  Categorical
coordinates hold the category index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

CONTINUOUS = "continuous"
INTEGER = "integer"
CATEGORICAL = "categorical"

FEAS_TOL = 1e-6


class StructuralError(ValueError):
    """Raised when inputs do not fit the declared space or constraint layout."""


@dataclass(frozen=True)
class Feature:
    kind: str
    lb: float = 0.0
    ub: float = 1.0
    categories: tuple = ()

    def __post_init__(self):
        if self.kind == CONTINUOUS:
            if not self.lb < self.ub:
                raise StructuralError(f"continuous feature needs lb < ub, got [{self.lb}, {self.ub}]")
        elif self.kind == INTEGER:
            if int(self.lb) != self.lb or int(self.ub) != self.ub:
                raise StructuralError("integer feature bounds must be whole numbers")
            if self.lb > self.ub:
                raise StructuralError(f"integer feature needs lb <= ub, got [{self.lb}, {self.ub}]")
        elif self.kind == CATEGORICAL:
            if len(self.categories) < 2:
                raise StructuralError("categorical feature needs at least 2 categories")
            if len(set(self.categories)) != len(self.categories):
                raise StructuralError("category labels must be unique")
        else:
            raise StructuralError(f"unknown feature kind {self.kind!r}")

    @classmethod
    def continuous(cls, lb, ub):
        return cls(CONTINUOUS, float(lb), float(ub))

    @classmethod
    def integer(cls, lb, ub):
        return cls(INTEGER, float(lb), float(ub))

    @classmethod
    def categorical(cls, categories):
        cats = tuple(categories)
        return cls(CATEGORICAL, 0.0, float(len(cats) - 1), cats)

    @property
    def is_cat(self):
        return self.kind == CATEGORICAL

    @property
    def n_categories(self):
        return len(self.categories)

    def contains(self, v):
        if not np.isfinite(v):
            return False
        if self.kind == CONTINUOUS:
            return self.lb <= v <= self.ub
        if v != math.floor(v):
            return False
        return self.lb <= v <= self.ub


@dataclass(frozen=True)
class FeatureSpace:
    features: tuple

    def __init__(self, features: Sequence[Feature]):
        object.__setattr__(self, "features", tuple(features))
        if not self.features:
            raise StructuralError("feature space needs at least one feature")

    @property
    def n(self):
        return len(self.features)

    def __len__(self):
        return len(self.features)

    def __getitem__(self, i):
        return self.features[i]

    @property
    def cat_idx(self):
        return [i for i, f in enumerate(self.features) if f.is_cat]

    @property
    def num_idx(self):
        """Indices of non-categorical (continuous and integer) features."""
        return [i for i, f in enumerate(self.features) if not f.is_cat]

    @property
    def int_idx(self):
        return [i for i, f in enumerate(self.features) if f.kind == INTEGER]

    @property
    def lb(self):
        return np.array([f.lb for f in self.features])

    @property
    def ub(self):
        return np.array([f.ub for f in self.features])

    def full_box(self) -> Box:
        return Box.from_space(self)


def validate_point(space: FeatureSpace, x) -> bool:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != space.n:
        raise StructuralError(f"point has shape {x.shape}, space has {space.n} features")
    return all(f.contains(v) for f, v in zip(space.features, x))


def sample_uniform(space: FeatureSpace, rng: np.random.Generator, size=None):
    """Uniform draw from the space; continuous, integer and categorical alike.

    Returns a single point when ``size`` is None, else a ``(size, n)`` array.
    """
    m = 1 if size is None else int(size)
    out = np.empty((m, space.n))
    for i, f in enumerate(space.features):
        if f.kind == CONTINUOUS:
            out[:, i] = rng.uniform(f.lb, f.ub, size=m)
        elif f.kind == INTEGER:
            out[:, i] = rng.integers(int(f.lb), int(f.ub), size=m, endpoint=True)
        else:
            out[:, i] = rng.integers(0, f.n_categories, size=m)
    return out[0] if size is None else out


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.X.shape[0] != self.y.shape[0]:
            raise StructuralError(f"{self.X.shape[0]} points but {self.y.shape[0]} targets")

    @property
    def m(self):
        return self.y.shape[0]

    def validate(self, space: FeatureSpace):
        bad = [i for i, x in enumerate(self.X) if not validate_point(space, x)]
        if bad:
            raise StructuralError(f"dataset rows {bad} fall outside the space")

    def append(self, x, y) -> Dataset:
        return Dataset(np.vstack([self.X, np.asarray(x, dtype=float)[None, :]]), np.append(self.y, y))


# --- interval helpers -------------------------------------------------------

def _ipow(lo, hi, k):
    if k == 1:
        return lo, hi
    a, b = lo ** k, hi ** k
    if k % 2 == 1:
        return a, b
    if lo >= 0:
        return a, b
    if hi <= 0:
        return b, a
    return 0.0, max(a, b)


def _imul(a, b):
    p = (a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
    return min(p), max(p)


@dataclass(frozen=True)
class PolyConstraint:
    """Polynomial ``sum_k coef_k * prod_j x[idx_j]**exp_j`` compared to zero.

    ``sense`` is ``"le"`` (value <= 0) or ``"eq"`` (value == 0).
    """
    terms: tuple
    sense: str = "le"
    name: str = ""

    def __init__(self, terms, sense="le", name=""):
        norm = []
        for coef, mono in terms:
            coef = float(coef)
            if not np.isfinite(coef):
                raise StructuralError("constraint coefficients must be finite")
            mono = tuple((int(i), int(e)) for i, e in mono)
            if any(e < 1 for _, e in mono):
                raise StructuralError("monomial exponents must be >= 1")
            norm.append((coef, mono))
        if sense not in ("le", "eq"):
            raise StructuralError(f"sense must be 'le' or 'eq', got {sense!r}")
        object.__setattr__(self, "terms", tuple(norm))
        object.__setattr__(self, "sense", sense)
        object.__setattr__(self, "name", name)

    @property
    def features(self):
        return sorted({i for _, mono in self.terms for i, _ in mono})

    def is_linear(self):
        return all(sum(e for _, e in mono) <= 1 for _, mono in self.terms)

    def check_space(self, space: FeatureSpace):
        for i in self.features:
            if i >= space.n:
                raise StructuralError(f"constraint references feature {i}, space has {space.n}")
            if space[i].is_cat:
                raise StructuralError(f"constraint references categorical feature {i}")

    def __call__(self, x):
        return eval_constraint(self, x)

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        g = np.zeros_like(x)
        for coef, mono in self.terms:
            for j, (i, e) in enumerate(mono):
                d = coef * e * x[i] ** (e - 1)
                for jj, (ii, ee) in enumerate(mono):
                    if jj != j:
                        d *= x[ii] ** ee
                g[i] += d
        return g

    def degree(self):
        return max((sum(e for _, e in mono) for _, mono in self.terms), default=0)


def eval_constraint(c: PolyConstraint, x) -> float:
    total = 0.0
    for coef, mono in c.terms:
        v = coef
        for i, e in mono:
            v *= x[i] ** e
        total += v
    return float(total)


def _univariate_range(coefs, a, b):
    """Exact range of ``sum_e coefs[e] * x**e`` over ``[a, b]`` up to a small outward margin."""
    poly = coefs[::-1]
    pts = [a, b]
    if len(coefs) > 2:
        for r in np.roots(np.polyder(poly)):
            if abs(r.imag) <= 1e-12 * max(1.0, abs(r.real)) and a < r.real < b:
                pts.append(r.real)
    vals = np.polyval(poly, np.array(pts, dtype=float))
    m = max(abs(a), abs(b), 1.0)
    scale = float(np.sum(np.abs(coefs) * m ** np.arange(len(coefs))))
    w = 1e-12 * scale
    return float(vals.min()) - w, float(vals.max()) + w, scale


def interval_eval(c: PolyConstraint, box: Box):
    """Enclosure ``[lo, hi]`` of the polynomial over ``box``.

    Terms in a single feature are grouped and bounded exactly (endpoints
    plus stationary points); the remaining terms use the natural interval
    extension.
    """
    lo_sum = hi_sum = 0.0
    scale = 0.0
    uni = {}
    for coef, mono in c.terms:
        for i, _ in mono:
            if box.is_cat(i):
                raise StructuralError(f"constraint references categorical feature {i}")
        if len(mono) == 1:
            i, e = mono[0]
            arr = uni.setdefault(i, np.zeros(1))
            if arr.size <= e:
                arr = np.concatenate([arr, np.zeros(e + 1 - arr.size)])
                uni[i] = arr
            arr[e] += coef
            continue
        iv = (1.0, 1.0)
        for i, e in mono:
            iv = _imul(iv, _ipow(box.lo[i], box.hi[i], e))
        t = _imul((coef, coef), iv)
        lo_sum += t[0]
        hi_sum += t[1]
        scale += max(abs(t[0]), abs(t[1]))
    for i, arr in uni.items():
        lo, hi, sc = _univariate_range(arr, float(box.lo[i]), float(box.hi[i]))
        lo_sum += lo
        hi_sum += hi
        scale += sc
    # outward widening covers rounding in the point evaluation
    w = 8 * np.finfo(float).eps * scale
    return lo_sum - w, hi_sum + w


@dataclass(frozen=True)
class ConstraintSet:
    inequalities: tuple = ()
    equalities: tuple = ()
    eq_tolerance: float = FEAS_TOL

    def __init__(self, inequalities=(), equalities=(), eq_tolerance=FEAS_TOL):
        if not eq_tolerance > 0:
            raise StructuralError("eq_tolerance must be positive")
        ineq = tuple(inequalities)
        eq = tuple(equalities)
        if any(c.sense != "le" for c in ineq) or any(c.sense != "eq" for c in eq):
            raise StructuralError("constraint senses do not match their list")
        object.__setattr__(self, "inequalities", ineq)
        object.__setattr__(self, "equalities", eq)
        object.__setattr__(self, "eq_tolerance", float(eq_tolerance))

    @classmethod
    def from_list(cls, constraints, eq_tolerance=FEAS_TOL):
        constraints = list(constraints)
        return cls([c for c in constraints if c.sense == "le"],
                   [c for c in constraints if c.sense == "eq"], eq_tolerance)

    def __len__(self):
        return len(self.inequalities) + len(self.equalities)

    def __bool__(self):
        return len(self) > 0

    def check_space(self, space: FeatureSpace):
        for c in self.inequalities + self.equalities:
            c.check_space(space)

    def values(self, x):
        g = np.array([eval_constraint(c, x) for c in self.inequalities])
        h = np.array([eval_constraint(c, x) for c in self.equalities])
        return g, h

    def violation(self, x) -> float:
        """Largest violation: ``max(g, 0)`` and ``|h|`` over all constraints."""
        g, h = self.values(x)
        v = 0.0
        if g.size:
            v = max(v, float(np.max(g)))
        if h.size:
            v = max(v, float(np.max(np.abs(h))))
        return v

    def is_feasible(self, x) -> bool:
        return self.violation(x) <= self.eq_tolerance

    def box_may_be_feasible(self, box: Box) -> bool:
        """False only when interval arithmetic proves the box holds no feasible point."""
        tol = self.eq_tolerance
        for c in self.inequalities:
            lo, _ = interval_eval(c, box)
            if lo > tol:
                return False
        for c in self.equalities:
            lo, hi = interval_eval(c, box)
            if lo > tol or hi < -tol:
                return False
        return True


@dataclass(frozen=True)
class Box:
    """Axis-aligned region of a feature space.

    Non-categorical features carry ``[lo, hi]``; ``open_lo`` marks a lower
    bound that came from a ``x <= v`` split (the point ``v`` itself lies in
    the neighbouring region).  Categorical features carry a frozenset of
    allowed category indices in ``cats``.
    """
    space: FeatureSpace
    lo: np.ndarray
    hi: np.ndarray
    open_lo: np.ndarray
    cats: tuple = field(default=())

    @classmethod
    def from_space(cls, space: FeatureSpace):
        cats = tuple(frozenset(range(f.n_categories)) if f.is_cat else None for f in space.features)
        return cls(space, space.lb.copy(), space.ub.copy(), np.zeros(space.n, dtype=bool), cats)

    def is_cat(self, i):
        return self.space[i].is_cat

    def copy_with(self, lo=None, hi=None, open_lo=None, cats=None):
        return Box(self.space,
                   self.lo.copy() if lo is None else lo,
                   self.hi.copy() if hi is None else hi,
                   self.open_lo.copy() if open_lo is None else open_lo,
                   self.cats if cats is None else cats)

    def is_empty(self):
        for i, f in enumerate(self.space.features):
            if f.is_cat:
                if not self.cats[i]:
                    return True
            elif f.kind == INTEGER:
                lo, hi = self.int_range(i)
                if lo > hi:
                    return True
            else:
                if self.lo[i] > self.hi[i] or (self.open_lo[i] and self.lo[i] >= self.hi[i]):
                    return True
        return False

    def int_range(self, i):
        """Smallest and largest whole number inside the bounds of integer feature ``i``."""
        lo = math.floor(self.lo[i]) + 1 if self.open_lo[i] else math.ceil(self.lo[i])
        return lo, math.floor(self.hi[i])

    def contains(self, x) -> bool:
        for i, f in enumerate(self.space.features):
            v = x[i]
            if f.is_cat:
                if int(v) not in self.cats[i]:
                    return False
                continue
            if v > self.hi[i]:
                return False
            if v < self.lo[i] or (self.open_lo[i] and v <= self.lo[i]):
                return False
        return True

    def intersect(self, other: Box) -> Box:
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        open_lo = np.where(self.lo > other.lo, self.open_lo,
                           np.where(other.lo > self.lo, other.open_lo, self.open_lo | other.open_lo))
        cats = tuple(None if a is None else a & b for a, b in zip(self.cats, other.cats))
        return Box(self.space, lo, hi, open_lo, cats)

    def closed_bounds(self):
        """Closed bounds usable by continuous solvers.

        Open lower bounds are nudged inward by a relative 1e-9; integer
        features are reduced to their whole-number hull.
        """
        lo = self.lo.astype(float).copy()
        hi = self.hi.astype(float).copy()
        for i, f in enumerate(self.space.features):
            if f.is_cat:
                lo[i] = hi[i] = np.nan
            elif f.kind == INTEGER:
                lo[i], hi[i] = self.int_range(i)
            elif self.open_lo[i]:
                lo[i] = min(lo[i] + 1e-9 * max(1.0, abs(lo[i])), 0.5 * (lo[i] + hi[i]))
        return lo, hi

    def midpoint(self):
        lo, hi = self.closed_bounds()
        return 0.5 * (lo + hi)

    def __eq__(self, other):
        if not isinstance(other, Box):
            return NotImplemented
        return (np.array_equal(self.lo, other.lo) and np.array_equal(self.hi, other.hi)
                and np.array_equal(self.open_lo, other.open_lo) and self.cats == other.cats)

    def __hash__(self):
        return hash((self.lo.tobytes(), self.hi.tobytes(), self.open_lo.tobytes(), self.cats))

    def __repr__(self):
        parts = []
        for i, f in enumerate(self.space.features):
            if f.is_cat:
                parts.append("{" + ",".join(str(f.categories[c]) for c in sorted(self.cats[i])) + "}")
            else:
                parts.append(f"{'(' if self.open_lo[i] else '['}{self.lo[i]:g}, {self.hi[i]:g}]")
        return "Box(" + ", ".join(parts) + ")"
