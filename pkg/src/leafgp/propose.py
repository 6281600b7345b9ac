"""Turn an optimal box into a concrete query point.

The box midpoint is taken for numeric features (integers rounded at random
when the midpoint is fractional), a uniform category from the allowed subset
for categoricals, and the result is projected onto the constraint set when it
is infeasible.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .space import INTEGER, Box, ConstraintSet


class ProjectionFailed(RuntimeError):
    code = "projection_failed"


@dataclass(frozen=True)
class Proposal:
    x: np.ndarray
    projected: bool
    distance_moved: float


def _box_of(sol) -> Box:
    return sol if isinstance(sol, Box) else sol.box


def midpoint(sol, rng: np.random.Generator) -> np.ndarray:
    box = _box_of(sol)
    lo, hi = box.closed_bounds()
    x = np.empty(box.space.n)
    for i, f in enumerate(box.space.features):
        if f.is_cat:
            x[i] = rng.choice(sorted(box.cats[i]))
        elif f.kind == INTEGER:
            mid = 0.5 * (lo[i] + hi[i])
            x[i] = mid if mid == math.floor(mid) else (math.floor(mid) if rng.random() < 0.5 else math.ceil(mid))
        else:
            x[i] = 0.5 * (lo[i] + hi[i])
    return x


class _AugLag:
    """Nearest feasible point to ``x0`` over a box, by an augmented Lagrangian.

    Works on unit-scaled coordinates ``u = (x - lo) / w`` with the distance
    divided by a single global scale so the minimizer is unchanged.
    """

    def __init__(self, cons: ConstraintSet, idx, lo, hi, x_fixed, x0):
        self.ineq = list(cons.inequalities)
        self.eq = list(cons.equalities)
        self.idx = np.asarray(idx)
        self.lo, self.hi = lo[self.idx], hi[self.idx]
        self.w = np.where(self.hi > self.lo, self.hi - self.lo, 1.0)
        self.W = float(np.max(self.w))
        self.x_fixed = x_fixed.copy()
        self.x0 = x0[self.idx]
        xm = self.to_x(self.to_u(np.clip(self.x0, self.lo, self.hi)))
        self.scale = np.array([max(1.0, abs(c(xm)), float(np.linalg.norm(c.grad(xm)[self.idx] * self.w)))
                               for c in self.ineq + self.eq])

    def to_u(self, xs):
        return (xs - self.lo) / self.w

    def to_x(self, u):
        x = self.x_fixed.copy()
        x[self.idx] = self.lo + self.w * u
        return x

    def cons_vals(self, x):
        return np.array([c(x) for c in self.ineq + self.eq])

    def cons_grads(self, x):
        if not self.ineq and not self.eq:
            return np.zeros((0, self.idx.size))
        return np.array([c.grad(x)[self.idx] * self.w for c in self.ineq + self.eq])

    def raw_violation(self, x):
        v = self.cons_vals(x)
        ni = len(self.ineq)
        return max([0.0] + list(np.maximum(v[:ni], 0.0)) + list(np.abs(v[ni:])))

    def phase1(self, u_start, tol):
        """Minimize the squared scaled violation; returns a feasible ``u`` or None."""
        ni = len(self.ineq)

        def fun(u):
            x = self.to_x(u)
            c = self.cons_vals(x) / self.scale
            J = self.cons_grads(x) / self.scale[:, None]
            r = c.copy()
            # aim slightly inside the inequalities so rounding cannot tip the result
            r[:ni] = np.maximum(c[:ni] + 1e-9, 0.0)
            return float(r @ r), 2.0 * (J.T @ r)
        u = np.clip(u_start, 0.0, 1.0)
        if self.raw_violation(self.to_x(u)) <= tol:
            return u
        res = minimize(fun, u, jac=True, method="L-BFGS-B", bounds=[(0.0, 1.0)] * u.size,
                       options={"maxiter": 500, "ftol": 1e-22, "gtol": 1e-15})
        u = np.clip(res.x, 0.0, 1.0)
        return u if self.raw_violation(self.to_x(u)) <= tol else None

    def solve(self, u_start, tol, rho=10.0, max_outer=40):
        ni = len(self.ineq)
        nc = ni + len(self.eq)
        lam = np.zeros(nc)
        u = np.clip(u_start, 0.0, 1.0)
        bounds = [(0.0, 1.0)] * u.size
        prev_viol = np.inf
        last_ok = None
        for _ in range(max_outer):
            def fun(uu, lam=lam, rho=rho):
                x = self.to_x(uu)
                d = (self.lo + self.w * uu - self.x0) / self.W
                f = float(d @ d)
                g = 2 * d * self.w / self.W
                c = self.cons_vals(x) / self.scale
                J = self.cons_grads(x) / self.scale[:, None]
                s = np.empty(nc)
                s[:ni] = np.maximum(0.0, lam[:ni] / rho + c[:ni])
                s[ni:] = lam[ni:] / rho + c[ni:]
                f += 0.5 * rho * float(s @ s - (lam / rho) @ (lam / rho))
                g = g + rho * (J.T @ s)
                return f, g
            res = minimize(fun, u, jac=True, method="L-BFGS-B", bounds=bounds,
                           options={"maxiter": 1000, "ftol": 1e-16, "gtol": 1e-12})
            u = np.clip(res.x, 0.0, 1.0)
            x = self.to_x(u)
            c = self.cons_vals(x) / self.scale
            viol = max([0.0] + list(np.maximum(c[:ni], 0.0)) + list(np.abs(c[ni:])))
            raw = self.raw_violation(x)
            if raw <= tol:
                last_ok = x
                if viol <= 1e-11 or raw <= 1e-4 * tol:
                    break
            lam[:ni] = np.maximum(0.0, lam[:ni] + rho * c[:ni])
            lam[ni:] = lam[ni:] + rho * c[ni:]
            if viol > 0.1 * prev_viol:
                rho = min(rho * 10.0, 1e12)
            prev_viol = viol
        return last_ok


def _project_numeric(x_mid, box: Box, cons: ConstraintSet, rng, n_starts, first_feasible):
    space = box.space
    lo, hi = box.closed_bounds()
    idx = np.array(space.num_idx)
    tol = cons.eq_tolerance
    starts = [x_mid[idx]]
    for _ in range(n_starts - 1):
        starts.append(rng.uniform(lo[idx], hi[idx]))
    solver = _AugLag(cons, idx, lo, hi, x_mid, x_mid)
    found = []
    for s in starts:
        u0 = solver.phase1(solver.to_u(s), tol)
        if u0 is None:
            continue
        x = solver.to_x(u0) if first_feasible else solver.solve(solver.to_u(s), tol)
        if x is None:
            x = solver.to_x(u0)
        x = _fix_integers(x, x_mid, box, cons, lo, hi)
        if x is not None:
            found.append(x)
            if first_feasible or (len(found) == 1 and all(c.is_linear() for c in cons.inequalities + cons.equalities)):
                break
    if not found:
        return None
    dists = [float(np.sum((f[idx] - x_mid[idx]) ** 2)) for f in found]
    best = min(range(len(found)), key=lambda k: (dists[k], tuple(found[k])))
    return found[best]


def _fix_integers(x, x_mid, box, cons, lo, hi):
    """Round integer coordinates and re-project the continuous ones if needed."""
    space = box.space
    iidx = space.int_idx
    if not iidx:
        return x
    tol = cons.eq_tolerance
    cand = x.copy()
    cand[iidx] = np.clip(np.round(x[iidx]), lo[iidx], hi[iidx])
    if cons.violation(cand) <= tol:
        return cand
    floors = np.clip(np.floor(x[iidx]), lo[iidx], hi[iidx])
    ceils = np.clip(np.ceil(x[iidx]), lo[iidx], hi[iidx])
    options = list(itertools.islice(itertools.product(*[sorted({a, b}) for a, b in zip(floors, ceils)]), 256))
    options.sort(key=lambda o: float(np.sum((np.array(o) - x[iidx]) ** 2)))
    cidx = [i for i in space.num_idx if i not in iidx]
    for opt in options:
        trial = x.copy()
        trial[iidx] = opt
        if cons.violation(trial) <= tol:
            return trial
        if cidx:
            sub = _AugLag(cons, cidx, lo, hi, trial, x_mid)
            y = sub.solve(sub.to_u(trial[cidx]), tol)
            if y is not None and cons.violation(y) <= tol:
                return y
    return None


def project(x_mid, sol, constraints: ConstraintSet, rng: np.random.Generator | None = None,
            n_starts: int = 20, first_feasible: bool = False) -> Proposal:
    """Closest point to ``x_mid`` inside the box that satisfies the constraints.

    Returns ``x_mid`` untouched when it is already feasible.  Raises
    ``ProjectionFailed`` when no start of the multi-start budget reaches a
    feasible point.
    """
    box = _box_of(sol)
    x_mid = np.asarray(x_mid, dtype=float)
    if not constraints or constraints.is_feasible(x_mid):
        return Proposal(x_mid.copy(), False, 0.0)
    if rng is None:
        rng = np.random.default_rng(0)
    if not constraints.box_may_be_feasible(box):
        raise ProjectionFailed("constraints are infeasible over the box")
    # constraints never involve categoricals, so the sampled categories stay fixed
    x = _project_numeric(x_mid, box, constraints, rng, n_starts, first_feasible)
    if x is None:
        raise ProjectionFailed("no feasible point found in the box")
    return Proposal(x, True, float(np.linalg.norm(x - x_mid)))
