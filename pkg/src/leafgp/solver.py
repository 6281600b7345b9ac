"""Branch-and-bound maximization of the acquisition over tree cells.

Nodes are boxes described by positions on each numeric feature's sorted
threshold grid ``[lb, v_1, ..., v_K, ub]`` (position ``a..b`` means the
half-open interval ``(g[a], g[b]]``, closed at ``lb`` when ``a == 0``) and
by a bitmask of allowed categories for each categorical feature.  A node
keeps the set of leaves per tree that its box can still reach.

Upper bounds decompose into a mean part (per-tree best reachable leaf
contribution) and a standard deviation part obtained from a certified lower
bound on ``k' Q k`` over the box of reachable cross-covariance vectors.
"""
from __future__ import annotations

import heapq
import itertools
import math
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .acq import AcquisitionProblem, Cell, cap_ok, make_cell
from .propose import ProjectionFailed, midpoint, project
from .space import INTEGER, Box, StructuralError

OPTIMAL = "optimal"
GAP_LIMIT = "gap_limit"
TIME_LIMIT = "time_limit"
INFEASIBLE = "infeasible"

CAP_TOL = 1e-12


@dataclass(frozen=True)
class SolveOptions:
    time_limit_s: float = 100.0
    rel_gap: float = 1e-4
    max_nodes: int = 10_000_000
    workers: int = 1

    def __post_init__(self):
        if not (self.time_limit_s > 0 and self.rel_gap > 0 and self.max_nodes > 0 and self.workers > 0):
            raise ValueError("solve options must all be positive")


@dataclass
class BnbNode:
    lo_pos: np.ndarray       # grid position of the lower end, per feature
    hi_pos: np.ndarray       # grid position of the upper end, per feature
    cat_mask: np.ndarray     # allowed-category bitmask, per feature
    reachable: np.ndarray    # bool over all leaves of the ensemble
    bound: float = math.inf
    depth: int = 0
    k_warm: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class BoxSolution:
    box: Box | None
    leaves: tuple
    objective: float
    gap: float
    status: str
    best_bound: float
    n_nodes: int = 0
    elapsed_s: float = 0.0

    @property
    def x_lb(self):
        return None if self.box is None else self.box.closed_bounds()[0]

    @property
    def x_ub(self):
        return None if self.box is None else self.box.closed_bounds()[1]

    @property
    def x_cat(self):
        return None if self.box is None else self.box.cats

    @property
    def cell(self) -> Cell:
        return Cell(self.leaves, self.box)


# --- static layout of the partition ----------------------------------------------

class _Layout:
    """Position-coded leaf regions and split candidates for one problem."""

    def __init__(self, p: AcquisitionProblem):
        space, ens = p.space, p.ens
        self.space = space
        self.n = space.n
        self.T = ens.n_trees
        self.offs = ens.leaf_offsets[:-1].astype(int)
        self.L = ens.total_leaves
        self.num = np.array(space.num_idx, dtype=int)
        self.cat = np.array(space.cat_idx, dtype=int)
        for i in self.cat:
            if space[i].n_categories > 62:
                raise StructuralError("at most 62 categories per feature are supported")

        self.grids = [None] * self.n
        self.K = np.zeros(self.n, dtype=int)
        for i in self.num:
            thr = np.asarray(p.split.thresholds[i], dtype=float)
            thr = thr[(thr > space.lb[i]) & (thr < space.ub[i])]
            self.grids[i] = np.concatenate([[space.lb[i]], thr, [space.ub[i]]])
            self.K[i] = thr.size
        self.full_mask = np.zeros(self.n, dtype=np.int64)
        for i in self.cat:
            self.full_mask[i] = (1 << space[i].n_categories) - 1

        # candidate ids in feature order: K_i per numeric feature, one per categorical
        self.cand_off = np.zeros(self.n, dtype=int)
        c = 0
        for i in range(self.n):
            self.cand_off[i] = c
            c += 1 if space[i].is_cat else self.K[i]
        self.n_cand = c

        self.plo = np.zeros((self.L, self.n), dtype=int)
        self.phi = np.zeros((self.L, self.n), dtype=int)
        self.cmask = np.zeros((self.L, self.n), dtype=np.int64)
        self.tree_of = np.repeat(np.arange(self.T), np.diff(ens.leaf_offsets))
        boxes = p.leaf_boxes()
        for t in range(self.T):
            for l, box in enumerate(boxes[t]):
                g = self.offs[t] + l
                for i in self.num:
                    self.plo[g, i] = self.pos(i, box.lo[i]) if box.open_lo[i] else 0
                    self.phi[g, i] = self.pos(i, box.hi[i])
                for i in self.cat:
                    self.cmask[g, i] = sum(1 << c for c in box.cats[i])

        # internal nodes: contiguous leaf ranges of both children
        s_, m_, e_, cid, tr = [], [], [], [], []
        for t, tree in enumerate(ens.trees):
            span = {}

            def walk(nd):
                if tree.is_leaf(nd):
                    span[nd] = (tree.leaf_id[nd], tree.leaf_id[nd] + 1)
                else:
                    walk(tree.left[nd])
                    walk(tree.right[nd])
                    span[nd] = (span[tree.left[nd]][0], span[tree.right[nd]][1])
            walk(0)
            for nd in tree.internal_nodes():
                f = tree.feature[nd]
                if tree.cat_left[nd] is not None:
                    cnd = self.cand_off[f]
                else:
                    thr = tree.threshold[nd]
                    cnd = self.cand_off[f] + self.pos(f, thr) - 1 if space.lb[f] < thr < space.ub[f] else -1
                s_.append(self.offs[t] + span[tree.left[nd]][0])
                m_.append(self.offs[t] + span[tree.left[nd]][1])
                e_.append(self.offs[t] + span[tree.right[nd]][1])
                cid.append(cnd)
                tr.append(t)
        self.int_s = np.array(s_, dtype=int)
        self.int_m = np.array(m_, dtype=int)
        self.int_e = np.array(e_, dtype=int)
        self.int_cid = np.array(cid, dtype=int)
        self.int_tree = np.array(tr, dtype=int)
        ok = self.int_cid >= 0
        self.int_s, self.int_m, self.int_e = self.int_s[ok], self.int_m[ok], self.int_e[ok]
        self.int_cid, self.int_tree = self.int_cid[ok], self.int_tree[ok]
        self.cand_feat = np.zeros(self.n_cand, dtype=int)
        self.cand_pos = np.zeros(self.n_cand, dtype=int)
        for i in range(self.n):
            if space[i].is_cat:
                self.cand_feat[self.cand_off[i]] = i
            else:
                ids = self.cand_off[i] + np.arange(self.K[i])
                self.cand_feat[ids] = i
                self.cand_pos[ids] = np.arange(1, self.K[i] + 1)

        # leaf contributions to the mean, and each data point's leaf per tree
        self.leaf_mean = p.alpha @ p.kernel_coeff
        A = p.post.A
        self.data_leaf = np.stack([self.offs[t] + np.argmax(A[:, self.offs[t]:self.offs[t] + (ens.leaf_offsets[t + 1] - ens.leaf_offsets[t])], axis=1)
                                   for t in range(self.T)], axis=1) if self.T else np.zeros((A.shape[0], 0), int)
        self.coef = p.sigma0_sq / max(self.T, 1)
        Q = p.Qinv
        self.Q = Q
        self.lip = 2.0 * float(np.max(np.abs(Q).sum(axis=1))) if Q.size else 0.0

    def pos(self, i, v):
        g = self.grids[i]
        if v <= g[0]:
            return 0
        if v >= g[-1]:
            return len(g) - 1
        j = int(np.searchsorted(g, v))
        if g[j] != v:
            raise StructuralError(f"value {v} is not on the threshold grid of feature {i}")
        return j

    # --- node geometry ---

    def root(self):
        lo = np.zeros(self.n, dtype=int)
        hi = np.zeros(self.n, dtype=int)
        hi[self.num] = self.K[self.num] + 1
        R = self.reach(lo, hi, self.full_mask.copy())
        return BnbNode(lo, hi, self.full_mask.copy(), R)

    def reach(self, lo, hi, mask):
        R = np.ones(self.L, dtype=bool)
        if self.num.size:
            R &= np.all(self.plo[:, self.num] < hi[self.num], axis=1)
            R &= np.all(self.phi[:, self.num] > lo[self.num], axis=1)
        if self.cat.size:
            R &= np.all((self.cmask[:, self.cat] & mask[self.cat]) != 0, axis=1)
        return R

    def int_empty(self, i, a, b):
        g = self.grids[i]
        lo = math.floor(g[a]) + 1 if a > 0 else math.ceil(g[a])
        return lo > math.floor(g[b])

    def box(self, lo_pos, hi_pos, mask) -> Box:
        space = self.space
        lo = space.lb.astype(float).copy()
        hi = space.ub.astype(float).copy()
        open_lo = np.zeros(self.n, dtype=bool)
        for i in self.num:
            lo[i] = self.grids[i][lo_pos[i]]
            hi[i] = self.grids[i][hi_pos[i]]
            open_lo[i] = lo_pos[i] > 0
        cats = tuple(frozenset(c for c in range(space[i].n_categories) if (int(mask[i]) >> c) & 1)
                     if space[i].is_cat else None for i in range(self.n))
        return Box(space, lo, hi, open_lo, cats)

    def node_box(self, node: BnbNode) -> Box:
        return self.box(node.lo_pos, node.hi_pos, node.cat_mask)

    def cell_geometry(self, gl):
        lo = self.plo[gl].max(axis=0)
        hi = self.phi[gl].min(axis=0)
        mask = np.bitwise_and.reduce(self.cmask[gl], axis=0) if len(gl) else self.full_mask.copy()
        return lo, hi, mask

    def geometry_empty(self, lo, hi, mask):
        for i in self.num:
            if lo[i] >= hi[i]:
                return True
            if self.space[i].kind == INTEGER and self.int_empty(i, lo[i], hi[i]):
                return True
        for i in self.cat:
            if mask[i] == 0:
                return True
        return False

    def cell_at(self, node: BnbNode, x):
        """Global leaf ids of the cell containing point ``x`` (one per tree)."""
        match = np.ones(self.L, dtype=bool)
        for i in self.num:
            g = self.grids[i]
            j = max(int(np.searchsorted(g, x[i], side="left")) - 1, 0)
            j = min(max(j, node.lo_pos[i]), node.hi_pos[i] - 1)
            match &= (self.plo[:, i] <= j) & (self.phi[:, i] >= j + 1)
        for i in self.cat:
            match &= ((self.cmask[:, i] >> int(x[i])) & 1).astype(bool)
        gl = np.flatnonzero(match)
        if gl.size != self.T:
            return None
        return gl

    def point_in(self, node: BnbNode, rng=None):
        """Midpoint of the node box, or a uniform draw from it when ``rng`` is given."""
        x = np.zeros(self.n)
        for i in self.num:
            a, b = self.grids[i][node.lo_pos[i]], self.grids[i][node.hi_pos[i]]
            v = 0.5 * (a + b) if rng is None else rng.uniform(a, b)
            if self.space[i].kind == INTEGER:
                ilo = math.floor(a) + 1 if node.lo_pos[i] > 0 else math.ceil(a)
                ihi = math.floor(b)
                v = min(max(math.floor(v) if rng is None else round(v), ilo), ihi)
            x[i] = v
        for i in self.cat:
            cats = [c for c in range(self.space[i].n_categories) if (int(node.cat_mask[i]) >> c) & 1]
            x[i] = cats[0] if rng is None else cats[int(rng.integers(len(cats)))]
        return x

    def local(self, gl):
        return tuple(int(g - self.offs[t]) for t, g in enumerate(gl))

    # --- branching ---

    def branch(self, node: BnbNode):
        """Best candidate id, or None when every tree has a single reachable leaf."""
        cs = np.concatenate([[0], np.cumsum(node.reachable)])
        cut = (cs[self.int_m] > cs[self.int_s]) & (cs[self.int_e] > cs[self.int_m])
        if not cut.any():
            return None
        pairs = np.unique(self.int_cid[cut] * max(self.T, 1) + self.int_tree[cut])
        counts = np.bincount(pairs // max(self.T, 1), minlength=self.n_cand)
        return int(np.argmax(counts))

    def children(self, node: BnbNode, cand):
        i = self.cand_feat[cand]
        out = []
        if self.space[i].is_cat:
            mask = int(node.cat_mask[i])
            low = mask & -mask
            for m in (low, mask & ~low):
                cm = node.cat_mask.copy()
                cm[i] = m
                R = node.reachable & ((self.cmask[:, i] & m) != 0)
                out.append(BnbNode(node.lo_pos, node.hi_pos, cm, R, node.bound, node.depth + 1, node.k_warm))
            return out
        p_ = self.cand_pos[cand]
        for a, b in ((node.lo_pos[i], p_), (p_, node.hi_pos[i])):
            if self.space[i].kind == INTEGER and self.int_empty(i, a, b):
                continue
            lo, hi = node.lo_pos.copy(), node.hi_pos.copy()
            lo[i], hi[i] = a, b
            R = node.reachable & (self.plo[:, i] < b) & (self.phi[:, i] > a)
            out.append(BnbNode(lo, hi, node.cat_mask, R, node.bound, node.depth + 1, node.k_warm))
        return out


def _layout(p: AcquisitionProblem) -> _Layout:
    if "layout" not in p._cache:
        p._cache["layout"] = _Layout(p)
    return p._cache["layout"]


# --- bounds ------------------------------------------------------------------------

def _kernel_range(lay: _Layout, R):
    """Per-data-point bounds on the cross-covariance over reachable cells."""
    counts = np.add.reduceat(R.astype(int), lay.offs) if lay.T else np.zeros(0, int)
    hit = R[lay.data_leaf]
    sure = hit & (counts == 1)[None, :]
    return lay.coef * sure.sum(axis=1), lay.coef * hit.sum(axis=1), counts


def _min_quadratic(Q, lip, lo, hi, k0, max_iter=200, rtol=1e-6):
    """Certified lower bound on ``min k'Qk`` over the box ``[lo, hi]`` (Q PSD).

    Accelerated projected gradient, with the linearization bound at every
    iterate; convexity makes each linearization a valid underestimate.
    """
    if np.array_equal(lo, hi):
        return float(lo @ Q @ lo), lo
    if not np.any(lo > 0):
        # q >= 0 everywhere and q(0) = 0
        return 0.0, np.zeros_like(lo)
    k = np.clip(k0 if k0 is not None else 0.5 * (lo + hi), lo, hi)
    y, t = k.copy(), 1.0
    best_lb, best_k, best_q = -np.inf, k, np.inf
    step = 1.0 / lip if lip > 0 else 0.0
    for _ in range(max_iter):
        Qk = Q @ k
        q = float(k @ Qk)
        g = 2.0 * Qk
        lb = q + float(np.minimum(g * (lo - k), g * (hi - k)).sum())
        if lb > best_lb:
            best_lb = lb
        if q < best_q:
            best_q, best_k = q, k
        if best_q - best_lb <= 1e-12 + rtol * abs(best_q):
            break
        Qy = Q @ y
        k_new = np.clip(y - step * 2.0 * Qy, lo, hi)
        t_new = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        y = k_new + ((t - 1) / t_new) * (k_new - k)
        k, t = k_new, t_new
    return max(best_lb, 0.0), best_k


def _node_bound(p: AcquisitionProblem, lay: _Layout, node: BnbNode):
    """Upper bound on the acquisition over the node; also refreshes the warm start."""
    R = node.reachable
    if lay.T:
        vm = np.where(R, lay.leaf_mean, -np.inf)
        mu_ub = float(np.maximum.reduceat(vm, lay.offs).sum())
    else:
        mu_ub = 0.0
    if p.mean_only:
        return mu_ub
    klo, khi, _ = _kernel_range(lay, R)
    qlb, k = _min_quadratic(lay.Q, lay.lip, klo, khi, node.k_warm)
    node.k_warm = k
    s0 = p.sigma0_sq
    var = s0 - qlb
    if not np.array_equal(klo, khi):
        var += 1e-12 * max(1.0, s0)
    var = min(max(var, 0.0), s0)
    return mu_ub + p.kappa * math.sqrt(var)


def bound(p: AcquisitionProblem, node: BnbNode) -> float:
    """Valid upper bound on the acquisition over every cell under ``node``."""
    return _node_bound(p, _layout(p), node)


def root_node(p: AcquisitionProblem) -> BnbNode:
    lay = _layout(p)
    node = lay.root()
    node.bound = _node_bound(p, lay, node)
    return node


def node_box(p: AcquisitionProblem, node: BnbNode) -> Box:
    return _layout(p).node_box(node)


def branch(p: AcquisitionProblem, node: BnbNode):
    """Children of ``node`` under the branching rule (empty list at a single cell)."""
    lay = _layout(p)
    cand = lay.branch(node)
    if cand is None:
        return []
    kids = lay.children(node, cand)
    for kid in kids:
        kid.bound = _node_bound(p, lay, kid)
    return kids


# --- feasibility of cells -----------------------------------------------------------------

class _Feasibility:
    def __init__(self, p, lay, exclude):
        self.p, self.lay = p, lay
        self.exclude = {tuple(e) for e in exclude}
        self.cache = {}

    def __call__(self, gl) -> bool:
        leaves = self.lay.local(gl)
        hit = self.cache.get(leaves)
        if hit is not None:
            return hit
        ok = self._check(gl, leaves)
        self.cache[leaves] = ok
        return ok

    def _check(self, gl, leaves):
        p, lay = self.p, self.lay
        if leaves in self.exclude or not cap_ok(p, leaves):
            return False
        geo = lay.cell_geometry(gl)
        if lay.geometry_empty(*geo):
            return False
        cons = p.constraints
        if not cons:
            return True
        box = lay.box(*geo)
        if not cons.box_may_be_feasible(box):
            return False
        rng = np.random.default_rng(zlib.crc32(repr(leaves).encode()))
        try:
            project(midpoint(box, rng), box, cons, rng=rng, first_feasible=True)
        except ProjectionFailed:
            return False
        return True


def _cell_value(p, leaves):
    return p.value_from_k(p.k_of(leaves))


def _screen(p, lay, node) -> bool:
    """False when the node provably holds no admissible cell."""
    if p.agreement_cap is not None:
        klo, _, _ = _kernel_range(lay, node.reachable)
        if np.any(klo / p.sigma0_sq > p.agreement_cap + CAP_TOL):
            return False
    if p.constraints and not p.constraints.box_may_be_feasible(lay.node_box(node)):
        return False
    return True


def _solution(p, leaves, objective, best_bound, status, n_nodes, t0):
    cell = make_cell(p, leaves)
    gap = max(0.0, (best_bound - objective) / max(1.0, abs(objective)))
    return BoxSolution(cell.box, cell.leaves, objective, gap, status, max(best_bound, objective),
                       n_nodes, time.perf_counter() - t0)


def solve(p: AcquisitionProblem, opts: SolveOptions = SolveOptions(), rng=None, *,
          exclude=(), incumbent_cells=(), log=None) -> BoxSolution:
    """Best-first branch and bound.

    ``exclude`` holds leaf tuples treated as infeasible; ``incumbent_cells``
    are leaf tuples tried as starting incumbents.  ``log`` is an optional
    text stream receiving ``node,depth,bound,incumbent`` rows.  Time and node
    limits only take effect once a feasible cell is known.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(0) if rng is None else rng
    lay = _layout(p)
    feasible = _Feasibility(p, lay, exclude)
    inc = {"val": -math.inf, "gl": None}

    def consider(gl):
        if gl is None:
            return
        leaves = lay.local(gl)
        val = _cell_value(p, leaves)
        if val > inc["val"] and feasible(gl):
            inc["val"], inc["gl"] = val, gl

    def tol():
        return opts.rel_gap * max(1.0, abs(inc["val"]))

    for leaves in incumbent_cells:
        leaves = tuple(int(l) for l in leaves)
        if len(leaves) == lay.T and all(0 <= l < p.ens.trees[t].n_leaves for t, l in enumerate(leaves)):
            consider(lay.offs + np.array(leaves, dtype=int))

    if log is not None:
        log.write("node,depth,bound,incumbent\n")

    pool = ThreadPoolExecutor(opts.workers) if opts.workers > 1 else None
    heap = []
    counter = itertools.count()
    root = lay.root()
    if _screen(p, lay, root):
        root.bound = _node_bound(p, lay, root)
        heapq.heappush(heap, (-root.bound, next(counter), root))

    n_nodes = 0
    status = None
    try:
        while heap:
            top = -heap[0][0]
            have = inc["gl"] is not None
            if have and top <= inc["val"] + tol():
                status = OPTIMAL
                break
            if have and time.perf_counter() - t0 > opts.time_limit_s:
                status = TIME_LIMIT
                break
            if have and n_nodes >= opts.max_nodes:
                status = GAP_LIMIT
                break
            _, _, node = heapq.heappop(heap)
            n_nodes += 1
            if log is not None:
                log.write(f"{n_nodes},{node.depth},{node.bound!r},{inc['val']!r}\n")

            consider(lay.cell_at(node, lay.point_in(node)))
            if n_nodes % 100 == 0:
                consider(lay.cell_at(node, lay.point_in(node, rng)))

            cand = lay.branch(node)
            if cand is None:
                consider(np.flatnonzero(node.reachable))
                continue
            kids = [k for k in lay.children(node, cand) if _screen(p, lay, k)]
            if pool is not None and len(kids) > 1:
                bounds = list(pool.map(lambda k: _node_bound(p, lay, k), kids))
            else:
                bounds = [_node_bound(p, lay, k) for k in kids]
            for kid, b in zip(kids, bounds):
                # a child's region is inside its parent's, so the parent bound stays valid
                kid.bound = min(b, node.bound)
                if inc["gl"] is None or kid.bound > inc["val"] + tol():
                    heapq.heappush(heap, (-kid.bound, next(counter), kid))
    finally:
        if pool is not None:
            pool.shutdown()

    if inc["gl"] is None:
        return BoxSolution(None, (), -math.inf, math.inf, INFEASIBLE, -math.inf, n_nodes,
                           time.perf_counter() - t0)
    if status is None:
        status = OPTIMAL
    best_bound = max(inc["val"], -heap[0][0]) if heap else inc["val"]
    return _solution(p, lay.local(inc["gl"]), inc["val"], best_bound, status, n_nodes, t0)


def enumerate_exact(p: AcquisitionProblem, max_cells: int = 1_000_000, exclude=()) -> BoxSolution:
    """Exhaustive maximization over every consistent cell (test oracle).

    Ties go to the lexicographically smallest leaf tuple.
    """
    t0 = time.perf_counter()
    lay = _layout(p)
    cells = []
    lo0 = np.zeros(lay.n, dtype=int)
    hi0 = np.zeros(lay.n, dtype=int)
    hi0[lay.num] = lay.K[lay.num] + 1
    ens = p.ens

    def dfs(t, lo, hi, mask, chosen):
        if t == lay.T:
            cells.append(tuple(chosen))
            if len(cells) > max_cells:
                raise StructuralError(f"more than {max_cells} cells; refusing to enumerate")
            return
        for l in range(ens.trees[t].n_leaves):
            g = lay.offs[t] + l
            nlo = np.maximum(lo, lay.plo[g])
            nhi = np.minimum(hi, lay.phi[g])
            nmask = mask & lay.cmask[g] if lay.cat.size else mask
            if lay.geometry_empty(nlo, nhi, nmask):
                continue
            chosen.append(l)
            dfs(t + 1, nlo, nhi, nmask, chosen)
            chosen.pop()

    dfs(0, lo0, hi0, lay.full_mask.copy(), [])
    if not cells:
        return BoxSolution(None, (), -math.inf, math.inf, INFEASIBLE, -math.inf, 0, time.perf_counter() - t0)
    leaves = np.array(cells, dtype=int).reshape(len(cells), lay.T)
    gl = leaves + lay.offs[None, :]
    k = p.sigma0_sq * (p.post.A[:, gl].sum(axis=2).T / p.n_trees) if lay.T else np.zeros((len(cells), p.post.m))
    vals = k @ p.alpha
    if not p.mean_only:
        var = p.sigma0_sq - np.einsum("ij,jk,ik->i", k, p.Qinv, k)
        vals = vals + p.kappa * np.sqrt(np.maximum(var, 0.0))
    order = sorted(range(len(cells)), key=lambda r: (-vals[r], cells[r]))
    feasible = _Feasibility(p, lay, exclude)
    for r in order:
        if feasible(gl[r]):
            obj = _cell_value(p, cells[r])
            return _solution(p, cells[r], obj, obj, OPTIMAL, len(cells), t0)
    return BoxSolution(None, (), -math.inf, math.inf, INFEASIBLE, -math.inf, len(cells), time.perf_counter() - t0)
