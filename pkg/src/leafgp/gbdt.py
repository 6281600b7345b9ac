"""Gradient-boosted regression trees, trained from scratch.

Squared-error boosting with exact split search.  Besides prediction the
ensemble exposes the pieces the tree kernel and the acquisition solver need:
leaf assignment, leaf boxes and the per-feature ordered split thresholds.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .space import CATEGORICAL, Box, Dataset, FeatureSpace, StructuralError


@dataclass(frozen=True)
class GbdtConfig:
    max_depth: int = 3
    num_boost_rounds: int = 50
    learning_rate: float = 0.1
    min_data_in_leaf: int = 1
    min_data_per_group: int = 1

    def __post_init__(self):
        if self.max_depth < 1 or self.num_boost_rounds < 1:
            raise ValueError("max_depth and num_boost_rounds must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.min_data_in_leaf < 1 or self.min_data_per_group < 1:
            raise ValueError("min_data_in_leaf and min_data_per_group must be >= 1")


@dataclass
class Tree:
    """Binary tree in flat arrays; node 0 is the root.

    Internal nodes send ``x`` left when ``x[feature] <= threshold`` (numeric)
    or when ``x[feature]`` is in ``cat_left`` (categorical).  Leaves are
    numbered ``0..n_leaves-1`` in depth-first, left-first order.
    """
    feature: list = field(default_factory=list)
    threshold: list = field(default_factory=list)
    cat_left: list = field(default_factory=list)
    left: list = field(default_factory=list)
    right: list = field(default_factory=list)
    value: list = field(default_factory=list)
    leaf_id: list = field(default_factory=list)

    def _add(self, feature=-1, threshold=np.nan, cat_left=None, value=0.0):
        self.feature.append(feature)
        self.threshold.append(threshold)
        self.cat_left.append(cat_left)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        self.leaf_id.append(-1)
        return len(self.feature) - 1

    def is_leaf(self, node):
        return self.left[node] == -1

    @property
    def n_nodes(self):
        return len(self.feature)

    @property
    def n_leaves(self):
        return sum(1 for v in self.leaf_id if v >= 0)

    def finalize(self):
        """Assign leaf ids in depth-first order and cache leaf lookups."""
        self.leaf_id = [-1] * self.n_nodes
        order = []
        stack = [0]
        while stack:
            node = stack.pop()
            if self.is_leaf(node):
                order.append(node)
            else:
                stack.append(self.right[node])
                stack.append(self.left[node])
        for lid, node in enumerate(order):
            self.leaf_id[node] = lid
        self._leaf_nodes = order
        self._leaf_values = np.array([self.value[nd] for nd in order])
        return self

    @property
    def leaf_nodes(self):
        return self._leaf_nodes

    @property
    def leaf_values(self):
        return self._leaf_values

    def goes_left(self, node, x):
        cl = self.cat_left[node]
        v = x[self.feature[node]]
        if cl is not None:
            return int(v) in cl
        return v <= self.threshold[node]

    def assign_leaf(self, x):
        node = 0
        while not self.is_leaf(node):
            node = self.left[node] if self.goes_left(node, x) else self.right[node]
        return self.leaf_id[node]

    def apply(self, X):
        """Leaf id for every row of ``X``."""
        X = np.atleast_2d(X)
        out = np.empty(X.shape[0], dtype=int)
        nodes = np.zeros(X.shape[0], dtype=int)
        active = np.ones(X.shape[0], dtype=bool)
        while active.any():
            for node in np.unique(nodes[active]):
                rows = active & (nodes == node)
                if self.is_leaf(node):
                    out[rows] = self.leaf_id[node]
                    active[rows] = False
                    continue
                cl = self.cat_left[node]
                col = X[rows, self.feature[node]]
                if cl is not None:
                    go_left = np.isin(col.astype(int), list(cl))
                else:
                    go_left = col <= self.threshold[node]
                idx = np.flatnonzero(rows)
                nodes[idx[go_left]] = self.left[node]
                nodes[idx[~go_left]] = self.right[node]
        return out

    def leaf_path(self, leaf):
        """Root-to-leaf list of ``(node, went_left)``."""
        target = self._leaf_nodes[leaf]
        parent = {}
        for nd in range(self.n_nodes):
            if not self.is_leaf(nd):
                parent[self.left[nd]] = (nd, True)
                parent[self.right[nd]] = (nd, False)
        path = []
        nd = target
        while nd in parent:
            path.append(parent[nd])
            nd = parent[nd][0]
        return path[::-1]

    def depth(self):
        def _d(nd):
            if self.is_leaf(nd):
                return 0
            return 1 + max(_d(self.left[nd]), _d(self.right[nd]))
        return _d(0)

    def internal_nodes(self):
        return [nd for nd in range(self.n_nodes) if not self.is_leaf(nd)]


@dataclass
class TreeEnsemble:
    trees: list
    space: FeatureSpace
    base_score: float = 0.0

    def __post_init__(self):
        self.leaf_offsets = np.cumsum([0] + [t.n_leaves for t in self.trees])

    @property
    def n_trees(self):
        return len(self.trees)

    @property
    def total_leaves(self):
        return int(self.leaf_offsets[-1])

    def apply(self, X):
        """``(m, n_trees)`` matrix of per-tree leaf ids."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.column_stack([t.apply(X) for t in self.trees]) if self.trees else np.zeros((X.shape[0], 0), int)

    def predict(self, x):
        return self.base_score + sum(t.value[t.leaf_nodes[t.assign_leaf(x)]] for t in self.trees)

    def predict_many(self, X):
        leaves = self.apply(X)
        out = np.full(leaves.shape[0], self.base_score)
        for j, t in enumerate(self.trees):
            out += t.leaf_values[leaves[:, j]]
        return out

    def leaf_box(self, t, leaf) -> Box:
        return leaf_box(self.trees[t], leaf, self.space)


def assign_leaf(tree: Tree, x) -> int:
    return tree.assign_leaf(np.asarray(x, dtype=float))


def predict(ens: TreeEnsemble, x) -> float:
    return ens.predict(np.asarray(x, dtype=float))


def leaf_box(tree: Tree, leaf: int, space: FeatureSpace) -> Box:
    box = Box.from_space(space)
    lo, hi, open_lo = box.lo, box.hi, box.open_lo
    cats = list(box.cats)
    for node, went_left in tree.leaf_path(leaf):
        f = tree.feature[node]
        cl = tree.cat_left[node]
        if cl is not None:
            cats[f] = cats[f] & cl if went_left else cats[f] - cl
        elif went_left:
            hi[f] = min(hi[f], tree.threshold[node])
        elif tree.threshold[node] >= lo[f]:
            lo[f] = tree.threshold[node]
            open_lo[f] = True
    return Box(space, lo, hi, open_lo, tuple(cats))


# --- training ----------------------------------------------------------------

def _best_numeric_split(x, r, min_leaf):
    order = np.argsort(x, kind="stable")
    xs, rs = x[order], r[order]
    n = xs.shape[0]
    csum = np.cumsum(rs)
    total = csum[-1]
    k = np.arange(1, n)  # left sizes
    valid = (xs[:-1] < xs[1:]) & (k >= min_leaf) & (n - k >= min_leaf)
    if not valid.any():
        return -np.inf, None
    sl = csum[:-1]
    gain = sl ** 2 / k + (total - sl) ** 2 / (n - k) - total ** 2 / n
    gain = np.where(valid, gain, -np.inf)
    j = int(np.argmax(gain))
    a, b = xs[j], xs[j + 1]
    thr = 0.5 * (a + b)
    if not a <= thr < b:
        thr = a
    return float(gain[j]), float(thr)


def _best_categorical_split(x, r, min_leaf, min_group):
    codes = x.astype(int)
    present = np.unique(codes)
    if present.size < 2:
        return -np.inf, None
    cnt = np.array([np.sum(codes == c) for c in present])
    sums = np.array([r[codes == c].sum() for c in present])
    # sort by mean residual, ties by category index
    order = np.lexsort((present, sums / cnt))
    cnt, sums, present = cnt[order], sums[order], present[order]
    n, total = cnt.sum(), sums.sum()
    need = max(min_leaf, min_group)
    best, best_set = -np.inf, None
    for k in range(1, present.size):
        nl, sl = cnt[:k].sum(), sums[:k].sum()
        if nl < need or n - nl < need:
            continue
        g = sl ** 2 / nl + (total - sl) ** 2 / (n - nl) - total ** 2 / n
        if g > best:
            best, best_set = g, frozenset(int(c) for c in present[:k])
    return best, best_set


def _fit_tree(X, r, space, cfg):
    tree = Tree()
    # (node, row indices, depth) processed breadth-first
    root = tree._add()
    queue = [(root, np.arange(X.shape[0]), 0)]
    while queue:
        node, rows, depth = queue.pop(0)
        rr = r[rows]
        tree.value[node] = cfg.learning_rate * float(rr.mean())
        if depth >= cfg.max_depth or rows.size < 2 * cfg.min_data_in_leaf:
            continue
        eps = 1e-12 * max(1.0, float(np.sum(rr ** 2)))
        best_gain, best = eps, None
        for f, feat in enumerate(space.features):
            col = X[rows, f]
            if feat.kind == CATEGORICAL:
                g, cl = _best_categorical_split(col, rr, cfg.min_data_in_leaf, cfg.min_data_per_group)
                cand = (f, np.nan, cl)
            else:
                g, thr = _best_numeric_split(col, rr, cfg.min_data_in_leaf)
                cand = (f, thr, None)
            if g > best_gain:
                best_gain, best = g, cand
        if best is None:
            continue
        f, thr, cl = best
        if cl is not None:
            go_left = np.isin(X[rows, f].astype(int), list(cl))
        else:
            go_left = X[rows, f] <= thr
        tree.feature[node], tree.threshold[node], tree.cat_left[node] = f, thr, cl
        lc, rc = tree._add(), tree._add()
        tree.left[node], tree.right[node] = lc, rc
        queue.append((lc, rows[go_left], depth + 1))
        queue.append((rc, rows[~go_left], depth + 1))
    return tree.finalize()


def train(dataset: Dataset, space: FeatureSpace, cfg: GbdtConfig = GbdtConfig(), rng=None) -> TreeEnsemble:
    """Boost ``cfg.num_boost_rounds`` squared-error trees on ``dataset``.

    Targets are expected to be standardized by the caller, so the base score
    is zero.  Training is deterministic; ``rng`` is accepted for interface
    symmetry only.
    """
    X, y = dataset.X, dataset.y
    if dataset.m == 0:
        raise StructuralError("cannot train on an empty dataset")
    if dataset.m < 2 * cfg.min_data_in_leaf:
        raise StructuralError(f"need at least {2 * cfg.min_data_in_leaf} points, got {dataset.m}")
    pred = np.zeros(dataset.m)
    trees = []
    for _ in range(cfg.num_boost_rounds):
        tree = _fit_tree(X, y - pred, space, cfg)
        pred += tree.leaf_values[tree.apply(X)]
        trees.append(tree)
    return TreeEnsemble(trees, space, 0.0)


# --- split index ---------------------------------------------------------------

@dataclass
class SplitIndex:
    """Sorted, deduplicated thresholds per numeric feature (empty for categoricals)."""
    thresholds: list
    categories: list

    def K(self, i):
        return len(self.thresholds[i])

    def position(self, i, thr):
        """1-based position of ``thr`` among feature ``i``'s thresholds."""
        j = int(np.searchsorted(self.thresholds[i], thr))
        if j >= len(self.thresholds[i]) or self.thresholds[i][j] != thr:
            raise KeyError(f"threshold {thr} not indexed for feature {i}")
        return j + 1


def split_index(ens: TreeEnsemble) -> SplitIndex:
    space = ens.space
    thr = [set() for _ in range(space.n)]
    for t in ens.trees:
        for nd in t.internal_nodes():
            if t.cat_left[nd] is None:
                thr[t.feature[nd]].add(t.threshold[nd])
    thresholds = [np.array(sorted(s)) if not space[i].is_cat else np.array([]) for i, s in enumerate(thr)]
    categories = [list(f.categories) if f.is_cat else None for f in space.features]
    return SplitIndex(thresholds, categories)


# --- text serialization ----------------------------------------------------------

def dumps(ens: TreeEnsemble) -> str:
    """One line per node: ``tree node kind payload``; floats in repr form."""
    lines = [f"ensemble {ens.n_trees} {ens.base_score!r}"]
    for ti, t in enumerate(ens.trees):
        for nd in range(t.n_nodes):
            if t.is_leaf(nd):
                lines.append(f"{ti} {nd} leaf {t.leaf_id[nd]} {t.value[nd]!r}")
            elif t.cat_left[nd] is not None:
                cats = ",".join(str(c) for c in sorted(t.cat_left[nd]))
                lines.append(f"{ti} {nd} cat {t.feature[nd]} {cats} {t.left[nd]} {t.right[nd]} {t.value[nd]!r}")
            else:
                lines.append(f"{ti} {nd} num {t.feature[nd]} {t.threshold[nd]!r} {t.left[nd]} {t.right[nd]} {t.value[nd]!r}")
    return "\n".join(lines) + "\n"


def loads(text: str, space: FeatureSpace) -> TreeEnsemble:
    lines = [ln.split() for ln in text.strip().splitlines()]
    head = lines[0]
    if head[0] != "ensemble":
        raise ValueError("missing ensemble header")
    n_trees, base = int(head[1]), float(head[2])
    rows = {}
    for parts in lines[1:]:
        rows.setdefault(int(parts[0]), []).append(parts)
    trees = []
    for ti in range(n_trees):
        entries = sorted(rows.get(ti, []), key=lambda p: int(p[1]))
        t = Tree()
        for p in entries:
            if p[2] == "leaf":
                t._add(value=float(p[4]))
            elif p[2] == "cat":
                nd = t._add(feature=int(p[3]), cat_left=frozenset(int(c) for c in p[4].split(",")), value=float(p[7]))
                t.left[nd], t.right[nd] = int(p[5]), int(p[6])
            else:
                nd = t._add(feature=int(p[3]), threshold=float(p[4]), value=float(p[7]))
                t.left[nd], t.right[nd] = int(p[5]), int(p[6])
        trees.append(t.finalize())
    return TreeEnsemble(trees, space, base)
