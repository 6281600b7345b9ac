"""UCB acquisition over the tree partition.

Within a cell (one active leaf per tree) the cross-covariance vector is a
sum of per-leaf columns of the activation matrix, so the GP mean is linear
in the leaf indicators and the variance is a concave quadratic in them.
Everything here works in standardized target units.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .gbdt import SplitIndex, leaf_box, split_index
from .space import Box, ConstraintSet, StructuralError
from .tkgp import GpPosterior

DEFAULT_KAPPA = 1.96


@dataclass(frozen=True)
class Cell:
    leaves: tuple
    box: Box

    def representative(self):
        """A point inside the cell: box midpoint, lowest allowed category."""
        x = self.box.midpoint()
        for i, f in enumerate(self.box.space.features):
            if f.is_cat:
                x[i] = min(self.box.cats[i])
        return x


@dataclass(frozen=True)
class AcquisitionProblem:
    post: GpPosterior
    kappa: float
    constraints: ConstraintSet
    split: SplitIndex
    kernel_coeff: np.ndarray   # (m, total_leaves): sigma0^2/T * A
    Qinv: np.ndarray           # (m, m)
    alpha: np.ndarray          # (m,)
    agreement_cap: float | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def ens(self):
        return self.post.ens

    @property
    def space(self):
        return self.post.ens.space

    @property
    def sigma0_sq(self):
        return self.post.params.sigma0_sq

    @property
    def n_trees(self):
        return self.post.ens.n_trees

    @property
    def mean_only(self):
        return self.agreement_cap is not None

    def leaf_boxes(self):
        if "leaf_boxes" not in self._cache:
            self._cache["leaf_boxes"] = [[leaf_box(t, l, self.space) for l in range(t.n_leaves)]
                                         for t in self.ens.trees]
        return self._cache["leaf_boxes"]

    def global_leaves(self, leaves):
        return self.ens.leaf_offsets[:-1] + np.asarray(leaves)

    def k_of(self, leaves):
        return self.sigma0_sq * (self.post.A[:, self.global_leaves(leaves)].sum(axis=1) / self.n_trees)

    def overlap(self, leaves):
        """Per-data-point fraction of trees sharing the active leaf."""
        return self.post.A[:, self.global_leaves(leaves)].sum(axis=1) / self.n_trees

    def value_from_k(self, k):
        mu = float(k @ self.alpha)
        if self.mean_only:
            return mu
        var = self.sigma0_sq - float(k @ self.Qinv @ k)
        return mu + self.kappa * np.sqrt(max(0.0, var))


def encode(post: GpPosterior, kappa: float = DEFAULT_KAPPA, constraints: ConstraintSet | None = None) -> AcquisitionProblem:
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    constraints = constraints or ConstraintSet()
    constraints.check_space(post.ens.space)
    coeff = post.A * (post.params.sigma0_sq / post.n_trees)
    return AcquisitionProblem(post, float(kappa), constraints, split_index(post.ens),
                              coeff, post.q_inverse(), post.alpha.copy())


def with_agreement_cap(p: AcquisitionProblem, R: float) -> AcquisitionProblem:
    """Mean-only variant where every data point may share at most a fraction R of trees."""
    if not 0 < R <= 1:
        raise ValueError("R must lie in (0, 1]")
    return replace(p, agreement_cap=float(R), _cache=p._cache)


def cap_ok(p: AcquisitionProblem, leaves) -> bool:
    if p.agreement_cap is None:
        return True
    return bool(np.all(p.overlap(leaves) <= p.agreement_cap + 1e-12))


def make_cell(p: AcquisitionProblem, leaves) -> Cell:
    """Cell for a per-tree leaf choice; raises if the leaf boxes do not intersect."""
    leaves = tuple(int(l) for l in leaves)
    if len(leaves) != p.n_trees:
        raise StructuralError(f"need one leaf per tree ({p.n_trees}), got {len(leaves)}")
    boxes = p.leaf_boxes()
    box = Box.from_space(p.space)
    for t, l in enumerate(leaves):
        box = box.intersect(boxes[t][l])
    if box.is_empty():
        raise StructuralError(f"leaf choice {leaves} has an empty intersection")
    return Cell(leaves, box)


def cell_of_point(p: AcquisitionProblem, x) -> Cell:
    return make_cell(p, p.ens.apply(np.asarray(x, dtype=float)[None, :])[0])


def evaluate_cell(p: AcquisitionProblem, cell: Cell) -> float:
    """Exact acquisition value on a cell (standardized units)."""
    if cell.box.is_empty():
        raise StructuralError("cell box is empty")
    return p.value_from_k(p.k_of(cell.leaves))


def pointwise_value(p: AcquisitionProblem, x) -> float:
    """Acquisition value at a point via the GP path (independent of the cell encoding)."""
    from .tkgp import mean_var
    mu, var = mean_var(p.post, x, standardized=True)
    if p.mean_only:
        return mu
    if not p.post.noisy_variance:
        k = p.post.k_vector(x)[0]
        var = max(0.0, p.sigma0_sq - float(k @ p.Qinv @ k))
    return mu + p.kappa * np.sqrt(var)
