import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from leafgp.space import (Box, ConstraintSet, Dataset, Feature, FeatureSpace, PolyConstraint,
                          StructuralError, eval_constraint, interval_eval, sample_uniform,
                          validate_point)
from helpers import random_space


def unit_space(n=1):
    return FeatureSpace([Feature.continuous(0, 1) for _ in range(n)])


def box_of(space, lo, hi):
    return Box(space, np.array(lo, float), np.array(hi, float), np.zeros(space.n, bool),
               tuple(None for _ in range(space.n)))


class TestFeatures:
    def test_bad_bounds(self):
        with pytest.raises(StructuralError):
            Feature.continuous(1, 1)
        with pytest.raises(StructuralError):
            Feature.integer(0.5, 3)
        with pytest.raises(StructuralError):
            Feature.categorical(["a"])
        with pytest.raises(StructuralError):
            Feature.categorical(["a", "a"])

    def test_empty_space(self):
        with pytest.raises(StructuralError):
            FeatureSpace([])

    def test_index_lists(self):
        s = FeatureSpace([Feature.continuous(0, 1), Feature.integer(0, 3), Feature.categorical("ab")])
        assert s.num_idx == [0, 1]
        assert s.int_idx == [1]
        assert s.cat_idx == [2]


class TestValidatePoint:
    def test_interior(self):
        assert validate_point(unit_space(), [0.5])

    def test_outside(self):
        assert not validate_point(unit_space(), [1.5])

    def test_category_out_of_range(self):
        s = FeatureSpace([Feature.categorical(["a", "b"])])
        assert not validate_point(s, [2])

    def test_integer_must_be_whole(self):
        s = FeatureSpace([Feature.integer(0, 5)])
        assert validate_point(s, [3.0])
        assert not validate_point(s, [2.5])

    def test_dimension_mismatch(self):
        with pytest.raises(StructuralError):
            validate_point(unit_space(2), [0.1])


class TestEvalConstraint:
    def test_linear(self):
        c = PolyConstraint([(1, [(0, 1)]), (2, [(1, 1)]), (-1, [])])
        assert eval_constraint(c, np.array([0.25, 0.25])) == -0.25

    def test_root(self):
        c = PolyConstraint([(1, [(0, 2)]), (-1, [])])
        assert eval_constraint(c, np.array([1.0])) == 0.0

    def test_bilinear(self):
        c = PolyConstraint([(1, [(0, 1), (1, 1)]), (-0.5, [])])
        assert eval_constraint(c, np.array([2.0, 0.5])) == 0.5

    def test_categorical_reference_rejected(self):
        s = FeatureSpace([Feature.continuous(0, 1), Feature.categorical("ab")])
        c = PolyConstraint([(1, [(1, 1)])])
        with pytest.raises(StructuralError):
            ConstraintSet([c]).check_space(s)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(42)
        c = PolyConstraint([(1.5, [(0, 2), (1, 1)]), (-2.0, [(2, 3)]), (0.7, [(1, 1)]), (3.0, [])])
        for _ in range(20):
            x = rng.uniform(-2, 2, 3)
            h = 1e-6
            fd = [(c(x + h * e) - c(x - h * e)) / (2 * h) for e in np.eye(3)]
            np.testing.assert_allclose(c.grad(x), fd, rtol=1e-6, atol=1e-6)

    def test_sense_and_set_split(self):
        g = PolyConstraint([(1, [(0, 1)]), (-1, [])], "le")
        h = PolyConstraint([(1, [(0, 1)]), (-0.5, [])], "eq")
        cs = ConstraintSet.from_list([g, h])
        assert len(cs.inequalities) == 1 and len(cs.equalities) == 1
        assert cs.is_feasible(np.array([0.5 - 5e-7]))
        assert not cs.is_feasible(np.array([0.49]))
        with pytest.raises(StructuralError):
            ConstraintSet([h])


class TestIntervalEval:
    def test_even_power_sign_crossing(self):
        c = PolyConstraint([(1, [(0, 2)])])
        lo, hi = interval_eval(c, box_of(FeatureSpace([Feature.continuous(-1, 2)]), [-1], [2]))
        np.testing.assert_allclose([lo, hi], [0, 4], atol=1e-10)

    def test_sum(self):
        s = FeatureSpace([Feature.continuous(0, 1), Feature.continuous(2, 3)])
        c = PolyConstraint([(1, [(0, 1)]), (1, [(1, 1)])])
        np.testing.assert_allclose(interval_eval(c, box_of(s, [0, 2], [1, 3])), [2, 4], atol=1e-10)

    def test_bilinear_tight_at_corners(self):
        s = FeatureSpace([Feature.continuous(-1, 1), Feature.continuous(-1, 1)])
        c = PolyConstraint([(1, [(0, 1), (1, 1)])])
        lo, hi = interval_eval(c, box_of(s, [-1, -1], [1, 1]))
        g = np.linspace(-1, 1, 41)
        vals = np.outer(g, g)
        assert lo <= vals.min() and hi >= vals.max()
        np.testing.assert_allclose([lo, hi], [vals.min(), vals.max()], atol=1e-10)

    def test_univariate_terms_bounded_exactly(self):
        # x - x^2 on [0, 1] has range [0, 0.25]; the naive extension gives [-1, 1]
        c = PolyConstraint([(1, [(0, 1)]), (-1, [(0, 2)])])
        lo, hi = interval_eval(c, box_of(unit_space(), [0], [1]))
        np.testing.assert_allclose([lo, hi], [0, 0.25], atol=1e-10)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000))
    def test_enclosure_soundness(self, seed):
        rng = np.random.default_rng(seed)
        n = 3
        s = FeatureSpace([Feature.continuous(-3, 3) for _ in range(n)])
        terms = []
        for _ in range(int(rng.integers(1, 5))):
            k = int(rng.integers(0, 3))
            mono = [(int(i), int(rng.integers(1, 4))) for i in rng.choice(n, size=k, replace=False)]
            terms.append((float(rng.normal()), mono))
        c = PolyConstraint(terms)
        a, b = np.sort(rng.uniform(-3, 3, (2, n)), axis=0)
        lo, hi = interval_eval(c, box_of(s, a, b))
        X = rng.uniform(a, b, (1000, n))
        vals = np.array([c(x) for x in X])
        assert vals.min() >= lo and vals.max() <= hi
        # sub-box enclosure is nested in the parent enclosure
        m = 0.5 * (a + b)
        slo, shi = interval_eval(c, box_of(s, a, m))
        assert slo >= lo - 1e-9 * max(1, abs(lo)) and shi <= hi + 1e-9 * max(1, abs(hi))


class TestSampleUniform:
    def test_deterministic(self):
        s = unit_space()
        a = sample_uniform(s, np.random.default_rng(7))
        b = sample_uniform(s, np.random.default_rng(7))
        np.testing.assert_array_equal(a, b)

    def test_degenerate_integer(self):
        s = FeatureSpace([Feature.integer(2, 2)])
        np.testing.assert_array_equal(sample_uniform(s, np.random.default_rng(0), 50), 2.0)

    def test_mean(self):
        draws = sample_uniform(unit_space(), np.random.default_rng(42), 10_000)
        assert 0.47 <= draws.mean() <= 0.53

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000))
    def test_draws_validate(self, seed):
        rng = np.random.default_rng(seed)
        s = random_space(rng, 4)
        for x in sample_uniform(s, rng, 25):
            assert validate_point(s, x)


class TestBox:
    def test_open_lower_bound_and_integers(self):
        s = FeatureSpace([Feature.integer(0, 5)])
        b = Box(s, np.array([2.0]), np.array([4.0]), np.array([True]), (None,))
        assert b.int_range(0) == (3, 4)
        assert not b.contains([2.0]) and b.contains([3.0])
        empty = Box(s, np.array([2.5]), np.array([2.9]), np.array([False]), (None,))
        assert empty.is_empty()

    def test_intersect(self):
        s = FeatureSpace([Feature.continuous(0, 1), Feature.categorical("abc")])
        a = Box(s, np.array([0.0, 0]), np.array([0.6, 2]), np.array([False, False]), (None, frozenset({0, 1})))
        b = Box(s, np.array([0.3, 0]), np.array([1.0, 2]), np.array([True, False]), (None, frozenset({1, 2})))
        c = a.intersect(b)
        np.testing.assert_array_equal([c.lo[0], c.hi[0]], [0.3, 0.6])
        assert c.open_lo[0] and c.cats[1] == frozenset({1})
        assert not c.is_empty()

    def test_dataset_shapes(self):
        with pytest.raises(StructuralError):
            Dataset(np.zeros((3, 2)), np.zeros(2))
        d = Dataset(np.zeros((1, 2)), [1.0]).append(np.ones(2), 2.0)
        assert d.m == 2
