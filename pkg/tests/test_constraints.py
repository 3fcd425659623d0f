import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cvselinf.constraints import (
    QuadraticConstraint,
    SelectionEvent,
    contains,
    embed,
    slice_event,
)
from cvselinf.cvquad import FoldAssignment, assemble_cv, select_sparsity
from cvselinf.exceptions import ContractViolation, InconsistentEventError
from cvselinf.harness import oracles
from cvselinf.intervals import IntervalUnion
from cvselinf.numkernel import quad_eval

INF = math.inf


def one(Q, a, b):
    return SelectionEvent([QuadraticConstraint(np.atleast_2d(Q), np.atleast_1d(a), b)])


class TestQuadraticConstraint:
    def test_symmetrised_and_read_only(self):
        c = QuadraticConstraint(np.array([[1.0, 2.0], [0.0, 1.0]]), np.zeros(2), 0.0)
        np.testing.assert_array_equal(c.Q, c.Q.T)
        with pytest.raises(ValueError):
            c.Q[0, 0] = 5.0

    @pytest.mark.parametrize("Q, a", [(np.zeros((2, 3)), np.zeros(2)), (np.eye(2), np.zeros(3))])
    def test_bad_shapes(self, Q, a):
        with pytest.raises(ContractViolation):
            QuadraticConstraint(Q, a, 0.0)

    def test_non_finite(self):
        with pytest.raises(ContractViolation):
            QuadraticConstraint(np.eye(1), np.zeros(1), math.inf)


class TestSlice:
    def test_vacuous(self, rng):
        ev = one(np.zeros((3, 3)), np.zeros(3), 1.0)
        assert ev.slice(rng.standard_normal(3), rng.standard_normal(3)) == IntervalUnion.real_line()

    def test_hand_solved(self):
        ev = one([[1.0]], [0.0], -1.0)
        got = slice_event(ev, np.array([2.0]), np.array([1.0]))
        assert got.intervals == ((-INF, -3.0), (-1.0, INF))

    def test_empty_event_is_real_line(self):
        ev = SelectionEvent([], dimension=2)
        assert ev.slice(np.zeros(2), np.ones(2)) == IntervalUnion.real_line()

    def test_infeasible_base_raises(self):
        ev = one([[-1.0]], [0.0], 0.0)
        with pytest.raises(InconsistentEventError):
            ev.slice(np.array([1.0]), np.array([1.0]))

    def test_zero_direction(self):
        with pytest.raises(ContractViolation):
            one([[1.0]], [0.0], 0.0).slice(np.array([1.0]), np.array([0.0]))

    @pytest.mark.parametrize("seed", range(5))
    def test_agrees_with_grid(self, seed):
        rng = np.random.default_rng(seed)
        base = rng.standard_normal(4)
        ev = oracles.random_feasible_event(rng, 4, 5, base)
        u = rng.standard_normal(4)
        ts = np.linspace(-50, 50, 20_000)
        got = ev.slice(base, u)
        member = oracles.grid_membership(ev, base, u, ts)
        ends = np.array([e for iv in got for e in iv if math.isfinite(e)] or [INF])
        far = np.min(np.abs(ts[:, None] - ends[None, :]), axis=1) > 1e-9
        assert np.array_equal(got.contains_array(ts)[far], member[far])

    @given(st.integers(0, 10_000), st.floats(0.01, 100))
    def test_direction_scaling(self, seed, c):
        rng = np.random.default_rng(seed)
        base = rng.standard_normal(3)
        ev = oracles.random_feasible_event(rng, 3, 4, base)
        u = rng.standard_normal(3)
        a, b = ev.slice(base, u), ev.slice(base, c * u)
        assert len(a) == len(b)
        for (l1, h1), (l2, h2) in zip(a, b):
            for x, y in ((l1, l2 * c), (h1, h2 * c)):
                assert x == y or abs(x - y) <= 1e-8 * max(1.0, abs(x))

    @given(st.integers(0, 10_000))
    def test_contains_zero_when_base_feasible(self, seed):
        rng = np.random.default_rng(seed)
        base = rng.standard_normal(3)
        ev = oracles.random_feasible_event(rng, 3, 6, base)
        assert ev.slice(base, rng.standard_normal(3)).contains(0.0)

    @given(st.integers(0, 10_000))
    def test_concat_is_intersection(self, seed):
        rng = np.random.default_rng(seed)
        base = rng.standard_normal(3)
        e1 = oracles.random_feasible_event(rng, 3, 3, base)
        e2 = oracles.random_feasible_event(rng, 3, 3, base)
        u = rng.standard_normal(3)
        assert (e1 + e2).slice(base, u) == e1.slice(base, u).intersect(e2.slice(base, u))


class TestContains:
    def test_self_membership(self, rng):
        X = rng.standard_normal((30, 6))
        y = rng.standard_normal(30)
        sel = select_sparsity(assemble_cv(X, y, FoldAssignment.round_robin(30, 5), 3))
        assert contains(sel.event, y)

    def test_only_origin(self):
        ev = one(-np.eye(2), np.zeros(2), 0.0)
        assert not contains(ev, np.array([1.0, 0.0]), slack=1e-8)
        assert contains(ev, np.zeros(2))

    def test_observed_violation_raises(self):
        with pytest.raises(InconsistentEventError):
            SelectionEvent([QuadraticConstraint(-np.eye(2), np.zeros(2), 0.0)],
                           observed=np.array([1.0, 0.0]))

    def test_dimension_mismatch(self):
        with pytest.raises(ContractViolation):
            one(np.eye(2), np.zeros(2), 0.0).contains(np.zeros(3))
        with pytest.raises(ContractViolation):
            SelectionEvent([QuadraticConstraint(np.eye(2), np.zeros(2)),
                            QuadraticConstraint(np.eye(3), np.zeros(3))])

    def test_rerun_correspondence(self):
        rng = np.random.default_rng(3)
        n, S = 30, 3
        X = rng.standard_normal((n, 6))
        y = X[:, 0] * 1.5 + rng.standard_normal(n)
        folds = FoldAssignment.round_robin(n, 5)
        sel = select_sparsity(assemble_cv(X, y, folds, S))
        for k in range(200):
            z = y + (0.05, 0.3, 1.0)[k % 3] * rng.standard_normal(n)
            if oracles.boundary_distance(sel.event, z) < 1e-6:
                continue
            other = select_sparsity(assemble_cv(X, z, folds, S))
            assert sel.event.contains(z, slack=0.0) == (other.signature() == sel.signature())


class TestEmbed:
    def test_scatter_then_evaluate(self):
        c = embed(QuadraticConstraint(np.array([[2.0]]), np.zeros(1), 0.0), [1], 3)
        assert c.evaluate(np.array([5.0, 3.0, 7.0])) == 18.0

    def test_identity(self, rng):
        c = QuadraticConstraint(rng.standard_normal((4, 4)), rng.standard_normal(4), 0.7)
        e = embed(c, np.arange(4), 4)
        np.testing.assert_array_equal(e.Q, c.Q)
        np.testing.assert_array_equal(e.a, c.a)
        assert e.b == c.b

    def test_gather_round_trip(self, rng):
        c = QuadraticConstraint(rng.standard_normal((4, 4)), rng.standard_normal(4), 0.3)
        idx = rng.choice(10, 4, replace=False)
        e = embed(c, idx, 10)
        for _ in range(100):
            z = rng.standard_normal(10)
            assert abs(e.evaluate(z) - quad_eval(c.Q, c.a, c.b, z[idx])) <= 1e-12

    def test_event_embed_matches_constraint_embed(self, rng):
        cs = [QuadraticConstraint(rng.standard_normal((3, 3)), rng.standard_normal(3), 1.0)
              for _ in range(3)]
        idx = [4, 0, 2]
        ev = SelectionEvent(cs).embed(idx, 5)
        for k, c in enumerate(cs):
            np.testing.assert_array_equal(ev.Q[k], embed(c, idx, 5).Q)

    @pytest.mark.parametrize("idx", [[0, 0], [0, 3], [-1, 1], [0]])
    def test_bad_index_map(self, idx):
        with pytest.raises(ContractViolation):
            embed(QuadraticConstraint(np.eye(2), np.zeros(2)), idx, 3)
