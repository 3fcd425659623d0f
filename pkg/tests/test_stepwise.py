import numpy as np
import pytest
from hypothesis import given, strategies as st

from cvselinf.exceptions import ContractViolation
from cvselinf.harness import oracles
from cvselinf.stepwise import fit_stepwise, hat_matrix


def test_orthonormal_dominant_column(rng):
    X, _ = np.linalg.qr(rng.standard_normal((4, 3)))
    y = 10 * X[:, 2] + 0.01 * rng.standard_normal(4)
    assert fit_stepwise(X, y, 1).active_sets == [[2]]


def test_identity_design():
    path = fit_stepwise(np.eye(3), np.array([0.0, 5.0, 1.0]), 2)
    assert path.active_sets == [[1], [1, 2]]


@pytest.mark.parametrize("seed", range(10))
def test_matches_exhaustive_greedy(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((20, 6))
    y = rng.standard_normal(20)
    assert fit_stepwise(X, y, 4).active_sets == oracles.greedy_stepwise(X, y, 4)


def test_coefficients_are_refits(rng):
    X = rng.standard_normal((15, 5))
    y = rng.standard_normal(15)
    path = fit_stepwise(X, y, 3)
    for A, b in zip(path.active_sets, path.coefficients):
        np.testing.assert_allclose(b, oracles.lstsq_fit(X[:, A], y), atol=1e-10)


@given(st.integers(0, 10_000))
def test_path_invariants(seed):
    rng = np.random.default_rng(seed)
    n, p = int(rng.integers(5, 25)), int(rng.integers(2, 8))
    X = rng.standard_normal((n, p))
    y = rng.standard_normal(n)
    S = int(rng.integers(1, min(n, p) + 1))
    path = fit_stepwise(X, y, S)
    for s in range(path.n_steps - 1):
        assert set(path.active_sets[s]) < set(path.active_sets[s + 1])
        assert path.rss(s) >= path.rss(s + 1) - 1e-9
    assert path.event.contains(y)
    # a=0, b=0 forms: every constraint is homogeneous
    assert not np.any(path.event.a) and not np.any(path.event.b)


def test_resample_correspondence():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((20, 6))
    y = X[:, 1] - X[:, 3] + rng.standard_normal(20)
    path = fit_stepwise(X, y, 3)
    checked = 0
    for k in range(100):
        z = y + (0.1, 0.5, 2.0)[k % 3] * rng.standard_normal(20)
        if oracles.boundary_distance(path.event, z) < 1e-6:
            continue
        checked += 1
        same = fit_stepwise(X, z, 3).active_sets == path.active_sets
        assert path.event.contains(z, slack=1e-8) == same
    assert checked > 80


def test_collinear_candidate_dropped():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(10)
    X = np.column_stack([x, 2 * x, rng.standard_normal(10)])
    path = fit_stepwise(X, 3 * x + 0.1 * rng.standard_normal(10), 3)
    assert path.short
    assert path.n_steps == 2
    assert 0 in path.active_sets[0] or 1 in path.active_sets[0]


def test_zero_column_rejected():
    X = np.column_stack([np.zeros(5), np.arange(5.0)])
    with pytest.raises(ContractViolation):
        fit_stepwise(X, np.ones(5), 1)


@pytest.mark.parametrize("S", [-1, 4])
def test_S_out_of_range(S):
    with pytest.raises(ContractViolation):
        fit_stepwise(np.eye(3), np.ones(3), S)


def test_truncated_path(rng):
    X = rng.standard_normal((12, 5))
    y = rng.standard_normal(12)
    full = fit_stepwise(X, y, 4)
    cut = full.truncated(2)
    assert cut.active_sets == full.active_sets[:2]
    assert len(cut.event) == len(fit_stepwise(X, y, 2).event)


class TestHatMatrix:
    def test_in_sample_projector(self, rng):
        X = rng.standard_normal((10, 4))
        path = fit_stepwise(X, rng.standard_normal(10), 3)
        P = hat_matrix(path, X, 2)
        np.testing.assert_allclose(P @ P, P, atol=1e-8)

    def test_rank_one(self, rng):
        X = rng.standard_normal((8, 3))
        path = fit_stepwise(X, 5 * X[:, 1] + 0.01 * rng.standard_normal(8), 1)
        (j,) = path.active_sets[0]
        Xn = rng.standard_normal((4, 3))
        c, d = X[:, j], Xn[:, j]
        np.testing.assert_allclose(hat_matrix(path, Xn, 0), np.outer(d, c) / (c @ c), atol=1e-12)

    @pytest.mark.parametrize("s", [0, 1, 2])
    def test_definitional_identity(self, rng, s):
        X = rng.standard_normal((15, 6))
        y = rng.standard_normal(15)
        path = fit_stepwise(X, y, 3)
        Xn = rng.standard_normal((5, 6))
        A = path.active_sets[s]
        np.testing.assert_allclose(hat_matrix(path, Xn, s) @ y, Xn[:, A] @ path.coefficients[s],
                                   atol=1e-10)

    def test_empty_model(self, rng):
        X = rng.standard_normal((6, 2))
        path = fit_stepwise(X, rng.standard_normal(6), 1)
        assert not hat_matrix(path, X[:2], -1).any()

    def test_errors(self, rng):
        X = rng.standard_normal((6, 2))
        path = fit_stepwise(X, rng.standard_normal(6), 1)
        with pytest.raises(ContractViolation):
            hat_matrix(path, X, 1)
        with pytest.raises(ContractViolation):
            hat_matrix(path, X[:, :1], 0)
