import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cvselinf.cvquad import (
    FoldAssignment,
    assemble_cv,
    bic_penalties,
    select_sparsity,
    split_event,
)
from cvselinf.exceptions import ContractViolation
from cvselinf.harness import oracles
from cvselinf.stepwise import fit_stepwise, hat_matrix


def instance(seed, n=30, p=8, K=5, signal=1.0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    y = signal * (X[:, 0] - X[:, 1]) + rng.standard_normal(n)
    return X, y, FoldAssignment.round_robin(n, K), rng


class TestFoldAssignment:
    def test_round_robin(self):
        fa = FoldAssignment.round_robin(7, 3)
        assert fa.fold_of.tolist() == [0, 1, 2, 0, 1, 2, 0]
        assert fa.sizes.tolist() == [3, 2, 2]
        assert fa.permutation.tolist() == [0, 3, 6, 1, 4, 2, 5]

    def test_shuffled_is_seeded(self):
        a = FoldAssignment.shuffled(20, 4, seed=9)
        b = FoldAssignment.shuffled(20, 4, seed=9)
        c = FoldAssignment.shuffled(20, 4, seed=10)
        assert np.array_equal(a.fold_of, b.fold_of)
        assert not np.array_equal(a.fold_of, c.fold_of)
        assert sorted(a.sizes.tolist()) == [5, 5, 5, 5]

    @given(st.integers(1, 60), st.integers(1, 60), st.integers(0, 2 ** 32))
    def test_permutation_is_consistent(self, n, K, seed):
        if K > n:
            return
        fa = FoldAssignment.shuffled(n, K, seed)
        perm = fa.permutation
        assert sorted(perm.tolist()) == list(range(n))
        assert np.all(np.diff(fa.fold_of[perm]) >= 0)
        for f in range(K):
            assert np.array_equal(np.sort(np.concatenate([fa.train_idx(f), fa.test_idx(f)])),
                                  np.arange(n))

    def test_contiguous_folds_give_identity(self):
        fa = FoldAssignment(np.repeat(np.arange(3), [4, 3, 5]), 3)
        assert np.array_equal(fa.permutation, np.arange(12))

    @pytest.mark.parametrize("fold_of, K", [([0, 0, 2], 3), ([0, 1, 3], 3), ([], 1), ([0.5, 1], 2)])
    def test_invalid(self, fold_of, K):
        with pytest.raises(ContractViolation):
            FoldAssignment(np.array(fold_of), K)

    def test_unequal_sizes_allowed(self):
        assert FoldAssignment(np.array([0, 0, 0, 1]), 2).sizes.tolist() == [3, 1]


class TestAssemble:
    def test_tiny_direct_loop(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((4, 2))
        y = rng.standard_normal(4)
        folds = FoldAssignment.round_robin(4, 2)
        cvq = assemble_cv(X, y, folds, 1)
        direct = 0.0
        for f in range(2):
            tr, te = folds.train_idx(f), folds.test_idx(f)
            A = cvq.paths[f].active_sets[0]
            beta = np.linalg.lstsq(X[np.ix_(tr, A)], y[tr], rcond=None)[0]
            direct += np.sum((y[te] - X[np.ix_(te, A)] @ beta) ** 2)
        assert abs(cvq.cv_rss(y)[0] - direct) <= 1e-10

    @pytest.mark.parametrize("seed", range(3))
    def test_rss_identity_frozen_models(self, seed):
        X, y, folds, rng = instance(seed)
        cvq = assemble_cv(X, y, folds, 4)
        fold_paths = [p.active_sets for p in cvq.paths]
        for _ in range(20):
            z = rng.standard_normal(30) * 3
            direct = oracles.direct_cv_rss(X, z, folds, fold_paths, cvq.sizes)
            np.testing.assert_allclose(cvq.cv_rss(z), direct, rtol=1e-8)

    def test_penalty_none_is_zero(self):
        X, y, folds, _ = instance(1)
        assert np.all(assemble_cv(X, y, folds, 4).penalties == 0.0)

    def test_bic_penalties(self):
        X, y, folds, _ = instance(1)
        cvq = assemble_cv(X, y, folds, 3, penalty="bic")
        np.testing.assert_allclose(cvq.penalties, 2 * np.arange(1, 4) * math.log(6))
        assert bic_penalties([0], 6)[0] == 0.0

    def test_symmetric(self):
        X, y, folds, _ = instance(2)
        Q = assemble_cv(X, y, folds, 3).Q_by_s
        np.testing.assert_array_equal(Q, np.swapaxes(Q, 1, 2))

    def test_null_model_form(self):
        X, y, folds, rng = instance(3)
        cvq = assemble_cv(X, y, folds, 2, include_null_model=True)
        assert cvq.sizes.tolist() == [0, 1, 2]
        z = rng.standard_normal(30)
        # the empty model predicts zero, so its CV RSS is the squared norm
        assert abs(cvq.cv_rss(z)[0] - z @ z) <= 1e-10 * (z @ z)

    def test_rank_exhaustion_truncates(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal(20)
        X = np.column_stack([x, 2 * x, rng.standard_normal(20)])
        cvq = assemble_cv(X, rng.standard_normal(20), FoldAssignment.round_robin(20, 4), 3)
        assert cvq.S == 2 and cvq.S_requested == 3 and cvq.truncated

    @pytest.mark.parametrize("S", [0, 9])
    def test_S_out_of_range(self, S):
        X, y, folds, _ = instance(0)
        with pytest.raises(ContractViolation):
            assemble_cv(X, y, folds, S)

    def test_one_fold_rejected(self):
        X, y, _, _ = instance(0)
        with pytest.raises(ContractViolation):
            assemble_cv(X, y, FoldAssignment.round_robin(30, 1), 2)

    def test_bad_penalty(self):
        X, y, folds, _ = instance(0)
        with pytest.raises(ContractViolation):
            assemble_cv(X, y, folds, 2, penalty="aic")


class TestSelect:
    def test_single_candidate_has_no_comparisons(self):
        X, y, folds, _ = instance(5)
        sel = select_sparsity(assemble_cv(X, y, folds, 1))
        assert sel.n_comparisons == 0 and sel.s_hat == 0
        fold_rows = sum(len(p.event) for p in sel.cvq.paths)
        assert len(sel.event) == fold_rows + len(sel.full_path.event)

    def test_comparison_count(self):
        X, y, folds, _ = instance(5)
        sel = select_sparsity(assemble_cv(X, y, folds, 4))
        assert sel.n_comparisons == 3
        fold_rows = sum(len(p.event) for p in sel.cvq.paths)
        assert len(sel.event) == 3 + fold_rows + len(sel.full_path.event)

    @pytest.mark.parametrize("seed", range(6))
    @pytest.mark.parametrize("penalty", ["none", "bic"])
    def test_matches_direct_cv(self, seed, penalty):
        X, y, folds, _ = instance(seed, signal=0.5)
        sel = select_sparsity(assemble_cv(X, y, folds, 4, penalty=penalty))
        size, _, _ = oracles.direct_cv_select(X, y, folds, 4, penalty)
        assert sel.model_size == size
        assert sel.event.contains(y)

    def test_active_set_is_full_data_refit(self):
        X, y, folds, _ = instance(6, signal=2.0)
        sel = select_sparsity(assemble_cv(X, y, folds, 4))
        assert sel.active_set == fit_stepwise(X, y, sel.model_size).active_sets[-1]

    def test_refit_event_flag(self):
        X, y, folds, _ = instance(6)
        cvq = assemble_cv(X, y, folds, 3)
        with_refit = select_sparsity(cvq)
        without = select_sparsity(cvq, refit_event=False)
        assert len(with_refit.event) - len(without.event) == len(with_refit.full_path.event)

    def test_scale_invariance(self):
        X, y, folds, _ = instance(7, signal=0.3)
        base = select_sparsity(assemble_cv(X, y, folds, 4))
        for c in (1e-3, 0.5, 7.0, 1e4):
            sel = select_sparsity(assemble_cv(X, c * y, folds, 4))
            assert sel.s_hat == base.s_hat and sel.active_set == base.active_set

    def test_different_response_rejected(self):
        X, y, folds, _ = instance(0)
        cvq = assemble_cv(X, y, folds, 2)
        with pytest.raises(ContractViolation):
            select_sparsity(cvq, y + 1.0)

    def test_tie_flag(self):
        # exact ties have probability zero for continuous responses, so test the helper
        from cvselinf.cvquad import _argmin_with_ties

        assert _argmin_with_ties([3.0, 1.0, 1.0 + 1e-14]) == (1, True)
        assert _argmin_with_ties([3.0, 1.0, 2.0]) == (1, False)

    def test_null_model_selection_reports_minus_one(self):
        rng = np.random.default_rng(11)
        X = rng.standard_normal((30, 8))
        for seed in range(40):
            y = np.random.default_rng(seed).standard_normal(30)
            sel = select_sparsity(assemble_cv(X, y, FoldAssignment.round_robin(30, 5), 3,
                                              include_null_model=True))
            if sel.model_size == 0:
                assert sel.s_hat == -1 and sel.active_set == []
                assert sel.event.contains(y)
                return
        pytest.fail("no replication chose the empty model")


class TestSplit:
    def split(self, seed, S=4):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((30, 8))
        y = X[:, 2] + rng.standard_normal(30)
        train = rng.permutation(30)[:18]
        return X, y, train

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_direct_test_rss(self, seed):
        X, y, train = self.split(seed)
        sel = split_event(X, y, train, 4)
        test = np.setdiff1d(np.arange(30), train)
        rss = []
        for A in oracles.greedy_stepwise(X[train], y[train], 4):
            beta = oracles.lstsq_fit(X[np.ix_(train, A)], y[train])
            rss.append(np.sum((y[test] - X[np.ix_(test, A)] @ beta) ** 2))
        assert sel.s_hat == int(np.argmin(rss))
        assert sel.event.contains(y)

    def test_zero_test_error_wins(self):
        X, y, train = self.split(3)
        test = np.setdiff1d(np.arange(30), train)
        path = fit_stepwise(X[train], y[train], 4)
        y = y.copy()
        y[test] = hat_matrix(path, X[test], 0) @ y[train]
        assert split_event(X, y, train, 4).s_hat == 0

    def test_event_rerun(self):
        X, y, train = self.split(8)
        sel = split_event(X, y, train, 3)
        rng = np.random.default_rng(0)
        for k in range(100):
            z = y + (0.05, 0.3)[k % 2] * rng.standard_normal(30)
            if oracles.boundary_distance(sel.event, z) < 1e-6:
                continue
            other = split_event(X, z, train, 3)
            same = other.signature() == sel.signature()
            assert sel.event.contains(z, slack=0.0) == same

    @pytest.mark.parametrize("train", [[], list(range(30)), [0, 0, 1], [0, 31]])
    def test_bad_partition(self, train):
        X, y, _ = self.split(0)
        with pytest.raises(ContractViolation):
            split_event(X, y, train, 2)
