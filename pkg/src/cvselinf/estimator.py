"""scikit-learn style estimators wrapping the stepwise/CV selection and selective tests."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .cvquad import PENALTIES, FoldAssignment, assemble_cv, select_sparsity
from .exceptions import ContractViolation
from .numkernel import PINV_TOL
from .seltest import selective_tests
from .stepwise import fit_stepwise


def _check_features(est, X):
    check_is_fitted(est, "coef_")
    X = check_array(X, dtype=float)
    if X.shape[1] != est.n_features_in_:
        raise ContractViolation(f"expected {est.n_features_in_} features, got {X.shape[1]}")
    return X


def _standardize_fit(X):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    if np.any(scale == 0):
        raise ContractViolation(
            f"cannot standardize constant columns {np.flatnonzero(scale == 0).tolist()}"
        )
    return mean, scale


class ForwardStepwise(RegressorMixin, BaseEstimator):
    """Forward stepwise regression run for a fixed number of steps.

    Parameters
    ----------
    n_steps : int, default=1
    pinv_tol : float, default=1e-10
        Relative singular-value cutoff for the least-squares refits.

    Attributes
    ----------
    path_ : StepwisePath
    active_set_ : list of int
        Variables in entry order.
    coef_ : ndarray of shape (n_features,)
        Least-squares coefficients on the active set, zero elsewhere.
    selection_event_ : SelectionEvent
        Quadratic constraints on ``y`` under which the same path is chosen.
    """

    def __init__(self, n_steps=1, pinv_tol=PINV_TOL):
        self.n_steps = n_steps
        self.pinv_tol = pinv_tol

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        self.n_features_in_ = X.shape[1]
        self.path_ = fit_stepwise(X, y, self.n_steps, pinv_tol=self.pinv_tol)
        self.active_set_ = list(self.path_.active_sets[-1]) if self.path_.n_steps else []
        self.coef_ = np.zeros(X.shape[1])
        if self.active_set_:
            self.coef_[self.active_set_] = self.path_.coefficients[-1]
        self.intercept_ = 0.0
        self.selection_event_ = self.path_.event
        return self

    def predict(self, X):
        return _check_features(self, X) @ self.coef_

    def transform(self, X):
        """Columns of ``X`` in the active set, in entry order."""
        return _check_features(self, X)[:, self.active_set_]


class ForwardStepwiseCV(RegressorMixin, BaseEstimator):
    """Forward stepwise with model size chosen by K-fold CV, plus selective p-values.

    ``fit`` runs stepwise on every training fold, picks the size with the
    smallest (optionally BIC-penalised) CV residual sum of squares, refits
    stepwise on all rows to that size and tests each selected coefficient
    conditional on the whole selection event.

    Parameters
    ----------
    n_folds : int, default=5
    max_steps : int, default=5
        Largest model size considered.
    penalty : {"none", "bic"}, default="none"
    sigma : float or "plugin", default="plugin"
        Known noise scale, or ``"plugin"`` for the full-model residual estimate.
    fold_seed : int or None, default=None
        ``None`` assigns folds round-robin; an integer shuffles first.
    include_null_model : bool, default=False
        Also let CV choose the empty model.
    refit_event : bool, default=True
        Condition on the full-data refit's stepwise constraints too.
    standardize : bool, default=False
        Center and scale columns before fitting (the response is left alone).
    pinv_tol : float, default=1e-10
    test : bool, default=True
        Compute selective tests during ``fit``.

    Attributes
    ----------
    selection_ : CvSelection
    active_set_ : list of int
    coef_ : ndarray of shape (n_features,)
        Coefficients on the (possibly standardized) original columns.
    tests_ : list of SelectiveTestResult
    pvalues_ : ndarray
        Selective p-values aligned with ``active_set_``.
    """

    def __init__(self, n_folds=5, max_steps=5, penalty="none", sigma="plugin",
                 fold_seed=None, include_null_model=False, refit_event=True,
                 standardize=False, pinv_tol=PINV_TOL, test=True):
        self.n_folds = n_folds
        self.max_steps = max_steps
        self.penalty = penalty
        self.sigma = sigma
        self.fold_seed = fold_seed
        self.include_null_model = include_null_model
        self.refit_event = refit_event
        self.standardize = standardize
        self.pinv_tol = pinv_tol
        self.test = test

    def _check_params(self):
        if self.penalty not in PENALTIES:
            raise ContractViolation(f"penalty must be one of {PENALTIES}, got {self.penalty!r}")
        if isinstance(self.sigma, str):
            if self.sigma != "plugin":
                raise ContractViolation(f"sigma must be a positive number or 'plugin', got {self.sigma!r}")
        elif not (self.sigma is not None and float(self.sigma) > 0):
            raise ContractViolation(f"sigma must be positive, got {self.sigma!r}")

    def _transform(self, X):
        if self.standardize:
            return (X - self.x_mean_) / self.x_scale_
        return X

    def fit(self, X, y):
        self._check_params()
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        n = X.shape[0]
        self.n_features_in_ = X.shape[1]
        if np.ptp(y) == 0:
            raise ContractViolation("response is constant")
        if self.standardize:
            self.x_mean_, self.x_scale_ = _standardize_fit(X)
        Xt = self._transform(X)

        if self.fold_seed is None:
            self.folds_ = FoldAssignment.round_robin(n, self.n_folds)
        else:
            self.folds_ = FoldAssignment.shuffled(n, self.n_folds, self.fold_seed)
        self.cv_quadratic_ = assemble_cv(
            Xt, y, self.folds_, self.max_steps, penalty=self.penalty,
            include_null_model=self.include_null_model, pinv_tol=self.pinv_tol,
        )
        sel = select_sparsity(self.cv_quadratic_, refit_event=self.refit_event)
        self.selection_ = sel
        self.s_hat_ = sel.s_hat
        self.active_set_ = list(sel.active_set)
        self.coef_ = np.zeros(X.shape[1])
        if self.active_set_:
            self.coef_[self.active_set_] = sel.full_path.coefficients[-1]
        self.intercept_ = 0.0
        if self.test:
            self.tests_ = selective_tests(Xt, y, sel, sigma=self.sigma)
            self.pvalues_ = np.array([t.p_value for t in self.tests_])
        else:
            self.tests_ = []
            self.pvalues_ = np.array([])
        return self

    def predict(self, X):
        return self._transform(_check_features(self, X)) @ self.coef_

    def transform(self, X):
        """Selected columns (standardized if requested), in entry order."""
        return self._transform(_check_features(self, X))[:, self.active_set_]

    def summary(self) -> list:
        """One dict per selected variable: coefficient, statistic, p-values, truncation."""
        check_is_fitted(self, "selection_")
        rows = []
        for k, t in enumerate(self.tests_):
            d = t.to_dict()
            d["entry_step"] = k
            d["coef"] = float(self.coef_[t.variable])
            rows.append(d)
        return rows
