"""scikit-learn style wrappers around the shape studies.

The optimizers take no training data in the usual sense: `fit` receives the
thresholds (or eigenvalue counts) to sweep as a one-column array. There is
no `predict`; the fitted attributes carry the maximizers.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .riesz import RieszQuery
from .shape_opt import FamilySpec, convergence_study, evaluate_candidate, sum_minimization_study


def _family(f):
    return f if isinstance(f, FamilySpec) else FamilySpec.parse(f)


def _column(X, name):
    X = check_array(X, ensure_2d=False, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"{name} must be a single column, got shape {X.shape}")
        X = X[:, 0]
    return X


class _StudyEstimator(BaseEstimator):
    def _store(self, rows):
        self.results_ = rows
        self.keys_ = np.array([r.key for r in rows])
        self.best_params_ = np.array([r.best_params for r in rows])
        self.distances_ = np.array([r.distance_to_reference for r in rows])
        self.objectives_ = np.array([r.objective.value for r in rows])
        self.n_features_in_ = 1
        return self


class RieszShapeMaximizer(_StudyEstimator):
    """Maximizer of the Riesz mean over a family, one run per threshold in X."""

    def __init__(self, family="rectangles", gamma=1.0, budget=1000, seed=0, restarts=None):
        self.family = family
        self.gamma = gamma
        self.budget = budget
        self.seed = seed
        self.restarts = restarts

    def fit(self, X, y=None):
        lambdas = _column(X, "lambdas")
        rows = convergence_study(_family(self.family), self.gamma, lambdas, self.budget, self.seed, self.restarts)
        return self._store(rows)


class EigenvalueSumMinimizer(_StudyEstimator):
    """Minimizer of the mean of the first m eigenvalues, one run per m in X."""

    def __init__(self, family="rectangles", budget=1000, seed=0, restarts=None):
        self.family = family
        self.budget = budget
        self.seed = seed
        self.restarts = restarts

    def fit(self, X, y=None):
        ms = _column(X, "ms")
        if np.any(ms != np.round(ms)):
            raise ValueError("eigenvalue counts must be integers")
        rows = sum_minimization_study(_family(self.family), ms.astype(int).tolist(), self.budget, self.seed, self.restarts)
        return self._store(rows)


class RieszFeatures(TransformerMixin, BaseEstimator):
    """Map family parameter vectors to Riesz means at fixed thresholds."""

    def __init__(self, family="rectangles", lambdas=(50.0, 100.0), gamma=1.0):
        self.family = family
        self.lambdas = lambdas
        self.gamma = gamma

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        f = _family(self.family)
        if X.shape[1] != f.n_params:
            raise ValueError(f"{f.label} takes {f.n_params} parameters, X has {X.shape[1]} columns")
        self.family_ = f
        self.queries_ = [RieszQuery(lam, self.gamma) for lam in self.lambdas]
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "queries_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return np.array([[evaluate_candidate(self.family_, x, q).value for q in self.queries_] for x in X])
