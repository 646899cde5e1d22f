"""scikit-learn style wrappers: a sensing-matrix transformer and a complex LASSO."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin

from ._validation import (
    check_is_fitted,
    check_matrix,
    check_n_features,
    check_operator,
    check_scalar,
)
from .codebook import FRAME, SIEVE, Codebook, CodebookSpec
from .recovery import lasso_solve_batch, top_k
from .sieve import find_nonorthogonal_pairs

__all__ = ["DGSensingMatrix", "ComplexLasso"]


class DGSensingMatrix(TransformerMixin, BaseEstimator):
    """Maps length-C signals (rows of X) to their N measurements ``Phi x``.

    ``fit`` only builds the operator; it ignores the data apart from checking
    its width.
    """

    def __init__(self, m=7, r=0, variant=FRAME, dedupe=False, primitive_poly=None):
        self.m = m
        self.r = r
        self.variant = variant
        self.dedupe = dedupe
        self.primitive_poly = primitive_poly

    def fit(self, X=None, y=None):
        check_scalar(self.m, "m", kind=numbers.Integral, low=3)
        check_scalar(self.r, "r", kind=numbers.Integral, low=0)
        if self.variant not in (FRAME, SIEVE):
            raise ValueError(f"variant must be {FRAME!r} or {SIEVE!r}")
        if self.dedupe and self.variant != SIEVE:
            raise ValueError("dedupe applies to sieves only")
        spec = CodebookSpec(self.m, self.r, self.variant, primitive_poly=self.primitive_poly)
        if self.dedupe and self.r >= 1:
            spec = find_nonorthogonal_pairs(self.m, self.r, primitive_poly=spec.primitive_poly, verify=False).reduced_spec()
        self.spec_ = spec
        self.codebook_ = Codebook(spec)
        self.n_components_, self.n_features_in_ = spec.shape
        if X is not None:
            check_n_features(self, check_matrix(X, allow_1d=True))
        return self

    def transform(self, X):
        check_is_fitted(self, "codebook_")
        X = check_matrix(X)
        check_n_features(self, X)
        return self.codebook_.apply(X)

    def adjoint(self, Y):
        """``Phi^H y`` for each row of Y."""
        check_is_fitted(self, "codebook_")
        Y = check_matrix(Y)
        if Y.shape[1] != self.n_components_:
            raise ValueError(f"Y must have {self.n_components_} columns")
        return self.codebook_.apply_adjoint(Y)

    @property
    def matrix_(self) -> np.ndarray:
        check_is_fitted(self, "codebook_")
        return self.codebook_.to_dense()


class ComplexLasso(RegressorMixin, BaseEstimator):
    """``min 0.5 ||y - X w||^2 + lam ||w||_1`` over complex w, solved by SpaRSA.

    X is the N x C design (a dense array, a Codebook or a CodebookSpec); y
    holds N observations, or one column per target. Unlike
    :class:`sklearn.linear_model.Lasso` the squared loss is not divided by N.
    """

    def __init__(self, lam=1e-9, tol=1e-10, max_iters=5000, continuation=True):
        self.lam = lam
        self.tol = tol
        self.max_iters = max_iters
        self.continuation = continuation

    def fit(self, X, y):
        check_scalar(self.lam, "lam", low=0)
        check_scalar(self.tol, "tol", low=0, low_inclusive=False)
        check_scalar(self.max_iters, "max_iters", kind=numbers.Integral, low=1)
        A = check_operator(X)
        y = check_matrix(y, name="y", allow_1d=True)
        N, C = A.shape
        if y.shape[0] != N:
            raise ValueError(f"y has {y.shape[0]} observations, X has {N} rows")
        Y = y[None, :] if y.ndim == 1 else y.T
        results = lasso_solve_batch(
            A, Y, self.lam, tol=self.tol, max_iters=self.max_iters, continuation=self.continuation
        )
        coef = np.stack([res.estimate for res in results])
        self.coef_ = coef[0] if y.ndim == 1 else coef
        self.n_iter_ = np.array([res.iterations for res in results])
        self.converged_ = np.array([res.converged for res in results])
        self.results_ = results
        self.n_features_in_ = C
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        A = check_operator(X)
        if A.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {A.shape[1]} columns, expected {self.n_features_in_}")
        if isinstance(A, Codebook):
            return A.apply(self.coef_).T
        return A @ self.coef_.T

    def score(self, X, y, sample_weight=None):
        """Coefficient of determination, using squared magnitudes for complex y."""
        y = np.asarray(y)
        resid = y - self.predict(X)
        total = y - y.mean(axis=0)
        w = 1.0 if sample_weight is None else np.asarray(sample_weight).reshape(-1, *([1] * (y.ndim - 1)))
        return 1.0 - float(np.sum(w * np.abs(resid) ** 2)) / float(np.sum(w * np.abs(total) ** 2))

    def support(self, k: int) -> np.ndarray:
        """Indices of the k largest coefficient magnitudes (single target)."""
        check_is_fitted(self, "coef_")
        if self.coef_.ndim != 1:
            raise ValueError("support is defined for a single target")
        return top_k(self.coef_, k)
