"""Input checks for the estimator wrappers.

scikit-learn's ``check_array`` rejects complex input, which is the normal
case here, so the estimators use these instead.
"""

from __future__ import annotations

import numbers

import numpy as np

from .codebook import Codebook, CodebookSpec


class NotFittedError(ValueError, AttributeError):
    pass


def check_matrix(X, *, name: str = "X", allow_1d: bool = False) -> np.ndarray:
    """Finite 2-D float or complex array (1-D allowed on request)."""
    X = np.asarray(X)
    if X.dtype == object or not (np.issubdtype(X.dtype, np.number) or X.dtype == bool):
        raise TypeError(f"{name} must be numeric, got dtype {X.dtype}")
    if not np.iscomplexobj(X):
        X = X.astype(np.float64, copy=False)
    if X.ndim == 1 and allow_1d:
        pass
    elif X.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {X.shape}")
    if X.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains NaN or infinity")
    return X


def check_operator(A):
    """A Codebook or a finite dense matrix; a CodebookSpec is wrapped."""
    if isinstance(A, CodebookSpec):
        return Codebook(A)
    if isinstance(A, Codebook):
        return A
    return check_matrix(A, name="operator")


def check_scalar(value, name: str, *, kind=numbers.Real, low=None, high=None, low_inclusive=True):
    if isinstance(value, bool) or not isinstance(value, kind):
        raise TypeError(f"{name} must be {kind.__name__}, got {type(value).__name__}")
    if low is not None and (value < low or (value == low and not low_inclusive)):
        raise ValueError(f"{name} = {value} is below the allowed minimum {low}")
    if high is not None and value > high:
        raise ValueError(f"{name} = {value} exceeds the allowed maximum {high}")
    return value


def check_is_fitted(est, attr: str):
    if not hasattr(est, attr):
        raise NotFittedError(f"{type(est).__name__} is not fitted yet; call fit first")


def check_n_features(est, X: np.ndarray):
    n = X.shape[-1]
    if n != est.n_features_in_:
        raise ValueError(f"X has {n} features, {type(est).__name__} expects {est.n_features_in_}")
