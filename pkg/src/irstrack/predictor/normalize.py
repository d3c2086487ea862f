import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

SCALE_FLOOR = 1e-8


class Normalizer(TransformerMixin, BaseEstimator):
    """Per-feature standardization over the last axis with a floored scale.

    Works on real arrays of any rank; statistics are pooled over every
    leading axis.
    """

    def __init__(self, floor=SCALE_FLOOR):
        self.floor = floor

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        flat = X.reshape(-1, X.shape[-1])
        self.mean_ = flat.mean(axis=0)
        self.scale_ = np.maximum(flat.std(axis=0), self.floor)
        self.n_features_in_ = X.shape[-1]
        return self

    def _check(self, X):
        check_is_fitted(self, "scale_")
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[-1]}")
        return X

    def transform(self, X):
        X = self._check(X)
        return (X - self.mean_) / self.scale_

    def inverse_transform(self, X):
        X = self._check(X)
        return X * self.scale_ + self.mean_


def complex_to_real(X):
    """Stack real and imaginary parts along the last axis."""
    X = np.asarray(X)
    return np.concatenate([X.real, X.imag], axis=-1)


def real_to_complex(X):
    half = X.shape[-1] // 2
    return X[..., :half] + 1j * X[..., half:]


def normalize(v, normalizer):
    """``(v - mean) / scale`` with a fitted :class:`Normalizer`."""
    return normalizer.transform(v)


def denormalize(v, normalizer):
    return normalizer.inverse_transform(v)
