"""Correlation-matrix PCA over attribute columns."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TooFewObservations, ZeroVariance
from .ingest import AttributeTable, zscore

__all__ = ["PcaResult", "correlation_matrix", "pca_fit"]


def _columns(X, names):
    if isinstance(X, AttributeTable):
        names = X.names if names is None else list(names)
        X = X.matrix(names)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("expected a 2-D array of columns")
    if names is None:
        names = [f"x{j + 1}" for j in range(X.shape[1])]
    if X.shape[0] < 3:
        raise TooFewObservations("correlation needs at least 3 observations")
    return X, tuple(names)


def _standardize(X, names):
    out = np.empty_like(X)
    for j, nm in enumerate(names):
        try:
            out[:, j] = zscore(X[:, j])
        except ZeroVariance:
            raise ZeroVariance(nm) from None
    return out


def correlation_matrix(X, names=None) -> np.ndarray:
    """Pearson correlation matrix of the columns of ``X``."""
    X, names = _columns(X, names)
    Zs = _standardize(X, names)
    R = Zs.T @ Zs / (X.shape[0] - 1)
    R = 0.5 * (R + R.T)
    np.fill_diagonal(R, 1.0)
    return R


@dataclass(frozen=True)
class PcaResult:
    """Principal components of the correlation matrix.

    ``loadings[:, j]`` is component j, oriented so its largest-magnitude
    entry is positive. ``scores`` are the z-scored data (sample sd)
    projected on the loadings, so the sample variance of score column j
    equals ``eigenvalues[j]``.
    """

    names: tuple
    loadings: np.ndarray
    eigenvalues: np.ndarray
    scores: np.ndarray
    correlation: np.ndarray

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        return self.eigenvalues / self.eigenvalues.sum()

    @property
    def pc1(self) -> np.ndarray:
        return self.scores[:, 0]


def pca_fit(X, names=None) -> PcaResult:
    X, names = _columns(X, names)
    Zs = _standardize(X, names)
    R = correlation_matrix(X, names)
    vals, vecs = np.linalg.eigh(R)
    order = np.argsort(vals, kind="stable")[::-1]
    vals = np.clip(vals[order], 0.0, None)
    vecs = vecs[:, order]
    flip = vecs[np.argmax(np.abs(vecs), axis=0), np.arange(vecs.shape[1])] < 0
    vecs[:, flip] *= -1
    return PcaResult(names, vecs, vals, Zs @ vecs, R)
