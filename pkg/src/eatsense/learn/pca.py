"""Principal components via eigendecomposition of the sample covariance.

Inputs are expected to be standardized per feature with training statistics;
the transform still centers on the training mean so the contract holds for
any input scale.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class PCATransform:
    mean: np.ndarray  # (d,)
    components: np.ndarray  # (c, d) orthonormal rows, leading variance first
    explained_variance: np.ndarray  # (c,)


def fit_pca(X: np.ndarray, c: int) -> PCATransform:
    """Top-c principal components; raises when c exceeds the numerical rank."""
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    if not 1 <= c <= d:
        raise ValueError(f"component count {c} outside [1, {d}]")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = (Xc.T @ Xc) / max(n - 1, 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals, kind="stable")[::-1]
    evals = evals[order]
    evecs = evecs[:, order]
    rank = int(np.sum(evals > max(evals[0], 0.0) * 1e-12)) if evals[0] > 0 else 0
    if c > rank:
        raise ValueError(f"component count {c} exceeds numerical rank {rank}")
    comps = evecs[:, :c].T.copy()
    # sign convention: largest-magnitude loading is positive
    for i in range(c):
        j = int(np.argmax(np.abs(comps[i])))
        if comps[i, j] < 0:
            comps[i] = -comps[i]
    return PCATransform(mean, comps, evals[:c].copy())


def apply_pca(transform: PCATransform, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return (X - transform.mean) @ transform.components.T


def reconstruct(transform: PCATransform, scores: np.ndarray) -> np.ndarray:
    return scores @ transform.components + transform.mean
