"""Minority oversampling by interpolation toward nearest minority neighbors."""
from __future__ import annotations

import numpy as np

from ..kernels import knn_indices


def smote(
    X: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    k: int = 5,
    binary_mask: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Balance the classes by synthesizing minority points.

    Each synthetic point is x + u * (nn - x) with u drawn from [0, 1) and nn
    one of the k nearest minority neighbors of x (k is capped at minority
    size minus one). Columns flagged in ``binary_mask`` are rounded back to
    {0, 1} after interpolation. Originals are kept; synthetics are appended
    until both classes match the majority count.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    classes, counts = np.unique(y, return_counts=True)
    if classes.size != 2:
        raise ValueError(f"SMOTE needs exactly two classes, got {classes.tolist()}")
    minority = classes[int(np.argmin(counts))]
    n_min = int(counts.min())
    need = int(counts.max() - n_min)
    if need == 0:
        return X.copy(), y.copy()
    if n_min < 2:
        raise ValueError("minority class needs at least two samples")
    k_eff = min(k, n_min - 1)
    Xmin = X[y == minority]
    nn = knn_indices(Xmin, k_eff)

    base = rng.integers(0, n_min, size=need)
    pick = rng.integers(0, k_eff, size=need)
    u = rng.random(need)
    anchor = Xmin[base]
    neighbor = Xmin[nn[base, pick]]
    synth = anchor + u[:, None] * (neighbor - anchor)
    if binary_mask is not None:
        cols = np.asarray(binary_mask, dtype=bool)
        synth[:, cols] = np.rint(synth[:, cols])
    X_out = np.vstack([X, synth])
    y_out = np.concatenate([y, np.full(need, minority, dtype=y.dtype)])
    return X_out, y_out
