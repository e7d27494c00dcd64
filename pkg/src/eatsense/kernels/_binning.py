"""Shared feature binning for histogram split finding.

Each feature column is quantized to at most ``max_bins`` ordered codes using
cut points between distinct values (all midpoints when the column has few
distinct values, quantile cuts otherwise). The mapping satisfies
``code(x) <= c  iff  x <= cuts[c]`` exactly, so a split chosen on codes
applies to raw values through the corresponding cut as threshold.
"""
from __future__ import annotations

import numpy as np

MAX_BINS = 256


def bin_features(X: np.ndarray, max_bins: int = MAX_BINS) -> tuple[np.ndarray, np.ndarray, list[np.ndarray]]:
    """Quantize columns of X; returns (codes_T, n_bins, cuts).

    ``codes_T`` is feature-major (d, n) int64 so per-feature scans are
    contiguous; ``n_bins[f]`` is the number of distinct codes of feature f;
    ``cuts[f]`` holds the ascending thresholds separating consecutive codes.
    """
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    codes = np.empty((d, n), dtype=np.int64)
    n_bins = np.empty(d, dtype=np.int64)
    cuts: list[np.ndarray] = []
    for f in range(d):
        col = X[:, f]
        uniq = np.unique(col)
        if uniq.size <= max_bins:
            cut = (uniq[:-1] + uniq[1:]) / 2.0
        else:
            qs = np.quantile(col, np.arange(1, max_bins) / max_bins)
            cut = np.unique(qs)
        cut = np.unique(cut)
        codes[f] = np.searchsorted(cut, col, side="left")
        n_bins[f] = cut.size + 1
        cuts.append(cut)
    return codes, n_bins, cuts
