"""Binary classification metrics with macro averaging.

AUROC is computed as the Mann-Whitney rank statistic with midranks for
tied scores, which counts reversed pairs fully and tied pairs half. For a
binary problem the AUROC of the positive class equals that of the negative
class, so the macro average coincides with the plain value.
"""
from __future__ import annotations

import numpy as np


def _check_binary(y_true: np.ndarray) -> np.ndarray:
    y = np.asarray(y_true)
    classes = np.unique(y)
    if classes.size != 2:
        raise ValueError(f"need both classes in y_true, got {classes.tolist()}")
    return (y == classes.max()).astype(np.int8)


def macro_f1(y_true, y_pred) -> float:
    """Unweighted mean of the two per-class F1 scores.

    A class with zero precision and recall contributes an F1 of 0.
    """
    y = _check_binary(y_true)
    hi = np.unique(np.asarray(y_true)).max()
    p = np.asarray(y_pred)
    if p.shape != y.shape:
        raise ValueError("y_true and y_pred must have the same shape")
    p = (p == hi).astype(np.int8)
    total = 0.0
    for cls in (0, 1):
        tp = float(np.sum((p == cls) & (y == cls)))
        fp = float(np.sum((p == cls) & (y != cls)))
        fn = float(np.sum((p != cls) & (y == cls)))
        prec = tp / (tp + fp) if tp + fp > 0 else 0.0
        rec = tp / (tp + fn) if tp + fn > 0 else 0.0
        total += 2 * prec * rec / (prec + rec) if prec + rec > 0 else 0.0
    return total / 2.0


def auroc(y_true, scores) -> float:
    """Rank-based AUROC with ties counted one half."""
    y = _check_binary(y_true)
    s = np.asarray(scores, dtype=np.float64)
    if s.shape != y.shape:
        raise ValueError("y_true and scores must have the same shape")
    order = np.argsort(s, kind="stable")
    s_sorted = s[order]
    ranks = np.empty(s.size, dtype=np.float64)
    i = 0
    while i < s.size:
        j = i
        while j + 1 < s.size and s_sorted[j + 1] == s_sorted[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # midrank, 1-based
        i = j + 1
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    rank_sum = float(ranks[y == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def auroc_pairwise(y_true, scores) -> float:
    """O(n^2) pairwise definition; independent reference for the rank form."""
    y = _check_binary(y_true)
    s = np.asarray(scores, dtype=np.float64)
    pos = s[y == 1]
    neg = s[y == 0]
    wins = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                wins += 1.0
            elif sp == sn:
                wins += 0.5
    return wins / (pos.size * neg.size)
