"""Greedy sequential forward feature selection.

Candidates are scored by stratified k-fold cross-validation on the training
split (no balancing inside the inner folds; balancing belongs to the outer
protocol runner). Selection stops when the best addition improves the
objective by no more than the tolerance; the first feature is always kept so
the result is never empty. Ties break toward the lower feature index, i.e.
manifest order.
"""
from __future__ import annotations

import numpy as np

from .._rng import derive_seed, rng as derive_rng
from ..metrics import auroc, macro_f1
from .models import predict_scores, train


def stratified_folds(y: np.ndarray, n_folds: int, rng: np.random.Generator) -> np.ndarray:
    """Fold id per row: per-class shuffle dealt round-robin."""
    y = np.asarray(y)
    folds = np.zeros(y.size, dtype=np.int64)
    for cls in np.unique(y):
        rows = np.nonzero(y == cls)[0]
        rows = rows[rng.permutation(rows.size)]
        folds[rows] = np.arange(rows.size) % n_folds
    return folds


def _cv_score(X, y, cols, model_kind, params, seed, folds, n_folds, objective) -> float:
    scores = []
    sub = X[:, cols]
    for f in range(n_folds):
        tr = folds != f
        va = ~tr
        model = train(model_kind, sub[tr], y[tr], params, derive_seed(seed, "fit", f))
        s = predict_scores(model, sub[va])
        if objective == "auroc":
            scores.append(auroc(y[va], s))
        else:
            scores.append(macro_f1(y[va], (s >= 0.5).astype(np.int8)))
    return float(np.mean(scores))


def sfs(
    X,
    y,
    model_kind: str,
    seed: int = 0,
    params: dict | None = None,
    objective: str = "auroc",
    n_folds: int = 3,
    tol: float = 1e-4,
    max_features: int | None = None,
) -> list[int]:
    """Forward-selected feature indices, in selection order."""
    if objective not in ("auroc", "f1"):
        raise ValueError(f"unknown objective: {objective!r}")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    classes, counts = np.unique(y, return_counts=True)
    if classes.size != 2 or counts.min() < 2:
        raise ValueError("sfs needs two classes with at least two samples each")
    n_folds_eff = min(n_folds, int(counts.min()))
    folds = stratified_folds(y, n_folds_eff, derive_rng(seed, "sfs_folds"))

    d = X.shape[1]
    limit = d if max_features is None else min(max_features, d)
    selected: list[int] = []
    remaining = list(range(d))
    best_score = -np.inf
    while remaining and len(selected) < limit:
        cand_best = -np.inf
        cand_feat = -1
        for f in remaining:
            s = _cv_score(X, y, selected + [f], model_kind, params, seed, folds, n_folds_eff, objective)
            if s > cand_best:
                cand_best = s
                cand_feat = f
        if selected and cand_best <= best_score + tol:
            break
        selected.append(cand_feat)
        remaining.remove(cand_feat)
        best_score = cand_best
    return selected
