"""The four classifier families with probability outputs.

All four expose a score in [0, 1] for the positive class and are
deterministic given (data, hyperparameters, seed). Tree growth runs on the
kernel backend; per-tree random streams are derived from (seed, tree index)
so fits are reproducible regardless of execution order.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .._rng import derive_seed, rng as derive_rng
from ..kernels import grow_tree_cls, grow_tree_reg, tree_apply

MODEL_KINDS = ("RF", "NB", "GB", "AB")

DEFAULT_PARAMS: dict[str, dict] = {
    "RF": {"n_trees": 100, "max_depth": None, "mtry": "sqrt"},
    "NB": {"var_floor": 1e-9},
    "GB": {"n_rounds": 100, "max_depth": 3, "learning_rate": 0.1},
    "AB": {"n_stumps": 50},
}

FORMAT_VERSION = 1


@dataclass
class Model:
    kind: str
    params: dict
    seed: int
    state: dict
    feature_names: list[str] | None = None  # subset or transform bookkeeping
    pca_components: int | None = None


def _validate_training_input(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("X must be (n, d) with matching y")
    if not np.isfinite(X).all():
        raise ValueError("NaN features: impute before training")
    classes, counts = np.unique(y, return_counts=True)
    if classes.size != 2:
        raise ValueError(f"need exactly two classes, got {classes.tolist()}")
    if counts.min() < 2:
        raise ValueError("each class needs at least two samples")
    return X, (y == classes.max()).astype(np.float64)


def _check_predict_input(X: np.ndarray) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if not np.isfinite(X).all():
        raise ValueError("NaN features: impute before predicting")
    return X


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log_loss(y: np.ndarray, logits: np.ndarray) -> float:
    """Mean binary cross-entropy of logits against {0,1} targets."""
    y = np.asarray(y, dtype=np.float64)
    z = np.asarray(logits, dtype=np.float64)
    # softplus(z) - y*z, computed stably
    sp = np.where(z > 0, z + np.log1p(np.exp(-z)), np.log1p(np.exp(z)))
    return float(np.mean(sp - y * z))


def log_loss_gradient(y: np.ndarray, logits: np.ndarray) -> np.ndarray:
    """Gradient of ``log_loss`` with respect to each logit."""
    y = np.asarray(y, dtype=np.float64)
    z = np.asarray(logits, dtype=np.float64)
    return (_sigmoid(z) - y) / y.size


def _mtry_value(mtry, d: int) -> int:
    if mtry in (None, 0, "all"):
        return 0
    if mtry == "sqrt":
        return max(1, int(math.floor(math.sqrt(d))))
    m = int(mtry)
    if m <= 0 or m >= d:
        return 0
    return m


def _fit_rf(X, y, params, seed):
    n, d = X.shape
    n_trees = int(params["n_trees"])
    max_depth = -1 if params["max_depth"] is None else int(params["max_depth"])
    mtry = _mtry_value(params["mtry"], d)
    trees = []
    importances = np.zeros(d)
    for i in range(n_trees):
        boot = derive_rng(seed, "rf_boot", i).integers(0, n, size=n)
        boot = np.sort(boot)
        Xe = np.ascontiguousarray(X[boot])
        ye = y[boot]
        we = np.ones(n)
        feat, thr, left, right, value, _, _, imp = grow_tree_cls(
            Xe, ye, we, max_depth, mtry, derive_seed(seed, "rf_feat", i)
        )
        trees.append({"feat": feat, "thr": thr, "left": left, "right": right, "value": value})
        importances += imp / float(n)  # root weight is the bootstrap size n
    importances /= n_trees
    total = importances.sum()
    if total > 0:
        importances = importances / total
    return {"trees": trees, "importances": importances}


def _rf_scores(state, X):
    votes = np.zeros(X.shape[0])
    for t in state["trees"]:
        leaf = tree_apply(t["feat"], t["thr"], t["left"], t["right"], X)
        votes += (t["value"][leaf] > 0.5).astype(np.float64)
    return votes / len(state["trees"])


def _fit_nb(X, y, params, seed):
    floor = float(params["var_floor"])
    state = {"classes": [0.0, 1.0]}
    theta = np.zeros((2, X.shape[1]))
    var = np.zeros((2, X.shape[1]))
    prior = np.zeros(2)
    for c in (0, 1):
        Xc = X[y == c]
        theta[c] = Xc.mean(axis=0)
        var[c] = np.maximum(Xc.var(axis=0), floor)
        prior[c] = Xc.shape[0] / X.shape[0]
    state.update(theta=theta, var=var, log_prior=np.log(prior))
    return state


def _nb_scores(state, X):
    theta, var, log_prior = state["theta"], state["var"], state["log_prior"]
    joint = np.empty((X.shape[0], 2))
    for c in (0, 1):
        ll = -0.5 * (np.log(2.0 * np.pi * var[c]) + (X - theta[c]) ** 2 / var[c]).sum(axis=1)
        joint[:, c] = log_prior[c] + ll
    m = joint.max(axis=1, keepdims=True)
    p = np.exp(joint - m)
    return p[:, 1] / p.sum(axis=1)


def _fit_gb(X, y, params, seed):
    n = X.shape[0]
    n_rounds = int(params["n_rounds"])
    depth = int(params["max_depth"])
    lr = float(params["learning_rate"])
    p_bar = min(max(float(y.mean()), 1e-12), 1.0 - 1e-12)
    f0 = math.log(p_bar / (1.0 - p_bar))
    F = np.full(n, f0)
    trees = []
    for i in range(n_rounds):
        p = _sigmoid(F)
        g = y - p
        h = p * (1.0 - p)
        feat, thr, left, right, _, leaf_g, leaf_h, _ = grow_tree_reg(
            X, g, h, depth, 0, derive_seed(seed, "gb", i)
        )
        step = np.zeros(feat.size)
        leaves = feat < 0
        step[leaves] = lr * leaf_g[leaves] / (leaf_h[leaves] + 1e-16)
        leaf = tree_apply(feat, thr, left, right, X)
        F = F + step[leaf]
        trees.append({"feat": feat, "thr": thr, "left": left, "right": right, "step": step})
    return {"f0": f0, "trees": trees}


def _gb_scores(state, X):
    F = np.full(X.shape[0], state["f0"])
    for t in state["trees"]:
        leaf = tree_apply(t["feat"], t["thr"], t["left"], t["right"], X)
        F += t["step"][leaf]
    return _sigmoid(F)


def _fit_ab(X, y, params, seed):
    n = X.shape[0]
    n_stumps = int(params["n_stumps"])
    w = np.full(n, 1.0 / n)
    stumps = []
    alphas = []
    for i in range(n_stumps):
        feat, thr, left, right, value, _, _, _ = grow_tree_cls(X, y, w, 1, 0, derive_seed(seed, "ab", i))
        leaf = tree_apply(feat, thr, left, right, X)
        pred = (value[leaf] > 0.5).astype(np.float64)
        miss = pred != y
        err = float(w[miss].sum())
        if err >= 0.5:
            break
        if err <= 0.0:
            alphas.append(math.log((1.0 - 1e-12) / 1e-12))
            stumps.append({"feat": feat, "thr": thr, "left": left, "right": right, "value": value})
            break
        alpha = math.log((1.0 - err) / err)
        alphas.append(alpha)
        stumps.append({"feat": feat, "thr": thr, "left": left, "right": right, "value": value})
        w = w * np.exp(alpha * miss.astype(np.float64))
        w = w / w.sum()
    return {"stumps": stumps, "alphas": np.asarray(alphas)}


def _ab_scores(state, X):
    if not state["stumps"]:
        return np.full(X.shape[0], 0.5)
    s1 = np.zeros(X.shape[0])
    s0 = np.zeros(X.shape[0])
    for alpha, t in zip(state["alphas"], state["stumps"]):
        leaf = tree_apply(t["feat"], t["thr"], t["left"], t["right"], X)
        pred1 = t["value"][leaf] > 0.5
        s1 += alpha * pred1
        s0 += alpha * (~pred1)
    return _sigmoid(s1 - s0)  # softmax of the two weighted vote sums


_FITTERS = {"RF": _fit_rf, "NB": _fit_nb, "GB": _fit_gb, "AB": _fit_ab}
_SCORERS = {"RF": _rf_scores, "NB": _nb_scores, "GB": _gb_scores, "AB": _ab_scores}


def train(kind: str, X, y, params: dict | None = None, seed: int = 0) -> Model:
    """Fit one of RF, NB, GB, AB and return the fitted model."""
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind: {kind!r}")
    merged = dict(DEFAULT_PARAMS[kind])
    if params:
        unknown = set(params) - set(merged)
        if unknown:
            raise ValueError(f"unknown {kind} parameters: {sorted(unknown)}")
        merged.update(params)
    X, y01 = _validate_training_input(np.asarray(X), np.asarray(y))
    state = _FITTERS[kind](X, y01, merged, seed)
    return Model(kind, merged, seed, state)


def predict_scores(model: Model, X) -> np.ndarray:
    """Probability-like score of the positive (eating) class per row."""
    X = _check_predict_input(np.asarray(X))
    return _SCORERS[model.kind](model.state, X)


def gini_importance(model: Model) -> np.ndarray:
    """Normalized mean impurity decrease per feature of a random forest."""
    if model.kind != "RF":
        raise ValueError("Gini importance is defined for RF models only")
    return model.state["importances"].copy()


def _encode(obj):
    if isinstance(obj, np.ndarray):
        return {"__nd__": obj.dtype.str, "data": obj.tolist()}
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _decode(obj):
    if isinstance(obj, dict):
        if "__nd__" in obj:
            return np.asarray(obj["data"], dtype=np.dtype(obj["__nd__"]))
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def save_model(model: Model, path) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "params": _encode(model.params),
        "seed": model.seed,
        "feature_names": model.feature_names,
        "pca_components": model.pca_components,
        "state": _encode(model.state),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_model(path) -> Model:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format: {doc.get('format_version')}")
    return Model(
        doc["kind"],
        _decode(doc["params"]),
        doc["seed"],
        _decode(doc["state"]),
        doc.get("feature_names"),
        doc.get("pca_components"),
    )
