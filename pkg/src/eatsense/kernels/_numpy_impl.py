"""Vectorized numpy implementations of the tree and neighbor kernels.

Mirrors ``_numba_impl`` draw for draw and operation for operation; see the
package docstring for the shared contract.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _sm_next(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    z = z ^ (z >> 31)
    return state, z


def _grow_tree(codesT, n_bins, ye, we, he, max_depth, mtry, seed, classification):
    d, n = codesT.shape
    cap = 2 * n + 1
    feat = np.full(cap, -1, np.int32)
    code = np.full(cap, -1, np.int32)
    left = np.full(cap, -1, np.int32)
    right = np.full(cap, -1, np.int32)
    value = np.zeros(cap)
    leaf_g = np.zeros(cap)
    leaf_h = np.zeros(cap)
    imp = np.zeros(d)

    idx = np.arange(n, dtype=np.int64)
    stack = np.zeros((n + 2, 5), dtype=np.int64)  # start, end, depth, parent, is_left
    stack[0] = (0, n, 0, -1, 0)
    sp = 1
    n_nodes = 0
    state = seed & _MASK64
    perm = np.empty(d, dtype=np.int64)
    mtry_eff = mtry if 0 < mtry < d else d

    while sp > 0:
        sp -= 1
        start, end, depth, parent, is_left = (int(v) for v in stack[sp])
        node = n_nodes
        n_nodes += 1
        if parent >= 0:
            if is_left:
                left[parent] = node
            else:
                right[parent] = node

        seg = idx[start:end]
        wseg = we[seg]
        yseg = ye[seg]
        wy = wseg * yseg
        sw = float(np.cumsum(wseg)[-1])
        swy = float(np.cumsum(wy)[-1])
        value[node] = swy / sw
        if not classification:
            leaf_g[node] = swy  # we == 1, so this is the plain sum of g
            leaf_h[node] = float(np.cumsum(he[seg])[-1])

        m = end - start
        pure = (swy <= 0.0 or swy >= sw) if classification else (yseg.min() == yseg.max())
        if m < 2 or pure or (0 <= max_depth <= depth):
            continue

        if mtry_eff < d:
            perm[:] = np.arange(d)
            for i in range(mtry_eff):
                state, z = _sm_next(state)
                j = i + int(z % (d - i))
                perm[i], perm[j] = perm[j], perm[i]
            tried = perm[:mtry_eff]
        else:
            tried = np.arange(d)

        best_cost = np.inf
        best_f = -1
        best_c = -1
        for f in tried:
            nb = int(n_bins[f])
            if nb < 2:
                continue
            col = codesT[f, seg]
            hw = np.bincount(col, weights=wseg, minlength=nb)
            hwy = np.bincount(col, weights=wy, minlength=nb)
            hn = np.bincount(col, minlength=nb)
            cw = np.cumsum(hw)[:-1]
            cwy = np.cumsum(hwy)[:-1]
            cn = np.cumsum(hn)[:-1]
            valid = (cn >= 1) & (cn <= m - 1)
            if not valid.any():
                continue
            swl = cw[valid]
            syl = cwy[valid]
            swr = sw - swl
            syr = swy - syl
            if classification:
                vcost = 2.0 * (syl * (swl - syl) / swl + syr * (swr - syr) / swr)
            else:
                vcost = -(syl * syl / swl + syr * syr / swr)
            cost = np.full(nb - 1, np.inf)
            cost[valid] = vcost
            c = int(np.argmin(cost))
            if cost[c] < best_cost:
                best_cost = float(cost[c])
                best_f = int(f)
                best_c = c
        if best_f < 0:
            continue

        if classification:
            node_mass = 2.0 * swy * (sw - swy) / sw
            imp[best_f] += node_mass - best_cost

        go_left = codesT[best_f, seg] <= best_c
        n_left = int(go_left.sum())
        idx[start:end] = np.concatenate([seg[go_left], seg[~go_left]])
        feat[node] = best_f
        code[node] = best_c
        stack[sp] = (start + n_left, end, depth + 1, node, 0)
        sp += 1
        stack[sp] = (start, start + n_left, depth + 1, node, 1)
        sp += 1

    return (
        feat[:n_nodes].copy(), code[:n_nodes].copy(),
        left[:n_nodes].copy(), right[:n_nodes].copy(),
        value[:n_nodes].copy(), leaf_g[:n_nodes].copy(), leaf_h[:n_nodes].copy(),
        imp,
    )


def grow_tree_cls(codesT, n_bins, ye, we, max_depth, mtry, seed):
    """Weighted-Gini classification tree over binned feature codes."""
    return _grow_tree(codesT, n_bins, ye, we, np.zeros(codesT.shape[1]),
                      max_depth, mtry, seed, True)


def grow_tree_reg(codesT, n_bins, g, h, max_depth, mtry, seed):
    """Squared-error regression tree on g; accumulates leaf sums of g and h."""
    return _grow_tree(codesT, n_bins, g, np.ones(codesT.shape[1]), h,
                      max_depth, mtry, seed, False)


def tree_apply(feat, thr, left, right, X):
    """Leaf node index for every row (x <= threshold goes left)."""
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int32)
    if n == 0:
        return node
    active = feat[node] >= 0
    while active.any():
        rows = np.nonzero(active)[0]
        cur = node[rows]
        go_left = X[rows, feat[cur]] <= thr[cur]
        node[rows[go_left]] = left[cur[go_left]]
        node[rows[~go_left]] = right[cur[~go_left]]
        active[rows] = feat[node[rows]] >= 0
    return node


def knn_indices(X, k, chunk=512):
    """k nearest other rows per row (squared Euclidean, ties to lower index)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k <= n - 1:
        raise ValueError("need 1 <= k <= n-1")
    out = np.empty((n, k), dtype=np.int32)
    sq = np.einsum("ij,ij->i", X, X)
    for s in range(0, n, chunk):
        e = min(s + chunk, n)
        d2 = sq[s:e, None] + sq[None, :] - 2.0 * (X[s:e] @ X.T)
        d2[np.arange(e - s), np.arange(s, e)] = np.inf
        order = np.argsort(d2, axis=1, kind="stable")
        out[s:e] = order[:, :k].astype(np.int32)
    return out
