"""Numba njit implementations of the tree and neighbor kernels.

Loop-for-loop mirror of ``_numpy_impl``: identical stack discipline, draw
sequence, accumulation order, and tie handling. Compiled lazily with
``cache=True`` so repeated processes reuse the on-disk compilation.
"""
from __future__ import annotations

import numpy as np
from numba import njit

_U = np.uint64


@njit(cache=True, nogil=True, inline="always")
def _sm_next(state):
    state = state + _U(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> _U(30))) * _U(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U(27))) * _U(0x94D049BB133111EB)
    z = z ^ (z >> _U(31))
    return state, z


@njit(cache=True, nogil=True)
def _grow_tree(Xe, ye, we, he, max_depth, mtry, seed, classification):
    n, d = Xe.shape
    cap = 2 * n + 1
    feat = np.full(cap, -1, np.int32)
    thr = np.zeros(cap)
    left = np.full(cap, -1, np.int32)
    right = np.full(cap, -1, np.int32)
    value = np.zeros(cap)
    leaf_g = np.zeros(cap)
    leaf_h = np.zeros(cap)
    imp = np.zeros(d)

    idx = np.arange(n)
    scratch = np.empty(n, dtype=np.int64)
    stack = np.zeros((n + 2, 5), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = n
    stack[0, 2] = 0
    stack[0, 3] = -1
    stack[0, 4] = 0
    sp = 1
    n_nodes = 0
    state = _U(seed)
    perm = np.empty(d, dtype=np.int64)
    mtry_eff = mtry if 0 < mtry < d else d

    v = np.empty(n)
    ws = np.empty(n)
    wys = np.empty(n)

    while sp > 0:
        sp -= 1
        start = stack[sp, 0]
        end = stack[sp, 1]
        depth = stack[sp, 2]
        parent = stack[sp, 3]
        is_left = stack[sp, 4]
        node = n_nodes
        n_nodes += 1
        if parent >= 0:
            if is_left == 1:
                left[parent] = node
            else:
                right[parent] = node

        m = end - start
        sw = 0.0
        swy = 0.0
        sh = 0.0
        ymin = ye[idx[start]]
        ymax = ymin
        for p in range(start, end):
            e = idx[p]
            sw += we[e]
            swy += we[e] * ye[e]
            sh += he[e]
            if ye[e] < ymin:
                ymin = ye[e]
            if ye[e] > ymax:
                ymax = ye[e]
        value[node] = swy / sw
        if not classification:
            leaf_g[node] = swy
            leaf_h[node] = sh

        if classification:
            pure = swy <= 0.0 or swy >= sw
        else:
            pure = ymin == ymax
        if m < 2 or pure or (max_depth >= 0 and depth >= max_depth):
            continue

        if mtry_eff < d:
            for i in range(d):
                perm[i] = i
            for i in range(mtry_eff):
                state, z = _sm_next(state)
                j = i + np.int64(z % _U(d - i))
                tmp = perm[i]
                perm[i] = perm[j]
                perm[j] = tmp
            n_tried = mtry_eff
        else:
            for i in range(d):
                perm[i] = i
            n_tried = d

        best_cost = np.inf
        best_f = -1
        best_thr = 0.0
        for t_i in range(n_tried):
            f = perm[t_i]
            for p in range(m):
                v[p] = Xe[idx[start + p], f]
            order = np.argsort(v[:m], kind="mergesort")
            if v[order[0]] == v[order[m - 1]]:
                continue
            acc_w = 0.0
            acc_wy = 0.0
            for p in range(m):
                e = idx[start + order[p]]
                acc_w += we[e]
                acc_wy += we[e] * ye[e]
                ws[p] = acc_w
                wys[p] = acc_wy
            for p in range(m - 1):
                a = v[order[p]]
                b = v[order[p + 1]]
                if a == b:
                    continue
                swl = ws[p]
                syl = wys[p]
                swr = sw - swl
                syr = swy - syl
                if classification:
                    cost = 2.0 * (syl * (swl - syl) / swl + syr * (swr - syr) / swr)
                else:
                    cost = -(syl * syl / swl + syr * syr / swr)
                if cost < best_cost:
                    best_cost = cost
                    best_f = f
                    t = (a + b) / 2.0
                    if t >= b:
                        t = a
                    best_thr = t
        if best_f < 0:
            continue

        if classification:
            node_mass = 2.0 * swy * (sw - swy) / sw
            imp[best_f] += node_mass - best_cost

        n_left = 0
        for p in range(start, end):
            if Xe[idx[p], best_f] <= best_thr:
                scratch[n_left] = idx[p]
                n_left += 1
        n_right = 0
        for p in range(start, end):
            if not (Xe[idx[p], best_f] <= best_thr):
                scratch[n_left + n_right] = idx[p]
                n_right += 1
        for p in range(m):
            idx[start + p] = scratch[p]

        feat[node] = best_f
        thr[node] = best_thr
        stack[sp, 0] = start + n_left
        stack[sp, 1] = end
        stack[sp, 2] = depth + 1
        stack[sp, 3] = node
        stack[sp, 4] = 0
        sp += 1
        stack[sp, 0] = start
        stack[sp, 1] = start + n_left
        stack[sp, 2] = depth + 1
        stack[sp, 3] = node
        stack[sp, 4] = 1
        sp += 1

    return (
        feat[:n_nodes].copy(), thr[:n_nodes].copy(),
        left[:n_nodes].copy(), right[:n_nodes].copy(),
        value[:n_nodes].copy(), leaf_g[:n_nodes].copy(), leaf_h[:n_nodes].copy(),
        imp,
    )


def grow_tree_cls(Xe, ye, we, max_depth, mtry, seed):
    """Weighted-Gini classification tree over the entry rows of Xe."""
    return _grow_tree(Xe, ye, we, np.zeros(Xe.shape[0]), np.int64(max_depth),
                      np.int64(mtry), np.uint64(seed), True)


def grow_tree_reg(Xe, g, h, max_depth, mtry, seed):
    """Squared-error regression tree on g; accumulates leaf sums of g and h."""
    return _grow_tree(Xe, g, np.ones(Xe.shape[0]), h, np.int64(max_depth),
                      np.int64(mtry), np.uint64(seed), False)


@njit(cache=True, nogil=True)
def _tree_apply(feat, thr, left, right, X):
    n = X.shape[0]
    out = np.zeros(n, dtype=np.int32)
    for i in range(n):
        node = 0
        while feat[node] >= 0:
            if X[i, feat[node]] <= thr[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


def tree_apply(feat, thr, left, right, X):
    """Leaf node index for every row (x <= threshold goes left)."""
    return _tree_apply(feat, thr, left, right, np.ascontiguousarray(X, dtype=np.float64))


@njit(cache=True, nogil=True)
def _knn(X, k):
    n, d = X.shape
    out = np.empty((n, k), dtype=np.int32)
    best_d = np.empty(k)
    best_j = np.empty(k, dtype=np.int32)
    for i in range(n):
        size = 0
        for j in range(n):
            if j == i:
                continue
            dist = 0.0
            for c in range(d):
                diff = X[i, c] - X[j, c]
                dist += diff * diff
            # insert (dist, j) keeping the k smallest, ties to lower index
            if size < k:
                pos = size
                while pos > 0 and (best_d[pos - 1] > dist):
                    best_d[pos] = best_d[pos - 1]
                    best_j[pos] = best_j[pos - 1]
                    pos -= 1
                best_d[pos] = dist
                best_j[pos] = j
                size += 1
            elif dist < best_d[k - 1]:
                pos = k - 1
                while pos > 0 and (best_d[pos - 1] > dist):
                    best_d[pos] = best_d[pos - 1]
                    best_j[pos] = best_j[pos - 1]
                    pos -= 1
                best_d[pos] = dist
                best_j[pos] = j
                size = k
        out[i] = best_j[:k]
    return out


def knn_indices(X, k, chunk=512):
    """k nearest other rows per row (squared Euclidean, ties to lower index)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k <= n - 1:
        raise ValueError("need 1 <= k <= n-1")
    return _knn(X, k)
