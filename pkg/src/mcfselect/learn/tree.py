"""CART-style classification tree grown by a numba kernel.

Splits are axis-aligned ``x[f] <= threshold``; the best splitter places
thresholds halfway between consecutive distinct values, the random splitter
draws one uniform threshold per feature. Sample weights carry bootstrap
counts, boosting weights and class weights alike.
"""
from __future__ import annotations

import numpy as np
from numba import njit

GINI, ENTROPY = 0, 1
BEST, RANDOM = 0, 1


@njit(cache=True)
def _impurity(counts, total, criterion):
    if total <= 0.0:
        return 0.0
    s = 0.0
    if criterion == GINI:
        for c in counts:
            p = c / total
            s += p * p
        return 1.0 - s
    for c in counts:
        if c > 0.0:
            p = c / total
            s -= p * np.log2(p)
    return s


@njit(cache=True)
def build_tree(X, y, w, num_classes, criterion, splitter, max_depth, max_features, min_split, seed):
    """Grow a tree; returns ``(feature, threshold, left, right, value)`` node arrays.

    ``feature == -1`` marks a leaf, ``value`` holds weighted class totals and
    ``max_depth < 0`` means unlimited.
    """
    np.random.seed(seed)
    n, d = X.shape
    m = 0
    for i in range(n):
        if w[i] > 0.0:
            m += 1
    idx = np.empty(m, np.int64)
    j = 0
    for i in range(n):
        if w[i] > 0.0:
            idx[j] = i
            j += 1
    cap = 2 * m + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros((cap, num_classes))
    st_node = np.empty(cap, np.int64)
    st_start = np.empty(cap, np.int64)
    st_end = np.empty(cap, np.int64)
    st_depth = np.empty(cap, np.int64)
    top = 0
    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = m
    st_depth[0] = 0
    top = 1
    count = 1
    feats = np.arange(d)
    vals = np.empty(m)
    buf = np.empty(m, np.int64)
    counts = np.zeros(num_classes)
    lc = np.zeros(num_classes)
    rc = np.zeros(num_classes)
    while top > 0:
        top -= 1
        node = st_node[top]
        start = st_start[top]
        end = st_end[top]
        depth = st_depth[top]
        counts[:] = 0.0
        total = 0.0
        for i in range(start, end):
            s = idx[i]
            counts[y[s]] += w[s]
            total += w[s]
        value[node, :] = counts
        present = 0
        for c in counts:
            if c > 0.0:
                present += 1
        if present <= 1 or end - start < min_split or (max_depth >= 0 and depth >= max_depth):
            continue
        parent = total * _impurity(counts, total, criterion)
        if max_features < d or splitter == RANDOM:
            for i in range(d - 1, 0, -1):
                k = np.random.randint(0, i + 1)
                feats[i], feats[k] = feats[k], feats[i]
        best_gain = -np.inf
        best_f = -1
        best_t = 0.0
        tried = 0
        nn = end - start
        for fi in range(d):
            if tried >= max_features:
                break
            f = feats[fi]
            lo = np.inf
            hi = -np.inf
            for i in range(nn):
                v = X[idx[start + i], f]
                vals[i] = v
                if v < lo:
                    lo = v
                if v > hi:
                    hi = v
            if hi <= lo:
                continue
            tried += 1
            if splitter == RANDOM:
                t = np.random.uniform(lo, hi)
                if t >= hi:
                    t = lo
                lc[:] = 0.0
                lt = 0.0
                for i in range(nn):
                    if vals[i] <= t:
                        s = idx[start + i]
                        lc[y[s]] += w[s]
                        lt += w[s]
                for c in range(num_classes):
                    rc[c] = counts[c] - lc[c]
                gain = parent - lt * _impurity(lc, lt, criterion) - (total - lt) * _impurity(rc, total - lt, criterion)
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_t = t
                continue
            order = np.argsort(vals[:nn], kind="mergesort")
            lc[:] = 0.0
            lt = 0.0
            for i in range(nn - 1):
                s = idx[start + order[i]]
                lc[y[s]] += w[s]
                lt += w[s]
                v0 = vals[order[i]]
                v1 = vals[order[i + 1]]
                if v1 <= v0:
                    continue
                for c in range(num_classes):
                    rc[c] = counts[c] - lc[c]
                gain = parent - lt * _impurity(lc, lt, criterion) - (total - lt) * _impurity(rc, total - lt, criterion)
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    t = v0 + (v1 - v0) / 2.0
                    best_t = t if t < v1 else v0
        if best_f < 0:
            continue
        # stable partition: left block keeps x <= t
        nl = 0
        for i in range(start, end):
            if X[idx[i], best_f] <= best_t:
                buf[nl] = idx[i]
                nl += 1
        nr = nl
        for i in range(start, end):
            if X[idx[i], best_f] > best_t:
                buf[nr] = idx[i]
                nr += 1
        for i in range(nn):
            idx[start + i] = buf[i]
        feature[node] = best_f
        threshold[node] = best_t
        left[node] = count
        right[node] = count + 1
        st_node[top] = count + 1
        st_start[top] = start + nl
        st_end[top] = end
        st_depth[top] = depth + 1
        top += 1
        st_node[top] = count
        st_start[top] = start
        st_end[top] = start + nl
        st_depth[top] = depth + 1
        top += 1
        count += 2
    return (
        feature[:count].copy(),
        threshold[:count].copy(),
        left[:count].copy(),
        right[:count].copy(),
        value[:count].copy(),
    )


@njit(cache=True)
def apply_tree(feature, threshold, left, right, X):
    """Leaf index reached by every row of ``X``."""
    out = np.empty(X.shape[0], np.int64)
    for r in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = node
    return out
