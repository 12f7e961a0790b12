"""Compiled kernels for growing and applying binary Gini trees."""

import numpy as np
from numba import njit

MODE_EXHAUSTIVE = 0
MODE_SUBSPACE = 1
MODE_FULLY_RANDOM = 2

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


@njit(cache=True, nogil=True)
def _mix(z):
    z = z + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def _uniform(state):
    # 53-bit float in [0, 1) from a 64-bit state
    return (state >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True, nogil=True)
def _child_seed(seed, side):
    return _mix(seed ^ (np.uint64(side + 1) * np.uint64(0xD1B54A32D192ED03)))


@njit(cache=True, nogil=True)
def grow(X, y, sample_idx, mode, max_depth, min_samples_split, n_sub, seed):
    """Grow a tree on rows ``sample_idx`` of ``X``.

    Returns (feature, threshold, left, right, counts, n_nodes); leaves have
    feature == -1. ``max_depth < 0`` means unlimited.
    """
    m = sample_idx.shape[0]
    d = X.shape[1]
    cap = 2 * m + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    counts = np.zeros((cap, 2), dtype=np.float64)

    idx = sample_idx.copy()
    st_node = np.empty(cap, dtype=np.int64)
    st_start = np.empty(cap, dtype=np.int64)
    st_end = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    st_seed = np.empty(cap, dtype=np.uint64)
    top = 0
    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = m
    st_depth[0] = 0
    st_seed[0] = _mix(seed)
    top = 1
    n_nodes = 1

    cand = np.empty(d, dtype=np.int64)
    vals = np.empty(m, dtype=np.float64)
    labs = np.empty(m, dtype=np.int64)

    while top > 0:
        top -= 1
        node = st_node[top]
        start = st_start[top]
        end = st_end[top]
        depth = st_depth[top]
        nseed = st_seed[top]
        n = end - start

        c0 = 0.0
        c1 = 0.0
        for i in range(start, end):
            if y[idx[i]] == 1:
                c1 += 1.0
            else:
                c0 += 1.0
        counts[node, 0] = c0
        counts[node, 1] = c1

        if c0 == 0.0 or c1 == 0.0 or n < min_samples_split or (max_depth >= 0 and depth >= max_depth):
            continue

        # features that vary inside this node
        n_cand = 0
        for f in range(d):
            first = X[idx[start], f]
            for i in range(start + 1, end):
                if X[idx[i], f] != first:
                    cand[n_cand] = f
                    n_cand += 1
                    break
        if n_cand == 0:
            continue

        rs = nseed
        best_f = -1
        best_thr = 0.0

        if mode == MODE_FULLY_RANDOM:
            rs = _mix(rs)
            best_f = cand[np.int64(_uniform(rs) * n_cand)]
            lo = np.inf
            hi = -np.inf
            for i in range(start, end):
                v = X[idx[i], best_f]
                if v < lo:
                    lo = v
                if v > hi:
                    hi = v
            rs = _mix(rs)
            u = _uniform(rs)
            thr = lo + u * (hi - lo)
            if thr <= lo:
                thr = np.nextafter(lo, np.inf)
            best_thr = thr
        else:
            n_try = n_cand
            if mode == MODE_SUBSPACE and n_sub < n_cand:
                # partial Fisher-Yates over the varying features
                for j in range(n_sub):
                    rs = _mix(rs)
                    k = j + np.int64(_uniform(rs) * (n_cand - j))
                    tmp = cand[j]
                    cand[j] = cand[k]
                    cand[k] = tmp
                n_try = n_sub
            best_score = np.inf
            for j in range(n_try):
                f = cand[j]
                for i in range(n):
                    vals[i] = X[idx[start + i], f]
                    labs[i] = y[idx[start + i]]
                order = np.argsort(vals[:n])
                l0 = 0.0
                l1 = 0.0
                for p in range(n - 1):
                    o = order[p]
                    if labs[o] == 1:
                        l1 += 1.0
                    else:
                        l0 += 1.0
                    v = vals[o]
                    vn = vals[order[p + 1]]
                    if vn <= v:
                        continue
                    nl = l0 + l1
                    r0 = c0 - l0
                    r1 = c1 - l1
                    nr = r0 + r1
                    score = (nl - (l0 * l0 + l1 * l1) / nl) + (nr - (r0 * r0 + r1 * r1) / nr)
                    if score < best_score - 1e-12:
                        best_score = score
                        best_f = f
                        mid = 0.5 * (v + vn)
                        if mid <= v:
                            mid = vn
                        best_thr = mid
            if best_f < 0:
                continue

        # partition: rows with x < thr first
        i = start
        jj = end - 1
        while i <= jj:
            if X[idx[i], best_f] < best_thr:
                i += 1
            else:
                tmp = idx[i]
                idx[i] = idx[jj]
                idx[jj] = tmp
                jj -= 1
        mid_pos = i
        if mid_pos == start or mid_pos == end:
            continue

        feature[node] = best_f
        threshold[node] = best_thr
        lnode = n_nodes
        rnode = n_nodes + 1
        n_nodes += 2
        left[node] = lnode
        right[node] = rnode
        # push right first so the left subtree is numbered first
        st_node[top] = rnode
        st_start[top] = mid_pos
        st_end[top] = end
        st_depth[top] = depth + 1
        st_seed[top] = _child_seed(nseed, 1)
        top += 1
        st_node[top] = lnode
        st_start[top] = start
        st_end[top] = mid_pos
        st_depth[top] = depth + 1
        st_seed[top] = _child_seed(nseed, 0)
        top += 1

    return feature, threshold, left, right, counts, n_nodes


@njit(cache=True, nogil=True)
def apply(X, feature, threshold, left, right):
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] < threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out
