"""Numba kernels shared by several solvers.

Residual networks are passed as flat arrays ``rtail, rhead, rcost, rcap``; an
entry with ``rcap <= 0`` is absent. Solvers use the paired layout where arc
``e`` and ``e ^ 1`` are reverses of each other.
"""
import numpy as np
from numba import njit

BIG = np.int64(2**62)


@njit(cache=True)
def pred_cycle(n, rtail, pred, mark):
    """Arc ids of a cycle in the predecessor graph, in traversal order, or an empty array."""
    for v in range(n):
        mark[v] = -1
    for s in range(n):
        if mark[s] != -1:
            continue
        w = s
        while w != -1 and mark[w] == -1:
            mark[w] = s
            e = pred[w]
            w = rtail[e] if e >= 0 else -1
        if w != -1 and mark[w] == s:
            length = 0
            x = w
            while True:
                length += 1
                x = rtail[pred[x]]
                if x == w:
                    break
            cyc = np.empty(length, dtype=np.int64)
            x = w
            for i in range(length - 1, -1, -1):
                e = pred[x]
                cyc[i] = e
                x = rtail[e]
            return cyc
    return np.empty(0, dtype=np.int64)


@njit(cache=True)
def bellman_ford_cycle(n, rtail, rhead, rcost, rcap, dist, pred, mark):
    """First negative cycle exposed by Bellman-Ford from a virtual source.

    All distances start at zero. After every full pass over the arcs (in id
    order) the predecessor graph is searched for a cycle; any such cycle is
    negative. Returns an empty array when a pass makes no update.
    """
    for v in range(n):
        dist[v] = 0
        pred[v] = -1
    passes = 0
    while True:
        changed = False
        for e in range(rtail.shape[0]):
            if rcap[e] > 0:
                u = rtail[e]
                v = rhead[e]
                nd = dist[u] + rcost[e]
                if nd < dist[v]:
                    dist[v] = nd
                    pred[v] = e
                    changed = True
        if not changed:
            return np.empty(0, dtype=np.int64)
        passes += 1
        cyc = pred_cycle(n, rtail, pred, mark)
        if cyc.shape[0] > 0:
            return cyc
        if passes > 2 * n + 2:
            raise RuntimeError("Bellman-Ford failed to expose a cycle")


@njit(cache=True)
def bellman_ford_distances(n, rtail, rhead, rcost, rcap, add, dist):
    """Shortest distances from a virtual source with arc lengths ``rcost + add``.

    Returns False if a negative cycle prevents convergence.
    """
    for v in range(n):
        dist[v] = 0
    for _ in range(n + 1):
        changed = False
        for e in range(rtail.shape[0]):
            if rcap[e] > 0:
                nd = dist[rtail[e]] + rcost[e] + add
                if nd < dist[rhead[e]]:
                    dist[rhead[e]] = nd
                    changed = True
        if not changed:
            return True
    return False


@njit(cache=True)
def karp_min_mean_cycle(n, rtail, rhead, rcost, rcap, D, P):
    """Karp's dynamic program for the minimum mean cycle.

    ``D[k, v]`` is the cheapest walk of exactly ``k`` arcs ending at ``v``
    (starting anywhere). Returns ``(cycle, num, den)`` with mean ``num/den``;
    the cycle is empty when the network is acyclic. Ties go to the lowest arc
    id and lowest vertex.
    """
    R = rtail.shape[0]
    for v in range(n):
        D[0, v] = 0
    for k in range(1, n + 1):
        for v in range(n):
            D[k, v] = BIG
            P[k, v] = -1
        reached = False
        for e in range(R):
            if rcap[e] > 0:
                du = D[k - 1, rtail[e]]
                if du < BIG:
                    val = du + rcost[e]
                    v = rhead[e]
                    if val < D[k, v]:
                        D[k, v] = val
                        P[k, v] = e
                        reached = True
        if not reached:
            return np.empty(0, dtype=np.int64), np.int64(0), np.int64(0)
    best_num = np.int64(0)
    best_den = np.int64(0)
    best_v = -1
    for v in range(n):
        dn = D[n, v]
        if dn >= BIG:
            continue
        mnum = np.int64(0)
        mden = np.int64(0)
        for k in range(n):
            dk = D[k, v]
            if dk < BIG:
                num = dn - dk
                den = n - k
                if mden == 0 or num * mden > mnum * den:
                    mnum = num
                    mden = den
        if best_v == -1 or mnum * best_den < best_num * mden:
            best_num = mnum
            best_den = mden
            best_v = v
    if best_v == -1:
        return np.empty(0, dtype=np.int64), np.int64(0), np.int64(0)
    # walk back from (n, best_v); the first repeated vertex closes a cycle of minimum mean
    pos = np.full(n, -1, dtype=np.int64)
    arcs = np.empty(n + 1, dtype=np.int64)
    x = best_v
    k = n
    while pos[x] == -1:
        pos[x] = k
        e = P[k, x]
        arcs[k] = e
        x = rtail[e]
        k -= 1
    j = pos[x]
    cyc = np.empty(j - k, dtype=np.int64)
    for i in range(k + 1, j + 1):
        cyc[i - k - 1] = arcs[i]
    return cyc, best_num, best_den


@njit(cache=True)
def cycle_delta(cyc, rcap):
    d = BIG
    for e in cyc:
        if rcap[e] < d:
            d = rcap[e]
    return d


@njit(cache=True)
def augment_paired(cyc, rcap, d):
    for e in cyc:
        rcap[e] -= d
        rcap[e ^ 1] += d


# binary heap keyed by (distance, vertex)

@njit(cache=True)
def heap_push(hk, hv, size, key, v):
    i = size
    hk[i] = key
    hv[i] = v
    while i > 0:
        p = (i - 1) >> 1
        if hk[p] < hk[i] or (hk[p] == hk[i] and hv[p] <= hv[i]):
            break
        hk[p], hk[i] = hk[i], hk[p]
        hv[p], hv[i] = hv[i], hv[p]
        i = p
    return size + 1


@njit(cache=True)
def heap_pop(hk, hv, size):
    key = hk[0]
    v = hv[0]
    size -= 1
    hk[0] = hk[size]
    hv[0] = hv[size]
    i = 0
    while True:
        l = 2 * i + 1
        if l >= size:
            break
        c = l
        r = l + 1
        if r < size and (hk[r] < hk[l] or (hk[r] == hk[l] and hv[r] < hv[l])):
            c = r
        if hk[i] < hk[c] or (hk[i] == hk[c] and hv[i] <= hv[c]):
            break
        hk[c], hk[i] = hk[i], hk[c]
        hv[c], hv[i] = hv[i], hv[c]
        i = c
    return key, v, size


@njit(cache=True)
def dijkstra(n, start, adj, rhead, rcost, rcap, min_cap, pot, source, excess, stop_at, dist, pred, settled, hk, hv):
    """Dijkstra on reduced costs ``rcost[e] + pot[tail] - pot[head]``.

    Only arcs with ``rcap >= min_cap`` are used. The search stops as soon as a
    vertex with ``excess <= -stop_at`` is settled and returns that vertex; it
    returns -1 if none is reachable and -2 if a negative reduced cost is met.
    """
    for v in range(n):
        dist[v] = BIG
        pred[v] = -1
        settled[v] = False
    dist[source] = 0
    size = heap_push(hk, hv, 0, np.int64(0), source)
    while size > 0:
        d, u, size = heap_pop(hk, hv, size)
        if settled[u] or d > dist[u]:
            continue
        settled[u] = True
        if excess[u] <= -stop_at:
            return u
        pu = pot[u]
        for i in range(start[u], start[u + 1]):
            e = adj[i]
            if rcap[e] < min_cap:
                continue
            w = rhead[e]
            rc = rcost[e] + pu - pot[w]
            if rc < 0:
                return -2
            if settled[w]:
                continue
            nd = d + rc
            if nd < dist[w]:
                dist[w] = nd
                pred[w] = e
                size = heap_push(hk, hv, size, nd, w)
    return -1


@njit(cache=True)
def _bfs_levels(N, start, adj, rhead, rcap, s, t, level, queue):
    for v in range(N):
        level[v] = -1
    level[s] = 0
    qh = 0
    qt = 1
    queue[0] = s
    while qh < qt:
        u = queue[qh]
        qh += 1
        for i in range(start[u], start[u + 1]):
            e = adj[i]
            if rcap[e] > 0 and level[rhead[e]] < 0:
                level[rhead[e]] = level[u] + 1
                queue[qt] = rhead[e]
                qt += 1
    return level[t] >= 0


@njit(cache=True)
def dinic(N, rtail, rhead, rcap, start, adj, s, t):
    """Dinic's blocking-flow max flow on a paired residual network; mutates ``rcap``."""
    level = np.empty(N, dtype=np.int64)
    queue = np.empty(N, dtype=np.int64)
    it = np.empty(N, dtype=np.int64)
    stack = np.empty(N, dtype=np.int64)
    total = np.int64(0)
    if s == t:
        return total
    while _bfs_levels(N, start, adj, rhead, rcap, s, t, level, queue):
        for v in range(N):
            it[v] = start[v]
        top = 0
        v = s
        while True:
            if v == t:
                d = BIG
                for i in range(top):
                    if rcap[stack[i]] < d:
                        d = rcap[stack[i]]
                first = -1
                for i in range(top):
                    e = stack[i]
                    rcap[e] -= d
                    rcap[e ^ 1] += d
                    if first < 0 and rcap[e] == 0:
                        first = i
                total += d
                top = first
                v = rtail[stack[first]]
                continue
            advanced = False
            while it[v] < start[v + 1]:
                e = adj[it[v]]
                w = rhead[e]
                if rcap[e] > 0 and level[w] == level[v] + 1:
                    stack[top] = e
                    top += 1
                    v = w
                    advanced = True
                    break
                it[v] += 1
            if not advanced:
                if v == s:
                    break
                level[v] = -1
                top -= 1
                v = rtail[stack[top]]
                it[v] += 1
    return total
