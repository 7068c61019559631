"""Primal network simplex on strongly feasible spanning tree bases.

The basis is rooted at an artificial vertex ``n`` joined to every vertex by an
uncapacitated artificial arc of cost ``1 + n * max_cost``. The tree is stored
as parent/parent-arc pointers plus a depth-first thread (``nxt``/``prv``),
subtree sizes and last descendants, so a pivot only touches the subtree that
moves. Entering arcs come from block pricing over blocks of ``ceil(sqrt(arcs))``
arcs; leaving arcs follow the last-blocking-arc rule, which keeps the tree
strongly feasible and prevents cycling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..graph import MCFInstance
from .base import (
    DEFAULT_OPTIONS,
    DONE,
    INVARIANT_BROKEN,
    RUNNING,
    SolveResult,
    SolverOptions,
    Status,
    check_bounds,
    drive,
)

ART_CAP = np.int64(2**62)

# rows of the integer tree array
PARENT, EDGE, SIZE, NXT, PRV, LAST = range(6)


@dataclass
class SpanningTreeBasis:
    """Snapshot of a basis: tree arcs T, arcs at zero flow L, arcs at capacity U."""

    tree_arcs: set
    lower_set: set
    upper_set: set
    parent: np.ndarray
    depth: np.ndarray
    thread: np.ndarray


@njit(cache=True)
def _find_apex(tree, p, q):
    size_p = tree[SIZE, p]
    size_q = tree[SIZE, q]
    while True:
        while size_p < size_q:
            p = tree[PARENT, p]
            size_p = tree[SIZE, p]
        while size_p > size_q:
            q = tree[PARENT, q]
            size_q = tree[SIZE, q]
        if size_p == size_q:
            if p != q:
                p = tree[PARENT, p]
                size_p = tree[SIZE, p]
                q = tree[PARENT, q]
                size_q = tree[SIZE, q]
            else:
                return p


@njit(cache=True)
def _remove_edge(tree, s, t):
    size_t = tree[SIZE, t]
    prev_t = tree[PRV, t]
    last_t = tree[LAST, t]
    next_last_t = tree[NXT, last_t]
    tree[PARENT, t] = -1
    tree[EDGE, t] = -1
    tree[NXT, prev_t] = next_last_t
    tree[PRV, next_last_t] = prev_t
    tree[NXT, last_t] = t
    tree[PRV, t] = last_t
    while s != -1:
        tree[SIZE, s] -= size_t
        if tree[LAST, s] == last_t:
            tree[LAST, s] = prev_t
        s = tree[PARENT, s]


@njit(cache=True)
def _make_root(tree, q, ancestors):
    k = 0
    while q != -1:
        ancestors[k] = q
        k += 1
        q = tree[PARENT, q]
    for i in range(k - 1, 0, -1):
        p = ancestors[i]
        q = ancestors[i - 1]
        size_p = tree[SIZE, p]
        last_p = tree[LAST, p]
        prev_q = tree[PRV, q]
        last_q = tree[LAST, q]
        next_last_q = tree[NXT, last_q]
        tree[PARENT, p] = q
        tree[PARENT, q] = -1
        tree[EDGE, p] = tree[EDGE, q]
        tree[EDGE, q] = -1
        tree[SIZE, p] = size_p - tree[SIZE, q]
        tree[SIZE, q] = size_p
        tree[NXT, prev_q] = next_last_q
        tree[PRV, next_last_q] = prev_q
        tree[NXT, last_q] = q
        tree[PRV, q] = last_q
        if last_p == last_q:
            tree[LAST, p] = prev_q
            last_p = prev_q
        tree[PRV, p] = last_q
        tree[NXT, last_q] = p
        tree[NXT, last_p] = q
        tree[PRV, q] = last_p
        tree[LAST, q] = last_p


@njit(cache=True)
def _add_edge(tree, i, p, q):
    last_p = tree[LAST, p]
    next_last_p = tree[NXT, last_p]
    size_q = tree[SIZE, q]
    last_q = tree[LAST, q]
    tree[PARENT, q] = p
    tree[EDGE, q] = i
    tree[NXT, last_p] = q
    tree[PRV, q] = last_p
    tree[PRV, next_last_p] = last_q
    tree[NXT, last_q] = next_last_p
    while p != -1:
        tree[SIZE, p] += size_q
        if tree[LAST, p] == last_p:
            tree[LAST, p] = last_q
        p = tree[PARENT, p]


@njit(cache=True)
def _basis_ok(tree, S, U, x, nv, in_tree):
    na = S.shape[0]
    for a in range(na):
        in_tree[a] = False
    for v in range(nv):
        e = tree[EDGE, v]
        if e >= 0:
            in_tree[e] = True
    for a in range(na):
        if x[a] < 0 or x[a] > U[a]:
            return False
        if not in_tree[a] and x[a] != 0 and x[a] != U[a]:
            return False
    return True


@njit(cache=True)
def _pivot_step(S, T, C, U, x, pi, tree, state, cyc_e, cyc_n, ancestors, in_tree, debug, budget):
    """``state = [block_start, block_size, root]``; a pass is one pivot."""
    na = S.shape[0]
    B = state[1]
    nblocks = (na + B - 1) // B
    for it in range(budget):
        # block pricing: most violated arc of the first block that has one
        entering = -1
        misses = 0
        f = state[0]
        while misses < nblocks:
            best = np.int64(0)
            for k in range(B):
                i = f + k
                if i >= na:
                    i -= na
                if U[i] == 0:
                    continue
                rc = C[i] + pi[S[i]] - pi[T[i]]
                if x[i] != 0:
                    rc = -rc
                if rc < best:
                    best = rc
                    entering = i
            f += B
            if f >= na:
                f -= na
            if entering >= 0:
                break
            misses += 1
        state[0] = f
        if entering < 0:
            return DONE, it
        i = entering
        if x[i] == 0:
            p = S[i]
            q = T[i]
        else:
            p = T[i]
            q = S[i]
        # cycle apex -> ... -> p -> q -> ... -> apex, flow pushed in that direction
        w = _find_apex(tree, p, q)
        k = 0
        v = p
        while v != w:
            k += 1
            v = tree[PARENT, v]
        length = k
        v = p
        for j in range(k - 1, -1, -1):
            cyc_e[j] = tree[EDGE, v]
            v = tree[PARENT, v]
            cyc_n[j] = v
        pos_i = length
        cyc_e[length] = i
        cyc_n[length] = p
        length += 1
        v = q
        while v != w:
            cyc_e[length] = tree[EDGE, v]
            cyc_n[length] = v
            length += 1
            v = tree[PARENT, v]
        # leaving arc: last arc of minimum residual capacity along the orientation
        pos_j = -1
        delta = np.int64(0)
        for j in range(length):
            e = cyc_e[j]
            r = U[e] - x[e] if S[e] == cyc_n[j] else x[e]
            if pos_j < 0 or r <= delta:
                delta = r
                pos_j = j
        for j in range(length):
            e = cyc_e[j]
            if S[e] == cyc_n[j]:
                x[e] += delta
            else:
                x[e] -= delta
        jarc = cyc_e[pos_j]
        if jarc != i:
            s = cyc_n[pos_j]
            t = T[jarc] if S[jarc] == s else S[jarc]
            if tree[PARENT, t] != s:
                s, t = t, s
            if pos_i > pos_j:
                p, q = q, p
            _remove_edge(tree, s, t)
            _make_root(tree, q, ancestors)
            _add_edge(tree, i, p, q)
            if q == T[i]:
                d = C[i] + pi[p] - pi[q]
            else:
                d = pi[p] - C[i] - pi[q]
            v = q
            last = tree[LAST, q]
            while True:
                pi[v] += d
                if v == last:
                    break
                v = tree[NXT, v]
        if debug and not _basis_ok(tree, S, U, x, state[2] + 1, in_tree):
            return INVARIANT_BROKEN, it
    return RUNNING, budget


def _initial_basis(instance: MCFInstance):
    n, m = instance.num_vertices, instance.num_arcs
    root = n
    big_m = 1 + n * instance.max_cost
    b = instance.supply
    out = b >= 0
    vs = np.arange(n, dtype=np.int64)
    S = np.concatenate([instance.tail, np.where(out, vs, root)])
    T = np.concatenate([instance.head, np.where(out, root, vs)])
    C = np.concatenate([instance.cost, np.full(n, big_m, np.int64)])
    U = np.concatenate([instance.capacity, np.full(n, ART_CAP, np.int64)])
    x = np.concatenate([np.zeros(m, np.int64), np.abs(b)])
    pi = np.zeros(n + 1, np.int64)
    pi[:n] = np.where(out, -big_m, big_m)
    tree = np.empty((6, n + 1), np.int64)
    tree[PARENT, :n] = root
    tree[PARENT, root] = -1
    tree[EDGE, :n] = m + vs
    tree[EDGE, root] = -1
    tree[SIZE, :n] = 1
    tree[SIZE, root] = n + 1
    # thread root -> 0 -> 1 -> ... -> n-1 -> root
    tree[NXT, :] = np.arange(1, n + 2)
    tree[NXT, n - 1] = root
    tree[NXT, root] = 0
    tree[PRV, :] = np.arange(-1, n)
    tree[PRV, 0] = root
    tree[PRV, root] = n - 1
    tree[LAST, :n] = vs
    tree[LAST, root] = n - 1
    return S, T, C, U, x, pi, tree


def basis_snapshot(S, U, x, tree, num_arcs: int) -> SpanningTreeBasis:
    """Describe the current basis in terms of the instance's own arcs (artificial arcs included as ids >= m)."""
    n1 = tree.shape[1]
    tree_arcs = {int(e) for e in tree[EDGE] if e >= 0}
    lower = {a for a in range(len(S)) if a not in tree_arcs and x[a] == 0}
    upper = {a for a in range(len(S)) if a not in tree_arcs and a not in lower}
    depth = np.zeros(n1, np.int64)
    order = []
    v = int(np.flatnonzero(tree[PARENT] == -1)[0])
    for _ in range(n1):
        order.append(v)
        v = int(tree[NXT, v])
    for v in order[1:]:
        depth[v] = depth[tree[PARENT, v]] + 1
    return SpanningTreeBasis(tree_arcs, lower, upper, tree[PARENT].copy(), depth, np.array(order))


def solve_ns(instance: MCFInstance, options: SolverOptions = DEFAULT_OPTIONS, on_pivot=None) -> SolveResult:
    """Network simplex with block pricing and an artificial big-M starting basis.

    Infeasible iff an artificial arc still carries flow at termination.
    """
    check_bounds(instance)
    if not instance.is_balanced:
        return SolveResult(Status.INFEASIBLE, None, None, 0)
    n, m = instance.num_vertices, instance.num_arcs
    S, T, C, U, x, pi, tree = _initial_basis(instance)
    na = len(S)
    state = np.array([0, math.isqrt(na - 1) + 1 if na > 1 else 1, n], dtype=np.int64)
    cyc_e = np.empty(n + 2, np.int64)
    cyc_n = np.empty(n + 2, np.int64)
    ancestors = np.empty(n + 1, np.int64)
    in_tree = np.empty(na, np.bool_)
    if on_pivot is None:
        step = lambda b: _pivot_step(S, T, C, U, x, pi, tree, state, cyc_e, cyc_n, ancestors, in_tree, options.debug, b)
    else:
        def step(b):
            code, done = _pivot_step(S, T, C, U, x, pi, tree, state, cyc_e, cyc_n, ancestors, in_tree, options.debug, 1)
            if done:
                on_pivot(basis_snapshot(S, U, x, tree, m))
            return code, done
    _, used = drive(step, options)
    if np.any(x[m:] > 0):
        return SolveResult(Status.INFEASIBLE, None, None, used)
    flow = x[:m].copy()
    return SolveResult(Status.OPTIMAL, flow, int(np.dot(instance.cost, flow)), used)
