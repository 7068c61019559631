"""Primal cycle-canceling solvers: simple (SCC), minimum mean (MMCC), cancel-and-tighten (CAT).

All three start from a feasible flow found by max flow and cancel negative
residual cycles until none is left.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from ..graph import MCFInstance
from . import _kernels as K
from .base import (
    DEFAULT_OPTIONS,
    DONE,
    RUNNING,
    SolveResult,
    SolverOptions,
    Status,
    check_bounds,
    drive,
    flow_from_rcap,
    initial_rcap,
    paired_arcs,
)
from .subroutines import max_flow_feasibility


@njit(cache=True)
def _scc_step(n, rtail, rhead, rcost, rcap, dist, pred, mark, budget):
    for it in range(budget):
        cyc = K.bellman_ford_cycle(n, rtail, rhead, rcost, rcap, dist, pred, mark)
        if cyc.shape[0] == 0:
            return DONE, it
        K.augment_paired(cyc, rcap, K.cycle_delta(cyc, rcap))
    return RUNNING, budget


@njit(cache=True)
def _mmcc_step(n, rtail, rhead, rcost, rcap, D, P, budget):
    for it in range(budget):
        cyc, num, den = K.karp_min_mean_cycle(n, rtail, rhead, rcost, rcap, D, P)
        if cyc.shape[0] == 0 or num >= 0:
            return DONE, it
        K.augment_paired(cyc, rcap, K.cycle_delta(cyc, rcap))
    return RUNNING, budget


@njit(cache=True)
def _cancel_admissible(n, start, adj, rtail, rhead, rcost, rcap, pot, scale, state, cur, stack, parent):
    """Cancel every cycle of arcs with ``scale*c + pot[t] - pot[h] < 0`` by depth-first search."""
    for v in range(n):
        state[v] = 0
        cur[v] = start[v]
    cancelled = 0
    for root in range(n):
        if state[root] != 0:
            continue
        top = 0
        stack[0] = root
        top = 1
        state[root] = 1
        while top > 0:
            v = stack[top - 1]
            found = -1
            while cur[v] < start[v + 1]:
                e = adj[cur[v]]
                w = rhead[e]
                if rcap[e] > 0 and state[w] != 2 and scale * rcost[e] + pot[v] - pot[w] < 0:
                    found = e
                    break
                cur[v] += 1
            if found < 0:
                state[v] = 2
                top -= 1
                continue
            w = rhead[found]
            if state[w] == 0:
                parent[w] = found
                state[w] = 1
                stack[top] = w
                top += 1
                continue
            # cycle w -> ... -> v -> w closed by ``found``
            length = 1
            x = v
            while x != w:
                length += 1
                x = rtail[parent[x]]
            cyc = np.empty(length, dtype=np.int64)
            cyc[length - 1] = found
            x = v
            for i in range(length - 2, -1, -1):
                cyc[i] = parent[x]
                x = rtail[parent[x]]
            d = K.cycle_delta(cyc, rcap)
            K.augment_paired(cyc, rcap, d)
            cancelled += 1
            # retreat to the tail of the first saturated arc on the cycle
            cut = -1
            for i in range(length):
                if rcap[cyc[i]] == 0:
                    cut = rtail[cyc[i]]
                    break
            while stack[top - 1] != cut:
                state[stack[top - 1]] = 0
                top -= 1
    return cancelled


@njit(cache=True)
def _cat_step(n, start, adj, rtail, rhead, rcost, rcap, pot, scal, D, P, work, budget):
    """One pass = cancel step on the admissible graph, then tighten.

    Potentials are ``pot / scal[0]``; tightening sets them to shortest distances
    under lengths ``c + eps`` with ``eps = -(min mean)``, scaled to integers by
    the mean's denominator.
    """
    state = work[0]
    cur = work[1]
    stack = work[2]
    parent = work[3]
    dist = work[4]
    for it in range(budget):
        _cancel_admissible(n, start, adj, rtail, rhead, rcost, rcap, pot, scal[0], state, cur, stack, parent)
        cyc, num, den = K.karp_min_mean_cycle(n, rtail, rhead, rcost, rcap, D, P)
        if cyc.shape[0] == 0 or num >= 0:
            return DONE, it + 1
        # lengths den*c + (-num) are free of negative cycles
        scaled = rcost * den
        if not K.bellman_ford_distances(n, rtail, rhead, scaled, rcap, -num, dist):
            raise RuntimeError("tighten step met a negative cycle")
        for v in range(n):
            pot[v] = dist[v]
        scal[0] = den
    return RUNNING, budget


def _start(instance: MCFInstance):
    check_bounds(instance)
    flow = max_flow_feasibility(instance)
    if flow is None:
        return None
    return initial_rcap(instance, flow)


def _finish(instance, rcap, iterations) -> SolveResult:
    x = flow_from_rcap(rcap)
    cost = int(np.dot(instance.cost, x))
    return SolveResult(Status.OPTIMAL, x, cost, iterations)


def solve_scc(instance: MCFInstance, options: SolverOptions = DEFAULT_OPTIONS) -> SolveResult:
    """Klein's cycle canceling with Bellman-Ford cycle detection."""
    rcap = _start(instance)
    if rcap is None:
        return SolveResult(Status.INFEASIBLE, None, None, 0)
    n = instance.num_vertices
    rtail, rhead, rcost, _, _ = paired_arcs(instance)
    dist = np.empty(n, dtype=np.int64)
    pred = np.empty(n, dtype=np.int64)
    mark = np.empty(n, dtype=np.int64)
    _, used = drive(lambda b: _scc_step(n, rtail, rhead, rcost, rcap, dist, pred, mark, b), options)
    return _finish(instance, rcap, used)


def solve_mmcc(instance: MCFInstance, options: SolverOptions = DEFAULT_OPTIONS) -> SolveResult:
    """Goldberg-Tarjan minimum mean cycle canceling (cycles from Karp's recurrence)."""
    rcap = _start(instance)
    if rcap is None:
        return SolveResult(Status.INFEASIBLE, None, None, 0)
    n = instance.num_vertices
    rtail, rhead, rcost, _, _ = paired_arcs(instance)
    D = np.empty((n + 1, n), dtype=np.int64)
    P = np.empty((n + 1, n), dtype=np.int64)
    _, used = drive(lambda b: _mmcc_step(n, rtail, rhead, rcost, rcap, D, P, b), options)
    return _finish(instance, rcap, used)


def solve_cat(instance: MCFInstance, options: SolverOptions = DEFAULT_OPTIONS) -> SolveResult:
    """Goldberg-Tarjan cancel-and-tighten."""
    rcap = _start(instance)
    if rcap is None:
        return SolveResult(Status.INFEASIBLE, None, None, 0)
    n = instance.num_vertices
    rtail, rhead, rcost, start, adj = paired_arcs(instance)
    pot = np.zeros(n, dtype=np.int64)
    scal = np.ones(1, dtype=np.int64)
    D = np.empty((n + 1, n), dtype=np.int64)
    P = np.empty((n + 1, n), dtype=np.int64)
    work = np.empty((5, n), dtype=np.int64)
    _, used = drive(lambda b: _cat_step(n, start, adj, rtail, rhead, rcost, rcap, pot, scal, D, P, work, b), options)
    return _finish(instance, rcap, used)
