"""Successive shortest path (SSP) and capacity scaling (CAS).

Both start from the zero pseudoflow with zero potentials, which is optimal for
non-negative costs, and keep every residual reduced cost non-negative while
shipping excess to deficits along Dijkstra paths. Potentials follow the
``c + pi[tail] - pi[head]`` convention, so they *increase* by the distances.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from ..graph import MCFInstance
from . import _kernels as K
from .base import (
    DEFAULT_OPTIONS,
    DONE,
    INFEASIBLE,
    INVARIANT_BROKEN,
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


@njit(cache=True)
def _reduced_costs_ok(rtail, rhead, rcost, rcap, pot, min_cap):
    for e in range(rtail.shape[0]):
        if rcap[e] >= min_cap and rcost[e] + pot[rtail[e]] - pot[rhead[e]] < 0:
            return False
    return True


@njit(cache=True)
def _augment_path(n, rtail, rhead, rcost, rcap, pot, excess, dist, pred, settled, s, t, amount):
    """Update potentials after an early-stopped Dijkstra and ship ``amount`` (or the bottleneck if -1)."""
    dt = dist[t]
    for v in range(n):
        if settled[v]:
            pot[v] += dist[v]
        else:
            pot[v] += dt
    if amount < 0:
        amount = min(excess[s], -excess[t])
        v = t
        while v != s:
            e = pred[v]
            if rcap[e] < amount:
                amount = rcap[e]
            v = rtail[e]
    v = t
    while v != s:
        e = pred[v]
        rcap[e] -= amount
        rcap[e ^ 1] += amount
        v = rtail[e]
    excess[s] -= amount
    excess[t] += amount


@njit(cache=True)
def _ssp_step(n, start, adj, rtail, rhead, rcost, rcap, pot, excess, work, hk, hv, settled, debug, budget):
    dist = work[0]
    pred = work[1]
    for it in range(budget):
        s = -1
        for v in range(n):
            if excess[v] > 0:
                s = v
                break
        if s < 0:
            return DONE, it
        if debug and not _reduced_costs_ok(rtail, rhead, rcost, rcap, pot, 1):
            return INVARIANT_BROKEN, it
        t = K.dijkstra(n, start, adj, rhead, rcost, rcap, 1, pot, s, excess, 1, dist, pred, settled, hk, hv)
        if t == -2:
            return INVARIANT_BROKEN, it
        if t < 0:
            return INFEASIBLE, it
        _augment_path(n, rtail, rhead, rcost, rcap, pot, excess, dist, pred, settled, s, t, -1)
    return RUNNING, budget


@njit(cache=True)
def _cas_step(n, start, adj, rtail, rhead, rcost, rcap, pot, excess, state, skip, work, hk, hv, settled, debug, budget):
    """``state = [delta, phase_needs_init]``; a pass is one augmentation or phase change."""
    dist = work[0]
    pred = work[1]
    for it in range(budget):
        delta = state[0]
        if state[1] == 1:
            # arcs entering the delta-residual network may violate optimality; saturate them
            for e in range(rtail.shape[0]):
                r = rcap[e]
                if r >= delta and rcost[e] + pot[rtail[e]] - pot[rhead[e]] < 0:
                    rcap[e] = 0
                    rcap[e ^ 1] += r
                    excess[rtail[e]] -= r
                    excess[rhead[e]] += r
            for v in range(n):
                skip[v] = 0
            state[1] = 0
        s = -1
        has_deficit = False
        for v in range(n):
            if excess[v] <= -delta:
                has_deficit = True
            if s < 0 and excess[v] >= delta and skip[v] == 0:
                s = v
        if s < 0 or not has_deficit:
            if delta == 1:
                for v in range(n):
                    if excess[v] != 0:
                        return INFEASIBLE, it
                return DONE, it
            state[0] = delta // 2
            state[1] = 1
            continue
        if debug and not _reduced_costs_ok(rtail, rhead, rcost, rcap, pot, delta):
            return INVARIANT_BROKEN, it
        t = K.dijkstra(n, start, adj, rhead, rcost, rcap, delta, pot, s, excess, delta, dist, pred, settled, hk, hv)
        if t == -2:
            return INVARIANT_BROKEN, it
        if t < 0:
            if delta == 1:
                return INFEASIBLE, it
            skip[s] = 1
            continue
        _augment_path(n, rtail, rhead, rcost, rcap, pot, excess, dist, pred, settled, s, t, delta)
    return RUNNING, budget


def _setup(instance: MCFInstance):
    check_bounds(instance)
    n = instance.num_vertices
    rtail, rhead, rcost, start, adj = paired_arcs(instance)
    size = len(rtail) + n + 1
    return (
        n, start, adj, rtail, rhead, rcost, initial_rcap(instance),
        np.zeros(n, np.int64), instance.supply.copy(),
        np.empty((2, n), np.int64), np.empty(size, np.int64), np.empty(size, np.int64), np.empty(n, np.bool_),
    )


def _result(instance, code, rcap, used) -> SolveResult:
    if code == INFEASIBLE:
        return SolveResult(Status.INFEASIBLE, None, None, used)
    x = flow_from_rcap(rcap)
    return SolveResult(Status.OPTIMAL, x, int(np.dot(instance.cost, x)), used)


def solve_ssp(instance: MCFInstance, options: SolverOptions = DEFAULT_OPTIONS) -> SolveResult:
    """Successive shortest paths: always serve the lowest-index excess vertex first."""
    if not instance.is_balanced:
        return SolveResult(Status.INFEASIBLE, None, None, 0)
    n, start, adj, rtail, rhead, rcost, rcap, pot, excess, work, hk, hv, settled = _setup(instance)
    code, used = drive(
        lambda b: _ssp_step(n, start, adj, rtail, rhead, rcost, rcap, pot, excess, work, hk, hv, settled, options.debug, b),
        options,
    )
    return _result(instance, code, rcap, used)


def solve_cas(instance: MCFInstance, options: SolverOptions = DEFAULT_OPTIONS) -> SolveResult:
    """Edmonds-Karp capacity scaling: ship ``delta`` units per path, halving ``delta`` per phase."""
    if not instance.is_balanced:
        return SolveResult(Status.INFEASIBLE, None, None, 0)
    n, start, adj, rtail, rhead, rcost, rcap, pot, excess, work, hk, hv, settled = _setup(instance)
    top = int(excess.max(initial=0))
    if top <= 0:
        return _result(instance, DONE, rcap, 0)
    delta = 1 << (top.bit_length() - 1)
    state = np.array([delta, 0], dtype=np.int64)
    skip = np.zeros(n, np.int64)
    code, used = drive(
        lambda b: _cas_step(
            n, start, adj, rtail, rhead, rcost, rcap, pot, excess, state, skip, work, hk, hv, settled, options.debug, b
        ),
        options,
    )
    return _result(instance, code, rcap, used)
