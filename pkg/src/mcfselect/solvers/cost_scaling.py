"""Goldberg's cost scaling push-relabel (CS2).

Costs are multiplied by ``n + 1`` so that prices and epsilon stay integral:
an epsilon of 1 in scaled units is ``1/(n+1) < 1/n`` in original units, which
certifies optimality. Each phase divides epsilon by ``ALPHA`` and runs
``refine``: saturate every arc with negative reduced cost, then discharge the
active vertices in FIFO order.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np
from numba import njit

from ..graph import MCFInstance, check_epsilon_optimality
from .base import (
    CHECKPOINT,
    DEFAULT_OPTIONS,
    DONE,
    INFEASIBLE,
    InvariantViolation,
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

ALPHA = 8

# slots of the integer state vector
EPS, EPS_PREV, PHASE_OVER, STARTED, QHEAD, QTAIL = range(6)


@njit(cache=True)
def _start_phase(n, rtail, rhead, cs, rcap, pot, p0, excess, state, queue, queued, cur, start, alpha):
    state[EPS_PREV] = state[EPS]
    e = state[EPS] // alpha
    state[EPS] = e if e > 1 else 1
    for i in range(rtail.shape[0]):
        r = rcap[i]
        if r > 0 and cs[i] + pot[rtail[i]] - pot[rhead[i]] < 0:
            rcap[i] = 0
            rcap[i ^ 1] += r
            excess[rtail[i]] -= r
            excess[rhead[i]] += r
    qt = 0
    for v in range(n):
        p0[v] = pot[v]
        cur[v] = start[v]
        queued[v] = excess[v] > 0
        if queued[v]:
            queue[qt] = v
            qt += 1
    state[QHEAD] = 0
    state[QTAIL] = qt
    state[PHASE_OVER] = 0
    state[STARTED] = 1


@njit(cache=True)
def _cs2_step(n, start, adj, rtail, rhead, cs, rcap, pot, p0, excess, state, queue, queued, cur, alpha, debug, budget):
    """A pass is one discharge, or one phase transition."""
    cap = n + 1
    for it in range(budget):
        if state[PHASE_OVER] == 1:
            if state[STARTED] == 1 and state[EPS] == 1:
                return DONE, it
            _start_phase(n, rtail, rhead, cs, rcap, pot, p0, excess, state, queue, queued, cur, start, alpha)
            continue
        if state[QHEAD] == state[QTAIL]:
            state[PHASE_OVER] = 1
            if debug:
                return CHECKPOINT, it + 1
            continue
        v = queue[state[QHEAD] % cap]
        state[QHEAD] += 1
        queued[v] = False
        eps = state[EPS]
        bound = p0[v] - (n - 1) * (eps + state[EPS_PREV])
        while excess[v] > 0:
            if cur[v] == start[v + 1]:
                # relabel: drop the price as far as epsilon-optimality allows
                best = np.int64(0)
                found = False
                for i in range(start[v], start[v + 1]):
                    e = adj[i]
                    if rcap[e] > 0:
                        cand = pot[rhead[e]] - cs[e] - eps
                        if not found or cand > best:
                            best = cand
                            found = True
                if not found or best < bound:
                    return INFEASIBLE, it + 1
                pot[v] = best
                cur[v] = start[v]
                continue
            e = adj[cur[v]]
            r = rcap[e]
            w = rhead[e]
            if r > 0 and cs[e] + pot[v] - pot[w] < 0:
                d = excess[v] if excess[v] < r else r
                rcap[e] -= d
                rcap[e ^ 1] += d
                excess[v] -= d
                had = excess[w]
                excess[w] += d
                if had <= 0 < excess[w] and not queued[w]:
                    queue[state[QTAIL] % cap] = w
                    state[QTAIL] += 1
                    queued[w] = True
                if rcap[e] == 0:
                    cur[v] += 1
            else:
                cur[v] += 1
    return RUNNING, budget


def solve_cs2(instance: MCFInstance, options: SolverOptions = DEFAULT_OPTIONS) -> SolveResult:
    """Cost scaling push-relabel with ``alpha = 8`` and FIFO active-vertex selection.

    A vertex whose price would fall below the bound that any feasible
    instance guarantees (or that has no residual arc to push along) proves
    infeasibility.
    """
    n = instance.num_vertices
    check_bounds(instance, factor=4 * (n + 1))
    if not instance.is_balanced:
        return SolveResult(Status.INFEASIBLE, None, None, 0)
    rtail, rhead, rcost, start, adj = paired_arcs(instance)
    cs = rcost * (n + 1)
    rcap = initial_rcap(instance)
    pot = np.zeros(n, np.int64)
    p0 = np.zeros(n, np.int64)
    excess = instance.supply.copy()
    top = instance.max_cost * (n + 1)
    state = np.zeros(6, np.int64)
    # the zero price vector makes any flow top-optimal, the stand-in for a previous phase
    state[EPS] = top
    state[PHASE_OVER] = 1
    queue = np.empty(n + 1, np.int64)
    queued = np.zeros(n, np.bool_)
    cur = np.empty(n, np.int64)

    def check_phase():
        x = flow_from_rcap(rcap)
        pots = [Fraction(int(p), n + 1) for p in pot]
        if not check_epsilon_optimality(instance, x, pots, Fraction(int(state[EPS]), n + 1)):
            raise InvariantViolation("flow is not epsilon-optimal at the end of a phase")

    code, used = drive(
        lambda b: _cs2_step(
            n, start, adj, rtail, rhead, cs, rcap, pot, p0, excess, state, queue, queued, cur, ALPHA, options.debug, b
        ),
        options,
        on_checkpoint=check_phase,
    )
    if code == INFEASIBLE:
        return SolveResult(Status.INFEASIBLE, None, None, used)
    x = flow_from_rcap(rcap)
    return SolveResult(Status.OPTIMAL, x, int(np.dot(instance.cost, x)), used)
