"""Public entry points for the building blocks the solvers share."""
from __future__ import annotations

from fractions import Fraction
from typing import Optional

import numpy as np

from ..graph import MCFInstance, ResidualNetwork, check_capacities, residual_network, validate_flow
from . import _kernels as K
from .base import csr


def _arrays(network: ResidualNetwork):
    return network.tail, network.head, network.cost, network.capacity


def bellman_ford_negative_cycle(network: ResidualNetwork) -> Optional[list[int]]:
    """Indices (into ``network``) of a negative cycle in traversal order, or None."""
    n = network.num_vertices
    tail, head, cost, cap = _arrays(network)
    cyc = K.bellman_ford_cycle(
        n, tail, head, cost, cap, np.empty(n, np.int64), np.empty(n, np.int64), np.empty(n, np.int64)
    )
    return [int(e) for e in cyc] if len(cyc) else None


def min_mean_cycle(network: ResidualNetwork) -> Optional[tuple[list[int], Fraction]]:
    """A cycle of minimum mean cost with that mean, or None for an acyclic network."""
    n = network.num_vertices
    tail, head, cost, cap = _arrays(network)
    D = np.empty((n + 1, n), dtype=np.int64)
    P = np.empty((n + 1, n), dtype=np.int64)
    cyc, num, den = K.karp_min_mean_cycle(n, tail, head, cost, cap, D, P)
    if len(cyc) == 0:
        return None
    return [int(e) for e in cyc], Fraction(int(num), int(den))


def dijkstra_with_potentials(network: ResidualNetwork, potentials, source: int):
    """Shortest reduced-cost distances from ``source``.

    Returns ``(dist, pred)``: ``dist`` is a float array with ``inf`` for
    unreachable vertices and ``pred[v]`` the network index of the last arc on
    the path to ``v`` (-1 for none). Raises ValueError on a negative reduced cost.
    """
    n = network.num_vertices
    if not 0 <= source < n:
        raise IndexError(f"source {source} out of range")
    tail, head, cost, cap = _arrays(network)
    start, adj = csr(n, tail)
    pot = np.asarray(potentials, dtype=np.int64)
    dist = np.empty(n, np.int64)
    pred = np.empty(n, np.int64)
    settled = np.empty(n, np.bool_)
    size = len(tail) + n + 1
    # nothing has negative excess, so the search settles everything reachable
    code = K.dijkstra(
        n, start, adj, head, cost, cap, 1, pot, source, np.zeros(n, np.int64), 1,
        dist, pred, settled, np.empty(size, np.int64), np.empty(size, np.int64),
    )
    if code == -2:
        raise ValueError("negative reduced cost in Dijkstra input")
    out = np.where(settled, dist.astype(float), np.inf)
    return out, np.where(settled, pred, -1)


def max_flow(num_vertices: int, tail, head, capacity, source: int, sink: int) -> tuple[int, np.ndarray]:
    """Maximum ``source``-``sink`` flow value and arc flows (Dinic)."""
    tail = np.asarray(tail, np.int64)
    head = np.asarray(head, np.int64)
    m = len(tail)
    rtail = np.empty(2 * m, np.int64)
    rhead = np.empty(2 * m, np.int64)
    rtail[0::2], rtail[1::2] = tail, head
    rhead[0::2], rhead[1::2] = head, tail
    rcap = np.zeros(2 * m, np.int64)
    rcap[0::2] = capacity
    start, adj = csr(num_vertices, rtail)
    value = K.dinic(num_vertices, rtail, rhead, rcap, start, adj, source, sink)
    return int(value), rcap[1::2].copy()


def max_flow_feasibility(instance: MCFInstance) -> Optional[np.ndarray]:
    """A flow meeting all supplies and capacities, or None if none exists.

    Uses a super source feeding every supply vertex and a super sink draining
    every demand vertex.
    """
    if not instance.is_balanced:
        return None
    n = instance.num_vertices
    b = instance.supply
    src = np.flatnonzero(b > 0)
    dst = np.flatnonzero(b < 0)
    s, t = n, n + 1
    tail = np.concatenate([instance.tail, np.full(len(src), s), dst])
    head = np.concatenate([instance.head, src, np.full(len(dst), t)])
    cap = np.concatenate([instance.capacity, b[src], -b[dst]])
    value, flow = max_flow(n + 2, tail, head, cap, s, t)
    if value != instance.total_supply:
        return None
    return flow[: instance.num_arcs]


def certify_optimal(instance: MCFInstance, flow) -> bool:
    """True iff the feasible ``flow`` leaves no negative cycle in its residual network."""
    check_capacities(instance, flow)
    if not validate_flow(instance, flow).is_feasible_flow:
        raise ValueError("certify_optimal needs a feasible flow")
    return bellman_ford_negative_cycle(residual_network(instance, flow)) is None
