"""Minimum cost flow instances, flows, residual networks and optimality checks.

Vertices are 0-based everywhere in the Python API. The DIMACS codec in
:mod:`mcfselect.dimacs` is the only place where 1-based ids appear.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

INT64_MAX = 2**63 - 1


def _frozen_int_array(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.int64).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MCFInstance:
    """Directed network with integer arc costs, capacities and vertex supplies.

    ``supply[v] > 0`` marks a source and ``supply[v] < 0`` a sink. Arrays are
    aligned with the arc order and are read-only after construction.
    """

    num_vertices: int
    tail: np.ndarray
    head: np.ndarray
    cost: np.ndarray
    capacity: np.ndarray
    supply: np.ndarray

    def __post_init__(self):
        n = int(self.num_vertices)
        if n < 1:
            raise ValueError("an instance needs at least one vertex")
        object.__setattr__(self, "num_vertices", n)
        for name in ("tail", "head", "cost", "capacity", "supply"):
            object.__setattr__(self, name, _frozen_int_array(getattr(self, name), name))
        m = len(self.tail)
        if not (len(self.head) == len(self.cost) == len(self.capacity) == m):
            raise ValueError("arc arrays must have equal length")
        if len(self.supply) != n:
            raise ValueError(f"expected {n} supplies, got {len(self.supply)}")
        if m:
            if self.tail.min() < 0 or self.tail.max() >= n or self.head.min() < 0 or self.head.max() >= n:
                raise ValueError("arc endpoint out of range")
            if self.cost.min() < 0:
                raise ValueError("arc costs must be non-negative")
            if self.capacity.min() < 0:
                raise ValueError("arc capacities must be non-negative")
        # objective and potential computations stay inside int64
        bound = n * (self.max_cost + 1) * (self.max_capacity + 1)
        if bound > INT64_MAX:
            raise OverflowError("n * max_cost * max_capacity exceeds the 64-bit range")

    @classmethod
    def from_arcs(cls, num_vertices: int, arcs: Iterable[Sequence[int]], supply: Sequence[int]) -> "MCFInstance":
        """Build an instance from ``(tail, head, cost, capacity)`` tuples."""
        arcs = [tuple(int(v) for v in a) for a in arcs]
        if any(len(a) != 4 for a in arcs):
            raise ValueError("arcs are (tail, head, cost, capacity) tuples")
        cols = list(zip(*arcs)) if arcs else [(), (), (), ()]
        return cls(num_vertices, cols[0], cols[1], cols[2], cols[3], supply)

    @property
    def num_arcs(self) -> int:
        return len(self.tail)

    @property
    def max_cost(self) -> int:
        return int(self.cost.max()) if self.num_arcs else 0

    @property
    def max_capacity(self) -> int:
        return int(self.capacity.max()) if self.num_arcs else 0

    @property
    def is_balanced(self) -> bool:
        """Total supply equals total demand, a necessary condition for feasibility."""
        return int(self.supply.sum()) == 0

    @property
    def total_supply(self) -> int:
        return int(self.supply[self.supply > 0].sum())

    def arcs(self) -> list[tuple[int, int, int, int]]:
        return [tuple(int(v) for v in row) for row in zip(self.tail, self.head, self.cost, self.capacity)]

    def __eq__(self, other):
        if not isinstance(other, MCFInstance):
            return NotImplemented
        return (
            self.num_vertices == other.num_vertices
            and np.array_equal(self.tail, other.tail)
            and np.array_equal(self.head, other.head)
            and np.array_equal(self.cost, other.cost)
            and np.array_equal(self.capacity, other.capacity)
            and np.array_equal(self.supply, other.supply)
        )

    def __repr__(self):
        return f"MCFInstance(n={self.num_vertices}, m={self.num_arcs}, total_supply={self.total_supply})"


def _as_flow(instance: MCFInstance, flow) -> np.ndarray:
    x = np.asarray(flow, dtype=np.int64).reshape(-1)
    if len(x) != instance.num_arcs:
        raise ValueError(f"flow has {len(x)} entries for {instance.num_arcs} arcs")
    return x


def excesses(instance: MCFInstance, flow) -> np.ndarray:
    """Excess ``b_v + inflow - outflow`` of every vertex."""
    x = _as_flow(instance, flow)
    e = instance.supply.copy()
    np.add.at(e, instance.head, x)
    np.subtract.at(e, instance.tail, x)
    return e


def excess(instance: MCFInstance, flow, v: int) -> int:
    if not 0 <= v < instance.num_vertices:
        raise IndexError(f"vertex {v} out of range")
    return int(excesses(instance, flow)[v])


def flow_cost(instance: MCFInstance, flow) -> int:
    x = _as_flow(instance, flow)
    # Python ints: exact regardless of magnitude
    return sum(int(c) * int(f) for c, f in zip(instance.cost, x) if f)


@dataclass(frozen=True)
class ResidualNetwork:
    """Arc list of a residual network.

    Every entry is a residual arc with strictly positive ``capacity``. ``arc``
    names the originating instance arc and ``forward`` tells whether the entry
    is its forward copy (cost ``c``) or its backward copy (cost ``-c``). Both
    are optional so that arbitrary test networks can be built directly.
    """

    num_vertices: int
    tail: np.ndarray
    head: np.ndarray
    capacity: np.ndarray
    cost: np.ndarray
    arc: np.ndarray = None
    forward: np.ndarray = None

    def __post_init__(self):
        m = len(self.tail)
        for name in ("tail", "head", "capacity", "cost"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int64).reshape(-1))
        if self.arc is None:
            object.__setattr__(self, "arc", np.arange(m, dtype=np.int64))
        if self.forward is None:
            object.__setattr__(self, "forward", np.ones(m, dtype=bool))
        object.__setattr__(self, "arc", np.asarray(self.arc, dtype=np.int64))
        object.__setattr__(self, "forward", np.asarray(self.forward, dtype=bool))
        if m and (self.capacity.min() <= 0):
            raise ValueError("residual arcs must have positive capacity")

    @classmethod
    def from_arcs(cls, num_vertices: int, arcs: Iterable[Sequence[int]]) -> "ResidualNetwork":
        """Build a network from ``(tail, head, cost)`` or ``(tail, head, cost, capacity)`` tuples."""
        rows = [tuple(a) + (1,) * (4 - len(a)) for a in arcs]
        cols = list(zip(*rows)) if rows else [(), (), (), ()]
        return cls(num_vertices, cols[0], cols[1], cols[3], cols[2])

    def __len__(self):
        return len(self.tail)

    def entries(self) -> list[tuple[int, int, int, int, int, bool]]:
        """``(tail, head, capacity, cost, arc, forward)`` for every residual arc."""
        return [
            (int(t), int(h), int(r), int(c), int(a), bool(f))
            for t, h, r, c, a, f in zip(self.tail, self.head, self.capacity, self.cost, self.arc, self.forward)
        ]


def check_capacities(instance: MCFInstance, flow) -> np.ndarray:
    x = _as_flow(instance, flow)
    bad = np.flatnonzero((x < 0) | (x > instance.capacity))
    if len(bad):
        a = int(bad[0])
        raise ValueError(f"flow {int(x[a])} on arc {a} violates capacity {int(instance.capacity[a])}")
    return x


def residual_network(instance: MCFInstance, flow) -> ResidualNetwork:
    x = check_capacities(instance, flow)
    m = instance.num_arcs
    # interleave forward (even) and backward (odd) copies so arc order is stable
    tail = np.empty(2 * m, dtype=np.int64)
    head = np.empty(2 * m, dtype=np.int64)
    cap = np.empty(2 * m, dtype=np.int64)
    cost = np.empty(2 * m, dtype=np.int64)
    tail[0::2], tail[1::2] = instance.tail, instance.head
    head[0::2], head[1::2] = instance.head, instance.tail
    cap[0::2], cap[1::2] = instance.capacity - x, x
    cost[0::2], cost[1::2] = instance.cost, -instance.cost
    arc = np.repeat(np.arange(m, dtype=np.int64), 2)
    forward = np.tile([True, False], m)
    keep = cap > 0
    return ResidualNetwork(instance.num_vertices, tail[keep], head[keep], cap[keep], cost[keep], arc[keep], forward[keep])


@dataclass(frozen=True)
class FeasibilityReport:
    conservation_violations: list = field(default_factory=list)
    capacity_violations: list = field(default_factory=list)

    @property
    def is_feasible_flow(self) -> bool:
        return not self.conservation_violations and not self.capacity_violations


def validate_flow(instance: MCFInstance, flow) -> FeasibilityReport:
    """Report every violated conservation equation and capacity bound.

    Capacity violations carry the amount by which the bound is exceeded
    (``x - u`` above the capacity, ``-x`` below zero).
    """
    x = _as_flow(instance, flow)
    cap_viol = []
    for a in np.flatnonzero((x < 0) | (x > instance.capacity)):
        over = x[a] - instance.capacity[a] if x[a] > instance.capacity[a] else -x[a]
        cap_viol.append((int(a), int(over)))
    e = excesses(instance, x)
    cons_viol = [(int(v), int(e[v])) for v in np.flatnonzero(e)]
    return FeasibilityReport(cons_viol, cap_viol)


def reduced_cost(network: ResidualNetwork, potentials, index: int):
    """``c_ij + pi_i - pi_j`` of residual arc ``index`` (its stored cost is already negated for backward arcs)."""
    t, h = int(network.tail[index]), int(network.head[index])
    return int(network.cost[index]) + potentials[t] - potentials[h]


def check_epsilon_optimality(instance: MCFInstance, flow, potentials, epsilon=0) -> bool:
    """True iff every residual arc has reduced cost at least ``-epsilon``.

    Potentials and epsilon may be integers or rationals; the comparison is exact.
    """
    net = residual_network(instance, flow)
    pots = list(potentials)
    if len(pots) != instance.num_vertices:
        raise ValueError("one potential per vertex required")
    if all(isinstance(p, (int, np.integer)) for p in pots) and isinstance(epsilon, (int, np.integer)):
        pi = np.asarray(pots, dtype=np.int64)
        rc = net.cost + pi[net.tail] - pi[net.head]
        return bool(np.all(rc >= -int(epsilon)))
    eps = Fraction(epsilon) if not isinstance(epsilon, Rational) else epsilon
    pots = [Fraction(p) if not isinstance(p, Rational) else p for p in pots]
    for t, h, c in zip(net.tail, net.head, net.cost):
        if int(c) + pots[t] - pots[h] < -eps:
            return False
    return True
