"""Types shared by the seven solvers and the chunked driver that runs their kernels."""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..graph import MCFInstance

# kernel return codes
RUNNING = 0
DONE = 1
INFEASIBLE = 2
CHECKPOINT = 3
INVARIANT_BROKEN = -1

INF = np.int64(2**62)


class AlgorithmId(enum.IntEnum):
    SCC = 0
    MMCC = 1
    CAT = 2
    SSP = 3
    CAS = 4
    NS = 5
    CS2 = 6

    @classmethod
    def parse(cls, value) -> "AlgorithmId":
        if isinstance(value, cls):
            return value
        if isinstance(value, (int, np.integer)):
            return cls(int(value))
        try:
            return cls[str(value).upper()]
        except KeyError:
            raise ValueError(f"unknown algorithm {value!r}; expected one of {[a.name for a in cls]}") from None


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True, eq=False)
class SolveResult:
    status: Status
    flow: Optional[np.ndarray]
    cost: Optional[int]
    iterations: int

    @property
    def is_optimal(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass(frozen=True)
class SolverOptions:
    """Knobs shared by every solver.

    ``max_iterations`` is the safety valve on main-loop passes; ``time_limit_ns``
    aborts a run cooperatively between kernel chunks; ``debug`` turns on the
    per-algorithm invariant checks.
    """

    max_iterations: int = 10**9
    time_limit_ns: Optional[int] = None
    debug: bool = False


class SolverError(RuntimeError):
    pass


class IterationLimitExceeded(SolverError):
    pass


class SolverTimeout(SolverError):
    pass


class InvariantViolation(SolverError, AssertionError):
    pass


DEFAULT_OPTIONS = SolverOptions()


def drive(step: Callable[[int], tuple], options: SolverOptions, on_checkpoint=None) -> tuple[int, int]:
    """Call ``step(budget)`` until it stops returning RUNNING.

    ``step`` performs at most ``budget`` main-loop passes and returns
    ``(code, passes_done)``. Budgets grow geometrically while calls are cheap so
    that Python overhead stays negligible and deadline checks stay frequent.
    Kernels keep their whole state in arrays, so chunking never changes results.
    """
    deadline = None
    if options.time_limit_ns is not None:
        deadline = time.perf_counter_ns() + options.time_limit_ns
    budget = 1
    used = 0
    while True:
        t0 = time.perf_counter_ns()
        code, done = step(max(1, min(budget, options.max_iterations - used)))
        used += int(done)
        if code == CHECKPOINT:
            if on_checkpoint is not None:
                on_checkpoint()
            continue
        if code == INVARIANT_BROKEN:
            raise InvariantViolation("solver invariant violated")
        if code != RUNNING:
            return code, used
        if used >= options.max_iterations:
            raise IterationLimitExceeded(f"no convergence after {used} iterations")
        now = time.perf_counter_ns()
        if deadline is not None and now > deadline:
            raise SolverTimeout(f"time limit exceeded after {used} iterations")
        if now - t0 < 2_000_000 and budget < 1 << 30:
            budget *= 2


def check_bounds(instance: MCFInstance, factor: int = 1) -> None:
    """Reject instances whose scaled costs or potentials could leave int64."""
    n = instance.num_vertices + 2
    c = instance.max_cost + 1
    u = max(instance.max_capacity, int(np.abs(instance.supply).sum())) + 1
    if factor * n * n * c > 2**62 or n * c * u > 2**62:
        raise OverflowError("instance too large for exact 64-bit arithmetic")


def paired_arcs(instance: MCFInstance):
    """Residual arc arrays with forward copy ``2a`` and backward copy ``2a+1`` of arc ``a``.

    Returns ``(rtail, rhead, rcost, start, adj)``; ``start``/``adj`` is the
    out-adjacency in CSR form, ordered by residual arc id within each vertex.
    """
    m = instance.num_arcs
    rtail = np.empty(2 * m, dtype=np.int64)
    rhead = np.empty(2 * m, dtype=np.int64)
    rcost = np.empty(2 * m, dtype=np.int64)
    rtail[0::2], rtail[1::2] = instance.tail, instance.head
    rhead[0::2], rhead[1::2] = instance.head, instance.tail
    rcost[0::2], rcost[1::2] = instance.cost, -instance.cost
    start, adj = csr(instance.num_vertices, rtail)
    return rtail, rhead, rcost, start, adj


def csr(n: int, tails: np.ndarray):
    adj = np.argsort(tails, kind="stable").astype(np.int64)
    counts = np.bincount(tails, minlength=n) if len(tails) else np.zeros(n, dtype=np.int64)
    start = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=start[1:])
    return start, adj


def initial_rcap(instance: MCFInstance, flow=None) -> np.ndarray:
    m = instance.num_arcs
    x = np.zeros(m, dtype=np.int64) if flow is None else np.asarray(flow, dtype=np.int64)
    rcap = np.empty(2 * m, dtype=np.int64)
    rcap[0::2] = instance.capacity - x
    rcap[1::2] = x
    return rcap


def flow_from_rcap(rcap: np.ndarray) -> np.ndarray:
    return rcap[1::2].copy()
