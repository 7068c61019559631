"""The 21 per-instance features used by the selector."""
from __future__ import annotations

import csv
import io
import typing
from collections import deque
from typing import IO, Iterable, NamedTuple, Optional

import numpy as np

from .graph import MCFInstance


class FeatureVector(NamedTuple):
    num_vertices: int
    num_arcs: int
    cost_max: int
    cost_min: int
    cost_mean_norm: float
    cost_sum: int
    cost_std_norm: float
    cap_max: int
    cap_min: int
    cap_mean_norm: float
    cap_sum: int
    cap_std_norm: float
    total_supply: int
    num_supply_demand_vertices: int
    source_sink_distance: int
    mst_cost_mean_norm: float
    mst_cost_sum: int
    mst_cost_std_norm: float
    mst_cap_mean_norm: float
    mst_cap_sum: int
    mst_cap_std_norm: float


FEATURE_NAMES = list(FeatureVector._fields)
NUM_FEATURES = len(FEATURE_NAMES)
INTEGER_FEATURES = [i for i, name in enumerate(FEATURE_NAMES) if typing.get_type_hints(FeatureVector)[name] is int]


class MSTFeatures(NamedTuple):
    mst_cost_mean_norm: float
    mst_cost_sum: int
    mst_cost_std_norm: float
    mst_cap_mean_norm: float
    mst_cap_sum: int
    mst_cap_std_norm: float
    num_components: int

    @property
    def spanning_forest(self) -> bool:
        return self.num_components > 1


def _norm(x: float, top: int) -> float:
    return x / top if top > 0 else 0.0


def _stats(values: np.ndarray, top: int):
    """(mean/top, sum, population std/top); empty input gives zeros."""
    if len(values) == 0:
        return 0.0, 0, 0.0
    total = int(values.sum())
    mean = total / len(values)
    std = float(np.sqrt(np.mean((values - mean) ** 2)))
    return _norm(mean, top), total, _norm(std, top)


def source_sink_distance(instance: MCFInstance) -> int:
    """BFS hop count from the lowest-index source to the lowest-index sink; ``n`` if unreachable."""
    b = instance.supply
    src = np.flatnonzero(b > 0)
    dst = np.flatnonzero(b < 0)
    if len(src) == 0 or len(dst) == 0:
        raise ValueError("instance needs a source and a sink")
    s, t = int(src[0]), int(dst[0])
    n = instance.num_vertices
    order = np.argsort(instance.tail, kind="stable")
    start = np.searchsorted(instance.tail[order], np.arange(n + 1))
    heads = instance.head[order]
    dist = np.full(n, -1, dtype=np.int64)
    dist[s] = 0
    queue = deque([s])
    while queue:
        u = queue.popleft()
        if u == t:
            return int(dist[u])
        for w in heads[start[u] : start[u + 1]]:
            if dist[w] < 0:
                dist[w] = dist[u] + 1
                queue.append(int(w))
    return n


def support_edges(instance: MCFInstance):
    """Undirected support graph: one edge per endpoint pair, keeping the cheapest arc (lowest index on ties).

    Returns ``(u, v, cost, capacity)`` arrays with ``u < v``; self-loops are dropped.
    """
    t, h = instance.tail, instance.head
    keep = t != h
    idx = np.flatnonzero(keep)
    u = np.minimum(t[idx], h[idx])
    v = np.maximum(t[idx], h[idx])
    c = instance.cost[idx]
    order = np.lexsort((idx, c, v, u))
    u, v, c, idx = u[order], v[order], c[order], idx[order]
    first = np.ones(len(u), dtype=bool)
    first[1:] = (u[1:] != u[:-1]) | (v[1:] != v[:-1])
    sel = idx[first]
    return u[first], v[first], instance.cost[sel], instance.capacity[sel]


def _kruskal(n: int, u, v, c):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    chosen = []
    comps = n
    # stable sort by cost keeps the (u, v) order among equal weights
    for e in np.argsort(c, kind="stable"):
        a, b = find(int(u[e])), find(int(v[e]))
        if a != b:
            parent[a] = b
            chosen.append(e)
            comps -= 1
            if comps == 1:
                break
    return np.array(chosen, dtype=np.int64), comps


def mst_features(instance: MCFInstance) -> MSTFeatures:
    """Statistics of a cost-minimal spanning tree (forest if disconnected) of the support graph."""
    u, v, c, cap = support_edges(instance)
    chosen, comps = _kruskal(instance.num_vertices, u, v, c)
    cm, cs, csd = _stats(c[chosen], instance.max_cost)
    um, us, usd = _stats(cap[chosen], instance.max_capacity)
    return MSTFeatures(cm, cs, csd, um, us, usd, comps)


def extract_features(instance: MCFInstance) -> FeatureVector:
    if instance.num_arcs == 0:
        raise ValueError("feature extraction needs at least one arc")
    c = instance.cost
    u = instance.capacity
    cmax, umax = int(c.max()), int(u.max())
    cm, cs, csd = _stats(c, cmax)
    um, us, usd = _stats(u, umax)
    mst = mst_features(instance)
    return FeatureVector(
        instance.num_vertices,
        instance.num_arcs,
        cmax,
        int(c.min()),
        cm,
        cs,
        csd,
        umax,
        int(u.min()),
        um,
        us,
        usd,
        instance.total_supply,
        int(np.count_nonzero(instance.supply)),
        source_sink_distance(instance),
        *mst[:6],
    )


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.12g" % value


def write_feature_table(rows: Iterable[tuple[str, FeatureVector]], out: Optional[IO[str]] = None) -> str:
    """CSV with an ``instance_id`` column and the 21 named features; returns the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["instance_id", *FEATURE_NAMES])
    for iid, fv in rows:
        w.writerow([iid, *(_fmt(x) for x in fv)])
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text


def read_feature_table(source) -> list[tuple[str, FeatureVector]]:
    text = source if isinstance(source, str) else source.read()
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != ["instance_id", *FEATURE_NAMES]:
        raise ValueError("unexpected feature table header")
    rows = []
    for rec in reader:
        vals = [int(x) if i in INTEGER_FEATURES else float(x) for i, x in enumerate(rec[1:])]
        rows.append((rec[0], FeatureVector(*vals)))
    return rows


def feature_matrix(vectors: Iterable[FeatureVector]) -> np.ndarray:
    return np.array([list(v) for v in vectors], dtype=np.float64).reshape(-1, NUM_FEATURES)
