"""Random instance families: Netgen, Gridgen, Gridgraph and Goto.

These are family-faithful reimplementations, not ports of the original C
programs. Every generator draws from a PCG64 stream seeded by the parameter
set, so an instance is a pure function of its parameters.
"""
from __future__ import annotations

import csv
import dataclasses
import enum
import hashlib
import itertools
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .dimacs import save_dimacs
from .graph import MCFInstance

NODE_COUNTS = (64, 128, 256, 512, 1024)
SUPPLY_FACTORS = (1, 10, 100, 1000)
NETGEN_COSTS = (2, 10, 100, 1000, 10000)
NETGEN_CAPS = (1, 10, 100, 1000, 10000)
GOTO_VALUES = (10, 100, 1000, 10000)
GRID_SIDES = (5, 10, 20, 30, 50, 70, 100)

# instances per family in the full-size corpus
PAPER_INSTANCE_COUNTS = {"Netgen": 18000, "Gridgen": 18000, "Gridgraph": 27000, "Goto": 18000}


class GeneratorId(str, enum.Enum):
    NETGEN = "Netgen"
    GRIDGEN = "Gridgen"
    GRIDGRAPH = "Gridgraph"
    GOTO = "Goto"

    @classmethod
    def parse(cls, value) -> "GeneratorId":
        if isinstance(value, cls):
            return value
        for g in cls:
            if str(value).lower() in (g.value.lower(), g.name.lower()):
                return g
        raise ValueError(f"unknown generator {value!r}")


@dataclass(frozen=True)
class GeneratorParams:
    """One parameter combination. ``grid_width``/``grid_length`` are only used by the grid families."""

    generator: GeneratorId
    num_vertices: int = 0
    num_arcs: int = 0
    total_supply: int = 0
    num_supply_vertices: int = 1
    num_demand_vertices: int = 1
    max_cost: int = 1
    max_capacity: int = 1
    grid_width: int = 0
    grid_length: int = 0
    two_way_arcs: bool = True
    seed: Optional[int] = None

    def with_seed(self, seed: int) -> "GeneratorParams":
        return dataclasses.replace(self, seed=int(seed))

    def key(self) -> str:
        """Stable short hash of every field except the seed."""
        d = self.to_row()
        d.pop("seed")
        text = "|".join(f"{k}={d[k]}" for k in sorted(d))
        return hashlib.sha1(text.encode()).hexdigest()[:12]

    def to_row(self) -> dict:
        d = dataclasses.asdict(self)
        d["generator"] = self.generator.value
        d["two_way_arcs"] = int(self.two_way_arcs)
        d["seed"] = "" if self.seed is None else str(self.seed)
        return d

    @classmethod
    def from_row(cls, row: dict) -> "GeneratorParams":
        kw = {}
        for f in dataclasses.fields(cls):
            v = row[f.name]
            if f.name == "generator":
                kw[f.name] = GeneratorId.parse(v)
            elif f.name == "two_way_arcs":
                kw[f.name] = bool(int(v))
            elif f.name == "seed":
                kw[f.name] = None if v in ("", None) else int(v)
            else:
                kw[f.name] = int(v)
        return cls(**kw)


PARAM_COLUMNS = [f.name for f in dataclasses.fields(GeneratorParams)]


def _r(x: float) -> int:
    return int(round(x))


def parameter_grid(generator) -> list[GeneratorParams]:
    """The full Cartesian parameter grid of a family, seeds unset."""
    g = GeneratorId.parse(generator)
    out = []
    if g in (GeneratorId.NETGEN, GeneratorId.GRIDGEN):
        for n in NODE_COUNTS:
            arcs = (8 * n, _r(n * n**0.25), _r(n * math.sqrt(n)))
            supplies = tuple(_r(f * math.sqrt(n)) for f in SUPPLY_FACTORS)
            sources = (1, _r(n**0.25), _r(math.sqrt(n)))
            for m, s, k, c, u in itertools.product(arcs, supplies, sources, NETGEN_COSTS, NETGEN_CAPS):
                base = GeneratorParams(g, n, m, s, k, k, c, u)
                if g is GeneratorId.NETGEN:
                    out.append(base)
                    continue
                for w in (_r(math.sqrt(n)), _r(math.sqrt(n / 2))):
                    for two_way in (True, False):
                        out.append(dataclasses.replace(base, grid_width=w, two_way_arcs=two_way))
    elif g is GeneratorId.GRIDGRAPH:
        for w, l, c, u in itertools.product(GRID_SIDES, GRID_SIDES, NETGEN_COSTS, NETGEN_CAPS):
            n = w * l
            for f in SUPPLY_FACTORS:
                out.append(GeneratorParams(g, n, 0, _r(f * math.sqrt(n)), 1, 1, c, u, w, l))
    else:
        for n in NODE_COUNTS:
            for m, c, u in itertools.product((8 * n, _r(n * math.sqrt(n))), GOTO_VALUES, GOTO_VALUES):
                out.append(GeneratorParams(g, n, m, 0, 1, 1, c, u))
    return out


def _split(rng, total: int, parts: int) -> np.ndarray:
    """``total`` split into ``parts`` positive integers."""
    if total < parts:
        raise ValueError(f"total supply {total} cannot cover {parts} vertices")
    return 1 + rng.multinomial(total - parts, np.full(parts, 1.0 / parts)).astype(np.int64)


def _costs_caps(rng, m: int, p: GeneratorParams):
    return rng.integers(1, p.max_cost + 1, m), rng.integers(1, p.max_capacity + 1, m)


def _validate(p: GeneratorParams) -> None:
    if p.max_cost < 1 or p.max_capacity < 1:
        raise ValueError("max_cost and max_capacity must be positive")
    if p.generator is GeneratorId.GRIDGRAPH:
        if p.grid_width < 1 or p.grid_length < 1 or p.grid_width * p.grid_length < 2:
            raise ValueError("grid needs at least two vertices")
        return
    if p.num_vertices < 2:
        raise ValueError("need at least two vertices")
    if p.generator is GeneratorId.GOTO:
        return
    if p.num_supply_vertices < 1 or p.num_demand_vertices < 1:
        raise ValueError("need at least one supply and one demand vertex")
    if p.num_supply_vertices + p.num_demand_vertices > p.num_vertices:
        raise ValueError("more supply/demand vertices than vertices")
    if p.generator is GeneratorId.GRIDGEN and p.grid_width < 1:
        raise ValueError("grid width must be positive")


def _netgen(rng, p: GeneratorParams) -> MCFInstance:
    n, S, D = p.num_vertices, p.num_supply_vertices, p.num_demand_vertices
    sources = np.arange(S)
    sinks = np.arange(n - D, n)
    trans = rng.permutation(np.arange(S, n - D))
    tails, heads = [], []
    # skeleton: every source heads a chain through a share of the transshipment vertices into a sink
    chains = np.array_split(trans, S)
    reached = set()
    for s, chain in zip(sources, chains):
        path = [int(s)] + [int(v) for v in chain]
        t = int(rng.choice(sinks))
        reached.add(t)
        path.append(t)
        tails.extend(path[:-1])
        heads.extend(path[1:])
    body = np.arange(n - D)
    for t in sinks:
        if int(t) not in reached:
            tails.append(int(rng.choice(body)))
            heads.append(int(t))
    if p.num_arcs < len(tails):
        raise ValueError(f"{p.num_arcs} arcs cannot hold the {len(tails)}-arc skeleton")
    extra = p.num_arcs - len(tails)
    t_extra = rng.integers(0, n, extra)
    h_extra = (t_extra + rng.integers(1, n, extra)) % n
    tail = np.concatenate([np.array(tails, np.int64), t_extra])
    head = np.concatenate([np.array(heads, np.int64), h_extra])
    cost, cap = _costs_caps(rng, p.num_arcs, p)
    b = np.zeros(n, np.int64)
    b[sources] = _split(rng, p.total_supply, S)
    b[sinks] = -_split(rng, p.total_supply, D)
    return MCFInstance(n, tail, head, cost, cap, b)


def grid_arcs(width: int, num_vertices: int, two_way: bool = True) -> list[tuple[int, int]]:
    """Arcs of a row-major grid with ``width`` columns over ``num_vertices`` vertices.

    Horizontal arcs come first, then vertical ones. One-way grids alternate
    direction: rows left/right by row parity, columns down/up by column parity.
    """
    arcs = []
    for v in range(num_vertices):
        r, c = divmod(v, width)
        if c + 1 < width and v + 1 < num_vertices:
            if two_way:
                arcs += [(v, v + 1), (v + 1, v)]
            else:
                arcs.append((v, v + 1) if r % 2 == 0 else (v + 1, v))
    for v in range(num_vertices):
        r, c = divmod(v, width)
        if v + width < num_vertices:
            if two_way:
                arcs += [(v, v + width), (v + width, v)]
            else:
                arcs.append((v, v + width) if c % 2 == 0 else (v + width, v))
    return arcs


def _gridgen(rng, p: GeneratorParams) -> MCFInstance:
    n, S, D = p.num_vertices, p.num_supply_vertices, p.num_demand_vertices
    arcs = grid_arcs(p.grid_width, n, p.two_way_arcs)
    picked = rng.choice(n, S + D, replace=False)
    sources, sinks = picked[:S], picked[S:]
    extra = max(0, p.num_arcs - len(arcs))
    # additional arcs leave a source or enter a sink
    out_side = rng.random(extra) < 0.5
    ends = rng.integers(0, n, extra)
    src = rng.choice(sources, extra)
    dst = rng.choice(sinks, extra)
    for k in range(extra):
        if out_side[k]:
            t, h = int(src[k]), int(ends[k])
        else:
            t, h = int(ends[k]), int(dst[k])
        if t == h:
            h = int(dst[k]) if out_side[k] else int(src[k])
            t, h = (t, h) if out_side[k] else (h, t)
        arcs.append((t, h))
    m = len(arcs)
    tail = np.array([a[0] for a in arcs], np.int64)
    head = np.array([a[1] for a in arcs], np.int64)
    cost, cap = _costs_caps(rng, m, p)
    b = np.zeros(n, np.int64)
    b[sources] = _split(rng, p.total_supply, S)
    b[sinks] = -_split(rng, p.total_supply, D)
    return MCFInstance(n, tail, head, cost, cap, b)


def _gridgraph(rng, p: GeneratorParams) -> MCFInstance:
    n = p.grid_width * p.grid_length
    arcs = grid_arcs(p.grid_width, n, True)
    tail = np.array([a[0] for a in arcs], np.int64)
    head = np.array([a[1] for a in arcs], np.int64)
    cost, cap = _costs_caps(rng, len(arcs), p)
    b = np.zeros(n, np.int64)
    b[0] = p.total_supply
    b[n - 1] -= p.total_supply
    return MCFInstance(n, tail, head, cost, cap, b)


def _goto(rng, p: GeneratorParams) -> MCFInstance:
    from .solvers.subroutines import max_flow

    n, m = p.num_vertices, p.num_arcs
    hop = max(2, math.isqrt(n))
    vs = np.arange(n)
    base_t = np.concatenate([vs, vs])
    base_h = np.concatenate([(vs + 1) % n, (vs + hop) % n])
    keep = base_t != base_h
    base_t, base_h = base_t[keep], base_h[keep]
    if m < len(base_t):
        raise ValueError(f"{m} arcs cannot hold the {len(base_t)}-arc backbone")
    extra = m - len(base_t)
    t_extra = rng.integers(0, n, extra)
    h_extra = (t_extra + rng.integers(1, n, extra)) % n
    tail = np.concatenate([base_t, t_extra]).astype(np.int64)
    head = np.concatenate([base_h, h_extra]).astype(np.int64)
    cost = rng.integers(1, p.max_cost + 1, m)
    # expensive arcs are wide and cheap arcs narrow, which defeats greedy routing
    share = cost / p.max_cost * rng.uniform(0.5, 1.0, m)
    cap = np.clip(np.rint(share * p.max_capacity), 1, p.max_capacity).astype(np.int64)
    s, t = 0, n // 2
    value, _ = max_flow(n, tail, head, cap, s, t)
    b = np.zeros(n, np.int64)
    supply = max(1, (9 * value) // 10)
    b[s], b[t] = supply, -supply
    return MCFInstance(n, tail, head, cost, cap, b)


_FAMILIES = {
    GeneratorId.NETGEN: _netgen,
    GeneratorId.GRIDGEN: _gridgen,
    GeneratorId.GRIDGRAPH: _gridgraph,
    GeneratorId.GOTO: _goto,
}


def generate(params: GeneratorParams) -> MCFInstance:
    """Build the instance described by ``params`` (the seed must be set)."""
    if params.seed is None:
        raise ValueError("params.seed is unset")
    _validate(params)
    rng = np.random.Generator(np.random.PCG64(params.seed))
    return _FAMILIES[params.generator](rng, params)


def instance_seed(seed: int, params: GeneratorParams, replicate: int) -> int:
    """Seed of one replicate, independent of where the combination sits in any list."""
    words = [int(params.key()[i : i + 8], 16) for i in (0, 4)]
    ss = np.random.SeedSequence([int(seed), *words, int(replicate)])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class CorpusEntry:
    instance_id: str
    params: GeneratorParams
    replicate: int
    path: str


MANIFEST_COLUMNS = ["instance_id", *PARAM_COLUMNS, "replicate", "path"]


def plan_corpus(grid: Sequence[GeneratorParams], replicates, seed: int) -> list[CorpusEntry]:
    """Assign ids, seeds and paths without generating anything.

    ``replicates`` is either a count per combination or a list of counts.
    """
    counts = [replicates] * len(grid) if isinstance(replicates, int) else list(replicates)
    if len(counts) != len(grid):
        raise ValueError("one replicate count per combination required")
    entries = []
    for idx, (params, reps) in enumerate(zip(grid, counts)):
        key = params.key()
        for r in range(reps):
            p = params.with_seed(instance_seed(seed, params, r))
            iid = f"{params.generator.value}-{idx:05d}-{r:03d}"
            entries.append(CorpusEntry(iid, p, r, f"{params.generator.value}/{key}-{r}.min"))
    return entries


def spread(total: int, slots: int) -> list[int]:
    """``total`` spread over ``slots`` as evenly as possible, earlier slots first."""
    q, rem = divmod(total, slots)
    return [q + (1 if i < rem else 0) for i in range(slots)]


def paper_scale_plan(seed: int = 0) -> list[CorpusEntry]:
    """Manifest entries for the full-size corpus (81000 instances)."""
    out = []
    for g, total in PAPER_INSTANCE_COUNTS.items():
        grid = parameter_grid(g)
        out += plan_corpus(grid, spread(total, len(grid)), seed)
    return out


def write_manifest(entries: Iterable[CorpusEntry], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(MANIFEST_COLUMNS)
        for e in entries:
            row = e.params.to_row()
            w.writerow([e.instance_id, *(row[c] for c in PARAM_COLUMNS), e.replicate, e.path])


def read_manifest(path) -> list[CorpusEntry]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh, delimiter="\t"))
    return [CorpusEntry(r["instance_id"], GeneratorParams.from_row(r), int(r["replicate"]), r["path"]) for r in rows]


def _materialize(entries: Sequence[CorpusEntry], corpus_dir: Path) -> list[tuple[str, MCFInstance]]:
    out = []
    for e in entries:
        inst = generate(e.params)
        target = corpus_dir / e.path
        target.parent.mkdir(parents=True, exist_ok=True)
        save_dimacs(inst, target)
        out.append((e.instance_id, inst))
    return out


def generate_corpus(grid: Sequence[GeneratorParams], instances_per_combination, seed: int, corpus_dir) -> list[tuple[str, MCFInstance]]:
    """Generate, write DIMACS files and ``manifest.tsv`` under ``corpus_dir``."""
    corpus_dir = Path(corpus_dir)
    corpus_dir.mkdir(parents=True, exist_ok=True)
    entries = plan_corpus(grid, instances_per_combination, seed)
    out = _materialize(entries, corpus_dir)
    write_manifest(entries, corpus_dir / "manifest.tsv")
    return out


def regenerate_corpus(manifest_path, corpus_dir) -> list[tuple[str, MCFInstance]]:
    """Rebuild every instance listed in a manifest into ``corpus_dir``."""
    corpus_dir = Path(corpus_dir)
    entries = read_manifest(manifest_path)
    out = _materialize(entries, corpus_dir)
    if Path(manifest_path).resolve() != (corpus_dir / "manifest.tsv").resolve():
        write_manifest(entries, corpus_dir / "manifest.tsv")
    return out


def load_corpus(corpus_dir) -> list[tuple[CorpusEntry, MCFInstance]]:
    from .dimacs import read_dimacs

    corpus_dir = Path(corpus_dir)
    return [(e, read_dimacs(corpus_dir / e.path)) for e in read_manifest(os.path.join(corpus_dir, "manifest.tsv"))]
