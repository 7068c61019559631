"""Reader and writer for the DIMACS minimum cost flow format.

Grammar::

    c <comment>
    p min <nodes> <arcs>
    n <id> <supply>
    a <tail> <head> <lower> <capacity> <cost>

Ids are 1-based in files and 0-based in :class:`~mcfselect.graph.MCFInstance`.
"""
from __future__ import annotations

import io
import os
from typing import TextIO, Union

from .graph import MCFInstance


class DimacsError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _ints(tokens, lineno):
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise DimacsError(f"expected integers, got {' '.join(tokens)!r}", lineno) from None


def parse_dimacs(text: Union[str, TextIO]) -> MCFInstance:
    lines = io.StringIO(text) if isinstance(text, str) else text
    n = m = None
    supply = None
    seen_nodes = set()
    arcs = []
    for lineno, raw in enumerate(lines, start=1):
        tokens = raw.split()
        if not tokens or tokens[0] == "c":
            continue
        kind = tokens[0]
        if kind == "p":
            if n is not None:
                raise DimacsError("duplicate problem line", lineno)
            if len(tokens) != 4 or tokens[1] != "min":
                raise DimacsError("problem line must read 'p min <nodes> <arcs>'", lineno)
            n, m = _ints(tokens[2:], lineno)
            if n < 1 or m < 0:
                raise DimacsError("bad problem size", lineno)
            supply = [0] * n
            continue
        if n is None:
            raise DimacsError("problem line must precede all data lines", lineno)
        if kind == "n":
            if len(tokens) != 3:
                raise DimacsError("node line must read 'n <id> <supply>'", lineno)
            v, b = _ints(tokens[1:], lineno)
            if not 1 <= v <= n:
                raise DimacsError(f"node id {v} out of range 1..{n}", lineno)
            if v in seen_nodes:
                raise DimacsError(f"node {v} listed twice", lineno)
            seen_nodes.add(v)
            supply[v - 1] = b
        elif kind == "a":
            if len(tokens) != 6:
                raise DimacsError("arc line must read 'a <tail> <head> <lower> <capacity> <cost>'", lineno)
            t, h, low, cap, cost = _ints(tokens[1:], lineno)
            if not (1 <= t <= n and 1 <= h <= n):
                raise DimacsError(f"arc endpoint out of range 1..{n}", lineno)
            if low != 0:
                raise DimacsError(f"non-zero lower bound {low} is not supported", lineno)
            if cap < 0 or cost < 0:
                raise DimacsError("capacities and costs must be non-negative", lineno)
            arcs.append((t - 1, h - 1, cost, cap))
        else:
            raise DimacsError(f"unknown line type {kind!r}", lineno)
    if n is None:
        raise DimacsError("missing problem line")
    if len(arcs) != m:
        raise DimacsError(f"problem line announces {m} arcs, found {len(arcs)}")
    try:
        return MCFInstance.from_arcs(n, arcs, supply)
    except (ValueError, OverflowError) as exc:
        raise DimacsError(str(exc)) from exc


def write_dimacs(instance: MCFInstance) -> str:
    out = [f"p min {instance.num_vertices} {instance.num_arcs}"]
    out += [f"n {v + 1} {int(b)}" for v, b in enumerate(instance.supply) if b != 0]
    out += [
        f"a {int(t) + 1} {int(h) + 1} 0 {int(u)} {int(c)}"
        for t, h, c, u in zip(instance.tail, instance.head, instance.cost, instance.capacity)
    ]
    return "\n".join(out) + "\n"


def read_dimacs(path: Union[str, os.PathLike]) -> MCFInstance:
    with open(path, encoding="ascii") as fh:
        return parse_dimacs(fh)


def save_dimacs(instance: MCFInstance, path: Union[str, os.PathLike]) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(write_dimacs(instance))
