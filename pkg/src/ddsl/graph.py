"""Undirected simple graphs with integer vertex ids, plus batched edge updates.

Graphs are immutable values: every mutation (``apply_update``) returns a new
graph.  Adjacency is stored as frozensets; anything user-visible (edge lists,
neighbor listings) is emitted in sorted order so outputs are deterministic.
"""

from __future__ import annotations

import os
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from typing import TextIO

from .errors import GraphParseError, UnknownVertexError, UpdateConflictError

Edge = tuple[int, int]


def make_edge(u: int, v: int) -> Edge:
    """Normalize an undirected edge to ``(min, max)``."""
    if u == v:
        raise ValueError(f"self-loop on vertex {u}")
    return (u, v) if u < v else (v, u)


def _check_id(v) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or v < 0:
        raise ValueError(f"vertex ids must be non-negative integers, got {v!r}")
    return v


class Graph:
    """An undirected simple graph.

    ``vertices`` always contains every key of the adjacency map; isolated
    vertices are kept when listed explicitly or left behind by deletions.
    """

    __slots__ = ("_adj", "_num_edges")

    def __init__(self, edges: Iterable[tuple[int, int]] = (), vertices: Iterable[int] = ()):
        adj: dict[int, set[int]] = {}
        for v in vertices:
            adj.setdefault(_check_id(v), set())
        for u, v in edges:
            _check_id(u)
            _check_id(v)
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
            adj.setdefault(u, set()).add(v)
            adj.setdefault(v, set()).add(u)
        self._adj: dict[int, frozenset[int]] = {v: frozenset(ns) for v, ns in adj.items()}
        self._num_edges = sum(len(ns) for ns in self._adj.values()) // 2

    @classmethod
    def _from_adjacency(cls, adj: Mapping[int, Iterable[int]]) -> Graph:
        g = cls.__new__(cls)
        g._adj = {v: frozenset(ns) for v, ns in adj.items()}
        g._num_edges = sum(len(ns) for ns in g._adj.values()) // 2
        return g

    # -- basic queries -------------------------------------------------

    @property
    def vertices(self) -> frozenset[int]:
        return frozenset(self._adj)

    def sorted_vertices(self) -> list[int]:
        return sorted(self._adj)

    @property
    def adjacency(self) -> Mapping[int, frozenset[int]]:
        return self._adj

    @property
    def num_vertices(self) -> int:
        return len(self._adj)

    @property
    def num_edges(self) -> int:
        return self._num_edges

    def __len__(self) -> int:
        return len(self._adj)

    def __contains__(self, v) -> bool:
        return v in self._adj

    def neighbors(self, v: int) -> frozenset[int]:
        try:
            return self._adj[v]
        except KeyError:
            raise UnknownVertexError(v) from None

    def sorted_neighbors(self, v: int) -> list[int]:
        return sorted(self.neighbors(v))

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    def has_edge(self, u: int, v: int) -> bool:
        ns = self._adj.get(u)
        return ns is not None and v in ns

    def edges(self) -> list[Edge]:
        return sorted((u, v) for u, ns in self._adj.items() for v in ns if u < v)

    def iter_edges(self) -> Iterator[Edge]:
        for u in sorted(self._adj):
            for v in sorted(self._adj[u]):
                if u < v:
                    yield (u, v)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._adj == other._adj

    def __hash__(self) -> int:
        return hash(frozenset(self._adj.items()))

    def __repr__(self) -> str:
        return f"Graph(|V|={self.num_vertices}, |E|={self.num_edges})"

    # -- derived graphs ------------------------------------------------

    def induced_subgraph(self, vertices: Iterable[int]) -> Graph:
        keep = set(vertices)
        missing = keep - self._adj.keys()
        if missing:
            raise UnknownVertexError(min(missing))
        return Graph._from_adjacency({v: self._adj[v] & keep for v in keep})

    def count_triangles(self) -> int:
        total = 0
        adj = self._adj
        for u, nu in adj.items():
            for v in nu:
                if v > u:
                    total += sum(1 for w in nu & adj[v] if w > v)
        return total

    def apply_update(self, batch: UpdateBatch) -> Graph:
        """Return the graph with ``batch.deletions`` removed and ``batch.additions`` added."""
        for e in sorted(batch.deletions):
            if not self.has_edge(*e):
                raise UpdateConflictError(f"cannot delete missing edge {e}", edge=e)
        for e in sorted(batch.additions):
            if self.has_edge(*e):
                raise UpdateConflictError(f"cannot add existing edge {e}", edge=e)
        adj = {v: set(ns) for v, ns in self._adj.items()}
        for u, v in batch.deletions:
            adj[u].discard(v)
            adj[v].discard(u)
        for u, v in batch.additions:
            adj.setdefault(u, set()).add(v)
            adj.setdefault(v, set()).add(u)
        return Graph._from_adjacency(adj)


@dataclass(frozen=True)
class UpdateBatch:
    """Edges added and deleted simultaneously."""

    additions: frozenset[Edge] = field(default_factory=frozenset)
    deletions: frozenset[Edge] = field(default_factory=frozenset)

    def __post_init__(self):
        adds = frozenset(make_edge(*e) for e in self.additions)
        dels = frozenset(make_edge(*e) for e in self.deletions)
        both = adds & dels
        if both:
            e = min(both)
            raise UpdateConflictError(f"edge {e} is both added and deleted", edge=e)
        object.__setattr__(self, "additions", adds)
        object.__setattr__(self, "deletions", dels)

    @classmethod
    def of(cls, add: Iterable[tuple[int, int]] = (), delete: Iterable[tuple[int, int]] = ()) -> UpdateBatch:
        return cls(frozenset(add), frozenset(delete))

    def reverse(self) -> UpdateBatch:
        return UpdateBatch(self.deletions, self.additions)

    @property
    def size(self) -> int:
        return len(self.additions) + len(self.deletions)

    def is_empty(self) -> bool:
        return not self.additions and not self.deletions

    def endpoints(self) -> set[int]:
        return {v for e in self.additions | self.deletions for v in e}

    def __len__(self) -> int:
        return self.size


# -- text formats ------------------------------------------------------


def parse_edge_list(lines: Iterable[str], path=None) -> Graph:
    """Parse ``u v`` lines; ``#`` comments and blank lines are skipped.

    Duplicate edges merge silently, a self-loop is an error.
    """
    edges = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphParseError(f"expected two vertex ids, got {line!r}", lineno, path)
        try:
            u, v = int(parts[0], 10), int(parts[1], 10)
        except ValueError:
            raise GraphParseError(f"non-integer vertex id in {line!r}", lineno, path) from None
        if u < 0 or v < 0:
            raise GraphParseError(f"negative vertex id in {line!r}", lineno, path)
        if u == v:
            raise GraphParseError(f"self-loop on vertex {u}", lineno, path)
        edges.append((u, v))
    return Graph(edges)


def read_edge_list(path: str | os.PathLike) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh, path=path)


def write_edge_list(g: Graph, out: TextIO) -> None:
    for u, v in g.iter_edges():
        out.write(f"{u} {v}\n")


def parse_batch(lines: Iterable[str], path=None) -> UpdateBatch:
    """Parse ``+ u v`` / ``- u v`` lines into an :class:`UpdateBatch`."""
    adds, dels = set(), set()
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3 or parts[0] not in "+-":
            raise GraphParseError(f"expected '+ u v' or '- u v', got {line!r}", lineno, path)
        try:
            u, v = int(parts[1]), int(parts[2])
        except ValueError:
            raise GraphParseError(f"non-integer vertex id in {line!r}", lineno, path) from None
        if u < 0 or v < 0 or u == v:
            raise GraphParseError(f"invalid edge in {line!r}", lineno, path)
        (adds if parts[0] == "+" else dels).add(make_edge(u, v))
    return UpdateBatch(frozenset(adds), frozenset(dels))


def read_batch(path: str | os.PathLike) -> UpdateBatch:
    with open(path, encoding="utf-8") as fh:
        return parse_batch(fh, path=path)


def write_batch(batch: UpdateBatch, out: TextIO) -> None:
    for u, v in sorted(batch.deletions):
        out.write(f"- {u} {v}\n")
    for u, v in sorted(batch.additions):
        out.write(f"+ {u} {v}\n")
