"""Neighbor-preserved (NP) storage.

Partition ``k`` holds the union of the local graphs ``loc(u)`` (``u`` plus its
neighbors, induced) of every center ``u`` with ``h(u) = k``.  Any R1 unit whose
anchor lands on a center can therefore be matched inside one partition.
Beside the partitions every vertex carries a navigation bitmap: bit ``k`` is
set when some neighbor of the vertex is a center of partition ``k``.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from collections.abc import Iterable, Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .costs import CostReport
from .errors import GraphParseError, NotCenterError
from .graph import Edge, Graph, UpdateBatch, make_edge


@dataclass(frozen=True)
class PartitionFunction:
    """Deterministic vertex to partition map with ids in ``range(m)``.

    ``kind="mod"`` is ``v % m``; ``kind="hash"`` uses a keyed blake2b digest so
    that the assignment only depends on ``(m, seed)``.
    """

    m: int
    kind: str = "mod"
    seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"partition count must be >= 1, got {self.m}")
        if self.kind not in ("mod", "hash"):
            raise ValueError(f"unknown partition function kind {self.kind!r}")

    def __call__(self, v: int) -> int:
        if self.kind == "mod":
            return v % self.m
        key = self.seed.to_bytes(8, "little", signed=True)
        digest = hashlib.blake2b(v.to_bytes(8, "little"), digest_size=8, key=key).digest()
        return int.from_bytes(digest, "little") % self.m

    @property
    def spec(self) -> str:
        return f"mod:{self.m}" if self.kind == "mod" else f"hash:{self.m}:{self.seed}"

    @classmethod
    def parse(cls, spec: str, m: int | None = None, seed: int = 0) -> PartitionFunction:
        """Accept ``mod``, ``hash``, ``mod:M`` or ``hash:M[:SEED]``."""
        parts = spec.split(":")
        kind = parts[0]
        if len(parts) > 1:
            m = int(parts[1])
        if len(parts) > 2:
            seed = int(parts[2])
        if m is None:
            raise ValueError(f"partition spec {spec!r} needs a partition count")
        return cls(m, kind, seed if kind == "hash" else 0)


@dataclass(frozen=True)
class NPPartition:
    id: int
    graph: Graph
    centers: frozenset[int]

    @property
    def borders(self) -> frozenset[int]:
        return self.graph.vertices - self.centers

    def size(self) -> int:
        return 2 * self.graph.num_edges + len(self.centers)


@dataclass(frozen=True)
class NPStorage:
    h: PartitionFunction
    partitions: tuple[NPPartition, ...]
    nav: Mapping[int, int] = field(compare=True)

    @property
    def m(self) -> int:
        return self.h.m

    def size(self) -> int:
        """S(Phi): two units per stored edge plus one per center."""
        return sum(p.size() for p in self.partitions)

    def stored_edges(self) -> int:
        return sum(p.graph.num_edges for p in self.partitions)

    def nav_partitions(self, v: int) -> set[int]:
        bits = self.nav.get(v, 0)
        return {k for k in range(self.m) if bits >> k & 1}

    def home(self, v: int) -> NPPartition:
        return self.partitions[self.h(v)]

    def reconstruct(self) -> Graph:
        """The data graph as the union of every center's local graph."""
        edges = []
        vertices = []
        for part in self.partitions:
            adj = part.graph.adjacency
            for c in part.centers:
                vertices.append(c)
                edges.extend((c, w) for w in adj[c])
        return Graph(edges, vertices)


def _nav_bits(neighbors: Iterable[int], h: PartitionFunction) -> int:
    bits = 0
    for w in neighbors:
        bits |= 1 << h(w)
    return bits


def _assemble(k: int, centers: set[int], nbrs: Mapping[int, frozenset[int]],
              candidates: Iterable[Edge]) -> NPPartition:
    """Keep the candidate edges that lie in some center's local graph.

    An edge survives when an endpoint is a center, or when some center is
    adjacent to both endpoints (a closing edge).
    """
    by_vertex: dict[int, set[int]] = {}
    for c in centers:
        for w in nbrs[c]:
            by_vertex.setdefault(w, set()).add(c)
    keep = []
    for a, b in candidates:
        if a in centers or b in centers:
            keep.append((a, b))
        else:
            ca = by_vertex.get(a)
            cb = by_vertex.get(b)
            if ca and cb and not ca.isdisjoint(cb):
                keep.append((a, b))
    return NPPartition(k, Graph(keep, centers), frozenset(centers))


def _build_partition(d: Graph, k: int, centers: set[int]) -> NPPartition:
    adj = d.adjacency
    cand = set()
    for c in centers:
        ns = adj[c]
        cand.update(make_edge(c, w) for w in ns)
        for w in ns:
            cand.update(make_edge(w, x) for x in adj[w] & ns)
    return _assemble(k, centers, adj, cand)


def _centers_by_partition(vertices: Iterable[int], h: PartitionFunction) -> list[set[int]]:
    groups: list[set[int]] = [set() for _ in range(h.m)]
    for v in vertices:
        groups[h(v)].add(v)
    return groups


def build(d: Graph, m: int | None = None, h: PartitionFunction | None = None, workers: int = 1) -> NPStorage:
    if h is None:
        h = PartitionFunction(m if m is not None else 1)
    elif m is not None and m != h.m:
        raise ValueError(f"m={m} disagrees with the partition function ({h.m})")
    groups = _centers_by_partition(d.vertices, h)
    tasks = list(enumerate(groups))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda t: _build_partition(d, *t), tasks))
    else:
        parts = [_build_partition(d, k, c) for k, c in tasks]
    nav = {v: _nav_bits(ns, h) for v, ns in d.adjacency.items()}
    return NPStorage(h, tuple(parts), nav)


# -- extra-edge accounting ---------------------------------------------


@dataclass(frozen=True)
class ExtraEdgeReport:
    stored: int          # sum of |E(d_k)|
    raw: int             # stored - |E(d)|
    closing: int         # copies of edges with no center endpoint
    triangles: int
    num_edges: int
    m: int

    @property
    def bound(self) -> int:
        return min(3 * self.triangles, (self.m - 1) * self.num_edges)

    def check(self) -> None:
        assert self.closing <= 3 * self.triangles, self
        assert self.closing <= (self.m - 1) * self.num_edges, self
        assert self.raw <= (self.m - 1) * self.num_edges, self
        assert self.stored <= self.m * self.num_edges, self


def extra_edge_cost(s: NPStorage, d: Graph) -> ExtraEdgeReport:
    stored = s.stored_edges()
    closing = 0
    for part in s.partitions:
        cs = part.centers
        closing += sum(1 for a, b in part.graph.iter_edges() if a not in cs and b not in cs)
    return ExtraEdgeReport(stored, stored - d.num_edges, closing, d.count_triangles(), d.num_edges, s.m)


# -- incremental maintenance -------------------------------------------


def neighbor_set(partition: NPPartition, i: int, batch: UpdateBatch) -> set[int]:
    """N_{d'}(i) for a center ``i``, from its local adjacency and the batch."""
    if i not in partition.centers:
        raise NotCenterError(f"vertex {i} is not a center of partition {partition.id}")
    return _updated_neighbors(partition.graph, i, batch)


def _updated_neighbors(g: Graph, i: int, batch: UpdateBatch) -> set[int]:
    ns = set(g.adjacency.get(i, ()))
    for a, b in batch.deletions:
        if a == i:
            ns.discard(b)
        elif b == i:
            ns.discard(a)
    for a, b in batch.additions:
        if a == i:
            ns.add(b)
        elif b == i:
            ns.add(a)
    return ns


@dataclass(frozen=True)
class UpdateCost:
    report: CostReport
    bound: int
    neighbor_total: int   # sum of |N_{d'}(u)| over endpoint occurrences in the batch
    messages: int

    def to_dict(self) -> dict:
        d = self.report.to_dict()
        d.update(bound=self.bound, neighbor_total=self.neighbor_total, messages=self.messages)
        return d


def _map_partition(part: NPPartition, batch: UpdateBatch, h: PartitionFunction):
    """Mapper: emit NeighborSet(j) to h(i) for every added edge (i, j) that crosses partitions."""
    k = part.id
    out: list[tuple[int, int, frozenset[int]]] = []
    for a, b in sorted(batch.additions):
        for j, i in ((a, b), (b, a)):
            if h(j) == k and h(i) != k:
                # j is (or is about to become) a center here
                out.append((h(i), j, frozenset(_updated_neighbors(part.graph, j, batch))))
    return out


def _reduce_partition(part: NPPartition, batch: UpdateBatch, h: PartitionFunction,
                      inbox: list[tuple[int, frozenset[int]]]) -> NPPartition:
    """Reducer applying the C1-C3 rules in their closed form.

    Candidate edges are the surviving local edges, the inserted edges and the
    edges carried by NeighborSet messages; ``_assemble`` keeps those inside
    some center's updated local graph.  That covers C1 (center-center),
    C2 (border-border needs a common center) and C3 (center-border, with the
    closing edges of the border vertex delivered by messages).
    """
    k = part.id
    centers = set(part.centers)
    centers.update(v for e in batch.additions for v in e if h(v) == k)
    nbrs = {c: frozenset(_updated_neighbors(part.graph, c, batch)) for c in centers}
    cand = {e for e in part.graph.iter_edges() if e not in batch.deletions}
    cand.update(batch.additions)
    for j, ns in inbox:
        cand.update(make_edge(j, x) for x in ns)
    return _assemble(k, centers, nbrs, cand)


def update(s: NPStorage, d: Graph, batch: UpdateBatch, h: PartitionFunction | None = None,
           workers: int = 1) -> tuple[NPStorage, UpdateCost]:
    """One map/shuffle/reduce round producing the storage of ``d' = d + batch``.

    ``d`` is only used to validate the batch; the round itself reads nothing
    but the partitions and the batch.
    """
    h = h or s.h
    if h != s.h:
        raise ValueError("partition function differs from the one the storage was built with")
    d.apply_update(batch)  # raises UpdateConflictError on invalid batches
    parts = s.partitions

    def run(fn, args):
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                return list(pool.map(lambda a: fn(*a), args))
        return [fn(*a) for a in args]

    emitted = run(_map_partition, [(p, batch, h) for p in parts])
    inboxes: list[list[tuple[int, frozenset[int]]]] = [[] for _ in parts]
    shuffle = 0
    messages = 0
    for msgs in emitted:
        for target, j, ns in msgs:
            inboxes[target].append((j, ns))
            shuffle += len(ns)
            messages += 1
    for box in inboxes:
        box.sort(key=lambda t: (t[0], sorted(t[1])))
    new_parts = tuple(run(_reduce_partition, [(p, batch, h, inboxes[p.id]) for p in parts]))

    nav = dict(s.nav)
    touched = batch.endpoints()
    for v in sorted(touched):
        home = new_parts[h(v)]
        nav[v] = _nav_bits(home.graph.adjacency.get(v, ()), h)
    new = NPStorage(h, new_parts, nav)

    s_u = 2 * batch.size
    phi, phi_new = s.size(), new.size()
    neighbor_total = 0
    for e in batch.additions | batch.deletions:
        for v in e:
            neighbor_total += len(new_parts[h(v)].graph.adjacency.get(v, ()))
    report = CostReport(
        map_in=phi + s.m * s_u,
        map_out=shuffle,
        shuffle=shuffle,
        reduce_in=phi + s.m * s_u + shuffle,
        reduce_out=phi_new,
    )
    bound = 2 * phi + 2 * s.m * s_u + 4 * neighbor_total + phi_new
    return new, UpdateCost(report, bound, neighbor_total, messages)


def message_cost_of_update(s: NPStorage, d: Graph, batch: UpdateBatch) -> UpdateCost:
    return update(s, d, batch)[1]


# -- persistence -------------------------------------------------------

_WORD = struct.Struct("<Q")


def save_storage(s: NPStorage, directory: str | os.PathLike, num_vertices: int | None = None,
                 num_edges: int | None = None) -> Path:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    for old in out.glob("part-*.edges"):
        old.unlink()
    if num_vertices is None or num_edges is None:
        g = s.reconstruct()
        num_vertices, num_edges = g.num_vertices, g.num_edges
    meta = {"m": s.m, "partition": s.h.spec, "num_vertices": num_vertices, "num_edges": num_edges}
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    for part in s.partitions:
        lines = ["centers " + " ".join(map(str, sorted(part.centers)))]
        lines.extend(f"{a} {b}" for a, b in part.graph.iter_edges())
        (out / f"part-{part.id}.edges").write_text("\n".join(lines) + "\n", encoding="utf-8")
    words = (s.m + 63) // 64
    with open(out / "nav.bits", "wb") as fh:
        for v in sorted(s.nav):
            bits = s.nav[v]
            fh.write(_WORD.pack(v))
            for w in range(words):
                fh.write(_WORD.pack(bits >> (64 * w) & 0xFFFFFFFFFFFFFFFF))
    return out


def load_storage(directory: str | os.PathLike) -> NPStorage:
    src = Path(directory)
    meta = json.loads((src / "meta.json").read_text(encoding="utf-8"))
    h = PartitionFunction.parse(meta["partition"])
    parts = []
    for k in range(h.m):
        path = src / f"part-{k}.edges"
        lines = path.read_text(encoding="utf-8").splitlines()
        if not lines or not lines[0].startswith("centers"):
            raise GraphParseError("missing centers header", 1, path)
        centers = frozenset(int(x) for x in lines[0].split()[1:])
        edges = []
        for lineno, line in enumerate(lines[1:], 2):
            if not line.strip():
                continue
            try:
                a, b = (int(x) for x in line.split())
            except ValueError:
                raise GraphParseError(f"bad edge line {line!r}", lineno, path) from None
            edges.append((a, b))
        parts.append(NPPartition(k, Graph(edges, centers), centers))
    words = (h.m + 63) // 64
    data = (src / "nav.bits").read_bytes()
    rec = 8 * (1 + words)
    if len(data) % rec:
        raise GraphParseError("truncated nav.bits", None, src / "nav.bits")
    nav = {}
    for off in range(0, len(data), rec):
        (v,) = _WORD.unpack_from(data, off)
        bits = 0
        for w in range(words):
            (x,) = _WORD.unpack_from(data, off + 8 * (1 + w))
            bits |= x << (64 * w)
        nav[v] = bits
    return NPStorage(h, tuple(parts), nav)
