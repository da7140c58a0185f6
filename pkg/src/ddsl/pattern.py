"""Pattern graphs: symmetry-breaking orders, automorphisms, covers and R1 units.

A :class:`Pattern` doubles as a *fragment* type.  Query patterns are built with
:meth:`Pattern.query`, which insists on connectivity and on an order that
leaves exactly one automorphism.  Fragments (units, join results, the graph
induced by a cover) are plain ``Pattern`` objects whose order is the query's
transitive closure restricted to the fragment's vertices; they may keep
residual symmetry.
"""

from __future__ import annotations

import itertools
import os
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import cached_property
from typing import TextIO

from .errors import CoverError, GraphParseError, PatternError, PatternSizeError
from .graph import Edge, Graph, make_edge

MAX_PATTERN_VERTICES = 8

Order = frozenset[tuple[int, int]]
VertexCover = frozenset[int]


def _closure(pairs: Iterable[tuple[int, int]]) -> set[tuple[int, int]]:
    succ: dict[int, set[int]] = {}
    for a, b in pairs:
        succ.setdefault(a, set()).add(b)
    closed = set()
    for a in list(succ):
        stack = list(succ[a])
        seen = set()
        while stack:
            b = stack.pop()
            if b in seen:
                continue
            seen.add(b)
            stack.extend(succ.get(b, ()))
        closed.update((a, b) for b in seen)
    return closed


def _reduction(closed: set[tuple[int, int]]) -> set[tuple[int, int]]:
    succ: dict[int, set[int]] = {}
    for a, b in closed:
        succ.setdefault(a, set()).add(b)
    return {
        (a, b)
        for a, b in closed
        if not any(b in succ.get(c, ()) for c in succ[a] if c != b)
    }


def _connected(adj, vertices: Iterable[int]) -> bool:
    vs = set(vertices)
    if not vs:
        return True
    start = min(vs)
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w in vs and w not in seen:
                seen.add(w)
                stack.append(w)
    return seen == vs


class Pattern:
    """A small graph together with a strict partial order on its vertices.

    ``order`` holds pairs ``(a, b)`` meaning a match must send ``a`` to a
    smaller data id than ``b``.  Matches of a pattern are tuples aligned with
    ``vertices`` (ascending pattern ids).
    """

    def __init__(self, edges: Iterable[tuple[int, int]], order: Iterable[tuple[int, int]] = (),
                 vertices: Iterable[int] = ()):
        es = sorted({make_edge(u, v) for u, v in edges})
        vs = sorted({v for e in es for v in e} | set(vertices))
        if len(vs) > MAX_PATTERN_VERTICES:
            raise PatternSizeError(
                f"patterns are limited to {MAX_PATTERN_VERTICES} vertices, got {len(vs)}")
        vset = set(vs)
        ords = set()
        for a, b in order:
            if a not in vset or b not in vset:
                raise PatternError(f"order constraint ({a}, {b}) names a vertex outside the pattern")
            if a == b:
                raise PatternError(f"order constraint ({a}, {a}) is reflexive")
            ords.add((a, b))
        closed = _closure(ords)
        if any((a, a) in closed for a in vs):
            raise PatternError("order constraints contain a cycle")
        self.vertices: tuple[int, ...] = tuple(vs)
        self.edges: tuple[Edge, ...] = tuple(es)
        self.order: Order = frozenset(ords)
        self.closure: Order = frozenset(closed)
        self.graph = Graph(es, vs)
        self.index = {v: i for i, v in enumerate(vs)}
        self.edge_index = {e: i for i, e in enumerate(es)}

    @classmethod
    def query(cls, edges: Iterable[tuple[int, int]], order: Iterable[tuple[int, int]] | None = None) -> Pattern:
        """Build a query pattern, generating a symmetry-breaking order when none is given."""
        p = cls(edges)
        if not p.edges:
            raise PatternError("a pattern needs at least one edge")
        if not _connected(p.graph.adjacency, p.vertices):
            raise PatternError("pattern graph must be connected")
        if order is None:
            return cls(p.edges, generate_simb_order(p))
        p = cls(p.edges, order)
        n = len(enumerate_automorphisms(p, respect_ord=True))
        if n != 1:
            raise PatternError(f"order leaves {n} automorphisms; exactly one is required")
        return p

    # -- structure -----------------------------------------------------

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, v: int) -> frozenset[int]:
        return self.graph.neighbors(v)

    def degree(self, v: int) -> int:
        return self.graph.degree(v)

    def is_connected(self) -> bool:
        return _connected(self.graph.adjacency, self.vertices)

    @property
    def full_mask(self) -> int:
        return (1 << len(self.edges)) - 1

    def mask_of(self, edges: Iterable[Edge]) -> int:
        m = 0
        for e in edges:
            m |= 1 << self.edge_index[make_edge(*e)]
        return m

    def edges_of(self, mask: int) -> tuple[Edge, ...]:
        return tuple(e for i, e in enumerate(self.edges) if mask >> i & 1)

    def vertices_of(self, mask: int) -> frozenset[int]:
        return frozenset(v for e in self.edges_of(mask) for v in e)

    def restricted_order(self, vertices: Iterable[int]) -> Order:
        vs = set(vertices)
        return frozenset((a, b) for a, b in self.closure if a in vs and b in vs)

    def subpattern(self, edges: Iterable[Edge]) -> Pattern:
        """The fragment made of ``edges``, carrying the restricted order closure."""
        es = [make_edge(*e) for e in edges]
        vs = {v for e in es for v in e}
        return Pattern(es, self.restricted_order(vs))

    def fragment(self, mask: int) -> Pattern:
        return self._fragment_cache(mask)

    @cached_property
    def _fragments(self) -> dict[int, Pattern]:
        return {}

    def _fragment_cache(self, mask: int) -> Pattern:
        frag = self._fragments.get(mask)
        if frag is None:
            frag = self._fragments[mask] = self.subpattern(self.edges_of(mask))
        return frag

    def induced(self, vertices: Iterable[int]) -> Pattern:
        vs = set(vertices)
        es = [e for e in self.edges if e[0] in vs and e[1] in vs]
        return Pattern(es, self.restricted_order(vs), vertices=vs)

    # -- identity --------------------------------------------------------

    def _key(self):
        return (self.vertices, self.edges, self.order)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Pattern):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __repr__(self) -> str:
        es = ",".join(f"{a}-{b}" for a, b in self.edges)
        os_ = ",".join(f"{a}<{b}" for a, b in sorted(self.order))
        return f"Pattern([{es}], ord=[{os_}])"

    @cached_property
    def automorphisms(self) -> tuple[tuple[int, ...], ...]:
        return tuple(_automorphisms(self))

    @cached_property
    def ordered_automorphisms(self) -> tuple[tuple[int, ...], ...]:
        return tuple(g for g in self.automorphisms if _respects(self, g, self.closure))


def _automorphisms(p: Pattern):
    """Edge-preserving bijections, as image tuples aligned with ``p.vertices``."""
    vs = p.vertices
    adj = p.graph.adjacency
    image: dict[int, int] = {}
    used: set[int] = set()

    def extend(i: int):
        if i == len(vs):
            yield tuple(image[v] for v in vs)
            return
        v = vs[i]
        for w in vs:
            if w in used or len(adj[w]) != len(adj[v]):
                continue
            ok = True
            for x in vs[:i]:
                if (x in adj[v]) != (image[x] in adj[w]):
                    ok = False
                    break
            if ok:
                image[v] = w
                used.add(w)
                yield from extend(i + 1)
                used.discard(w)
                del image[v]

    yield from extend(0)


def _respects(p: Pattern, images: Sequence[int], pairs: Iterable[tuple[int, int]]) -> bool:
    idx = p.index
    return all(images[idx[a]] < images[idx[b]] for a, b in pairs)


def enumerate_automorphisms(p: Pattern, respect_ord: bool = False) -> list[dict[int, int]]:
    """All automorphisms of ``p`` as ``{v: g(v)}`` maps.

    With ``respect_ord`` only the ones that satisfy ``p``'s order under the
    identity labeling are kept.
    """
    if p.num_vertices > MAX_PATTERN_VERTICES:
        raise PatternSizeError(f"automorphism enumeration is limited to {MAX_PATTERN_VERTICES} vertices")
    auts = p.ordered_automorphisms if respect_ord else p.automorphisms
    return [dict(zip(p.vertices, g)) for g in auts]


def generate_simb_order(p: Pattern) -> Order:
    """Symmetry-breaking order via orbit fixing over the stabilizer chain.

    Repeatedly take the smallest vertex whose orbit under the remaining group
    is nontrivial, force it below its orbit-mates and restrict the group to its
    stabilizer.  The result is returned as a transitive reduction.
    """
    idx = p.index
    group = list(p.automorphisms)
    pairs: set[tuple[int, int]] = set()
    while len(group) > 1:
        for v in p.vertices:
            orbit = {g[idx[v]] for g in group}
            if len(orbit) > 1:
                pairs.update((v, w) for w in orbit if w != v)
                group = [g for g in group if g[idx[v]] == v]
                break
    order = frozenset(_reduction(_closure(pairs)))
    check = Pattern(p.edges, order)
    assert len(check.ordered_automorphisms) == 1
    return order


# -- vertex covers -----------------------------------------------------


def is_vertex_cover(p: Pattern, cover: Iterable[int]) -> bool:
    c = set(cover)
    return all(a in c or b in c for a, b in p.edges)


def check_cover(p: Pattern, cover: Iterable[int]) -> VertexCover:
    c = frozenset(cover)
    if not c <= set(p.vertices):
        raise CoverError(f"cover {sorted(c)} names vertices outside the pattern")
    if not is_vertex_cover(p, c):
        raise CoverError(f"{sorted(c)} is not a vertex cover of {p!r}")
    return c


def cover_is_connected(p: Pattern, cover: Iterable[int]) -> bool:
    return _connected(p.graph.adjacency, cover)


def _cover_key(c: frozenset[int]):
    return (len(c), tuple(sorted(c)))


def all_vertex_covers(p: Pattern, connected_only: bool = False) -> list[VertexCover]:
    """Every vertex cover (optionally with connected induced graph), smallest first."""
    out = []
    for r in range(1, p.num_vertices + 1):
        for combo in itertools.combinations(p.vertices, r):
            if is_vertex_cover(p, combo) and (not connected_only or cover_is_connected(p, combo)):
                out.append(frozenset(combo))
    return sorted(out, key=_cover_key)


def enumerate_vertex_covers(p: Pattern, connected_only: bool = False) -> list[VertexCover]:
    """Inclusion-minimal covers plus the full vertex set.

    With ``connected_only`` the minimality is taken within the family of
    covers whose induced graph is connected (that family is closed upwards for
    connected patterns, so single-vertex removal decides minimality).
    """
    family = all_vertex_covers(p, connected_only)
    members = set(family)
    out = [c for c in family if not any(c - {v} in members for v in c)]
    full = frozenset(p.vertices)
    if full not in out and (not connected_only or p.is_connected()):
        out.append(full)
    return sorted(out, key=_cover_key)


# -- R1 units and decomposition ----------------------------------------


@dataclass(frozen=True)
class R1Unit:
    """A radius-1 fragment of a query pattern with its anchor vertex."""

    fragment: Pattern
    anchor: int
    mask: int

    def __post_init__(self):
        frag = self.fragment
        if self.anchor not in frag.index:
            raise PatternError(f"anchor {self.anchor} not in unit")
        if frag.neighbors(self.anchor) | {self.anchor} != set(frag.vertices):
            raise PatternError(f"{frag!r} is not an R1 unit around {self.anchor}")

    @property
    def vertices(self) -> tuple[int, ...]:
        return self.fragment.vertices

    @property
    def edges(self) -> tuple[Edge, ...]:
        return self.fragment.edges

    @property
    def sort_key(self):
        return (self.edges, self.anchor)

    def __lt__(self, other: R1Unit) -> bool:
        return self.sort_key < other.sort_key

    def __repr__(self) -> str:
        es = ",".join(f"{a}-{b}" for a, b in self.edges)
        return f"R1Unit([{es}] @ {self.anchor})"


def make_unit(p: Pattern, edges: Iterable[Edge], anchor: int) -> R1Unit:
    es = [make_edge(*e) for e in edges]
    return R1Unit(p.subpattern(es), anchor, p.mask_of(es))


def enumerate_r1_units(p: Pattern, cover: Iterable[int]) -> list[R1Unit]:
    """Every R1 subgraph of ``p`` with at least one edge, one entry per anchor in ``cover``."""
    anchors = sorted(set(cover) & set(p.vertices))
    units = []
    for a in anchors:
        nbrs = sorted(p.neighbors(a))
        for r in range(1, len(nbrs) + 1):
            for leaves in itertools.combinations(nbrs, r):
                base = [make_edge(a, x) for x in leaves]
                ls = set(leaves)
                inner = [e for e in p.edges if e[0] in ls and e[1] in ls]
                for k in range(len(inner) + 1):
                    for extra in itertools.combinations(inner, k):
                        units.append(make_unit(p, base + list(extra), a))
    units.sort()
    return units


@dataclass(frozen=True)
class Decomposition:
    """A minimum set of R1 units covering the pattern, in their total order."""

    pattern: Pattern
    units: tuple[R1Unit, ...]
    cover: VertexCover

    def __len__(self) -> int:
        return len(self.units)

    def index_of(self, unit: R1Unit) -> int:
        return self.units.index(unit)


def decompose(p: Pattern, cover: Iterable[int]) -> Decomposition:
    """Minimum-cardinality unit set with every anchor in ``cover``.

    Ties go to the lexicographically smallest sequence of unit edge sets.
    """
    cov = check_cover(p, cover)
    units = enumerate_r1_units(p, cov)
    if not units:
        raise CoverError("no R1 unit has an anchor in the cover")
    masks = [u.mask for u in units]
    full = p.full_mask
    best_gain = max(bin(m).count("1") for m in masks)

    def search(start: int, covered: int, left: int, chosen: list[int]):
        if covered == full:
            return list(chosen)
        if left == 0:
            return None
        missing = bin(full & ~covered).count("1")
        if missing > left * best_gain:
            return None
        for i in range(start, len(units)):
            m = masks[i]
            if m & ~covered == 0:
                continue
            chosen.append(i)
            found = search(i + 1, covered | m, left - 1, chosen)
            chosen.pop()
            if found is not None:
                return found
        return None

    for k in range(1, len(p.edges) + 1):
        found = search(0, 0, k, [])
        if found is not None:
            return Decomposition(p, tuple(units[i] for i in found), cov)
    raise CoverError("no decomposition exists")  # unreachable for a valid cover


# -- corpus and text format --------------------------------------------

CORPUS_EDGES: dict[str, tuple[Edge, ...]] = {
    "edge": ((1, 2),),
    "path3": ((1, 2), (2, 3)),
    "triangle": ((1, 2), (1, 3), (2, 3)),
    "cycle4": ((1, 2), (2, 3), (3, 4), (1, 4)),
    "k4": ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)),
    "star3": ((1, 2), (1, 3), (1, 4)),
    "tailed_triangle": ((1, 2), (1, 3), (2, 3), (3, 4)),
}


def corpus_pattern(name: str) -> Pattern:
    try:
        edges = CORPUS_EDGES[name]
    except KeyError:
        raise PatternError(f"unknown corpus pattern {name!r}; known: {sorted(CORPUS_EDGES)}") from None
    return Pattern.query(edges)


def parse_pattern(lines: Iterable[str], path=None) -> Pattern:
    """Parse ``e u v`` edge lines and optional ``o u v`` order lines."""
    edges, order = [], []
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3 or parts[0] not in ("e", "o"):
            raise GraphParseError(f"expected 'e u v' or 'o u v', got {line!r}", lineno, path)
        try:
            u, v = int(parts[1]), int(parts[2])
        except ValueError:
            raise GraphParseError(f"non-integer vertex id in {line!r}", lineno, path) from None
        if u == v:
            raise GraphParseError(f"self-loop or reflexive order on {u}", lineno, path)
        (edges if parts[0] == "e" else order).append((u, v))
    return Pattern.query(edges, order or None)


def read_pattern(spec: str | os.PathLike) -> Pattern:
    """Load a pattern file, or a corpus pattern when ``spec`` names one."""
    if isinstance(spec, str) and spec in CORPUS_EDGES and not os.path.exists(spec):
        return corpus_pattern(spec)
    with open(spec, encoding="utf-8") as fh:
        return parse_pattern(fh, path=spec)


def write_pattern(p: Pattern, out: TextIO) -> None:
    for a, b in p.edges:
        out.write(f"e {a} {b}\n")
    for a, b in sorted(p.order):
        out.write(f"o {a} {b}\n")
