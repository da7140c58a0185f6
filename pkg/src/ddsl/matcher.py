"""Backtracking subgraph listing: the brute-force oracle and anchored unit listing.

A match is a tuple of data vertices aligned with ``fragment.vertices``.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping

from .compression import CompressedMatch, compress, split_touching
from .errors import CoverError, PatternSizeError, ScaleLimitError
from .graph import Edge, Graph, make_edge
from .pattern import MAX_PATTERN_VERTICES, Pattern, R1Unit
from .storage import NPPartition

Match = tuple[int, ...]

ORACLE_MAX_VERTICES = 5000


def _constraints(frag: Pattern, order: list[int], respect_order: bool):
    """For each DFS position: bound neighbors, and bound vertices that must be smaller / larger."""
    pos = {v: i for i, v in enumerate(order)}
    closure = frag.closure if respect_order else frozenset()
    plan = []
    for i, v in enumerate(order):
        nbrs = [w for w in frag.neighbors(v) if pos[w] < i]
        nbrs.sort(key=pos.__getitem__)
        below = [a for a, b in closure if b == v and pos[a] < i]
        above = [b for a, b in closure if a == v and pos[b] < i]
        plan.append((v, nbrs, below, above))
    return plan


def _search(frag: Pattern, adj: Mapping[int, frozenset[int]], order: list[int], roots: Iterable[int],
            respect_order: bool = True, min_degree: bool = False) -> set[Match]:
    plan = _constraints(frag, order, respect_order)
    assign: dict[int, int] = {}
    used: set[int] = set()
    out: set[Match] = set()
    all_vertices = sorted(adj)
    depth = len(order)
    degs = {v: frag.degree(v) for v in order}

    def ok(v, u, nbrs, below, above):
        if u in used:
            return False
        if min_degree and len(adj[u]) < degs[v]:
            return False
        for w in nbrs:
            if u not in adj[assign[w]]:
                return False
        for a in below:
            if assign[a] >= u:
                return False
        for b in above:
            if assign[b] <= u:
                return False
        return True

    def rec(i):
        if i == depth:
            out.add(tuple(assign[v] for v in frag.vertices))
            return
        v, nbrs, below, above = plan[i]
        if i == 0:
            cands = roots
        elif nbrs:
            cands = adj[assign[nbrs[0]]]
        else:
            cands = all_vertices
        for u in cands:
            if ok(v, u, nbrs, below, above):
                assign[v] = u
                used.add(u)
                rec(i + 1)
                used.discard(u)
                del assign[v]

    if depth == 0:
        return {()}
    rec(0)
    return out


def _connected_order(frag: Pattern) -> list[int]:
    order = [frag.vertices[0]] if frag.vertices else []
    rest = set(frag.vertices[1:])
    while rest:
        bound = set(order)
        nxt = [v for v in sorted(rest) if frag.neighbors(v) & bound]
        v = nxt[0] if nxt else min(rest)
        order.append(v)
        rest.discard(v)
    return order


def oracle_list(p: Pattern, d: Graph, respect_order: bool = True) -> set[Match]:
    """All matches of ``p`` in ``d`` by plain backtracking, with no pruning beyond the definition."""
    if p.num_vertices > MAX_PATTERN_VERTICES:
        raise PatternSizeError(f"oracle supports at most {MAX_PATTERN_VERTICES} pattern vertices")
    if d.num_vertices > ORACLE_MAX_VERTICES:
        raise ScaleLimitError(f"oracle is limited to {ORACLE_MAX_VERTICES} data vertices, got {d.num_vertices}")
    order = _connected_order(p)
    pairs = list(p.closure) if respect_order else []
    everything = sorted(d.vertices)
    f: dict[int, int] = {}
    out: set[Match] = set()

    def valid(v, u):
        if u in f.values():
            return False
        for w in p.neighbors(v):
            if w in f and not d.has_edge(f[w], u):
                return False
        for a, b in pairs:
            if a == v and b in f and not u < f[b]:
                return False
            if b == v and a in f and not f[a] < u:
                return False
        return True

    def rec(i):
        if i == len(order):
            out.add(tuple(f[v] for v in p.vertices))
            return
        v = order[i]
        bound = [w for w in order[:i] if w in p.neighbors(v)]
        for u in (sorted(d.neighbors(f[bound[0]])) if bound else everything):
            if valid(v, u):
                f[v] = u
                rec(i + 1)
                del f[v]

    rec(0)
    return out


def unit_order(q: R1Unit) -> list[int]:
    """Anchor first, then the other vertices by descending degree, ties by id."""
    frag = q.fragment
    rest = [v for v in frag.vertices if v != q.anchor]
    rest.sort(key=lambda v: (-frag.degree(v), v))
    return [q.anchor] + rest


def list_ac(q: R1Unit, part: NPPartition, roots: Iterable[int] | None = None) -> set[Match]:
    """Matches of ``q`` inside ``part`` whose anchor lands on a center.

    ``roots`` narrows the admissible anchor images further (they are
    intersected with the centers).
    """
    centers = part.centers if roots is None else part.centers & set(roots)
    adj = part.graph.adjacency
    need = q.fragment.degree(q.anchor)
    anchors = sorted(c for c in centers if len(adj[c]) >= need)
    return _search(q.fragment, adj, unit_order(q), anchors, True, min_degree=True)


def _check_slice(q: R1Unit, cover_slice: Iterable[int]) -> frozenset[int]:
    cs = frozenset(cover_slice) & set(q.vertices)
    if q.anchor not in cs:
        raise CoverError(f"anchor {q.anchor} of {q!r} is not in the cover {sorted(cs)}")
    return cs


def list_unit_compressed(q: R1Unit, part: NPPartition, cover_slice: Iterable[int],
                         roots: Iterable[int] | None = None) -> set[CompressedMatch]:
    cs = _check_slice(q, cover_slice)
    return compress(list_ac(q, part, roots), q.fragment, cs)


def touches(frag: Pattern, f: Match, edges: frozenset[Edge] | set[Edge]) -> bool:
    """Whether ``f`` maps some edge of ``frag`` onto ``edges``."""
    idx = frag.index
    return any(make_edge(f[idx[a]], f[idx[b]]) in edges for a, b in frag.edges)


def new_unit_matches(q: R1Unit, part: NPPartition, added: Iterable[Edge], cover_slice: Iterable[int],
                     roots: Iterable[int] | None = None) -> set[CompressedMatch]:
    """Compressed matches of ``q`` in ``part`` that use at least one edge of ``added``.

    Records are split so that the decompressed union is exact: a skeleton
    group is expanded into disjoint sub-records, each forcing one compressed
    vertex onto a candidate that touches ``added``.
    """
    cs = _check_slice(q, cover_slice)
    ea = frozenset(make_edge(*e) for e in added)
    if not ea:
        return set()
    # the anchor image is an endpoint of a touched edge or adjacent to both ends
    adj = part.graph.adjacency
    near = set()
    for x, y in ea:
        near.update(v for v in (x, y) if v in part.centers)
        if x in adj and y in adj:
            near.update(c for c in adj[x] & adj[y] if c in part.centers)
    if roots is not None:
        near &= set(roots)
    out: set[CompressedMatch] = set()
    for cm in compress(list_ac(q, part, near), q.fragment, cs):
        out.update(split_touching(cm, q.fragment, ea))
    return out
