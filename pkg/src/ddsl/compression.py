"""Vertex-cover-based compression of match sets and the compressed join kernel.

A :class:`CompressedMatch` fixes the images of the cover vertices (the
skeleton) and keeps a candidate set for every other vertex.  Because the cover
touches every pattern edge, compressed vertices are only adjacent to skeleton
vertices; the constraints left for decompression are injectivity and order
between compressed vertices.
"""

from __future__ import annotations

import itertools
import json
import re
from collections import defaultdict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from fractions import Fraction

from .errors import CoverError, EstimatorDomainError
from .graph import Edge, Graph, make_edge
from .pattern import Pattern, is_vertex_cover

Match = tuple[int, ...]


@dataclass(frozen=True)
class CompressedMatch:
    skeleton: tuple[tuple[int, int], ...]
    candidates: tuple[tuple[int, frozenset[int]], ...]

    @classmethod
    def make(cls, skeleton: Mapping[int, int], candidates: Mapping[int, Iterable[int]] = ()) -> CompressedMatch:
        cands = dict(candidates)
        return cls(tuple(sorted(skeleton.items())),
                   tuple(sorted((v, frozenset(us)) for v, us in cands.items())))

    @property
    def skel(self) -> dict[int, int]:
        return dict(self.skeleton)

    @property
    def cands(self) -> dict[int, frozenset[int]]:
        return dict(self.candidates)

    @property
    def units(self) -> int:
        return len(self.skeleton) + sum(len(us) for _, us in self.candidates)

    @property
    def sort_key(self):
        return (self.skeleton, tuple((v, tuple(sorted(us))) for v, us in self.candidates))

    def __lt__(self, other: CompressedMatch) -> bool:
        return self.sort_key < other.sort_key

    def format(self) -> str:
        skel = ",".join(f"{v}→{u}" for v, u in self.skeleton)
        cands = ";".join(f"{v}→{{{','.join(map(str, sorted(us)))}}}" for v, us in self.candidates)
        return f"skeleton: {skel} | candidates: {cands}"

    def to_json(self) -> dict:
        return {
            "skeleton": {str(v): u for v, u in self.skeleton},
            "candidates": {str(v): sorted(us) for v, us in self.candidates},
        }


def store_units(records: Iterable[CompressedMatch]) -> int:
    return sum(r.units for r in records)


def _cover_slice(frag: Pattern, cover: Iterable[int]) -> frozenset[int]:
    cs = frozenset(cover) & set(frag.vertices)
    if not is_vertex_cover(frag, cs):
        raise CoverError(f"{sorted(cs)} does not cover {frag!r}")
    return cs


def compress(matches: Iterable[Match], frag: Pattern, cover: Iterable[int]) -> set[CompressedMatch]:
    """Group matches by skeleton; compressed vertices collect their images."""
    cs = _cover_slice(frag, cover)
    skel_pos = [(v, frag.index[v]) for v in frag.vertices if v in cs]
    comp_pos = [(v, frag.index[v]) for v in frag.vertices if v not in cs]
    groups: dict[tuple[int, ...], list[set[int]]] = {}
    for f in matches:
        key = tuple(f[i] for _, i in skel_pos)
        sets = groups.get(key)
        if sets is None:
            sets = groups[key] = [set() for _ in comp_pos]
        for s, (_, i) in zip(sets, comp_pos):
            s.add(f[i])
    out = set()
    for key, sets in groups.items():
        out.add(CompressedMatch(
            tuple((v, u) for (v, _), u in zip(skel_pos, key)),
            tuple((v, frozenset(s)) for (v, _), s in zip(comp_pos, sets)),
        ))
    return out


def decompress(cm: CompressedMatch, frag: Pattern, d: Graph | None = None) -> set[Match]:
    """Cartesian product of the candidate sets, filtered by injectivity, order and (given ``d``) edges."""
    f = cm.skel
    comp = [v for v, _ in cm.candidates]
    pools = [sorted(us) for _, us in cm.candidates]
    closure = frag.closure
    out = set()
    for combo in itertools.product(*pools):
        g = dict(f)
        g.update(zip(comp, combo))
        if len(set(g.values())) != len(g):
            continue
        if any(g[a] >= g[b] for a, b in closure):
            continue
        if d is not None and not all(d.has_edge(g[a], g[b]) for a, b in frag.edges):
            continue
        out.add(tuple(g[v] for v in frag.vertices))
    return out


def decompress_all(records: Iterable[CompressedMatch], frag: Pattern, d: Graph | None = None) -> set[Match]:
    out: set[Match] = set()
    for r in records:
        out |= decompress(r, frag, d)
    return out


def tighten(cm: CompressedMatch, frag: Pattern, d: Graph | None = None) -> CompressedMatch | None:
    """Shrink candidate sets to the images that occur in some decompressed match."""
    matches = decompress(cm, frag, d)
    if not matches:
        return None
    cover = {v for v, _ in cm.skeleton}
    (out,) = compress(matches, frag, cover)
    return out


# -- edge predicates on compressed records -----------------------------


def _touching(cm: CompressedMatch, frag: Pattern, edges: frozenset[Edge],
              within: Iterable[Edge] | None = None):
    """Split every compressed vertex's candidates by whether they hit ``edges``.

    Only pattern edges in ``within`` (default: all of ``frag``) are considered.
    Returns ``None`` when a skeleton-skeleton edge already hits, otherwise a
    list of ``(v, hitting, other)`` triples.
    """
    s = cm.skel
    pattern_edges = frag.edges if within is None else [make_edge(*e) for e in within]
    nbrs: dict[int, list[int]] = defaultdict(list)
    for a, b in pattern_edges:
        if a in s and b in s:
            if make_edge(s[a], s[b]) in edges:
                return None
        elif a in s:
            nbrs[b].append(s[a])
        elif b in s:
            nbrs[a].append(s[b])
    parts = []
    for v, us in cm.candidates:
        images = nbrs.get(v, ())
        hit = frozenset(u for u in us if any(make_edge(u, x) in edges for x in images))
        parts.append((v, hit, us - hit))
    return parts


def split_touching(cm: CompressedMatch, frag: Pattern, edges: frozenset[Edge],
                   within: Iterable[Edge] | None = None) -> list[CompressedMatch]:
    """Disjoint sub-records holding exactly the matches of ``cm`` that use an edge of ``edges``.

    Sub-record ``i`` pins compressed vertex ``i`` to hitting candidates and
    every earlier one to non-hitting candidates.
    """
    parts = _touching(cm, frag, edges, within)
    if parts is None:
        return [cm]
    s = cm.skel
    out = []
    for i, (v, hit, _) in enumerate(parts):
        if not hit:
            continue
        cands = {}
        for j, (w, h, rest) in enumerate(parts):
            cands[w] = rest if j < i else hit if j == i else h | rest
        if all(cands.values()):
            out.append(CompressedMatch.make(s, cands))
    return out


def drop_touching(cm: CompressedMatch, frag: Pattern, edges: frozenset[Edge],
                  within: Iterable[Edge] | None = None) -> CompressedMatch | None:
    """The part of ``cm`` using no edge of ``edges``, or ``None`` when nothing is left.

    Both conditions are per-candidate, so trimming is exact and no split is needed.
    """
    parts = _touching(cm, frag, edges, within)
    if parts is None:
        return None
    if any(not rest for _, _, rest in parts):
        return None
    return CompressedMatch.make(cm.skel, {v: rest for v, _, rest in parts})


# -- ratio -------------------------------------------------------------


def r_lower(p: Pattern, cover: Iterable[int], m_p, m_cover):
    """Guaranteed compression ratio from |M(p)| and |M(p[cover])|.

    Exact (a ``Fraction``) for integer counts.  ``m_cover`` may be smaller
    than ``m_p`` (a one-vertex cover of a star, say); only negative counts are
    rejected.
    """
    if m_p < 0 or m_cover < 0:
        raise EstimatorDomainError(f"match counts must be non-negative, got {m_p}, {m_cover}")
    if m_p == 0:
        return Fraction(0) if isinstance(m_p, int) else 0.0
    nv = p.num_vertices
    nc = len(frozenset(cover) & set(p.vertices))
    num = nv * m_p
    den = nv * m_p + nc * (m_cover - m_p)
    if isinstance(m_p, int) and isinstance(m_cover, int):
        return Fraction(num, den)
    return num / den


@dataclass(frozen=True)
class CompressionStats:
    plain_units: int
    stored_units: int
    ratio: Fraction
    r_lower: Fraction | None = None

    def to_dict(self) -> dict:
        return {
            "plain_units": self.plain_units,
            "stored_units": self.stored_units,
            "ratio": float(self.ratio),
            "r_lower": None if self.r_lower is None else float(self.r_lower),
        }


def compression_stats(records: Iterable[CompressedMatch], frag: Pattern, num_matches: int,
                      lower=None) -> CompressionStats:
    stored = store_units(records)
    plain = frag.num_vertices * num_matches
    ratio = Fraction(plain, stored) if stored else Fraction(1)
    return CompressionStats(plain, stored, ratio, lower)


def group_savings(records: Iterable[CompressedMatch], frag: Pattern, d: Graph | None = None):
    """Per record: ``(a, b, c, stored units)`` with ``c`` the decompressed match count."""
    out = []
    for r in records:
        c = len(decompress(r, frag, d))
        out.append((len(r.skeleton), len(r.candidates), c, r.units))
    return out


# -- compressed join -----------------------------------------------------


def cc_join(left: CompressedMatch, right: CompressedMatch, left_frag: Pattern, right_frag: Pattern,
            result_frag: Pattern, cover: Iterable[int], d: Graph | None = None) -> CompressedMatch | None:
    """Join two consistently compressed records on their shared skeleton vertices.

    Shared compressed vertices keep the intersection of both candidate sets.
    A candidate is then dropped when it repeats a skeleton image, breaks an
    order constraint against a skeleton vertex, or (given ``d``) misses an
    edge to a skeleton neighbor.  Constraints between two compressed vertices
    are left to decompression.
    """
    cs = frozenset(cover)
    s1, s2 = left.skel, right.skel
    skel = dict(s1)
    for v, u in s2.items():
        if skel.get(v, u) != u:
            return None
        skel[v] = u
    if len(set(skel.values())) != len(skel):
        return None
    closure = result_frag.closure
    for a, b in closure:
        if a in skel and b in skel and skel[a] >= skel[b]:
            return None
    if d is not None:
        for a, b in result_frag.edges:
            if a in skel and b in skel and not d.has_edge(skel[a], skel[b]):
                return None
    c1, c2 = left.cands, right.cands
    images = set(skel.values())
    cands = {}
    for v in result_frag.vertices:
        if v in skel:
            continue
        if v in cs:
            raise CoverError(f"cover vertex {v} is not bound by either skeleton")
        if v in c1 and v in c2:
            pool = c1[v] & c2[v]
        else:
            pool = c1.get(v, c2.get(v))
        lower = [skel[a] for a, b in closure if b == v and a in skel]
        upper = [skel[b] for a, b in closure if a == v and b in skel]
        nbrs = [skel[w] for w in result_frag.neighbors(v) if w in skel]
        keep = frozenset(
            u for u in pool
            if u not in images
            and all(x < u for x in lower)
            and all(u < x for x in upper)
            and (d is None or all(d.has_edge(u, x) for x in nbrs))
        )
        if not keep:
            return None
        cands[v] = keep
    return CompressedMatch.make(skel, cands)


def plain_join(left: Iterable[Match], right: Iterable[Match], left_frag: Pattern, right_frag: Pattern,
               result_frag: Pattern) -> set[Match]:
    """Reference join of two plain match sets."""
    shared = [v for v in left_frag.vertices if v in right_frag.index]
    li = [left_frag.index[v] for v in shared]
    ri = [right_frag.index[v] for v in shared]
    by_key: dict[tuple, list[Match]] = defaultdict(list)
    for g in right:
        by_key[tuple(g[i] for i in ri)].append(g)
    closure = result_frag.closure
    out = set()
    for f in left:
        for g in by_key.get(tuple(f[i] for i in li), ()):
            m = dict(zip(left_frag.vertices, f))
            m.update(zip(right_frag.vertices, g))
            if len(set(m.values())) != len(m):
                continue
            if any(m[a] >= m[b] for a, b in closure):
                continue
            out.add(tuple(m[v] for v in result_frag.vertices))
    return out


# -- text formats --------------------------------------------------------

_ARROW = re.compile(r"\s*(?:→|->)\s*")


def parse_record(line: str) -> CompressedMatch:
    head, _, tail = line.partition("|")
    head = head.strip()
    tail = tail.strip()
    if not head.startswith("skeleton:") or not tail.startswith("candidates:"):
        raise ValueError(f"malformed compressed record {line!r}")
    skel = {}
    body = head[len("skeleton:"):].strip()
    if body:
        for item in body.split(","):
            v, u = _ARROW.split(item.strip())
            skel[int(v)] = int(u)
    cands = {}
    body = tail[len("candidates:"):].strip()
    if body:
        for item in body.split(";"):
            v, us = _ARROW.split(item.strip())
            us = us.strip()
            if not (us.startswith("{") and us.endswith("}")):
                raise ValueError(f"malformed candidate set {us!r}")
            inner = us[1:-1].strip()
            cands[int(v)] = frozenset(int(x) for x in inner.split(",")) if inner else frozenset()
    return CompressedMatch.make(skel, cands)


def write_records(records: Iterable[CompressedMatch], out) -> None:
    for r in sorted(records):
        out.write(r.format() + "\n")


def read_records(path) -> list[CompressedMatch]:
    with open(path, encoding="utf-8") as fh:
        return [parse_record(line) for line in fh if line.strip()]


def records_to_json(records: Iterable[CompressedMatch]) -> str:
    return json.dumps([r.to_json() for r in sorted(records)], sort_keys=True)


def write_matches(matches: Iterable[Match], out) -> None:
    for f in sorted(matches):
        out.write(" ".join(map(str, f)) + "\n")


def read_matches(path) -> set[Match]:
    with open(path, encoding="utf-8") as fh:
        return {tuple(int(x) for x in line.split()) for line in fh if line.strip()}
