"""Join-tree cost model, optimal tree search and cover selection.

Subpatterns are identified by their edge bitmask relative to the query
pattern (units are subgraphs, so vertex sets alone are ambiguous).
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Iterator
from dataclasses import dataclass, field

from .errors import MissingSizeError, NoJoinTreeError
from .estimator import DegreeDistribution, expected_matches
from .pattern import (
    Decomposition,
    Pattern,
    R1Unit,
    VertexCover,
    all_vertex_covers,
    check_cover,
    decompose,
    enumerate_r1_units,
    enumerate_vertex_covers,
)
from .compression import r_lower


@dataclass(frozen=True, eq=False)
class JoinTree:
    mask: int
    fragment: Pattern
    unit: R1Unit | None = None
    left: JoinTree | None = None
    right: JoinTree | None = None
    estimated_cost: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.unit is not None

    def nodes(self) -> Iterator[JoinTree]:
        """Post-order traversal."""
        if not self.is_leaf:
            yield from self.left.nodes()
            yield from self.right.nodes()
        yield self

    def leaves(self) -> list[R1Unit]:
        return [n.unit for n in self.nodes() if n.is_leaf]

    def num_joins(self) -> int:
        return sum(1 for n in self.nodes() if not n.is_leaf)

    def height(self) -> int:
        return 0 if self.is_leaf else 1 + max(self.left.height(), self.right.height())

    def shape(self):
        """A hashable description, independent of estimated costs."""
        if self.is_leaf:
            return ("leaf", self.unit.edges, self.unit.anchor)
        return ("join", self.left.shape(), self.right.shape())

    def to_dict(self) -> dict:
        es = [list(e) for e in self.fragment.edges]
        if self.is_leaf:
            return {"unit": es, "anchor": self.unit.anchor}
        return {"join": es, "left": self.left.to_dict(), "right": self.right.to_dict()}

    def render(self, indent: int = 0) -> str:
        pad = "  " * indent
        es = " ".join(f"{a}-{b}" for a, b in self.fragment.edges)
        if self.is_leaf:
            return f"{pad}unit [{es}] @ {self.unit.anchor}"
        return "\n".join([f"{pad}join [{es}]", self.left.render(indent + 1), self.right.render(indent + 1)])


def leaf(p: Pattern, unit: R1Unit) -> JoinTree:
    return JoinTree(unit.mask, unit.fragment, unit=unit)


def join(p: Pattern, left: JoinTree, right: JoinTree, cost: float = 0.0) -> JoinTree:
    mask = left.mask | right.mask
    return JoinTree(mask, p.fragment(mask), left=left, right=right, estimated_cost=cost)


def join_key(p: Pattern, left_mask: int, right_mask: int, cover: Iterable[int]) -> frozenset[int]:
    return p.vertices_of(left_mask) & p.vertices_of(right_mask) & frozenset(cover)


# -- sizes and cost --------------------------------------------------------


@dataclass
class SizeModel:
    """Storage-unit sizes S(.) keyed by edge mask, with an optional estimating fallback."""

    sizes: dict[int, float] = field(default_factory=dict)
    fallback: Callable[[int], float] | None = None

    def __getitem__(self, mask: int) -> float:
        if mask in self.sizes:
            return self.sizes[mask]
        if self.fallback is None:
            raise MissingSizeError(mask)
        value = self.sizes[mask] = self.fallback(mask)
        return value

    def __contains__(self, mask: int) -> bool:
        return mask in self.sizes or self.fallback is not None

    @classmethod
    def estimated(cls, p: Pattern, cover: Iterable[int], dist: DegreeDistribution) -> SizeModel:
        return cls(fallback=lambda mask: estimated_size(p, mask, cover, dist))


def _estimate(frag: Pattern, dist: DegreeDistribution) -> float:
    if frag.num_vertices > dist.n:
        return 0.0
    return expected_matches(frag, dist)


def estimated_size(p: Pattern, mask: int, cover: Iterable[int], dist: DegreeDistribution) -> float:
    """Skeleton units plus candidate units, each bounded through estimated match counts."""
    frag = p.fragment(mask)
    inside = frozenset(cover) & set(frag.vertices)
    skel = frag.induced(inside)
    a = len(inside)
    b = frag.num_vertices - a
    return a * _estimate(skel, dist) + b * _estimate(frag, dist)


def tree_cost(t: JoinTree, sizes: SizeModel, phi_size: float = 0.0, final_decompress: bool = False,
              num_matches: float = 0.0, num_vertices: int | None = None) -> float:
    """Recursive cost; ``final_decompress`` adds the constant terms of the closed form."""

    def rec(n: JoinTree) -> float:
        if n.is_leaf:
            return sizes[n.mask]
        return rec(n.left) + rec(n.right) + 5 * sizes[n.left.mask] + 5 * sizes[n.right.mask] + sizes[n.mask]

    cost = rec(t)
    if final_decompress:
        nv = t.fragment.num_vertices if num_vertices is None else num_vertices
        cost += phi_size + sizes[t.mask] + nv * num_matches
    return cost


def closed_form_cost(t: JoinTree, sizes: SizeModel, phi_size: float, num_matches: float,
                     num_vertices: int | None = None) -> float:
    """6 S over non-root nodes, plus S(Phi), 2 S(p) and |V(p)| |M|."""
    nv = t.fragment.num_vertices if num_vertices is None else num_vertices
    total = sum(6 * sizes[n.mask] for n in t.nodes() if n is not t)
    return total + phi_size + 2 * sizes[t.mask] + nv * num_matches


# -- optimal tree ----------------------------------------------------------


def _popcount(x: int) -> int:
    return bin(x).count("1")


def optimal_join_tree(p: Pattern, cover: Iterable[int], sizes: SizeModel) -> JoinTree:
    """Cheapest join tree whose leaves are R1 units anchored in ``cover``.

    Dynamic programming over edge masks by increasing edge count; two
    subpatterns are combined only when they share a cover vertex.
    """
    cov = check_cover(p, cover)
    best: dict[int, tuple[float, JoinTree]] = {}
    for u in enumerate_r1_units(p, cov):
        c = sizes[u.mask]
        if u.mask not in best or c < best[u.mask][0]:
            best[u.mask] = (c, leaf(p, u))
    verts = {m: p.vertices_of(m) & cov for m in range(p.full_mask + 1)}
    for size in range(2, p.num_edges + 1):
        known = sorted(best)
        for i, a in enumerate(known):
            for b in known[i + 1:]:
                u = a | b
                if _popcount(u) != size or u == a or u == b:
                    continue
                if not (verts[a] & verts[b]):
                    continue
                ca, ta = best[a]
                cb, tb = best[b]
                c = ca + cb + 5 * sizes[a] + 5 * sizes[b] + sizes[u]
                if u not in best or c < best[u][0]:
                    best[u] = (c, join(p, ta, tb, c))
    if p.full_mask not in best:
        raise NoJoinTreeError(f"no valid join tree for {p!r} with cover {sorted(cov)}")
    c, t = best[p.full_mask]
    return JoinTree(t.mask, t.fragment, t.unit, t.left, t.right, c)


def _splits(p: Pattern, mask: int, cov: frozenset[int]) -> list[tuple[int, int]]:
    """Unordered pairs of proper submasks covering ``mask`` and sharing a cover vertex."""
    subs = []
    s = (mask - 1) & mask
    while s:
        subs.append(s)
        s = (s - 1) & mask
    out = []
    for i, a in enumerate(subs):
        for b in subs[i + 1:]:
            if a | b == mask and p.vertices_of(a) & p.vertices_of(b) & cov:
                out.append((a, b))
    return out


def count_join_trees(p: Pattern, cover: Iterable[int]) -> int:
    cov = check_cover(p, cover)
    leaves: dict[int, int] = {}
    for u in enumerate_r1_units(p, cov):
        leaves[u.mask] = leaves.get(u.mask, 0) + 1
    memo: dict[int, int] = {}

    def count(mask: int) -> int:
        if mask not in memo:
            memo[mask] = leaves.get(mask, 0) + sum(count(a) * count(b) for a, b in _splits(p, mask, cov))
        return memo[mask]

    return count(p.full_mask)


def enumerate_join_trees(p: Pattern, cover: Iterable[int]) -> Iterator[JoinTree]:
    """Every valid join tree for ``p`` (children unordered), for checking the DP."""
    cov = check_cover(p, cover)
    units = enumerate_r1_units(p, cov)

    def trees(mask: int) -> Iterator[JoinTree]:
        for u in units:
            if u.mask == mask:
                yield leaf(p, u)
        for a, b in _splits(p, mask, cov):
            right = list(trees(b))
            for ta in trees(a):
                for tb in right:
                    yield join(p, ta, tb)

    yield from trees(p.full_mask)


def exhaustive_min_cost(p: Pattern, cover: Iterable[int], sizes: SizeModel, limit: int = 50_000) -> float:
    """Minimum recursive cost over all valid trees.

    Trees are listed one by one when there are at most ``limit`` of them.
    Otherwise a top-down search over every split minimizes the closed form
    (6 S per non-root node plus S at the root); it shares no code with the DP.
    """
    cov = check_cover(p, cover)
    if count_join_trees(p, cov) <= limit:
        costs = [tree_cost(t, sizes) for t in enumerate_join_trees(p, cov)]
        if not costs:
            raise NoJoinTreeError(f"no valid join tree for {p!r}")
        return min(costs)
    leaf_masks = {u.mask for u in enumerate_r1_units(p, cov)}
    memo: dict[int, float] = {}

    def below(mask: int) -> float:
        if mask in memo:
            return memo[mask]
        best = 0.0 if mask in leaf_masks else float("inf")
        for a, b in _splits(p, mask, cov):
            best = min(best, below(a) + below(b) + 6 * sizes[a] + 6 * sizes[b])
        memo[mask] = best
        return best

    result = below(p.full_mask)
    if result == float("inf"):
        raise NoJoinTreeError(f"no valid join tree for {p!r}")
    return result + sizes[p.full_mask]


# -- cover selection -------------------------------------------------------


def estimated_r_lower(p: Pattern, cover: Iterable[int], dist: DegreeDistribution) -> float:
    cov = frozenset(cover)
    m_p = _estimate(p, dist)
    m_c = _estimate(p.induced(cov), dist)
    return float(r_lower(p, cov, m_p, m_c))


def optimal_connected_compression(p: Pattern, dist: DegreeDistribution) -> VertexCover:
    """Connected cover with the largest estimated ratio bound; ties prefer fewer vertices, then ids.

    Candidates are the minimal connected covers plus the full vertex set.
    """
    covers = enumerate_vertex_covers(p, connected_only=True)
    scored = [(-estimated_r_lower(p, c, dist), len(c), tuple(sorted(c)), c) for c in covers]
    return min(scored)[3]


@dataclass(frozen=True)
class Plan:
    pattern: Pattern
    cover: VertexCover
    compression_cover: VertexCover
    decomposition: Decomposition
    tree: JoinTree
    cost: float
    candidates: tuple[tuple[tuple[int, ...], float], ...]

    def to_dict(self) -> dict:
        return {
            "pattern": {"edges": [list(e) for e in self.pattern.edges],
                        "order": [list(o) for o in sorted(self.pattern.order)]},
            "cover": sorted(self.cover),
            "compression_cover": sorted(self.compression_cover),
            "decomposition": [{"edges": [list(e) for e in u.edges], "anchor": u.anchor}
                              for u in self.decomposition.units],
            "tree": self.tree.to_dict(),
            "estimated_cost": self.cost,
            "cover_costs": [{"cover": list(c), "cost": v} for c, v in self.candidates],
        }


def plan(p: Pattern, dist: DegreeDistribution, cover: Iterable[int] | None = None) -> Plan:
    """Pick the (connected cover, join tree) pair with the lowest estimated cost.

    With ``cover`` given only that cover is planned.
    """
    covers = [check_cover(p, cover)] if cover is not None else all_vertex_covers(p, connected_only=True)
    results = []
    for c in covers:
        sizes = SizeModel.estimated(p, c, dist)
        try:
            t = optimal_join_tree(p, c, sizes)
        except NoJoinTreeError:
            continue
        cost = t.estimated_cost + sizes[p.full_mask]
        results.append((cost, len(c), tuple(sorted(c)), c, t))
    if not results:
        raise NoJoinTreeError(f"no connected cover of {p!r} admits a join tree")
    results.sort(key=lambda r: r[:3])
    cost, _, _, c, t = results[0]
    return Plan(
        pattern=p,
        cover=c,
        compression_cover=optimal_connected_compression(p, dist),
        decomposition=decompose(p, c),
        tree=t,
        cost=cost,
        candidates=tuple((r[2], r[0]) for r in results),
    )


# -- left-deep plans for incremental joins -----------------------------------


@dataclass(frozen=True)
class LeftDeepPlan:
    units: tuple[R1Unit, ...]
    keys: tuple[frozenset[int], ...]   # keys[i] joins units[:i+1] with units[i+1]

    @property
    def lowest(self) -> R1Unit:
        return self.units[0]

    @property
    def height(self) -> int:
        return len(self.units) - 1


def left_deep_trees(decomp: Decomposition, lowest: R1Unit) -> LeftDeepPlan:
    """Fewest-unit left-deep ordering that starts at ``lowest`` and covers the pattern.

    Breadth-first over unit subsets, each step adding a unit that shares a cover
    vertex with the prefix; ties break by the decomposition order.
    """
    p = decomp.pattern
    cov = decomp.cover
    units = list(decomp.units)
    if lowest not in units:
        raise ValueError(f"{lowest!r} is not part of the decomposition")
    start = (lowest,)
    frontier = [start]
    seen = {lowest.mask}
    while frontier:
        nxt = []
        for seq in frontier:
            mask = 0
            for u in seq:
                mask |= u.mask
            if mask == p.full_mask:
                keys = []
                acc = seq[0].mask
                for u in seq[1:]:
                    keys.append(join_key(p, acc, u.mask, cov))
                    acc |= u.mask
                return LeftDeepPlan(seq, tuple(keys))
            for u in units:
                if u in seq or not (u.mask & ~mask):
                    continue
                if not join_key(p, mask, u.mask, cov):
                    continue
                new = mask | u.mask
                if new in seen:
                    continue
                seen.add(new)
                nxt.append(seq + (u,))
        frontier = nxt
    raise NoJoinTreeError(f"no left-deep tree from {lowest!r}")
