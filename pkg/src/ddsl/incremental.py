"""Maintaining a compressed match store under a batch of edge updates.

The new store is the old one with every match that uses a deleted edge
trimmed away, plus the patch set of matches that use an inserted edge.  The
patch set is assembled per decomposition unit ``q_i`` by a navigated
left-deep join: matches of ``q_i`` touching inserted edges are routed to the
partitions that can extend them, and each partition lists the next unit
locally, restricted to anchors compatible with the join key.
"""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from .compression import CompressedMatch, cc_join, drop_touching, store_units
from .costs import CostReport, sum_reports
from .engine import Round, parallel_map
from .errors import JoinKeyError
from .graph import Edge, Graph, UpdateBatch
from .matcher import list_unit_compressed, new_unit_matches
from .pattern import Decomposition, Pattern, R1Unit
from .planner import LeftDeepPlan, left_deep_trees
from .storage import NPStorage, UpdateCost, update


def filter_removed(records: Iterable[CompressedMatch], p: Pattern,
                   deleted: Iterable[Edge]) -> list[CompressedMatch]:
    """Drop every match that maps a pattern edge onto a deleted edge."""
    ed = frozenset(deleted)
    if not ed:
        return sorted(set(records))
    out = set()
    for r in records:
        t = drop_touching(r, p, ed)
        if t is not None:
            out.add(t)
    return sorted(out)


def route_match(f: CompressedMatch, unit: R1Unit, key: Iterable[int], storage: NPStorage) -> set[int]:
    """Partitions that may hold a partner of ``f`` for the next unit.

    An anchor inside the key pins the partner to the home of its image.
    Otherwise the partner's anchor must neighbor every key image, so only
    partitions present in all their navigation bitmaps qualify.
    """
    s = f.skel
    key = sorted(key)
    if not key:
        raise JoinKeyError("empty join key")
    for v in key:
        if v not in s:
            raise JoinKeyError(f"key vertex {v} is not bound by the skeleton")
    if unit.anchor in key:
        return {storage.h(s[unit.anchor])}
    bits = (1 << storage.m) - 1
    for v in key:
        bits &= storage.nav.get(s[v], 0)
    return {k for k in range(storage.m) if bits >> k & 1}


def _compatible_anchors(f: CompressedMatch, unit: R1Unit, key: Sequence[int], part) -> set[int]:
    s = f.skel
    if unit.anchor in key:
        a = s[unit.anchor]
        return {a} if a in part.centers else set()
    adj = part.graph.adjacency
    images = [s[v] for v in key]
    first = adj.get(images[0], frozenset())
    return {c for c in first if c in part.centers and all(c in adj.get(x, ()) for x in images[1:])}


@dataclass
class NavState:
    """One left-deep tree in flight: its plan, current level and partial records."""

    plan: LeftDeepPlan
    mask: int
    fragment: Pattern
    records: list[CompressedMatch]


def _nav_level(state: NavState, level: int, p: Pattern, storage: NPStorage, cover: frozenset[int],
               d: Graph, workers: int) -> tuple[NavState, CostReport]:
    unit = state.plan.units[level]
    key = sorted(state.plan.keys[level - 1])
    new_mask = state.mask | unit.mask
    result_frag = p.fragment(new_mask)
    # route: (partition, key images) -> left records
    routed: dict[tuple[int, tuple[int, ...]], list[CompressedMatch]] = defaultdict(list)
    shuffled = 0
    for r in state.records:
        s = r.skel
        images = tuple(s[v] for v in key)
        for k in sorted(route_match(r, unit, key, storage)):
            routed[(k, images)].append(r)
            shuffled += r.units

    def task(item):
        (k, _), lefts = item
        part = storage.partitions[k]
        out = []
        listed = 0
        by_anchor: dict[frozenset[int], list[CompressedMatch]] = {}
        for left in lefts:
            roots = frozenset(_compatible_anchors(left, unit, key, part))
            if not roots:
                continue
            if roots not in by_anchor:
                by_anchor[roots] = sorted(list_unit_compressed(unit, part, cover, roots))
                listed += store_units(by_anchor[roots])
            for right in by_anchor[roots]:
                c = cc_join(left, right, state.fragment, unit.fragment, result_frag, cover, d)
                if c is not None:
                    out.append(c)
        return out, listed

    results = parallel_map(task, sorted(routed.items()), workers)
    recs = sorted({c for out, _ in results for c in out})
    listed = sum(n for _, n in results)
    s_left = store_units(state.records)
    cost = CostReport(map_in=s_left, map_out=shuffled, shuffle=shuffled,
                      reduce_in=shuffled + listed, reduce_out=store_units(recs))
    return NavState(state.plan, new_mask, result_frag, recs), cost


def nav_join_trees(decomp: Decomposition, storage: NPStorage, added: Iterable[Edge], d: Graph,
                   workers: int = 1) -> tuple[dict[R1Unit, list[CompressedMatch]], list[Round]]:
    """Run all |Q| left-deep trees level by level; returns the partial patch per lowest unit."""
    p = decomp.pattern
    cover = frozenset(decomp.cover)
    ea = frozenset(added)
    plans = [left_deep_trees(decomp, q) for q in decomp.units]
    rounds = []

    def first(q: R1Unit):
        return sorted({r for part in storage.partitions for r in new_unit_matches(q, part, ea, cover)})

    states = [NavState(pl, pl.lowest.mask, pl.lowest.fragment, first(pl.lowest)) for pl in plans]
    rounds.append(Round("nav-join", "level 0",
                        CostReport(map_in=storage.size(), reduce_out=sum(store_units(s.records) for s in states))))
    height = max(pl.height for pl in plans)
    for level in range(1, height + 1):
        costs = []
        for i, st in enumerate(states):
            if level <= st.plan.height:
                states[i], c = _nav_level(st, level, p, storage, cover, d, workers)
                costs.append(c)
        c = sum_reports(costs)
        c.map_in += storage.size()
        rounds.append(Round("nav-join", f"level {level}", c))
    return {st.plan.lowest: st.records for st in states}, rounds


@dataclass
class PatchSet:
    partials: dict[R1Unit, list[CompressedMatch]]
    merged: list[CompressedMatch] = field(default_factory=list)


def dedup(partials: dict[R1Unit, list[CompressedMatch]], added: Iterable[Edge],
          decomp: Decomposition) -> PatchSet:
    """Keep a match in partial ``i`` only if no earlier unit maps an edge onto ``added``."""
    p = decomp.pattern
    ea = frozenset(added)
    out: dict[R1Unit, list[CompressedMatch]] = {}
    earlier: list[tuple[int, int]] = []
    for q in decomp.units:
        recs = partials.get(q, [])
        if earlier:
            kept = (drop_touching(r, p, ea, within=earlier) for r in recs)
            recs = sorted({r for r in kept if r is not None})
        out[q] = list(recs)
        earlier = sorted(set(earlier) | set(q.edges))
    merged = sorted({r for recs in out.values() for r in recs})
    return PatchSet(out, merged)


@dataclass
class MaintainResult:
    records: list[CompressedMatch]
    storage: NPStorage
    graph: Graph
    patch: PatchSet
    rounds: list[Round]
    storage_cost: UpdateCost
    survivors: int

    @property
    def cost(self) -> CostReport:
        return sum_reports(r.cost for r in self.rounds)

    def stats(self) -> dict:
        return {
            "storage_update": self.storage_cost.to_dict(),
            "rounds": [r.to_dict() for r in self.rounds],
            "total": self.cost.to_dict(),
            "surviving_records": self.survivors,
            "patch_records": len(self.patch.merged),
            "patch_units": store_units(self.patch.merged),
            "records": len(self.records),
        }


def maintain(records: Iterable[CompressedMatch], storage: NPStorage, d: Graph, batch: UpdateBatch,
             decomp: Decomposition, workers: int = 1) -> MaintainResult:
    """New store for ``d' = d + batch``: trimmed old records plus the deduplicated patch."""
    p = decomp.pattern
    records = list(records)
    new_storage, storage_cost = update(storage, d, batch, workers=workers)
    d2 = d.apply_update(batch)
    rounds = [Round("storage-update", "NP storage", storage_cost.report)]
    survivors = filter_removed(records, p, batch.deletions)
    rounds.append(Round("filter", "removed matches",
                        CostReport(map_in=store_units(records), map_out=store_units(survivors))))
    if batch.additions:
        partials, nav_rounds = nav_join_trees(decomp, new_storage, batch.additions, d2, workers)
        rounds.extend(nav_rounds)
    else:
        partials = {q: [] for q in decomp.units}
    patch = dedup(partials, batch.additions, decomp)
    merged = sorted(set(survivors) | set(patch.merged))
    return MaintainResult(merged, new_storage, d2, patch, rounds, storage_cost, len(survivors))
