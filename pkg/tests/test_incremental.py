from __future__ import annotations

import random

import pytest

from ddsl.compression import CompressedMatch, cc_join, compress, decompress, decompress_all
from ddsl.engine import run_tree
from ddsl.errors import CoverError, JoinKeyError
from ddsl.estimator import DegreeDistribution
from ddsl.graph import Graph, UpdateBatch
from ddsl.incremental import dedup, filter_removed, maintain, nav_join_trees, route_match
from ddsl.matcher import list_unit_compressed, oracle_list, touches
from ddsl.pattern import CORPUS_EDGES, Pattern, corpus_pattern, decompose, make_unit
from ddsl.planner import left_deep_trees, plan
from ddsl.storage import PartitionFunction, build

from instances import er_graph, random_batch


def scratch(p, d, h, cover=None):
    pl = plan(p, DegreeDistribution.from_graph(d), cover)
    return pl, run_tree(build(d, h=h), pl.tree, pl.cover, d)


def test_filter_removed_examples():
    p = corpus_pattern("triangle")
    d = Graph([(1, 2), (1, 3), (2, 3), (1, 4), (2, 4)])
    recs = sorted(compress(oracle_list(p, d), p, {1, 2}))
    assert filter_removed(recs, p, set()) == recs
    assert filter_removed(recs, p, {(1, 2)}) == []
    (left,) = filter_removed(recs, p, {(2, 4)})
    assert decompress(left, p, d) == {(1, 2, 3)}


def test_filter_removed_randomized():
    rng = random.Random(3)
    for _ in range(40):
        p = corpus_pattern(rng.choice(sorted(CORPUS_EDGES)))
        d = er_graph(rng, rng.randint(5, 18), 0.35)
        if not d.num_edges:
            continue
        dels = set(rng.sample(d.edges(), rng.randint(1, min(6, d.num_edges))))
        d2 = d.apply_update(UpdateBatch.of(delete=dels))
        pl, res = scratch(p, d, PartitionFunction(2))
        kept = filter_removed(res.records, p, dels)
        assert decompress_all(kept, p, d2) == oracle_list(p, d) & oracle_list(p, d2)


def test_route_match_anchor_in_key():
    p = corpus_pattern("cycle4")
    unit = make_unit(p, [(2, 3), (3, 4)], 3)
    d = Graph([(9, 1), (9, 2)])
    s = build(d, h=PartitionFunction(7))
    f = CompressedMatch.make({3: 9, 2: 1}, {})
    assert route_match(f, unit, [3], s) == {2}


def test_route_match_disjoint_bitmaps():
    p = corpus_pattern("path3")
    unit = make_unit(p, [(2, 3)], 3)
    # 0's only neighbor lives in partition 1, 5's only neighbor in partition 0
    d = Graph([(0, 1), (5, 4)])
    s = build(d, 2)
    f = CompressedMatch.make({1: 0, 2: 5}, {})
    assert route_match(f, unit, [1, 2], s) == set()
    with pytest.raises(JoinKeyError):
        route_match(f, unit, [3], s)


def test_route_match_has_no_false_negatives():
    rng = random.Random(15)
    checked = 0
    for _ in range(30):
        name = rng.choice(["cycle4", "tailed_triangle", "path3", "k4"])
        p = corpus_pattern(name)
        d = er_graph(rng, rng.randint(6, 20), 0.3)
        s = build(d, h=PartitionFunction(rng.choice([2, 4, 8]), "hash", seed=rng.randrange(99)))
        cover = frozenset(rng.choice([c for c in (p.vertices[:2], p.vertices[:3], p.vertices)
                                      if len(c) > 1] or [p.vertices]))
        try:
            dec = decompose(p, cover)
        except CoverError:
            continue
        for q in dec.units:
            ld = left_deep_trees(dec, q)
            if ld.height == 0:
                continue
            unit, key = ld.units[1], sorted(ld.keys[0])
            left = sorted(r for part in s.partitions for r in list_unit_compressed(q, part, cover))
            res_frag = p.fragment(q.mask | unit.mask)
            for f in left:
                routed = route_match(f, unit, key, s)
                for part in s.partitions:
                    partners = [g for g in list_unit_compressed(unit, part, cover)
                                if cc_join(f, g, q.fragment, unit.fragment, res_frag, cover, d)]
                    if partners:
                        assert part.id in routed
                        checked += 1
    assert checked > 0


PATH6 = ((1, 2), (2, 3), (3, 4), (4, 5), (5, 6))


def test_nav_join_three_units_two_partitions():
    p = Pattern.query(PATH6)
    dec = decompose(p, {2, 3, 4, 5})
    assert len(dec) == 3
    rng = random.Random(101)
    for _ in range(6):
        d = er_graph(rng, 14, 0.3)
        b = random_batch(rng, d, 4, extra_vertices=0)
        b = UpdateBatch(b.additions)
        d2 = d.apply_update(b)
        s2 = build(d2, 2)
        partials, rounds = nav_join_trees(dec, s2, b.additions, d2)
        assert [r.label for r in rounds] == ["level 0", "level 1", "level 2"]
        full = oracle_list(p, d2)
        for q in dec.units:
            want = {f for f in full if touches(q.fragment, tuple(f[p.index[v]] for v in q.vertices),
                                               b.additions)}
            assert decompress_all(partials[q], p, d2) == want


def test_nav_join_empty_additions():
    p = corpus_pattern("cycle4")
    dec = decompose(p, {1, 2, 3})
    d = er_graph(random.Random(1), 10, 0.4)
    partials, _ = nav_join_trees(dec, build(d, 2), set(), d)
    assert all(v == [] for v in partials.values())


def test_dedup_single_unit_is_identity():
    p = corpus_pattern("triangle")
    dec = decompose(p, {1, 2})
    recs = [CompressedMatch.make({1: 1, 2: 2}, {3: {3}})]
    out = dedup({dec.units[0]: recs}, {(1, 2)}, dec)
    assert out.partials[dec.units[0]] == recs and out.merged == recs


def test_dedup_keeps_match_in_first_partial():
    p = corpus_pattern("cycle4")
    dec = decompose(p, {1, 2, 3})
    q1, q2 = dec.units
    d = Graph([(1, 2), (2, 3), (3, 4), (1, 4)])
    (f,) = oracle_list(p, d)
    added = set(d.edges())  # touches both units
    rec = CompressedMatch.make({v: f[p.index[v]] for v in dec.cover},
                               {v: {f[p.index[v]]} for v in p.vertices if v not in dec.cover})
    out = dedup({q1: [rec], q2: [rec]}, added, dec)
    assert out.partials[q1] == [rec] and out.partials[q2] == []


def test_maintain_empty_batch_and_delete_everything():
    rng = random.Random(4)
    d = er_graph(rng, 15, 0.3)
    p = corpus_pattern("tailed_triangle")
    h = PartitionFunction(2)
    pl, res = scratch(p, d, h)
    out = maintain(res.records, build(d, h=h), d, UpdateBatch(), pl.decomposition)
    assert out.records == res.records and out.patch.merged == []
    gone = maintain(res.records, build(d, h=h), d, UpdateBatch.of(delete=d.edges()), pl.decomposition)
    assert gone.records == []


def test_maintain_randomized_end_to_end():
    rng = random.Random(2024)
    for i in range(30):
        name = sorted(CORPUS_EDGES)[i % len(CORPUS_EDGES)]
        p = corpus_pattern(name)
        d = er_graph(rng, rng.randint(4, 25), rng.uniform(0.1, 0.4))
        h = PartitionFunction(rng.choice([1, 2, 4, 8]), rng.choice(["mod", "hash"]), seed=i)
        b = random_batch(rng, d, rng.choice([1, 4, 16]))
        pl, res = scratch(p, d, h)
        out = maintain(res.records, build(d, h=h), d, b, pl.decomposition, workers=rng.choice([1, 2]))
        d2 = d.apply_update(b)
        assert out.storage == build(d2, h=h)
        got = decompress_all(out.records, p, d2)
        assert got == oracle_list(p, d2)
        parts = [decompress_all(r, p, d2) for r in out.patch.partials.values()]
        assert sum(map(len, parts)) == len(set().union(*parts))
        assert set().union(*parts) == oracle_list(p, d2) - oracle_list(p, d)
        stats = out.stats()
        assert stats["records"] == len(out.records)
