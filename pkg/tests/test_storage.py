from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ddsl.errors import NotCenterError, UpdateConflictError
from ddsl.graph import Graph, UpdateBatch
from ddsl.storage import (
    PartitionFunction,
    build,
    extra_edge_cost,
    load_storage,
    message_cost_of_update,
    neighbor_set,
    save_storage,
    update,
)

from instances import er_graph, random_batch

TOY = Graph([(1, 2), (2, 3), (1, 3), (3, 4)])
TRIANGLE = Graph([(1, 2), (2, 3), (1, 3)])


def local_graph_union(d: Graph, centers):
    """Independent oracle: union of induced closed neighborhoods."""
    edges = set()
    for u in centers:
        closed = d.neighbors(u) | {u}
        edges |= {e for e in d.edges() if e[0] in closed and e[1] in closed}
    return edges


def check_nav(s, d):
    for v in d.vertices:
        want = {s.h(w) for w in d.neighbors(v)}
        assert s.nav_partitions(v) == want, v


def test_build_single_partition_is_whole_graph():
    s = build(TOY, 1)
    (part,) = s.partitions
    assert part.graph == TOY
    assert part.centers == TOY.vertices
    assert part.borders == frozenset()


def test_build_path_one_partition_per_vertex():
    d = Graph([(1, 2), (2, 3)])
    s = build(d, 3)
    # mod 3 sends 1, 2, 3 to partitions 1, 2, 0
    assert s.home(2).graph.edges() == [(1, 2), (2, 3)]
    assert s.home(1).graph.edges() == [(1, 2)]
    assert s.home(3).graph.edges() == [(2, 3)]


def test_build_triangle_each_partition_holds_triangle():
    s = build(TRIANGLE, 3)
    for part in s.partitions:
        assert part.graph == TRIANGLE
        assert len(part.centers) == 1


@pytest.mark.parametrize("m", [1, 2, 3, 5])
@pytest.mark.parametrize("kind", ["mod", "hash"])
def test_partitions_equal_local_graph_union(m, kind):
    rng = random.Random(m * 10 + len(kind))
    d = er_graph(rng, 25, 0.2)
    h = PartitionFunction(m, kind, seed=4)
    s = build(d, h=h)
    for part in s.partitions:
        centers = {v for v in d.vertices if h(v) == part.id}
        assert part.centers == centers
        assert set(part.graph.edges()) == local_graph_union(d, centers)
    assert s.reconstruct() == d
    check_nav(s, d)


def test_hash_partition_is_stable():
    h = PartitionFunction(8, "hash", seed=11)
    assert [h(v) for v in range(20)] == [PartitionFunction(8, "hash", seed=11)(v) for v in range(20)]
    assert all(0 <= h(v) < 8 for v in range(1000))
    assert PartitionFunction.parse(h.spec) == h


def test_extra_edge_triangle_m3():
    rep = extra_edge_cost(build(TRIANGLE, 3), TRIANGLE)
    assert rep.raw == 6
    assert rep.closing == 3
    assert rep.bound == 3
    rep.check()


def test_extra_edge_triangle_free_and_clique():
    c4 = Graph([(1, 2), (2, 3), (3, 4), (1, 4)])
    for m in (1, 2, 4):
        assert extra_edge_cost(build(c4, m), c4).closing == 0
    k5 = Graph(itertools.combinations(range(5), 2))
    rep = extra_edge_cost(build(k5, 1), k5)
    assert rep.raw == 0 and rep.closing == 0


def test_extra_edge_bounds_random():
    rng = random.Random(5)
    for _ in range(20):
        d = er_graph(rng, rng.randint(5, 40), rng.uniform(0.05, 0.5))
        m = rng.choice([1, 2, 4, 8])
        extra_edge_cost(build(d, m), d).check()


def test_neighbor_set_examples():
    d = Graph([(1, 2), (1, 3)])
    part = build(d, 1).partitions[0]
    assert neighbor_set(part, 1, UpdateBatch.of(add=[(1, 5)], delete=[(1, 3)])) == {2, 5}
    assert neighbor_set(part, 1, UpdateBatch()) == {2, 3}
    assert neighbor_set(build(Graph([(1, 2)]), 1).partitions[0], 1, UpdateBatch.of(delete=[(1, 2)])) == set()


def test_neighbor_set_requires_center():
    s = build(Graph([(1, 2)]), 2)
    with pytest.raises(NotCenterError):
        neighbor_set(s.home(1), 2, UpdateBatch())


def test_update_case_c1_same_partition_centers():
    d = Graph([(0, 1), (2, 3)])
    s = build(d, 2)
    b = UpdateBatch.of(add=[(0, 2)])
    new, cost = update(s, d, b)
    assert set(new.partitions[0].graph.edges()) - set(s.partitions[0].graph.edges()) == {(0, 2)}
    assert new.partitions[1] == s.partitions[1]
    assert cost.report.shuffle == 0


def test_update_case_c2_border_border_deletion():
    # 0 is the only center of partition 0 (m=3), 1 and 4 are its borders
    d = Graph([(0, 1), (0, 4), (1, 4)])
    s = build(d, 3)
    assert (1, 4) in s.partitions[0].graph.edges()
    new, _ = update(s, d, UpdateBatch.of(delete=[(1, 4)]))
    assert set(s.partitions[0].graph.edges()) - set(new.partitions[0].graph.edges()) == {(1, 4)}
    assert new == build(d.apply_update(UpdateBatch.of(delete=[(1, 4)])), 3)


def test_update_empty_batch_m1():
    s = build(TOY, 1)
    new, cost = update(s, TOY, UpdateBatch())
    assert new == s
    assert cost.report.shuffle == 0


def test_update_rejects_conflicts():
    with pytest.raises(UpdateConflictError):
        update(build(TOY, 2), TOY, UpdateBatch.of(add=[(1, 2)]))


def test_update_equals_rebuild_randomized():
    rng = random.Random(50)
    for _ in range(50):
        d = er_graph(rng, rng.randint(2, 60), rng.uniform(0.02, 0.3))
        m = rng.choice([1, 2, 4, 8])
        h = PartitionFunction(m, rng.choice(["mod", "hash"]), seed=rng.randrange(100))
        b = random_batch(rng, d, rng.choice([1, 4, 16]))
        s = build(d, h=h)
        new, cost = update(s, d, b, workers=rng.choice([1, 3]))
        d2 = d.apply_update(b)
        assert new == build(d2, h=h)
        check_nav(new, d2)
        assert cost.report.shuffle <= 3 * cost.neighbor_total
        assert cost.report.total <= cost.bound


def test_message_cost_matches_update():
    rng = random.Random(9)
    d = er_graph(rng, 20, 0.2)
    s = build(d, 4)
    b = random_batch(rng, d, 4)
    assert message_cost_of_update(s, d, b) == update(s, d, b)[1]


def test_persistence_round_trip(tmp_path):
    rng = random.Random(2)
    d = er_graph(rng, 30, 0.2)
    for h in (PartitionFunction(4), PartitionFunction(70, "hash", seed=3)):
        s = build(d, h=h)
        out = tmp_path / h.spec.replace(":", "_")
        save_storage(s, out)
        loaded = load_storage(out)
        assert loaded == s
        first = {p.name: p.read_bytes() for p in out.iterdir()}
        save_storage(loaded, out)
        assert {p.name: p.read_bytes() for p in out.iterdir()} == first
    words = (70 + 63) // 64
    assert (tmp_path / "hash_70_3" / "nav.bits").stat().st_size == len(d.vertices) * 8 * (1 + words)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([1, 2, 3, 4, 8]))
def test_update_invariants_property(seed, m):
    rng = random.Random(seed)
    d = er_graph(rng, rng.randint(2, 15), 0.3)
    s = build(d, m)
    b = random_batch(rng, d, rng.randint(1, 6))
    new, cost = update(s, d, b)
    d2 = d.apply_update(b)
    assert new.reconstruct() == d2
    check_nav(new, d2)
    assert cost.report.shuffle <= 3 * cost.neighbor_total
