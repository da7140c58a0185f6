from __future__ import annotations

import io
import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ddsl.errors import GraphParseError, UnknownVertexError, UpdateConflictError
from ddsl.graph import Graph, UpdateBatch, make_edge, parse_batch, parse_edge_list, write_batch, write_edge_list

TOY = Graph([(1, 2), (2, 3), (1, 3), (3, 4)])


def edge_lists(max_v=12):
    pair = st.tuples(st.integers(0, max_v), st.integers(0, max_v)).filter(lambda e: e[0] != e[1])
    return st.lists(pair, max_size=40)


def test_degree_examples():
    assert TOY.degree(3) == 3
    assert Graph([(1, 2)]).degree(1) == 1
    assert Graph(vertices=[7]).degree(7) == 0


def test_degree_unknown_vertex():
    with pytest.raises(UnknownVertexError):
        TOY.degree(99)


def test_induced_subgraph_examples():
    tri = TOY.induced_subgraph({1, 2, 3})
    assert tri == Graph([(1, 2), (2, 3), (1, 3)])
    assert TOY.induced_subgraph(TOY.vertices) == TOY
    two = TOY.induced_subgraph({1, 4})
    assert two.vertices == {1, 4} and two.num_edges == 0


def test_induced_subgraph_unknown():
    with pytest.raises(UnknownVertexError):
        TOY.induced_subgraph({1, 50})


def test_count_triangles_examples():
    assert TOY.count_triangles() == 1
    assert Graph(itertools.combinations(range(4), 2)).count_triangles() == 4


def test_count_triangles_matches_triple_scan():
    rng = random.Random(3)
    n = 200
    g = Graph([e for e in itertools.combinations(range(n), 2) if rng.random() < 0.05], range(n))
    adj = g.adjacency
    brute = sum(1 for a, b, c in itertools.combinations(range(n), 3)
                if b in adj[a] and c in adj[a] and c in adj[b])
    assert g.count_triangles() == brute


def test_apply_update_examples():
    g = Graph([(1, 2)])
    assert g.apply_update(UpdateBatch.of(add=[(2, 3)])) == Graph([(1, 2), (2, 3)])
    g = Graph([(1, 2), (2, 3)])
    out = g.apply_update(UpdateBatch.of(add=[(1, 3)], delete=[(1, 2)]))
    assert out == Graph([(2, 3), (1, 3)])
    assert g.apply_update(UpdateBatch()) == g


def test_apply_update_keeps_isolated_and_creates_endpoints():
    g = Graph([(1, 2)])
    out = g.apply_update(UpdateBatch.of(add=[(5, 6)], delete=[(1, 2)]))
    assert out.vertices == {1, 2, 5, 6}
    assert out.degree(1) == 0


@pytest.mark.parametrize("batch", [UpdateBatch.of(add=[(1, 2)]), UpdateBatch.of(delete=[(3, 4)])])
def test_apply_update_conflicts_name_the_edge(batch):
    with pytest.raises(UpdateConflictError) as info:
        Graph([(1, 2)]).apply_update(batch)
    assert info.value.edge in {(1, 2), (3, 4)}
    assert str(info.value.edge) in str(info.value)


def test_batch_add_and_delete_same_edge():
    with pytest.raises(UpdateConflictError):
        UpdateBatch.of(add=[(1, 2)], delete=[(2, 1)])


def test_make_edge_normalizes():
    assert make_edge(5, 2) == (2, 5)
    with pytest.raises(ValueError):
        make_edge(3, 3)


def test_self_loop_rejected():
    with pytest.raises(ValueError):
        Graph([(1, 1)])


def test_parse_edge_list_merges_duplicates_and_skips_comments():
    g = parse_edge_list(["# header", "1 2", "", "2 1", "2 3"])
    assert g.edges() == [(1, 2), (2, 3)]


@pytest.mark.parametrize("lines,lineno", [(["1 2", "3 3"], 2), (["1 2", "# c", "x 4"], 3), (["1 2 3"], 1)])
def test_parse_edge_list_errors_report_line(lines, lineno):
    with pytest.raises(GraphParseError) as info:
        parse_edge_list(lines)
    assert info.value.line == lineno


def test_edge_list_round_trip():
    buf = io.StringIO()
    write_edge_list(TOY, buf)
    assert parse_edge_list(buf.getvalue().splitlines()) == TOY


def test_batch_round_trip():
    b = UpdateBatch.of(add=[(1, 5)], delete=[(2, 3)])
    buf = io.StringIO()
    write_batch(b, buf)
    assert parse_batch(buf.getvalue().splitlines()) == b


@settings(max_examples=100, deadline=None)
@given(edge_lists())
def test_symmetry_and_degree_sum(edges):
    g = Graph(edges)
    for v in g.vertices:
        assert v not in g.neighbors(v)
        for u in g.neighbors(v):
            assert v in g.neighbors(u)
    assert sum(g.degree(v) for v in g.vertices) == 2 * g.num_edges


@settings(max_examples=100, deadline=None)
@given(edge_lists(), st.randoms(use_true_random=False))
def test_update_then_reverse_is_identity(edges, rnd):
    g = Graph(edges, vertices=range(13))
    present = g.edges()
    dels = rnd.sample(present, rnd.randint(0, len(present)))
    absent = [e for e in itertools.combinations(range(13), 2) if not g.has_edge(*e)]
    adds = rnd.sample(absent, rnd.randint(0, min(5, len(absent))))
    b = UpdateBatch.of(add=adds, delete=dels)
    g2 = g.apply_update(b)
    assert g2.apply_update(b.reverse()) == g
    for v in g2.vertices:
        assert all(v in g2.neighbors(u) for u in g2.neighbors(v))
