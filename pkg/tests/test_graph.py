import itertools

import pytest
from hypothesis import given, strategies as st

from gcmc.errors import ParseError
from gcmc.graph import (Graph, KPartition, PairWeights, complete_graph, cut_value, empty_graph,
                        format_graph, load_graph, named_graph, parse_graph, parse_weights,
                        path_graph, weights_from_edges)

from strategies import small_graphs


def test_cut_value_triangle():
    g = complete_graph(3)
    assert cut_value(KPartition(2, (1, 2, 2)), weights_from_edges(g)) == 2


def test_cut_value_single_part_is_zero():
    g = complete_graph(4)
    assert cut_value(KPartition(3, (2, 2, 2, 2)), weights_from_edges(g)) == 0


def test_cut_value_path_alternating():
    g = path_graph(3)
    assert cut_value(KPartition(2, (1, 2, 1)), weights_from_edges(g)) == 2


def test_weights_from_edges():
    tri = weights_from_edges(complete_graph(3))
    assert sorted(tri.positive_pairs()) == [(1, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)]
    assert weights_from_edges(empty_graph(4)).positive_pairs() == []
    w = weights_from_edges(path_graph(3), 1.0, {(1, 3): 5.0})
    assert w.as_dict() == {(1, 2): 1.0, (2, 3): 1.0, (1, 3): 5.0}


def test_weights_reject_negative_and_loops():
    w = PairWeights(3)
    with pytest.raises(ValueError):
        w.set(1, 2, -1.0)
    with pytest.raises(ValueError):
        w.set(2, 2, 1.0)
    with pytest.raises(ValueError):
        weights_from_edges(path_graph(2), -1.0)


def test_partition_from_parts():
    h = KPartition.from_parts(4, [{1, 3}, {2, 4}])
    assert h.assignment == (1, 2, 1, 2)
    assert h.parts() == [frozenset({1, 3}), frozenset({2, 4})]
    with pytest.raises(ValueError):
        KPartition.from_parts(3, [{1}, {2}])
    with pytest.raises(ValueError):
        KPartition.from_parts(2, [{1, 2}, {2}])


def test_parse_graph_numeric_and_labels():
    g = parse_graph("3 2\n1 2\n2 3\n")
    assert g.n == 3 and g.sorted_edges() == [(1, 2), (2, 3)]
    h = parse_graph("# comment\n3 2\na b\nb c\n")
    assert tuple(h.labels) == ("a", "b", "c") and h.m == 2


@pytest.mark.parametrize("text", ["", "x 1\n", "3 2\n1 2\n", "2 1\n1 2 3\n", "2 1\n1 1\n"])
def test_parse_graph_errors(text):
    with pytest.raises(ParseError):
        parse_graph(text)


def test_parse_weights():
    g = path_graph(3)
    w = parse_weights("1 3 2.5\n", g, default=1.0)
    assert w(1, 3) == 2.5 and w(2, 3) == 1.0
    with pytest.raises(ParseError):
        parse_weights("1 9 1\n", g)
    with pytest.raises(ParseError):
        parse_weights("1 2 x\n", g)


def test_format_roundtrip():
    g = named_graph("grid2x3")
    assert parse_graph(format_graph(g)).sorted_edges() == g.sorted_edges()


def test_named_and_load():
    assert named_graph("c5").m == 5
    assert named_graph("k2_3").m == 6
    assert named_graph("star3").n == 4
    with pytest.raises(ValueError):
        named_graph("zz")
    with pytest.raises(ParseError):
        load_graph("no_such_graph_or_file")


@given(small_graphs(min_n=2, max_n=6), st.data())
def test_cut_invariant_under_part_relabeling(g, data):
    k = data.draw(st.integers(2, 4))
    lab = data.draw(st.lists(st.integers(1, k), min_size=g.n, max_size=g.n))
    perm = data.draw(st.permutations(range(1, k + 1)))
    w = weights_from_edges(g)
    h = KPartition(k, tuple(lab))
    h2 = KPartition(k, tuple(perm[a - 1] for a in lab))
    assert cut_value(h, w) == cut_value(h2, w)


@given(small_graphs(min_n=1, max_n=6), st.data())
def test_cut_value_matches_direct_sum(g, data):
    lab = data.draw(st.lists(st.integers(1, 3), min_size=g.n, max_size=g.n))
    w = weights_from_edges(g, 2.0)
    want = sum(2.0 for u, v in g.sorted_edges() if lab[u - 1] != lab[v - 1])
    assert cut_value(KPartition(3, tuple(lab)), w) == want


def test_graph_rejects_bad_edges():
    with pytest.raises(ValueError):
        Graph.from_edges(2, [(1, 3)])
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(1, 2), (2, 1)])
