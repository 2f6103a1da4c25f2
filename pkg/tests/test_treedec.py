import math

import pytest
from hypothesis import given

from gcmc.graph import complete_graph, named_graph, path_graph, star_graph
from gcmc.treedec import (TreeDecomposition, decompose, expand, min_fill_order, node_geometry,
                          validate)

from strategies import small_graphs


def _td(g, balance=True):
    return decompose(g.vertices, g.sorted_edges(), balance)


def test_path_width_one():
    g = path_graph(3)
    td = _td(g)
    assert td.width == 1
    assert validate(td, g.vertices, g.sorted_edges())
    assert {frozenset({1, 2}), frozenset({2, 3})} <= set(td.bags)


def test_triangle_single_bag():
    g = complete_graph(3)
    td = _td(g)
    assert td.width == 2
    assert frozenset({1, 2, 3}) in td.bags


def test_star_width_one():
    g = star_graph(3)
    td = _td(g)
    assert td.width == 1
    assert validate(td, g.vertices, g.sorted_edges())


def test_empty_graph_is_valid():
    g = named_graph("empty4")
    td = _td(g)
    assert validate(td, g.vertices, g.sorted_edges())
    assert td.width == 0


def test_validate_reports_edge_cover():
    td = TreeDecomposition.from_parents([{1, 2}, {3}], [-1, 0])
    rep = validate(td, [1, 2, 3], [(1, 2), (2, 3)], require_binary=False)
    assert not rep and rep.property == "edge-cover" and rep.witness == frozenset({2, 3})


def test_validate_reports_connectivity():
    td = TreeDecomposition.from_parents([{1, 2}, {1, 3}, {2, 3}], [-1, 0, 1])
    rep = validate(td, [1, 2, 3], [(1, 2), (1, 3), (2, 3)], require_binary=False)
    assert not rep and rep.property == "connectivity" and rep.witness == 2


def test_validate_requires_binary():
    td = TreeDecomposition.from_parents([{1, 2}, {2, 3}], [-1, 0])
    assert validate(td, [1, 2, 3], [(1, 2), (2, 3)], require_binary=False)
    rep = validate(td, [1, 2, 3], [(1, 2), (2, 3)])
    assert rep.property == "binary"


def test_geometry_examples():
    # r=0 with children a=1, a'=2; a has children b=3, b'=4
    td = TreeDecomposition.from_parents([{1}] * 5, [-1, 0, 0, 1, 1])
    geo = node_geometry(td)
    assert geo.T[0] == {0}
    assert geo.T[1] == geo.T[2] == {0, 1, 2}
    assert geo.T[3] == {0, 1, 2, 3, 4}
    assert geo.lca(3, 2) == 0 and geo.lca(3, 4) == 1
    assert geo.child_toward(0, 4) == 1
    assert geo.is_ancestor(1, 3) and not geo.is_ancestor(2, 3)


def test_dump_format():
    td = TreeDecomposition.from_parents([{1, 2}, {1}, {2}], [-1, 0, 0])
    assert td.dump().splitlines() == ["0 -1 1 2 : 1 2", "1 0 -1 -1 : 1", "2 0 -1 -1 : 2"]


def test_min_fill_order_covers_all():
    g = named_graph("grid2x3")
    order = min_fill_order(list(g.vertices), g.adjacency())
    assert sorted(v for v, _ in order) == list(g.vertices)


def test_balanced_depth_on_long_path():
    g = path_graph(40)
    td = _td(g)
    assert td.width == 1
    assert td.depth <= 4 * math.ceil(math.log2(len(td))) + 2
    assert td.depth < _td(g, balance=False).depth


@given(small_graphs(min_n=1, max_n=7))
def test_decompose_is_valid_and_binary(g):
    for balance in (True, False):
        td = _td(g, balance)
        assert validate(td, g.vertices, g.sorted_edges())


@given(small_graphs(min_n=2, max_n=7))
def test_geometry_sibling_sets(g):
    td = _td(g)
    geo = node_geometry(td)
    for i in td.nodes:
        kids = td.children[i]
        if kids:
            j, j2 = kids
            assert geo.T[j] == geo.T[j2] == geo.T[i] | {j, j2}
    for v, i in geo.hi.items():
        assert v in td.bags[i]
        assert all(v not in td.bags[a] for a in geo.path[i][:-1])


def test_expand_replaces_vertices():
    g = path_graph(3)
    td = _td(g)
    big = expand(td, {v: [(v, 1), (v, 2)] for v in g.vertices})
    assert big.width == 2 * (td.width + 1) - 1
