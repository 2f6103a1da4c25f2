import itertools

import pytest
from hypothesis import given, strategies as st

from gcmc.errors import ParseError, SortError
from gcmc.graph import Graph, complete_graph, empty_graph, path_graph, star_graph
from gcmc.mso import NaiveEvaluator, catalog, evaluate_naive, parse, partition_wrapper
from gcmc.mso.catalog import NAMES
from gcmc.mso.formula import (BinOp, Card, Const, Member, Not, Quant, fold_constants, free_vars,
                              to_text)
from gcmc.mso.parser import tokenize

from strategies import small_graphs

IS_TEXT = "free U1; forall_v x . forall_v y . !edge(x,y) | !(x in U1) | !(y in U1)"


def test_parse_independent_set_shape():
    phi = parse(IS_TEXT)
    assert phi.free == ("U1",)
    assert isinstance(phi.body, Quant) and phi.body.kind == "forall"
    assert isinstance(phi.body.body, Quant)
    assert free_vars(phi.body) == {"U1"}


def test_parse_true_and_three_colour():
    assert parse("free U1; true").body == Const(True)
    three = catalog("3col")
    assert three.k == 3


def test_text_roundtrip():
    for name in NAMES:
        phi = catalog(name)
        again = parse(f"free {' '.join(phi.free)}; {to_text(phi.body)}")
        assert again == phi


def test_card_and_equality_parse():
    phi = parse("free X; card(X, 2) = 1 & exists_V Y . Y = X")
    assert isinstance(phi.body, BinOp)
    assert phi.body.left == Card("X", 2, 1)


@pytest.mark.parametrize("text, line, col", [
    ("free S; forall_v x . x in", 1, 26),
    ("free S;\n  x in S", 2, 3),
    ("free S; @", 1, 9),
    ("free S; card(S, 0) = 0", 1, 17),
])
def test_parse_errors_have_positions(text, line, col):
    with pytest.raises(ParseError) as info:
        parse(text)
    assert (info.value.line, info.value.column) == (line, col)


@pytest.mark.parametrize("text", [
    "free S; forall_v x . x in T",
    "free S; forall_v x . forall_e x . true",
    "free S; forall_e e . edge(e, e)",
    "free S; forall_v x . forall_e e . x = e",
])
def test_sort_errors(text):
    with pytest.raises(SortError):
        parse(text)


def test_duplicate_free_variable():
    with pytest.raises(ParseError):
        parse("free S S; true")


def test_tokenize_comments():
    toks = tokenize("free S; # a comment\ntrue")
    assert [t[1] for t in toks if t[0] != "eof"] == ["free", "S", ";", "true"]


def test_naive_examples():
    assert not evaluate_naive(complete_graph(3), catalog("is"), [{1, 2}])
    assert not evaluate_naive(path_graph(3), catalog("conn"), [{1, 3}])
    assert evaluate_naive(star_graph(3), catalog("ds"), [{1}])


def test_conn_convention():
    conn = catalog("conn")
    assert not evaluate_naive(empty_graph(2), conn, [{1, 2}])
    assert evaluate_naive(empty_graph(2), conn, [set()])
    assert evaluate_naive(path_graph(3), conn, [{1, 2, 3}])


def test_hamiltonicity():
    ham = catalog("ham")
    assert evaluate_naive(complete_graph(3), ham, [set()])
    assert not evaluate_naive(path_graph(3), ham, [set()])


def test_vertex_cover_models():
    g = path_graph(3)
    models = NaiveEvaluator(g, catalog("vc")).models()
    want = {(m,) for m in range(8) if all((m >> (u - 1)) & 1 or (m >> (v - 1)) & 1
                                          for u, v in g.sorted_edges())}
    assert models == want


def test_wrapper_partitions():
    g = path_graph(3)
    both_true = partition_wrapper([catalog("true"), catalog("true")])
    models = NaiveEvaluator(g, both_true).models()
    assert len(models) == 2 ** 3
    assert all(a | b == 7 and a & b == 0 for a, b in models)


def test_wrapper_three_colourings_of_triangle():
    phi = partition_wrapper([catalog("is")] * 3)
    assert len(NaiveEvaluator(complete_graph(3), phi).models()) == 6


def test_wrapper_needs_single_set_parts():
    with pytest.raises(ValueError):
        partition_wrapper([catalog("true")])
    with pytest.raises(ValueError):
        partition_wrapper([catalog("3col"), catalog("true")])


def test_fold_constants():
    body = BinOp("&", Const(True), Not(Const(False)))
    assert fold_constants(body) == Const(True)
    x = Member("x", "S")
    assert fold_constants(BinOp("|", x, Const(True))) == Const(True)
    assert fold_constants(BinOp("&", x, Const(True))) == x


def test_card_parity():
    phi = parse("free X; card(X, 2) = 0")
    ev = NaiveEvaluator(path_graph(3), phi)
    assert {m for (m,) in ev.models()} == {0b000, 0b011, 0b101, 0b110}


def test_naive_cap():
    from gcmc.errors import ResourceLimitError
    with pytest.raises(ResourceLimitError):
        NaiveEvaluator(path_graph(20), catalog("is"))


@given(small_graphs(min_n=1, max_n=6), st.data())
def test_is_matches_direct_loop(g, data):
    s = data.draw(st.sets(st.integers(1, g.n)))
    want = not any(u in s and v in s for u, v in g.sorted_edges())
    assert evaluate_naive(g, catalog("is"), [s]) == want


@given(small_graphs(min_n=1, max_n=6), st.data())
def test_ds_and_vc_match_direct_loops(g, data):
    s = data.draw(st.sets(st.integers(1, g.n)))
    adj = g.adjacency()
    assert evaluate_naive(g, catalog("ds"), [s]) == all(v in s or adj[v] & s for v in g.vertices)
    assert evaluate_naive(g, catalog("vc"), [s]) == all(u in s or v in s
                                                        for u, v in g.sorted_edges())


def _connected(g, s):
    if not s:
        return True
    adj = g.adjacency()
    start = next(iter(s))
    seen, stack = {start}, [start]
    while stack:
        u = stack.pop()
        for w in adj[u] & s:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen == s


@given(small_graphs(min_n=1, max_n=5), st.data())
def test_conn_matches_search(g, data):
    s = data.draw(st.sets(st.integers(1, g.n)))
    assert evaluate_naive(g, catalog("conn"), [s]) == _connected(g, s)
