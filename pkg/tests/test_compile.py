import pytest
from hypothesis import given, settings, strategies as st

from gcmc.csp import build_dp
from gcmc.errors import ResourceLimitError
from gcmc.graph import complete_graph, named_graph, path_graph
from gcmc.mso import NaiveEvaluator, catalog, parse, partition_wrapper
from gcmc.mso.automata import automaton_for
from gcmc.mso.compile import compile as compile_formula
from gcmc.mso.direct import IS, PRECEDENCE, VC, direct_encoding
from gcmc.oracle import projected_feasible
from gcmc.pipeline import partition_extension
from gcmc.treedec import decompose

from strategies import mso_texts, small_graphs


def _models(ext):
    dp = build_dp(ext.csp, ext.td)
    return projected_feasible(ext, dp)


def _masks(sets):
    return {sum(1 << (v - 1) for v in s) for s in sets}


def test_true_projects_to_everything():
    ext = compile_formula(catalog("true"), path_graph(3))
    assert {m for (m,) in _models(ext)} == set(range(8))


def test_is_on_path():
    ext = compile_formula(catalog("is"), path_graph(3))
    assert {m for (m,) in _models(ext)} == _masks([set(), {1}, {2}, {3}, {1, 3}])


def test_wrapper_on_triangle():
    phi = partition_wrapper([catalog("is"), catalog("true")])
    ext = compile_formula(phi, complete_graph(3))
    got = _models(ext)
    assert len(got) == 4
    assert {a for a, _ in got} == _masks([set(), {1}, {2}, {3}])


def test_contradiction_is_empty():
    phi = parse("free S; (exists_v x . x in S) & !(exists_v y . y in S)")
    ext = compile_formula(phi, path_graph(3))
    assert not build_dp(ext.csp, ext.td).root_realizable()


def test_parity_automaton():
    g = path_graph(4)
    td = decompose(g.vertices, g.sorted_edges())
    aut = automaton_for(parse("free X; card(X, 2) = 0"), g, td)
    for m in range(16):
        assert aut.accepts([m]) == (bin(m).count("1") % 2 == 0)


def test_direct_relations():
    g = path_graph(2)
    for name, rel in (("is", IS), ("vc", VC), ("precedence", PRECEDENCE)):
        ext = direct_encoding(name, g)
        cons = [c for c in ext.csp.constraints if len(c.scope) == 2]
        assert [set(c.relation) for c in cons] == [set(rel)]


def test_precedence_arcs():
    ext = direct_encoding("precedence", path_graph(3), arcs=[(3, 2)])
    models = {m for (m,) in _models(ext)}
    # 2 may be chosen only together with 3
    assert models == {m for m in range(8) if not (m & 0b010) or (m & 0b100)}


def test_direct_conn_on_path():
    g = path_graph(3)
    want = NaiveEvaluator(g, catalog("conn")).models()
    assert _models(direct_encoding("conn", g)) == want


def test_direct_part_of_k():
    g = path_graph(3)
    ext = direct_encoding("is", g, k=2, part=2)
    assert ext.k == 2
    got = _models(ext)
    assert len(got) == 8 * 5
    assert {b for _, b in got} == _masks([set(), {1}, {2}, {3}, {1, 3}])
    with pytest.raises(ValueError):
        direct_encoding("is", g, k=2, part=3)


def test_state_cap_names_subformula():
    g = named_graph("grid2x4")
    with pytest.raises(ResourceLimitError) as info:
        compile_formula(catalog("ham"), g, cap=20)
    assert "subformula" in str(info.value)


def test_summary_fields():
    ext = compile_formula(catalog("conn"), named_graph("c5"))
    s = ext.summary()
    assert set(s) >= {"aux_vars", "csp_size", "width", "variables", "constraints"}
    assert s["aux_vars"] == len(ext.aux) > 0


def test_extension_width_is_bounded():
    # fixed formula: the width of J' stays flat as paths grow
    widths = {n: compile_formula(catalog("is"), path_graph(n)).width for n in range(4, 9)}
    assert len(set(widths.values())) == 1


@pytest.mark.parametrize("name", ["vc", "is", "ds", "conn", "true"])
@given(g=small_graphs(min_n=1, max_n=5))
def test_generic_compile_matches_naive(name, g):
    phi = catalog(name)
    assert _models(compile_formula(phi, g)) == NaiveEvaluator(g, phi).models()


@pytest.mark.parametrize("name", ["vc", "is", "ds", "conn"])
@given(g=small_graphs(min_n=1, max_n=6))
def test_direct_matches_naive(name, g):
    assert _models(direct_encoding(name, g)) == NaiveEvaluator(g, catalog(name)).models()


@given(small_graphs(min_n=2, max_n=5), st.sampled_from(["is", "ds", "conn"]))
def test_partition_extension_generic_equals_direct(g, name):
    a = partition_extension(g, (name, "true"))
    b = partition_extension(g, (name, "true"), generic=True)
    assert _models(a) == _models(b)


@settings(max_examples=150)
@given(mso_texts(), small_graphs(min_n=1, max_n=4))
def test_random_formulas_match_naive(text, g):
    phi = parse(text)
    assert _models(compile_formula(phi, g)) == NaiveEvaluator(g, phi).models(), text
