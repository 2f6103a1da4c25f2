import pytest

from gcmc.errors import ResourceLimitError
from gcmc.graph import KPartition, complete_graph, named_graph, path_graph, weights_from_edges
from gcmc.mso import catalog
from gcmc.oracle import (Check, brute_force, dense_weights, naive_models, pinned_graphs,
                         verification_corpus, verify_instance)
from gcmc.treedec import decompose


def test_p3_independent_side():
    g = path_graph(3)
    res = brute_force(g, weights_from_edges(g), ("is", "true"))
    assert res.opt == 2.0
    assert KPartition(2, (1, 2, 1)) in res.optimal
    assert res.total == 8 and res.feasible_count == 5


def test_triangle_independent_side():
    g = complete_graph(3)
    res = brute_force(g, weights_from_edges(g), ("is", "true"))
    assert res.opt == 2.0
    assert {h.parts()[0] for h in res.optimal} == {frozenset({1}), frozenset({2}),
                                                   frozenset({3})}


def test_false_is_infeasible():
    g = path_graph(3)
    res = brute_force(g, weights_from_edges(g), ("false", "true"))
    assert res.opt is None and not res.feasible


def test_literal_wrapper_agrees():
    g = named_graph("c5")
    w = dense_weights(g, 1)
    for parts in (("is", "true"), ("conn", "is", "true")):
        a = brute_force(g, w, parts)
        b = brute_force(g, w, parts, literal=True)
        assert (a.opt, a.feasible_count) == (b.opt, b.feasible_count)


def test_precedence_oracle():
    g = path_graph(3)
    res = brute_force(g, weights_from_edges(g), ("precedence", "true"))
    assert res.feasible_count == 4      # {}, {1}, {1,2}, {1,2,3}


def test_cap():
    g = path_graph(12)
    with pytest.raises(ResourceLimitError):
        brute_force(g, weights_from_edges(g), ("true", "true", "true"), cap=1000)


def test_pinned_corpus_shape():
    graphs = pinned_graphs()
    assert len(graphs) >= 20
    for _, g in graphs:
        assert g.n <= 8
        assert decompose(g.vertices, g.sorted_edges()).width <= 3


def test_corpus_has_both_k():
    ks = {inst.k for inst in verification_corpus()}
    assert ks == {2, 3}


def test_naive_models_match_catalog_semantics():
    assert len(naive_models(path_graph(3), catalog("is"))) == 5


def test_verify_p3():
    g = path_graph(3)
    rep = verify_instance(g, weights_from_edges(g), ("is", "true"), samples=200)
    assert rep.passed, [c.line() for c in rep.checks]
    names = [c.name for c in rep.checks]
    for want in ("V1 relaxation", "V2 feasibility", "V3 half approximation",
                 "V4 projected feasibility", "V5 DP properties"):
        assert want in names


def test_verify_unsatisfiable_consistently():
    g = path_graph(3)
    rep = verify_instance(g, weights_from_edges(g), ("false", "true"), samples=10)
    assert rep.passed and rep.checks[0].name == "infeasible consistently"


def test_verify_single_side():
    g = path_graph(4)
    rep = verify_instance(g, weights_from_edges(g), ("is", "true"), samples=50,
                          single_side=True)
    assert rep.passed


def test_check_line():
    assert Check("x", True, "ok").line().startswith("PASS")
    assert Check("x", False, "bad").line().startswith("FAIL")
