import re

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gcmc.errors import ResourceLimitError
from gcmc.graph import KPartition, Graph, complete_graph, named_graph, path_graph, weights_from_edges
from gcmc.lp.build import build_lp, dp_consistent, export_lp, lp_size_report, objective_support
from gcmc.lp.solve import solve
from gcmc.oracle import brute_force, dense_weights
from gcmc.rounding import (complete_assignment, integral_point, partition_base_values,
                           states_of_solution)

from helpers import build, solved
from strategies import forests


def test_single_vertex_program():
    g = Graph.from_edges(1, [])
    _, program, sol = solved(g, ("true", "true"))
    assert sol.objective == pytest.approx(0.0)
    root = program.T[program.dp.td.root]
    assert program.y_values(sol.x, root).sum() == pytest.approx(1.0)


def test_path_max_cut_is_two():
    assert solved(path_graph(3), ("true", "true"))[2].objective == pytest.approx(2.0)


def test_triangle_independent_side():
    g = complete_graph(3)
    _, _, sol = solved(g, ("is", "true"))
    assert sol.objective >= brute_force(g, weights_from_edges(g), ("is", "true")).opt - 1e-9


def test_dp_consistent_examples():
    prep, program = build(path_graph(4), ("is", "true"))
    dp, td = prep.dp, prep.dp.td
    internal = next(i for i in td.nodes if td.children[i])
    j, j2 = td.children[internal]
    good = None
    for s in range(len(dp.states[internal])):
        if not dp.realizable[internal][s]:
            continue
        for pair in dp.valid_pairs(internal, s):
            if all(dp.realizable[c][w] for c, w in zip((j, j2), pair)):
                good = (s, *pair)
                break
        if good:
            break
    assert dp_consistent(dp, (internal, j, j2), good)
    bad_pair = next(((s, a, b) for s in range(len(dp.states[internal]))
                     for a in range(len(dp.states[j])) for b in range(len(dp.states[j2]))
                     if dp.realizable[internal][s] and dp.realizable[j][a] and dp.realizable[j2][b]
                     and not dp.in_F(internal, s, [a, b])), None)
    assert bad_pair is not None
    assert not dp_consistent(dp, (internal, j, j2), bad_pair)


def test_dp_consistent_rejects_unrealizable_leaf():
    # the second part must be independent too, so some leaf states die
    prep, _ = build(path_graph(3), ("conn", "is"))
    dp = prep.dp
    dead = [(l, s) for l in dp.td.leaves for s in range(len(dp.states[l]))
            if not dp.realizable[l][s]]
    for l, s in dead:
        assert not dp_consistent(dp, (l,), (s,))


def test_objective_support_only_weighted_pairs():
    g = path_graph(4)
    w = weights_from_edges(g, 1.0, {(1, 4): 3.0, (2, 3): 0.0})
    _, program = build(g, ("is", "true"), w)
    assert objective_support(program) == {(1, 2), (3, 4), (1, 4)}
    # auxiliary variables of J' never carry weight
    base = set(program.ext.base.values())
    for p in program.pairs:
        assert program.ext.base[(p.u, p.part)] in base


def test_row_kinds_and_summary():
    _, program = build(named_graph("c5"), ("is", "true"))
    kinds = program.row_counts()
    assert set(kinds) <= {"C1", "C2", "C3", "C4", "C5"}
    assert kinds["C3"] == 1
    rep = lp_size_report(program)
    assert rep["vars"] == program.n_vars and rep["rows"] == program.n_rows


def test_export_lp(tmp_path):
    _, program = build(path_graph(3), ("is", "true"))
    path = tmp_path / "p3.lp"
    export_lp(program, path)
    text = path.read_text()
    for head in ("Maximize", "Subject To", "Bounds", "End"):
        assert head in text
    assert "y_" in text and "z_1_2_" in text
    rows = [ln for ln in text.splitlines() if re.match(r"^ c\d_\d+: ", ln)]
    assert len(rows) == program.n_rows
    assert text.count(" <= 1\n") == program.n_vars


def test_index_cap():
    prep, _ = build(named_graph("c5"), ("is", "true"))
    with pytest.raises(ResourceLimitError):
        build_lp(prep.ext, prep.dp, weights_from_edges(prep.graph), cap=10)


def test_single_side_factor():
    _, p1 = build(path_graph(3), ("is", "true"), single_side=True)
    _, p2 = build(path_graph(3), ("is", "true"))
    assert p1.factor == 1.0 and p2.factor == 0.5


def _certificate_points(prep, program, parts, w):
    orc = brute_force(prep.graph, w, parts)
    for h in orc.optimal + [KPartition(len(parts), tuple(1 for _ in prep.graph.vertices))]:
        full = complete_assignment(prep.ext, prep.dp, partition_base_values(prep.ext, h))
        if full is None:
            continue
        yield h, integral_point(program, states_of_solution(full, prep.dp))


@settings(max_examples=15)
@given(forests(max_n=6), st.sampled_from([("is", "true"), ("vc", "true"), ("conn", "true"),
                                          ("true", "true", "true")]))
def test_certificates_are_feasible_points(g, parts):
    from gcmc.graph import cut_value
    w = weights_from_edges(g)
    prep, program = build(g, parts, w)
    for h, x in _certificate_points(prep, program, parts, w):
        assert np.abs(program.A_eq @ x - program.b_eq).max() <= 1e-12
        assert program.objective @ x == pytest.approx(cut_value(h, w))


@settings(max_examples=15)
@given(forests(max_n=6), st.sampled_from([("is", "true"), ("ds", "true"), ("true", "true")]),
       st.integers(0, 10))
def test_relaxation_bounds_optimum(g, parts, seed):
    w = dense_weights(g, seed)
    _, _, sol = solved(g, parts, w)
    assert sol.objective >= brute_force(g, w, parts).opt - 1e-6


@settings(max_examples=10)
@given(forests(max_n=5), st.sampled_from([("is", "true"), ("conn", "true")]),
       st.integers(0, 5))
def test_pruning_is_neutral(g, parts, seed):
    w = dense_weights(g, seed)
    a = solved(g, parts, w)[2].objective
    b = solved(g, parts, w, pruned=False)[2].objective
    assert abs(a - b) <= 1e-8
