import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gcmc import _sampling_py, rounding
from gcmc.graph import complete_graph, cut_value, named_graph, path_graph, weights_from_edges
from gcmc.lp.solve import LpSolution, SolverConfig, solve
from gcmc.mso import catalog, evaluate_naive
from gcmc.oracle import brute_force, dense_weights
from gcmc.pipeline import partition_of
from gcmc.rounding import (build_sampler, complete_assignment, exact_cut_expectation,
                           integral_point, monte_carlo, partition_base_values, round_solution,
                           run_uniforms, states_of_solution)

from helpers import build, solved
from strategies import forests


def _integral(prep, program, h):
    full = complete_assignment(prep.ext, prep.dp, partition_base_values(prep.ext, h))
    x = integral_point(program, states_of_solution(full, prep.dp))
    return LpSolution("optimal", x, float(program.objective @ x))


def test_integral_solution_is_reproduced():
    g = path_graph(4)
    w = weights_from_edges(g)
    prep, program = build(g, ("is", "true"), w)
    for h in brute_force(g, w, ("is", "true")).optimal:
        sol = _integral(prep, program, h)
        for seed in range(5):
            out = round_solution(program, sol, seed, w)
            assert out.partition == h and out.cut == cut_value(h, w)
        assert exact_cut_expectation(program, sol, w).expected_cut == pytest.approx(cut_value(h, w))


def test_independent_side_always_feasible():
    g = path_graph(3)
    prep, program, sol = solved(g, ("is", "true"))
    for seed in range(50):
        out = round_solution(program, sol, seed)
        assert out.feasible and out.cut in (0.0, 1.0, 2.0)
        assert evaluate_naive(g, catalog("is"), [out.partition.parts()[0]])


def test_certificate_of_p3_solution():
    g = path_graph(3)
    prep, _ = build(g, ("is", "true"))
    from gcmc.graph import KPartition
    h = KPartition(2, (1, 2, 1))
    full = complete_assignment(prep.ext, prep.dp, partition_base_values(prep.ext, h))
    cert = states_of_solution(full, prep.dp)
    assert cert.check(prep.dp)
    union = {}
    for i, s in enumerate(cert.states):
        union.update(prep.dp.as_config(i, s))
    assert [union[v] for v in range(prep.ext.csp.n)] == list(full)
    assert partition_of(prep.ext, full) == h


def test_symmetric_triangle_three_parts():
    g = complete_graph(3)
    prep, program = build(g, ("true", "true", "true"))
    sol = solve(program, SolverConfig("highs-ipm"))
    mc = monte_carlo(program, sol, samples=10_000, seed=1)
    assert mc.feasible_rate == 1.0
    assert mc.mean >= 0.5 * sol.objective - 3 * mc.stderr


def test_single_sample_has_zero_variance():
    _, program, sol = solved(path_graph(3), ("is", "true"))
    mc = monte_carlo(program, sol, samples=1, seed=0)
    assert mc.samples == 1 and mc.variance == 0.0
    with pytest.raises(ValueError):
        monte_carlo(program, sol, samples=0)


def test_monte_carlo_runs_match_single_rounds():
    _, program, sol = solved(named_graph("c5"), ("is", "true"))
    tab = build_sampler(program, sol)
    mc = monte_carlo(program, sol, samples=40, seed=3, tables=tab, batch=7)
    for r in (0, 17, 39):
        assert round_solution(program, sol, [3, r], tables=tab).cut == mc.cuts[r]


def test_p3_mean_above_half_lp():
    _, program, sol = solved(path_graph(3), ("is", "true"))
    mc = monte_carlo(program, sol, samples=10_000, seed=0)
    assert mc.feasible_rate == 1.0
    assert mc.mean >= 0.5 * sol.objective - 3 * mc.stderr


def test_kernels_agree():
    _, program, sol = solved(named_graph("c6"), ("is", "true", "true"),
                             dense_weights(named_graph("c6"), 2))
    tab = build_sampler(program, sol)
    u = np.ascontiguousarray(run_uniforms(5, range(300), tab.draws))
    args = (tab.root, tab.order, tab.row_base, tab.child1, tab.child2, tab.row_ptr, tab.cum,
            tab.target, tab.root_cum, u)
    out_py = np.zeros((300, tab.n_nodes), dtype=np.int64)
    assert _sampling_py.sample_paths(*args, out_py) == 0
    if rounding.KERNEL == "compiled":
        from gcmc import _sampling
        out_c = np.zeros_like(out_py)
        assert _sampling.sample_paths(*args, out_c) == 0
        assert np.array_equal(out_py, out_c)


def test_zero_mass_row_reported():
    _, program, sol = solved(path_graph(3), ("is", "true"))
    tab = build_sampler(program, sol)
    empty = [r for r in range(len(tab.row_ptr) - 1) if tab.row_ptr[r] == tab.row_ptr[r + 1]]
    assert empty
    # force the root onto an assignment whose conditional row carries no mass
    root_cum = np.zeros_like(tab.root_cum)
    root_cum[empty[0] - tab.row_base[tab.root]:] = 1.0
    u = np.full((2, tab.draws), 0.5)
    kernels = [_sampling_py.sample_paths]
    if rounding.KERNEL == "compiled":
        from gcmc import _sampling
        kernels.append(_sampling.sample_paths)
    for kernel in kernels:
        out = np.zeros((2, tab.n_nodes), dtype=np.int64)
        code = kernel(tab.root, tab.order, tab.row_base, tab.child1, tab.child2, tab.row_ptr,
                      tab.cum, tab.target, root_cum, u, out)
        assert code == -1


def _random_vertex(program, seed, ipm=False):
    """An optimal point for a random objective: exercises fractional LP points."""
    rng = np.random.default_rng(seed)
    c = rng.normal(size=program.n_vars)
    cfg = SolverConfig("highs-ipm" if ipm else "highs")
    return solve((c, program.A_eq, program.b_eq), cfg)


INSTANCES = [("is", "true"), ("conn", "true"), ("true", "true"), ("true", "true", "true")]


@settings(max_examples=25)
@given(forests(min_n=3, max_n=6), st.sampled_from(INSTANCES), st.integers(0, 10**6),
       st.booleans())
def test_pair_separation_and_path_law(g, parts, seed, ipm):
    w = dense_weights(g, seed % 7)
    prep, program = build(g, parts, w)
    sol = _random_vertex(program, seed, ipm)
    assert sol.optimal
    ex = exact_cut_expectation(program, sol, w)
    assert ex.path_error(program, sol) <= 1e-9
    x = sol.x
    for p in program.pairs:
        pr, z = ex.pair_probs[(p.u, p.v, p.part)], x[p.z]
        if p.kind == "split":
            assert pr >= z / 2 - 1e-9
        else:
            assert abs(pr - z) <= 1e-9
    mc = monte_carlo(program, sol, w, samples=200, seed=seed)
    assert mc.feasible_rate == 1.0


@settings(max_examples=20)
@given(forests(min_n=3, max_n=6), st.sampled_from(INSTANCES), st.integers(0, 50))
def test_expected_cut_at_least_half_lp(g, parts, seed):
    w = dense_weights(g, seed)
    _, program, sol = solved(g, parts, w)
    ex = exact_cut_expectation(program, sol, w)
    assert ex.expected_cut >= 0.5 * sol.objective - 1e-6
    assert ex.expected_cut >= 0.5 * brute_force(g, w, parts).opt - 1e-6


def test_pure_python_selection(monkeypatch):
    import importlib
    monkeypatch.setenv("GCMC_PURE_PYTHON", "1")
    mod = importlib.reload(rounding)
    try:
        assert mod.KERNEL == "python"
    finally:
        monkeypatch.delenv("GCMC_PURE_PYTHON")
        importlib.reload(rounding)
