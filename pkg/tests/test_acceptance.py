"""End-to-end acceptance checks over the pinned and verification corpora.

Each test records one PASS/FAIL line (see ``acceptance_log``) and then
asserts it.  Ground truth comes from brute-force enumeration and the naive
formula evaluator, never from the pipeline under test.
"""
import json
import subprocess
import sys
import time

import numpy as np
import pytest

from gcmc.csp import build_dp
from gcmc.errors import ResourceLimitError
from gcmc.graph import path_graph
from gcmc.lp.build import build_lp
from gcmc.lp.solve import solve
from gcmc.mso.catalog import catalog
from gcmc.mso.compile import compile as compile_formula
from gcmc.oracle import (brute_force, dp_property_suite, naive_models, pinned_graphs,
                         projected_feasible, verification_corpus)
from gcmc.pipeline import prepare
from gcmc.rounding import build_sampler, exact_cut_expectation, monte_carlo

from acceptance_log import record

FORMULAS = ("vc", "is", "ds", "conn", "true")


@pytest.fixture(scope="module")
def compiled():
    """Generic compilation of every formula on every pinned graph."""
    t0 = time.perf_counter()
    out = []
    for gname, g in pinned_graphs():
        for phi in FORMULAS:
            ext = compile_formula(catalog(phi), g)
            out.append((gname, g, phi, ext, build_dp(ext.csp, ext.td)))
    return out, time.perf_counter() - t0


class Run:
    def __init__(self, inst):
        self.inst = inst
        g, w, parts = inst.graph, inst.weights, inst.parts
        t0 = time.perf_counter()
        self.oracle = brute_force(g, w, parts)
        self.prep = prepare(g, w, parts)
        self.program = build_lp(self.prep.ext, self.prep.dp, w)
        self.sol = solve(self.program)
        self.tables = build_sampler(self.program, self.sol)
        self.exact = exact_cut_expectation(self.program, self.sol, w, tables=self.tables)
        self.seconds = time.perf_counter() - t0


@pytest.fixture(scope="module")
def runs():
    t0 = time.perf_counter()
    out = [Run(inst) for inst in verification_corpus()]
    assert all(r.oracle.feasible and r.sol.optimal for r in out)
    return out, time.perf_counter() - t0


def _random_vertex(program, seed):
    c = np.random.default_rng(seed).normal(size=program.n_vars)
    return solve((c, program.A_eq, program.b_eq))


def test_c1_compiler_matches_naive_evaluator(compiled):
    items, seconds = compiled
    t0 = time.perf_counter()
    graphs = {gname: g for gname, g, *_ in items}
    bad = [f"{gname}/{phi}" for gname, g, phi, ext, dp in items
           if projected_feasible(ext, dp) != naive_models(g, catalog(phi))]
    small = all(g.n <= 8 for g in graphs.values())
    narrow = max(ext.td.width for *_, ext, _ in items if ext.graph.n) if items else 0
    total = seconds + time.perf_counter() - t0
    ok = not bad and len(graphs) >= 20 and small and total <= 120
    assert record("C1 compiler-oracle equivalence", ok,
                  f"{len(graphs)} graphs x {len(FORMULAS)} formulas, mismatches {bad or 'none'}, "
                  f"max J' width {narrow}, {total:.1f}s")


def _path_states(phi, ns):
    out = []
    for n in ns:
        ext = compile_formula(catalog(phi), path_graph(n))
        out.append(build_dp(ext.csp, ext.td).max_states())
    return out


def test_c2_dp_properties(compiled):
    items, seconds = compiled
    t0 = time.perf_counter()
    failed = []
    for gname, g, phi, ext, dp in items:
        for check in dp_property_suite(dp):
            if not check.passed:
                failed.append(f"{gname}/{phi}: {check.line()}")
    # state space bound: the largest |Sigma_i| seen on paths 4..8 is never
    # exceeded on longer paths, and longer paths all share it
    monitor, bounded = {}, True
    for phi in FORMULAS:
        window, tail = _path_states(phi, range(4, 9)), _path_states(phi, (12, 16, 24, 32))
        monitor[phi] = window
        bounded &= len(set(tail)) == 1 and max(window) == tail[0]
    total = seconds + time.perf_counter() - t0
    ok = not failed and bounded and total <= 120
    assert record("C2 DP properties", ok,
                  f"conditions 2-5 on {len(items)} extensions, failures {failed[:3] or 'none'}; "
                  f"max|Sigma_i| on paths n=4..8 {monitor}, bounded {bounded}, {total:.1f}s")


def test_c3_lp_is_a_relaxation(runs):
    items, seconds = runs
    rel = [r for r in items if r.inst.k in (2, 3)]
    gap = min(r.sol.objective - r.oracle.opt for r in rel)
    ok = gap >= -1e-6 and seconds <= 300
    assert record("C3 LP validity", ok,
                  f"{len(rel)} instances, min LP - OPT = {gap:.3g}, {seconds:.1f}s")


def test_c4_rounding_always_feasible(runs):
    items, _ = runs
    t0 = time.perf_counter()
    rates = {}
    for r in items:
        mc = monte_carlo(r.program, r.sol, r.inst.weights, samples=10_000, seed=2024,
                         tables=r.tables)
        rates[r.inst.name] = mc.feasible_rate
        r.mc = mc
    worst = min(rates.values())
    seconds = time.perf_counter() - t0
    ok = worst == 1.0 and seconds <= 300
    assert record("C4 rounding feasibility", ok,
                  f"{len(items)} instances x 10^4 samples, min rate {worst}, {seconds:.1f}s")


def test_c5_half_approximation(runs):
    items, seconds = runs
    worst_lp = min(r.exact.expected_cut - 0.5 * r.sol.objective for r in items)
    worst_opt = min(r.exact.expected_cut - 0.5 * r.oracle.opt for r in items)
    # the Monte Carlo estimate agrees with the bound as well
    mc_ok = all(r.mc.mean >= 0.5 * r.sol.objective - 3 * r.mc.stderr
                for r in items if hasattr(r, "mc"))
    ok = worst_lp >= -1e-6 and worst_opt >= -1e-6 and mc_ok and seconds <= 600
    assert record("C5 half approximation", ok,
                  f"{len(items)} exact instances, min E - LP/2 = {worst_lp:.3g}, "
                  f"min E - OPT/2 = {worst_opt:.3g}, Monte Carlo within 3 SE {mc_ok}")


def _pair_gaps(program, sol, exact):
    anc, split = 0.0, np.inf
    n_anc = n_split = 0
    for p in program.pairs:
        pr, z = exact.pair_probs[(p.u, p.v, p.part)], sol.x[p.z]
        if p.kind == "split":
            split = min(split, pr - z / 2)
            n_split += 1
        else:
            anc = max(anc, abs(pr - z))
            n_anc += 1
    return anc, split, n_anc, n_split


def test_c6_pair_separation(runs):
    items, _ = runs
    t0 = time.perf_counter()
    anc, split, n_anc, n_split = 0.0, np.inf, 0, 0
    for seed, r in enumerate(items):
        w = r.inst.weights
        # the optimum and a random fractional vertex of the same polytope
        for sol in (r.sol, _random_vertex(r.program, seed)):
            ex = r.exact if sol is r.sol else exact_cut_expectation(r.program, sol, w)
            a, s, na, ns = _pair_gaps(r.program, sol, ex)
            anc, split = max(anc, a), min(split, s)
            n_anc, n_split = n_anc + na, n_split + ns
    seconds = time.perf_counter() - t0
    ok = anc <= 1e-9 and split >= -1e-9 and n_split > 0 and seconds <= 300
    assert record("C6 per-pair separation", ok,
                  f"{n_anc} ancestor pairs max |Pr - z| = {anc:.2g}; {n_split} split pairs "
                  f"min Pr - z/2 = {split:.3g}, {seconds:.1f}s")


def test_c7_path_law(runs):
    items, _ = runs
    worst = 0.0
    for seed, r in enumerate(items):
        worst = max(worst, r.exact.path_error(r.program, r.sol))
        alt = _random_vertex(r.program, 1000 + seed)
        ex = exact_cut_expectation(r.program, alt, r.inst.weights)
        worst = max(worst, ex.path_error(r.program, alt))
    ok = worst <= 1e-9
    assert record("C7 path distribution", ok,
                  f"{2 * len(items)} LP points, max |law - y| = {worst:.2g}")


def _best_cut(ext, dp, weights, n):
    full = (1 << n) - 1
    best = None
    for masks in projected_feasible(ext, dp):
        if len(masks) == 1:
            masks = (masks[0], full ^ masks[0])
        label = {v: a for a, m in enumerate(masks) for v in range(1, n + 1) if (m >> (v - 1)) & 1}
        cut = sum(wt for u, v, wt in weights.positive_pairs() if label[u] != label[v])
        best = cut if best is None else max(best, cut)
    return best


def test_c8_single_side_matches_wrapper(runs):
    items, _ = runs
    cases = [r for r in items if r.inst.k == 2 and r.inst.parts[1] == "true"]
    worst_opt = worst_lp = 0.0
    for r in cases:
        g, w = r.inst.graph, r.inst.weights
        one = prepare(g, w, r.inst.parts, single_side=True)
        lp_one = solve(build_lp(one.ext, one.dp, w)).objective
        opt_one = _best_cut(one.ext, one.dp, w, g.n)
        opt_two = _best_cut(r.prep.ext, r.prep.dp, w, g.n)
        worst_opt = max(worst_opt, abs(opt_one - opt_two), abs(opt_two - r.oracle.opt))
        worst_lp = max(worst_lp, abs(lp_one - r.sol.objective))
    ok = bool(cases) and worst_opt <= 1e-8 and worst_lp <= 1e-8
    assert record("C8 single-side reduction", ok,
                  f"{len(cases)} instances, max OPT diff {worst_opt:.2g}, "
                  f"max LP diff {worst_lp:.2g}")


CLI_CASES = [
    ["--graph", "c6", "--catalog1", "conn", "--seed", "11"],
    ["--graph", "grid2x3", "--catalog1", "is", "--k", "3", "--seed", "3"],
    ["--graph", "p6", "--catalog1", "vc", "--catalog2", "ds", "--seed", "0"],
]


def test_c9_deterministic_partitions():
    diffs = []
    for args in CLI_CASES:
        outs = []
        for _ in range(2):
            res = subprocess.run([sys.executable, "-m", "gcmc.cli", "solve", *args,
                                  "--samples", "200"], capture_output=True, text=True, check=True)
            rnd = json.loads(res.stdout)["rounding"]
            outs.append(json.dumps([rnd["partition"], rnd["best_partition"]]))
        if outs[0] != outs[1]:
            diffs.append(" ".join(args))
    ok = not diffs
    assert record("C9 determinism", ok,
                  f"{len(CLI_CASES)} CLI instances run twice, differing {diffs or 'none'}")


def test_c10_pruning_is_neutral(runs):
    items, _ = runs
    cases = [r for r in items if r.inst.graph.n <= 6]
    worst, compared, too_big = 0.0, 0, []
    for r in cases:
        try:
            program = build_lp(r.prep.ext, r.prep.dp, r.inst.weights, pruned=False)
        except ResourceLimitError:
            # every index of the full family exceeds desk memory here
            too_big.append(r.inst.name)
            continue
        full = solve(program)
        worst = max(worst, abs(full.objective - r.sol.objective))
        compared += 1
    ok = compared >= 40 and worst <= 1e-8
    assert record("C10 pruning neutrality", ok,
                  f"{compared} of {len(cases)} instances with n <= 6, "
                  f"max |LP pruned - LP full| = {worst:.2g}; over the index cap: {too_big}")
