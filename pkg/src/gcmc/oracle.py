"""Brute-force ground truth and per-instance verification.

``brute_force`` enumerates all ``k^n`` labellings and keeps those the naive
evaluator accepts.  ``verify_instance`` runs the whole pipeline and checks it
against that ground truth; the DP property suite compares the dynamic
program with partial solutions computed straight from their definition.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .csp import DpTables, enumerate_feasible, partial_solutions, solve_all
from .errors import ResourceLimitError
from .graph import Graph, KPartition, PairWeights, cut_value, named_graph, weights_from_edges
from .lp.build import build_lp
from .lp.solve import SolverConfig, solve
from .mso.catalog import catalog
from .mso.direct import PRECEDENCE
from .mso.formula import MsoFormula
from .mso.naive import NaiveEvaluator
from .pipeline import prepare, wrapped_formula
from .rounding import (build_sampler, complete_assignment, exact_cut_expectation, integral_point,
                       monte_carlo, partition_base_values, states_of_solution)
from .treedec import node_geometry

DEFAULT_ORACLE_CAP = 10**6


# ------------------------------------------------------------------ brute force

@dataclass
class OracleResult:
    opt: float | None
    optimal: list
    feasible_count: int
    total: int
    seconds: float
    feasible_sets: set = field(default_factory=set, repr=False)

    @property
    def feasible(self) -> bool:
        return self.feasible_count > 0


def _part_checker(g: Graph, spec) -> Callable[[int], bool]:
    """Membership test for one part's constraint on vertex bitmasks."""
    if spec == "precedence":
        arcs = g.sorted_edges()
        return lambda m: all(
            (((m >> (u - 1)) & 1, (m >> (v - 1)) & 1) in PRECEDENCE) for u, v in arcs)
    phi = catalog(spec) if isinstance(spec, str) else spec
    ev = NaiveEvaluator(g, phi)
    return lambda m: ev((m,))


def brute_force(g: Graph, c: PairWeights, parts: Sequence | None = None,
                joint: MsoFormula | None = None, single_side: bool = False,
                cap: int = DEFAULT_ORACLE_CAP, literal: bool = False) -> OracleResult:
    """Exhaustive optimum over all labellings of ``g`` with ``k`` parts.

    Per-part constraints are evaluated once per vertex subset and combined;
    ``literal=True`` evaluates the wrapped partition formula on every labelling
    instead.  ``single_side`` is accepted for symmetry: the second side is
    unconstrained in that mode, so the feasible set is the same.
    """
    t0 = time.perf_counter()
    k = len(parts) if parts is not None else joint.k
    n = g.n
    total = k ** n
    if total > cap:
        raise ResourceLimitError(f"brute force needs {total} labellings, cap is {cap}",
                                 stage="oracle")
    full = (1 << n) - 1
    if literal or joint is not None:
        ev = NaiveEvaluator(g, wrapped_formula(parts, joint))
        test = lambda masks: ev(masks)
    else:
        checks = [_part_checker(g, p) for p in parts]
        ok = [{} for _ in parts]

        def test(masks):
            for a, m in enumerate(masks):
                got = ok[a].get(m)
                if got is None:
                    got = ok[a][m] = checks[a](m)
                if not got:
                    return False
            return True
    best, optimal, count, feas_sets = None, [], 0, set()
    for lab in itertools.product(range(1, k + 1), repeat=n):
        masks = [0] * k
        for v, a in enumerate(lab):
            masks[a - 1] |= 1 << v
        if not test(tuple(masks)):
            continue
        count += 1
        feas_sets.add(tuple(masks))
        h = KPartition(k, lab)
        val = cut_value(h, c)
        if best is None or val > best + 1e-12:
            best, optimal = val, [h]
        elif abs(val - best) <= 1e-12:
            optimal.append(h)
    assert all(sum(ms) == full for ms in feas_sets)
    return OracleResult(best, optimal, count, total, time.perf_counter() - t0, feas_sets)


def projected_feasible(ext, dp: DpTables, cap: int = DEFAULT_ORACLE_CAP) -> set:
    """Free-set masks of every feasible assignment of the extension."""
    return {ext.project(a) for a in enumerate_feasible(ext.csp, ext.td, dp, cap)}


def naive_models(g: Graph, phi: MsoFormula) -> set:
    return NaiveEvaluator(g, phi).models()


# ------------------------------------------------------------------ DP property suite

@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def dp_property_suite(dp: DpTables, cap: int = DEFAULT_ORACLE_CAP) -> list[Check]:
    """Check the DP against partial solutions built straight from their definition.

    ``H[i][sigma]`` is every configuration of the variables below ``i`` that
    satisfies the constraints inside them and agrees with ``sigma`` on the bag.
    """
    J, td = dp.J, dp.td
    geo = node_geometry(td)
    Hdef = []
    for i in range(len(td.bags)):
        groups: dict[int, set] = {s: set() for s in range(len(dp.states[i]))}
        below = sorted(geo.below[i])
        for h in solve_all(J, below, cap):
            key = tuple(h[v] for v in dp.bags[i])
            s = dp.index[i].get(key)
            if s is None:
                return [Check("required state", False, f"node {i}: {key} is not a state")]
            groups[s].add(tuple(sorted(h.items())))
        Hdef.append(groups)
    out = []
    bound = max(len(s) for s in dp.states)
    dom_bound = all(len(dp.states[i]) <= int(np.prod([J.domains[v] for v in dp.bags[i]]))
                    for i in range(len(td.bags)))
    out.append(Check("bounded state space", dom_bound,
                     f"max |Sigma_i| = {bound}, max |F| = {dp.max_pairs()}"))
    Hdp = partial_solutions(dp, cap)
    req = all(all(h[v] == x for v, x in zip(dp.bags[i], dp.states[i][s]))
              for i in range(len(td.bags)) for s in range(len(dp.states[i])) for h in Hdp[i][s])
    same = all({tuple(sorted(h.items())) for h in Hdp[i][s]} == Hdef[i][s]
               for i in range(len(td.bags)) for s in range(len(dp.states[i])))
    out.append(Check("required state", req and same,
                     "DP partial solutions restrict to their state and match the definition"))
    leaf_ok = all(not Hdef[l][s] or Hdef[l][s] == {tuple(sorted(dp.as_config(l, s).items()))}
                  for l in td.leaves for s in range(len(dp.states[l])))
    real_ok = all(bool(Hdef[i][s]) == bool(dp.realizable[i][s])
                  for i in range(len(td.bags)) for s in range(len(dp.states[i])))
    out.append(Check("leaf states", leaf_ok and real_ok,
                     "leaf partial solutions are the state itself; realizable iff nonempty"))
    sub_ok = True
    for i in range(len(td.bags)):
        kids = td.children[i]
        if not kids:
            continue
        for s in range(len(dp.states[i])):
            sigma = dp.as_config(i, s)
            built = set()
            for w in dp.valid_pairs(i, s):
                for hj, hk in itertools.product(Hdef[kids[0]][w[0]], Hdef[kids[1]][w[1]]):
                    h = dict(sigma)
                    h.update(hj)
                    h.update(hk)
                    built.add(tuple(sorted(h.items())))
            if built != Hdef[i][s]:
                sub_ok = False
                break
    out.append(Check("subproblem", sub_ok, "H_i,sigma equals sigma joined with child pairs in F"))
    feas = {tuple(h[v] for v in range(J.n)) for h in solve_all(J, None, cap)}
    root = set()
    for s in range(len(dp.states[td.root])):
        root |= {tuple(x for _, x in h) for h in Hdef[td.root][s]}
    dp_feas = enumerate_feasible(J, td, dp, cap)
    out.append(Check("feasible subsets", feas == root == dp_feas,
                     f"{len(feas)} feasible assignments"))
    return out


# ------------------------------------------------------------------ verification

@dataclass
class Instance:
    name: str
    graph: Graph
    weights: PairWeights
    parts: tuple

    @property
    def k(self) -> int:
        return len(self.parts)


@dataclass
class VerificationReport:
    instance: str
    checks: list
    opt: float | None = None
    lp: float | None = None
    expected_cut: float | None = None
    timings: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {"instance": self.instance, "passed": self.passed, "opt": self.opt, "lp": self.lp,
                "expected_cut": self.expected_cut,
                "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail}
                           for c in self.checks]}


def verify_instance(g: Graph, c: PairWeights, parts: Sequence, samples: int = 1000, seed: int = 0,
                    name: str = "", dp_suite: bool = True, single_side: bool = False,
                    solver: SolverConfig | None = None) -> VerificationReport:
    """Run the pipeline on one instance and check it against brute force."""
    t0 = time.perf_counter()
    checks = []
    oracle = brute_force(g, c, parts)
    prep = prepare(g, c, parts, single_side=single_side)
    ext, dp = prep.ext, prep.dp
    rep = VerificationReport(name or f"n{g.n}", checks, oracle.opt)
    if not oracle.feasible:
        lp = solve(build_lp(ext, dp, c), solver) if dp.root_realizable() else None
        empty = not dp.root_realizable() and (lp is None or lp.status == "infeasible")
        checks.append(Check("infeasible consistently", empty,
                            "oracle, DP root and LP all report no feasible partition"))
        return rep
    program = build_lp(ext, dp, c)
    sol = solve(program, solver)
    rep.lp = sol.objective
    checks.append(Check("V1 relaxation", sol.optimal and oracle.opt <= sol.objective + 1e-6,
                        f"OPT {oracle.opt} <= LP {sol.objective}"))
    # the certificate of every optimal partition is a feasible 0/1 LP point
    worst = 0.0
    for h in oracle.optimal[:8]:
        full = complete_assignment(ext, dp, partition_base_values(ext, h))
        x = integral_point(program, states_of_solution(full, dp))
        worst = max(worst, float(np.abs(program.A_eq @ x - program.b_eq).max(initial=0.0)))
    checks.append(Check("V1 certificates", worst <= 1e-9, f"max row violation {worst:.1e}"))
    tab = build_sampler(program, sol)
    mc = monte_carlo(program, sol, c, samples, seed, tables=tab)
    checks.append(Check("V2 feasibility", mc.feasible_rate == 1.0,
                        f"rate {mc.feasible_rate} over {samples} samples"))
    exact = exact_cut_expectation(program, sol, c, tables=tab)
    rep.expected_cut = exact.expected_cut
    checks.append(Check("V3 half approximation",
                        exact.expected_cut >= 0.5 * sol.objective - 1e-6,
                        f"E[cut] {exact.expected_cut:.6f} vs LP/2 {0.5 * sol.objective:.6f}"))
    proj = projected_feasible(ext, dp)
    if ext.k == 1:
        proj = {(m, ((1 << g.n) - 1) ^ m) for (m,) in proj}
    checks.append(Check("V4 projected feasibility", proj == oracle.feasible_sets,
                        f"{len(proj)} vs {len(oracle.feasible_sets)} feasible partitions"))
    if dp_suite:
        suite = dp_property_suite(dp)
        checks.append(Check("V5 DP properties", all(s.passed for s in suite),
                            "; ".join(s.line() for s in suite if not s.passed) or "all hold"))
    rep.timings = {**prep.timings, "total": time.perf_counter() - t0}
    return rep


# ------------------------------------------------------------------ corpora

def _w(g: Graph) -> PairWeights:
    return weights_from_edges(g)


def pinned_graphs() -> list[tuple[str, Graph]]:
    """Small graphs of treewidth at most 3 used by the compiler and DP suites."""
    names = ["p4", "p5", "p6", "p7", "p8", "c4", "c5", "c6", "c7", "c8", "star4", "star5",
             "k3", "k4", "grid2x3", "grid2x4", "k2_3", "wheel5", "empty3"]
    out = [(n, named_graph(n)) for n in names]
    out.append(("tree7", Graph.from_edges(7, [(1, 2), (1, 3), (2, 4), (2, 5), (3, 6), (3, 7)])))
    out.append(("bull", Graph.from_edges(5, [(1, 2), (2, 3), (1, 3), (2, 4), (3, 5)])))
    out.append(("kite", Graph.from_edges(6, [(1, 2), (2, 3), (3, 4), (4, 1), (1, 3), (4, 5),
                                             (5, 6)])))
    return out


def verification_corpus(max_n: int = 8) -> list[Instance]:
    """Instances for the end-to-end checks: paths, cycles, trees and small grids."""
    graphs = [("p4", named_graph("p4")), ("p6", named_graph("p6")), ("c5", named_graph("c5")),
              ("c6", named_graph("c6")), ("star4", named_graph("star4")),
              ("grid2x3", named_graph("grid2x3")),
              ("tree7", Graph.from_edges(7, [(1, 2), (1, 3), (2, 4), (2, 5), (3, 6), (3, 7)]))]
    out = []
    for gname, g in graphs:
        if g.n > max_n:
            continue
        for phi in ("vc", "is", "ds", "conn", "true"):
            out.append(Instance(f"{gname}/{phi}+true", g, _w(g), (phi, "true")))
        if g.n <= 6:
            out.append(Instance(f"{gname}/is+true+true", g, _w(g), ("is", "true", "true")))
            out.append(Instance(f"{gname}/conn+is+true", g, _w(g), ("conn", "is", "true")))
    # weights on non-edges too: pairs whose variables sit in different subtrees
    # of the decomposition, where the relaxation is not tight
    for gname, g in [("star5", named_graph("star5")), ("empty5", named_graph("empty5")),
                     ("tree7", graphs[-1][1])]:
        if g.n > max_n:
            continue
        w = dense_weights(g, seed=g.n)
        for parts in (("true", "true"), ("is", "true"), ("conn", "true"), ("true", "true", "true")):
            out.append(Instance(f"{gname}/dense/{'+'.join(parts)}", g, w, parts))
    return out


def dense_weights(g: Graph, seed: int = 0, high: int = 4) -> PairWeights:
    """Seeded integer weights in ``0..high-1`` on every vertex pair."""
    rng = np.random.default_rng(seed)
    return PairWeights(g.n, {(u, v): float(rng.integers(0, high))
                             for u, v in itertools.combinations(g.vertices, 2)})
