"""Randomized rounding of an LP solution into a feasible partition.

States are sampled top-down: the root assignment from ``y(s[T_r])``, then at
every internal node ``i`` the child pair from ``y(s[T_j]) / y(s[T_i])``
(``T_j`` is ``T_i`` plus both children).  The sampled states agree on shared
variables, so their union is a feasible assignment of ``J'``.

The law of the sampled ``a[T_i]`` can be propagated exactly down the tree,
which gives cut probabilities per pair and part without enumeration.
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .csp import DpTables
from .errors import InvariantError
from .graph import KPartition

log = logging.getLogger(__name__)

if os.environ.get("GCMC_PURE_PYTHON"):
    from ._sampling_py import sample_paths
    KERNEL = "python"
else:
    try:
        from ._sampling import sample_paths
        KERNEL = "compiled"
    except ImportError:  # extension not built
        from ._sampling_py import sample_paths
        KERNEL = "python"

ZERO_MASS = 1e-12
RENORM_TOL = 1e-6


def _as_x(solution) -> np.ndarray:
    x = getattr(solution, "x", solution)
    if x is None:
        raise InvariantError("no LP solution to round", stage="rounding")
    return np.clip(np.asarray(x, dtype=float), 0.0, None)


# ------------------------------------------------------------------ tables

@dataclass
class SamplerTables:
    """Flat conditional tables consumed by the sampling kernel."""

    root: int
    order: np.ndarray          # internal nodes, parents before children
    row_base: np.ndarray       # first row of node i's conditional table
    child1: np.ndarray
    child2: np.ndarray
    row_ptr: np.ndarray
    cum: np.ndarray
    target: np.ndarray
    root_cum: np.ndarray
    root_p: np.ndarray = field(repr=False)
    cond: dict = field(repr=False)       # child set id -> (row of each assignment, prob)
    state_of: list = field(repr=False)   # node -> state index per T_i assignment
    n_nodes: int = 0

    @property
    def draws(self) -> int:
        return 1 + len(self.order)


def build_sampler(program, solution) -> SamplerTables:
    x = _as_x(solution)
    dp: DpTables = program.dp
    td = dp.td
    sets, T = program.sets, program.T
    n_nodes = len(td.bags)
    root = td.root

    y_root = program.y_values(x, T[root]).copy()
    total = y_root.sum()
    if abs(total - 1.0) > RENORM_TOL:
        raise InvariantError(f"root distribution sums to {total}", stage="rounding")
    y_root[y_root <= ZERO_MASS] = 0.0
    root_p = y_root / y_root.sum()
    root_cum = np.cumsum(root_p)
    root_cum[-1] = 1.0

    order = [i for i in td.bfs() if td.children[i]]
    row_base = np.zeros(n_nodes, dtype=np.int64)
    child1 = np.zeros(n_nodes, dtype=np.int64)
    child2 = np.zeros(n_nodes, dtype=np.int64)
    row_ptr, cum, target = [0], [], []
    cond = {}
    n_rows = 0
    for i in order:
        c1, c2 = td.children[i]
        child1[i], child2[i] = c1, c2
        S, C = sets[T[i]], sets[T[c1]]
        yS = program.y_values(x, T[i])
        yC = program.y_values(x, T[c1])
        proj = [C.position(m) for m in S.nodes]
        row_of = np.fromiter((S.index[tuple(t[q] for q in proj)] for t in C.assignments),
                             dtype=np.int64, count=len(C))
        keep = yC > ZERO_MASS
        rows_total = np.bincount(row_of[keep], weights=yC[keep], minlength=len(S))
        live = yS > ZERO_MASS
        bad = np.abs(rows_total - yS) > RENORM_TOL
        if np.any(bad & live):
            a = int(np.flatnonzero(bad & live)[0])
            raise InvariantError(f"conditional at node {i} sums to {rows_total[a]} "
                                 f"instead of {yS[a]}", stage="rounding")
        keep &= live[row_of]
        prob = np.zeros(len(C))
        prob[keep] = yC[keep] / rows_total[row_of[keep]]
        cond[T[c1]] = (row_of, prob)
        row_base[i] = n_rows
        by_row = np.argsort(row_of, kind="stable")
        counts = np.zeros(len(S), dtype=np.int64)
        for b in by_row:
            if keep[b]:
                target.append(int(b))
                cum.append(prob[b])
                counts[row_of[b]] += 1
        for a in range(len(S)):
            row_ptr.append(row_ptr[-1] + int(counts[a]))
        n_rows += len(S)
    cum_arr = np.asarray(cum, dtype=float)
    ptr = np.asarray(row_ptr, dtype=np.int64)
    for r in range(len(ptr) - 1):
        lo, hi = ptr[r], ptr[r + 1]
        if hi > lo:
            seg = np.cumsum(cum_arr[lo:hi])
            seg[-1] = 1.0
            cum_arr[lo:hi] = seg
    state_of = []
    for i in range(n_nodes):
        S = sets[T[i]]
        p = S.position(i)
        state_of.append(np.fromiter((t[p] for t in S.assignments), dtype=np.int64, count=len(S)))
    return SamplerTables(root, np.asarray(order, dtype=np.int64), row_base, child1, child2, ptr,
                         cum_arr, np.asarray(target, dtype=np.int64), root_cum, root_p, cond,
                         state_of, n_nodes)


def _run_kernel(tab: SamplerTables, uniforms: np.ndarray) -> np.ndarray:
    uniforms = np.ascontiguousarray(uniforms, dtype=float)
    out = np.zeros((len(uniforms), tab.n_nodes), dtype=np.int64)
    code = sample_paths(tab.root, tab.order, tab.row_base, tab.child1, tab.child2, tab.row_ptr,
                        tab.cum, tab.target, tab.root_cum, uniforms, out)
    if code != 0:
        raise InvariantError(f"run {-code - 1} reached a path of zero LP mass", stage="rounding")
    return out


def node_states(tab: SamplerTables, tidx: np.ndarray) -> np.ndarray:
    """Convert sampled ``T_i`` assignment indices into per-node DP states."""
    out = np.empty_like(tidx)
    for i in range(tab.n_nodes):
        out[:, i] = tab.state_of[i][tidx[:, i]]
    return out


# ------------------------------------------------------------------ assembly

class _Assembler:
    """Vectorized union of node states into full assignments, with feasibility checks."""

    def __init__(self, program):
        dp: DpTables = program.dp
        self.dp, self.ext = dp, program.ext
        geo = program.geometry
        J = dp.J
        self.vals = [np.asarray(s, dtype=np.int64).reshape(len(s), len(b))
                     for s, b in zip(dp.states, dp.bags)]
        self.home = [(geo.hi[v], dp.bags[geo.hi[v]].index(v)) for v in range(J.n)]
        self.real = [np.asarray(r, dtype=bool) for r in dp.realizable]
        self.checks = []
        for con in J.constraints:
            radix = np.cumprod([1] + [J.domains[v] for v in con.scope[:-1]]).astype(np.int64)
            codes = np.array(sorted(int(np.dot(t, radix)) for t in con.relation), dtype=np.int64)
            self.checks.append((np.asarray(con.scope), radix, codes))

    def assignments(self, states: np.ndarray) -> np.ndarray:
        H = np.empty((len(states), len(self.home)), dtype=np.int64)
        for v, (i, p) in enumerate(self.home):
            H[:, v] = self.vals[i][states[:, i], p]
        return H

    def feasible(self, states: np.ndarray, H: np.ndarray) -> np.ndarray:
        ok = np.ones(len(states), dtype=bool)
        for i, bag in enumerate(self.dp.bags):
            ok &= self.real[i][states[:, i]]
            if bag:
                ok &= np.all(self.vals[i][states[:, i]] == H[:, list(bag)], axis=1)
        for scope, radix, codes in self.checks:
            ok &= np.isin(H[:, scope] @ radix, codes)
        return ok

    def labels(self, H: np.ndarray) -> np.ndarray:
        ext = self.ext
        verts = list(ext.graph.vertices)
        if ext.k == 1:
            return np.where(H[:, [ext.base[(v, 1)] for v in verts]] == 1, 1, 2)
        lab = np.zeros((len(H), len(verts)), dtype=np.int64)
        hits = np.zeros_like(lab)
        for a in range(1, ext.k + 1):
            bits = H[:, [ext.base[(v, a)] for v in verts]]
            lab += a * bits
            hits += bits
        lab[hits != 1] = 0
        return lab


def _cuts(labels: np.ndarray, weights) -> np.ndarray:
    out = np.zeros(len(labels))
    for u, v, w in weights.positive_pairs():
        out += w * (labels[:, u - 1] != labels[:, v - 1])
    return out


@dataclass
class RoundingOutcome:
    states: tuple
    assignment: tuple
    partition: KPartition | None
    cut: float
    seed: object
    feasible: bool

    def parts(self) -> list[list[int]]:
        return [sorted(p) for p in self.partition.parts()] if self.partition else []


def _uniforms(seed, draws: int) -> np.ndarray:
    return np.random.default_rng(seed).random(draws)


def round_solution(program, solution, seed, weights=None, tables: SamplerTables | None = None
                   ) -> RoundingOutcome:
    """One seeded run of the rounding algorithm."""
    tab = tables or build_sampler(program, solution)
    tidx = _run_kernel(tab, _uniforms(seed, tab.draws)[None, :])
    return _outcomes(program, tab, tidx, [seed], weights)[0]


def _outcomes(program, tab, tidx, seeds, weights) -> list[RoundingOutcome]:
    asm = _Assembler(program)
    st = node_states(tab, tidx)
    H = asm.assignments(st)
    ok = asm.feasible(st, H)
    lab = asm.labels(H)
    weights = weights if weights is not None else _program_weights(program)
    cuts = _cuts(lab, weights)
    k = max(2, program.ext.k)
    out = []
    for r, seed in enumerate(seeds):
        part = KPartition(k, tuple(int(a) for a in lab[r])) if ok[r] and lab[r].min() > 0 else None
        out.append(RoundingOutcome(tuple(int(s) for s in st[r]), tuple(int(h) for h in H[r]),
                                   part, float(cuts[r]), seed, bool(ok[r])))
    return out


class _ProgramWeights:
    def __init__(self, program):
        seen = {}
        for p in program.pairs:
            seen[(p.u, p.v)] = p.weight
        self._pairs = sorted(seen.items())

    def positive_pairs(self):
        return [(u, v, w) for (u, v), w in self._pairs]


def _program_weights(program):
    return _ProgramWeights(program)


# ------------------------------------------------------------------ Monte Carlo

@dataclass
class MonteCarloResult:
    samples: int
    mean: float
    variance: float
    stderr: float
    feasible_rate: float
    best_cut: float
    best: RoundingOutcome | None
    cuts: np.ndarray = field(repr=False)

    def report(self) -> dict:
        return {"samples": self.samples, "mean": self.mean, "variance": self.variance,
                "stderr": self.stderr, "feasible_rate": self.feasible_rate,
                "best_cut": self.best_cut}


def run_uniforms(seed: int, runs: range, draws: int) -> np.ndarray:
    """Uniforms of runs ``runs``; run ``r`` uses its own generator seeded by ``(seed, r)``."""
    return np.stack([_uniforms([seed, r], draws) for r in runs]) if len(runs) else \
        np.zeros((0, draws))


def monte_carlo(program, solution, weights=None, samples: int = 1000, seed: int = 0,
                tables: SamplerTables | None = None, batch: int = 8192) -> MonteCarloResult:
    """Independent seeded runs; run ``r`` equals ``round_solution(..., seed=[seed, r])``."""
    if samples < 1:
        raise ValueError("need at least one sample")
    tab = tables or build_sampler(program, solution)
    asm = _Assembler(program)
    weights = weights if weights is not None else _program_weights(program)
    cuts = np.empty(samples)
    feas = 0
    best_r, best_cut, best_row = -1, -np.inf, None
    for start in range(0, samples, batch):
        runs = range(start, min(samples, start + batch))
        tidx = _run_kernel(tab, run_uniforms(seed, runs, tab.draws))
        st = node_states(tab, tidx)
        H = asm.assignments(st)
        ok = asm.feasible(st, H)
        lab = asm.labels(H)
        ok &= lab.min(axis=1) > 0
        c = _cuts(lab, weights)
        cuts[start:start + len(runs)] = c
        feas += int(ok.sum())
        if np.any(ok):
            r = int(np.argmax(np.where(ok, c, -np.inf)))
            if c[r] > best_cut:
                best_cut, best_r, best_row = float(c[r]), start + r, tidx[r:r + 1]
    var = float(cuts.var(ddof=1)) if samples > 1 else 0.0
    best = None
    if best_row is not None:
        best = _outcomes(program, tab, best_row, [[seed, best_r]], weights)[0]
    return MonteCarloResult(samples, float(cuts.mean()), var, float(np.sqrt(var / samples)),
                            feas / samples, best_cut if best is not None else float("nan"),
                            best, cuts)


# ------------------------------------------------------------------ exact law

@dataclass
class ExactExpectation:
    expected_cut: float
    pair_probs: dict           # (u, v, part) -> Pr[the part separates u and v]
    laws: list = field(repr=False)   # node -> law of a[T_i] over the set's assignments

    def path_error(self, program, solution) -> float:
        """Largest gap between the law of ``a[T_i]`` and ``y(s[T_i])``."""
        x = _as_x(solution)
        return max(float(np.abs(law - program.y_values(x, program.T[i])).max(initial=0.0))
                   for i, law in enumerate(self.laws))


def path_laws(program, tab: SamplerTables) -> list[np.ndarray]:
    td = program.dp.td
    laws = [None] * tab.n_nodes
    laws[td.root] = tab.root_p.copy()
    for i in td.bfs():
        kids = td.children[i]
        if not kids:
            continue
        row_of, prob = tab.cond[program.T[kids[0]]]
        law = laws[i][row_of] * prob
        for c in kids:
            laws[c] = law
    return laws


def _bits(dp: DpTables, node: int, states: np.ndarray, var: int) -> np.ndarray:
    p = dp.bags[node].index(var)
    col = np.array([s[p] for s in dp.states[node]], dtype=np.int64)
    return col[states]


def exact_cut_expectation(program, solution, weights=None,
                          tables: SamplerTables | None = None) -> ExactExpectation:
    """Exact expected cut and per-pair separation probabilities of the rounding."""
    tab = tables or build_sampler(program, solution)
    laws = path_laws(program, tab)
    dp, sets, T = program.dp, program.sets, program.T
    ext = program.ext
    probs = {}

    def states_in(set_id, node):
        S = sets[set_id]
        p = S.position(node)
        return np.fromiter((t[p] for t in S.assignments), dtype=np.int64, count=len(S))

    for pr in program.pairs:
        xu, xv = ext.base[(pr.u, pr.part)], ext.base[(pr.v, pr.part)]
        A, B = pr.A, pr.B
        if pr.kind in ("same", "ancestor"):
            host = A if (pr.kind == "same" or B in program.geometry.T[A]) else B
            law = laws[host]
            bu = _bits(dp, A, states_in(T[host], A), xu)
            bv = _bits(dp, B, states_in(T[host], B), xv)
            probs[(pr.u, pr.v, pr.part)] = float(law[bu != bv].sum())
            continue
        j = pr.j
        Sj = sets[T[j]]
        law_j = laws[j]

        def cond_one(node, var):
            S = sets[T[node]]
            proj = [S.position(m) for m in Sj.nodes]
            t_of = np.fromiter((Sj.index[tuple(t[q] for q in proj)] for t in S.assignments),
                               dtype=np.int64, count=len(S))
            bit = _bits(dp, node, states_in(T[node], node), var)
            mass = np.bincount(t_of, weights=laws[node] * bit, minlength=len(Sj))
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(law_j > 0, mass / law_j, 0.0)

        pa, pb = cond_one(A, xu), cond_one(B, xv)
        probs[(pr.u, pr.v, pr.part)] = float(np.dot(law_j, pa * (1 - pb) + pb * (1 - pa)))
    factor = program.factor
    if weights is None:
        expected = factor * sum(pr.weight * probs[(pr.u, pr.v, pr.part)] for pr in program.pairs)
    else:
        expected = factor * sum(w * probs.get((u, v, a), 0.0) for u, v, w in
                                weights.positive_pairs() for a in range(1, ext.k + 1))
    return ExactExpectation(float(expected), probs, laws)


# ------------------------------------------------------------------ certificates

@dataclass
class SolutionCertificate:
    states: tuple              # DP state index per node

    def check(self, dp: DpTables) -> bool:
        td = dp.td
        for i in td.nodes:
            if not dp.realizable[i][self.states[i]]:
                return False
            kids = td.children[i]
            if kids and not dp.in_F(i, self.states[i], [self.states[c] for c in kids]):
                return False
        return True


def states_of_solution(h: Sequence[int] | Mapping[int, int], dp: DpTables) -> SolutionCertificate:
    """The restriction of a feasible assignment ``h`` of ``J'`` to every bag."""
    if not dp.J.satisfies(h):
        raise InvariantError("states requested for an infeasible assignment", stage="rounding")
    out = []
    for i, bag in enumerate(dp.bags):
        key = tuple(h[v] for v in bag)
        s = dp.index[i].get(key)
        if s is None:
            raise InvariantError(f"bag {i} configuration {key} is not a DP state", stage="rounding")
        out.append(s)
    return SolutionCertificate(tuple(out))


def complete_assignment(ext, dp: DpTables, base_values: Mapping[tuple, int]) -> list[int] | None:
    """A feasible assignment of ``J'`` extending values on base variables, or ``None``."""
    fixed = {ext.base[key]: val for key, val in base_values.items()}
    td = dp.td
    ok = [None] * len(dp.bags)
    for i in td.postorder():
        bag = dp.bags[i]
        pins = [(p, fixed[v]) for p, v in enumerate(bag) if v in fixed]
        row = []
        for s, st in enumerate(dp.states[i]):
            good = all(st[p] == val for p, val in pins)
            if good:
                for c in td.children[i]:
                    if not any(ok[c][w] for w in dp.compatible(c, st)):
                        good = False
                        break
            row.append(good)
        ok[i] = row
    choice = [None] * len(dp.bags)
    roots = [s for s, g in enumerate(ok[td.root]) if g]
    if not roots:
        return None
    choice[td.root] = roots[0]
    for i in td.bfs():
        st = dp.states[i][choice[i]]
        for c in td.children[i]:
            choice[c] = next(w for w in dp.compatible(c, st) if ok[c][w])
    h = [0] * dp.J.n
    for i, s in enumerate(choice):
        for v, val in zip(dp.bags[i], dp.states[i][s]):
            h[v] = val
    return h


def partition_base_values(ext, partition: KPartition) -> dict:
    if ext.k == 1:
        return {(v, 1): int(partition[v] == 1) for v in ext.graph.vertices}
    return {(v, a): int(partition[v] == a) for v in ext.graph.vertices
            for a in range(1, ext.k + 1)}


def integral_point(program, cert: SolutionCertificate) -> np.ndarray:
    """The 0/1 LP vector encoding one joint state assignment."""
    x = np.zeros(program.n_vars)
    for ns in program.sets:
        key = tuple(cert.states[m] for m in ns.nodes)
        k = ns.index.get(key)
        if k is None:
            raise InvariantError(f"certificate restricted to {ns.nodes} is not instantiated",
                                 stage="rounding")
        x[ns.offset + k] = 1.0
    dp, ext = program.dp, program.ext
    for p in program.pairs:
        xu, xv = ext.base[(p.u, p.part)], ext.base[(p.v, p.part)]
        bu = dp.states[p.A][cert.states[p.A]][dp.bags[p.A].index(xu)]
        bv = dp.states[p.B][cert.states[p.B]][dp.bags[p.B].index(xv)]
        x[p.z] = float(bu != bv)
    return x
