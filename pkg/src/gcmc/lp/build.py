"""The tree-decomposition LP for constrained max-k-cut.

Variables ``y(s[N])`` are indexed by a node set ``N`` of the decomposition of
``J'`` and a joint state assignment ``s`` (one DP state per node of ``N``);
``z[u, v, a]`` is the probability that the pair ``(u, v)`` is split by part
``a``.  Only a small support family of node sets is instantiated:

* ``T_i`` for every node, linked to ``T_c`` for its children;
* per weighted pair and part, the set ``{A, B}`` of the two highest nodes
  holding the pair's variables, plus ``T_j + {A}``, ``T_j + {B}`` and
  ``T_j + {A, B}`` when ``A`` and ``B`` sit in different subtrees below their
  lca (``j`` is the lca's child toward ``A``).

Marginalization rows are aggregated: a link ``A < B`` yields one row per
assignment of ``A`` summing every assignment of ``B`` that restricts to it.
Assignments that are not DP-consistent are never instantiated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ..csp import DpTables
from ..errors import InvariantError, ResourceLimitError
from ..graph import PairWeights
from ..mso.compile import CspExtensionResult
from ..treedec import NodeGeometry, node_geometry

DEFAULT_INDEX_CAP = 5_000_000


@dataclass
class NodeSet:
    """A member of the support family with its assignment index space."""

    nodes: tuple              # plan order: sorted by depth, sibling pairs adjacent
    steps: tuple = field(repr=False)
    assignments: list = field(default_factory=list, repr=False)
    offset: int = 0
    index: dict = field(default_factory=dict, repr=False)

    def __len__(self):
        return len(self.assignments)

    def position(self, node: int) -> int:
        return self.nodes.index(node)

    def var(self, assignment: tuple) -> int | None:
        k = self.index.get(assignment)
        return None if k is None else self.offset + k


@dataclass
class PairInfo:
    u: int
    v: int
    part: int
    weight: float
    A: int                    # highest node holding (u, part)
    B: int                    # highest node holding (v, part)
    kind: str                 # "same", "ancestor" or "split"
    pair_set: int             # family index of the set the z row sums over
    z: int
    lca: int | None = None
    j: int | None = None


@dataclass
class LpProgram:
    """``maximize objective @ x`` subject to ``A_eq x = b_eq`` and ``0 <= x <= 1``."""

    objective: np.ndarray
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    names: list
    sets: list
    set_index: dict
    T: list                   # family index of T_i per node
    pairs: list
    links: list
    row_kinds: list
    factor: float
    k: int
    pruned: bool
    dp: DpTables = field(repr=False)
    geometry: NodeGeometry = field(repr=False)
    ext: CspExtensionResult = field(repr=False)

    @property
    def n_vars(self) -> int:
        return len(self.objective)

    @property
    def n_rows(self) -> int:
        return self.A_eq.shape[0]

    def y_values(self, x, set_id: int) -> np.ndarray:
        ns = self.sets[set_id]
        return np.asarray(x)[ns.offset:ns.offset + len(ns)]

    def set_of(self, nodes) -> int:
        return self.set_index[frozenset(nodes)]

    def row_counts(self) -> dict:
        out: dict[str, int] = {}
        for kind in self.row_kinds:
            out[kind] = out.get(kind, 0) + 1
        return out

    def summary(self) -> dict:
        return {"vars": self.n_vars, "rows": self.n_rows, "nonzeros": int(self.A_eq.nnz),
                "sets": len(self.sets), "pairs": len(self.pairs),
                "y_vars": self.n_vars - len(self.pairs), "row_kinds": self.row_counts()}


# ------------------------------------------------------------------ index spaces

def _plan(N, td, depth) -> tuple[tuple, tuple]:
    """Order the nodes of ``N``; a node's two children travel together when both are in ``N``."""
    steps, done = [], set()
    for m in sorted(N, key=lambda x: (depth[x], x)):
        if m in done:
            continue
        p = td.parent[m]
        if p >= 0 and p in N and all(c in N for c in td.children[p]):
            c1, c2 = td.children[p]
            steps.append(("pair", p, c1, c2))
            done.update((c1, c2))
        else:
            steps.append(("free", m))
            done.add(m)
    nodes = []
    for st in steps:
        nodes.extend(st[1:] if st[0] == "free" else st[2:])
    return tuple(nodes), tuple(steps)


class _Spaces:
    """State options and cached valid child pairs, pruned or not."""

    def __init__(self, dp: DpTables, pruned: bool):
        self.dp, self.pruned = dp, pruned
        self.options = []
        for i in range(len(dp.states)):
            n = len(dp.states[i])
            self.options.append([s for s in range(n) if dp.realizable[i][s]] if pruned
                                else list(range(n)))
        self._pairs: dict = {}

    def pairs(self, p: int, s: int) -> list:
        key = (p, s)
        got = self._pairs.get(key)
        if got is None:
            dp = self.dp
            c1, c2 = dp.td.children[p]
            if self.pruned:
                o1, o2 = dp.child_options(p, s)
                r1, r2 = dp.realizable[c1], dp.realizable[c2]
                got = [(a, b) for a in o1 if r1[a] for b in o2 if r2[b]]
            else:
                got = [(a, b) for a in self.options[c1] for b in self.options[c2]]
            self._pairs[key] = got
        return got

    def count(self, steps) -> int:
        kids_of = {st[1]: (st[2], st[3]) for st in steps if st[0] == "pair"}
        memo: dict = {}

        def weight(m, s):
            if m not in kids_of:
                return 1
            key = (m, s)
            if key not in memo:
                c1, c2 = kids_of[m]
                memo[key] = sum(weight(c1, a) * weight(c2, b) for a, b in self.pairs(m, s))
            return memo[key]

        total = 1
        for st in steps:
            if st[0] == "free":
                total *= sum(weight(st[1], s) for s in self.options[st[1]])
        return total

    def enumerate(self, nodes, steps) -> list[tuple]:
        pos = {m: n for n, m in enumerate(nodes)}
        rows = [()]
        for st in steps:
            if st[0] == "free":
                opts = self.options[st[1]]
                rows = [r + (s,) for r in rows for s in opts]
            else:
                p = pos[st[1]]
                rows = [r + ab for r in rows for ab in self.pairs(st[1], r[p])]
        return rows


def dp_consistent(dp: DpTables, nodes, assignment) -> bool:
    """Every state realizable, and child pairs allowed wherever a parent and both children appear."""
    s = dict(zip(nodes, assignment))
    td = dp.td
    for m, st in s.items():
        if not dp.realizable[m][st]:
            return False
        kids = td.children[m]
        if kids and all(c in s for c in kids):
            if not dp.in_F(m, st, [s[c] for c in kids]):
                return False
    return True


# ------------------------------------------------------------------ family

class _Family:
    def __init__(self, dp, geometry, spaces, cap):
        self.dp, self.geo, self.spaces, self.cap = dp, geometry, spaces, cap
        self.sets: list[NodeSet] = []
        self.index: dict[frozenset, int] = {}
        self.links: set[tuple[int, int]] = set()
        self.total = 0

    def add(self, N) -> int:
        key = frozenset(N)
        got = self.index.get(key)
        if got is not None:
            return got
        nodes, steps = _plan(key, self.dp.td, self.geo.depth)
        size = self.spaces.count(steps)
        self.total += size
        if self.total > self.cap:
            raise ResourceLimitError(
                f"LP index space exceeds the cap of {self.cap} y-variables "
                f"(reached {self.total} at a set of {len(nodes)} nodes; "
                f"{len(self.sets)} sets so far); use a shallower decomposition "
                f"or a smaller instance", stage="lp-build")
        self.sets.append(NodeSet(nodes, steps))
        self.index[key] = len(self.sets) - 1
        return len(self.sets) - 1

    def link(self, a: int, b: int) -> None:
        if a != b:
            self.links.add((a, b))


def _bit(dp: DpTables, node: int, state: int, var: int) -> int:
    return dp.states[node][state][dp.bags[node].index(var)]


def build_lp(ext: CspExtensionResult, dp: DpTables, c: PairWeights,
             geometry: NodeGeometry | None = None, pruned: bool = True,
             cap: int = DEFAULT_INDEX_CAP) -> LpProgram:
    """Build the LP for ``ext`` with pair weights ``c``.

    With ``ext.k == 1`` (single-side mode) the objective is the weight of pairs
    split by part 1; otherwise it is half the weight summed over all parts.
    ``pruned=False`` instantiates every assignment and adds explicit rows
    zeroing child pairs outside ``F`` and unrealizable leaf states.
    """
    td = dp.td
    geo = geometry or node_geometry(td)
    k = ext.k
    factor = 1.0 if k == 1 else 0.5
    spaces = _Spaces(dp, pruned)
    fam = _Family(dp, geo, spaces, cap)
    nodes = list(range(len(td.bags)))
    T = [fam.add(geo.T[i]) for i in nodes]
    for i in nodes:
        if td.children[i]:
            fam.link(T[i], T[td.children[i][0]])
    zero_sets: list[tuple[int, str]] = []
    if not pruned:
        for i in nodes:
            kids = td.children[i]
            if kids:
                sid = fam.add({i, *kids})
                fam.link(sid, T[kids[0]])
                zero_sets.append((sid, "C4"))
            else:
                sid = fam.add({i})
                fam.link(sid, T[i])
                zero_sets.append((sid, "C5"))

    raw_pairs = []
    for u, v, w in c.positive_pairs():
        for a in range(1, k + 1):
            xu, xv = ext.base[(u, a)], ext.base[(v, a)]
            A, B = geo.hi[xu], geo.hi[xv]
            info = dict(u=u, v=v, part=a, weight=w, A=A, B=B)
            if A == B:
                sid = fam.add({A})
                fam.link(sid, T[A])
                info.update(kind="same", pair_set=sid)
            elif A in geo.T[B] or B in geo.T[A]:
                sid = fam.add({A, B})
                fam.link(sid, T[B] if A in geo.T[B] else T[A])
                info.update(kind="ancestor", pair_set=sid)
            else:
                i = geo.lca(A, B)
                j = geo.child_toward(i, A)
                Tj = geo.T[j]
                sid = fam.add({A, B})
                q = fam.add(Tj | {A, B})
                qa = fam.add(Tj | {A})
                qb = fam.add(Tj | {B})
                fam.link(sid, q)
                fam.link(qa, q)
                fam.link(qb, q)
                fam.link(qa, T[A])
                fam.link(qb, T[B])
                info.update(kind="split", pair_set=sid, lca=i, j=j)
            raw_pairs.append((info, xu, xv))

    # materialize the index spaces
    names: list[str] = []
    offset = 0
    for ns in fam.sets:
        ns.assignments = spaces.enumerate(ns.nodes, ns.steps)
        ns.index = {t: n for n, t in enumerate(ns.assignments)}
        ns.offset = offset
        offset += len(ns.assignments)
        label = ".".join(map(str, ns.nodes))
        names.extend(f"y_{label}#{'.'.join(map(str, t))}" for t in ns.assignments)
    pairs = []
    for info, xu, xv in raw_pairs:
        pairs.append((PairInfo(z=offset, **info), xu, xv))
        names.append(f"z_{info['u']}_{info['v']}_{info['part']}")
        offset += 1
    n_vars = offset

    rows, cols, vals, rhs, kinds = [], [], [], [], []

    def emit(entries, b, kind):
        r = len(rhs)
        for col, val in entries:
            rows.append(r)
            cols.append(col)
            vals.append(val)
        rhs.append(b)
        kinds.append(kind)

    # C1: z equals the mass of assignments that split the pair
    for p, xu, xv in pairs:
        ns = fam.sets[p.pair_set]
        ia, ib = ns.position(p.A), ns.position(p.B)
        entries = [(p.z, 1.0)]
        for n, t in enumerate(ns.assignments):
            if _bit(dp, p.A, t[ia], xu) != _bit(dp, p.B, t[ib], xv):
                entries.append((ns.offset + n, -1.0))
        emit(entries, 0.0, "C1")

    # C2: aggregated marginalization along every link
    for a, b in sorted(fam.links):
        small, big = fam.sets[a], fam.sets[b]
        proj = [big.position(m) for m in small.nodes]
        groups: list[list[int]] = [[] for _ in small.assignments]
        for n, t in enumerate(big.assignments):
            key = tuple(t[q] for q in proj)
            h = small.index.get(key)
            if h is None:
                raise InvariantError(f"marginal of an instantiated assignment is missing: "
                                     f"{small.nodes} <- {big.nodes}", stage="lp-build")
            groups[h].append(big.offset + n)
        for h, members in enumerate(groups):
            emit([(small.offset + h, 1.0)] + [(m, -1.0) for m in members], 0.0, "C2")

    # C3: the root distribution sums to one
    root = fam.sets[T[td.root]]
    emit([(root.offset + n, 1.0) for n in range(len(root))], 1.0, "C3")

    # C4 / C5 on the unpruned variant
    for sid, kind in zero_sets:
        ns = fam.sets[sid]
        for n, t in enumerate(ns.assignments):
            if not dp_consistent(dp, ns.nodes, t):
                emit([(ns.offset + n, 1.0)], 0.0, kind)

    obj = np.zeros(n_vars)
    for p, _, _ in pairs:
        obj[p.z] = factor * p.weight
    A = sp.csr_matrix((np.array(vals, dtype=float), (np.array(rows, dtype=np.int64),
                                                      np.array(cols, dtype=np.int64))),
                      shape=(len(rhs), n_vars))
    return LpProgram(obj, A, np.array(rhs, dtype=float), names, fam.sets, dict(fam.index),
                     T, [p for p, _, _ in pairs], sorted(fam.links), kinds, factor, k,
                     pruned, dp, geo, ext)


# ------------------------------------------------------------------ export

def _fmt(x: float) -> str:
    return repr(float(x)) if not float(x).is_integer() else str(int(x))


def _terms(coefs) -> list[str]:
    out = []
    for name, val in coefs:
        sign = "-" if val < 0 else "+"
        mag = abs(val)
        out.append(f"{sign} {name}" if mag == 1 else f"{sign} {_fmt(mag)} {name}")
    if out and out[0].startswith("+ "):
        out[0] = out[0][2:]
    return out


def _wrap(prefix: str, terms: list[str], tail: str = "", width: int = 100) -> list[str]:
    lines, cur = [], prefix
    for t in terms:
        if len(cur) + len(t) + 1 > width and cur.strip():
            lines.append(cur)
            cur = "   "
        cur += " " + t
    cur += tail
    lines.append(cur)
    return lines


def export_lp(program: LpProgram, path) -> None:
    """Write ``program`` in the CPLEX LP text format."""
    names = program.names
    out = ["\\ constrained max-k-cut relaxation", "Maximize"]
    obj = [(names[i], program.objective[i]) for i in np.flatnonzero(program.objective)]
    out += _wrap(" obj:", _terms(obj) or ["0 " + names[0]] if names else ["0"])
    out.append("Subject To")
    A = program.A_eq.tocsr()
    for r in range(A.shape[0]):
        lo, hi = A.indptr[r], A.indptr[r + 1]
        coefs = [(names[j], v) for j, v in zip(A.indices[lo:hi], A.data[lo:hi])]
        tag = f" {program.row_kinds[r].lower()}_{r}:"
        out += _wrap(tag, _terms(coefs), f" = {_fmt(program.b_eq[r])}")
    out.append("Bounds")
    out += [f" 0 <= {nm} <= 1" for nm in names]
    out.append("End")
    Path(path).write_text("\n".join(out) + "\n")


def objective_support(program: LpProgram) -> set:
    """Vertex pairs with a nonzero objective coefficient."""
    return {(p.u, p.v) for p in program.pairs if program.objective[p.z] != 0}


def lp_size_report(program: LpProgram) -> dict:
    largest = max(program.sets, key=len)
    return {**program.summary(), "largest_set": {"nodes": len(largest.nodes),
                                                 "assignments": len(largest)},
            "log10_vars": round(math.log10(max(1, program.n_vars)), 3)}
