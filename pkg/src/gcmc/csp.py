"""Finite-domain CSPs and the tree-decomposition dynamic program.

Variables are integers ``0..n-1`` with domains ``0..d-1``.  A configuration is
a partial assignment; here it is a ``dict`` (absent key = unassigned) or, bag
locally, a tuple aligned with the sorted bag.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import prod
from typing import Iterable, Mapping, Sequence

from .errors import InvariantError, ResourceLimitError
from .treedec import TreeDecomposition, validate

DEFAULT_STATE_CAP = 200_000
DEFAULT_ENUM_CAP = 1_000_000


@dataclass(frozen=True)
class Constraint:
    scope: tuple
    relation: frozenset

    def __len__(self):
        return len(self.relation)


class CspInstance:
    def __init__(self):
        self.names: list[str] = []
        self.domains: list[int] = []
        self.constraints: list[Constraint] = []
        self._by_var: list[list[int]] = []

    @property
    def n(self) -> int:
        return len(self.names)

    def add_variable(self, name: str, size: int = 2) -> int:
        if size < 1:
            raise ValueError("domain must be nonempty")
        self.names.append(name)
        self.domains.append(size)
        self._by_var.append([])
        return len(self.names) - 1

    def add_constraint(self, scope: Sequence[int], relation: Iterable[Sequence[int]]) -> Constraint:
        scope = tuple(scope)
        if not scope or len(set(scope)) != len(scope):
            raise ValueError(f"scope must be nonempty and duplicate-free: {scope}")
        rel = set()
        for t in relation:
            t = tuple(t)
            if len(t) != len(scope):
                raise ValueError(f"tuple {t} does not match scope arity {len(scope)}")
            for v, x in zip(scope, t):
                if not 0 <= x < self.domains[v]:
                    raise ValueError(f"value {x} outside the domain of {self.names[v]}")
            rel.add(t)
        c = Constraint(scope, frozenset(rel))
        self.constraints.append(c)
        for v in scope:
            self._by_var[v].append(len(self.constraints) - 1)
        return c

    @property
    def length(self) -> int:
        return sum(len(c) for c in self.constraints)

    def constraint_graph(self) -> tuple[list[int], set[tuple[int, int]]]:
        edges = set()
        for c in self.constraints:
            for a, b in itertools.combinations(sorted(c.scope), 2):
                edges.add((a, b))
        return list(range(self.n)), edges

    def constraints_within(self, W) -> list[Constraint]:
        W = set(W)
        idx = {ci for v in W for ci in self._by_var[v]}
        return [self.constraints[ci] for ci in sorted(idx)
                if all(v in W for v in self.constraints[ci].scope)]

    def satisfies(self, assignment: Mapping[int, int] | Sequence[int]) -> bool:
        """Does a (possibly partial) assignment violate no fully assigned constraint?"""
        get = assignment.get if isinstance(assignment, Mapping) else (
            lambda v, _a=assignment: _a[v])
        for c in self.constraints:
            vals = tuple(get(v) for v in c.scope)
            if None in vals:
                continue
            if vals not in c.relation:
                return False
        return True


# ------------------------------------------------------------------ state operations

def consistent(k: Mapping, p: Mapping) -> bool:
    """Agree wherever both are assigned."""
    if len(p) < len(k):
        k, p = p, k
    return all(p.get(v, x) == x for v, x in k.items())


def union(k: Mapping, p: Mapping) -> dict:
    if not consistent(k, p):
        raise InvariantError("union of inconsistent configurations")
    out = dict(p)
    out.update(k)
    return out


def restrict(k: Mapping, W) -> dict:
    W = set(W)
    return {v: x for v, x in k.items() if v in W}


# ------------------------------------------------------------------ configurations

def configurations(J: CspInstance, W: Iterable[int], cap: int = DEFAULT_STATE_CAP) -> list[tuple]:
    """All assignments to ``W`` violating no constraint whose scope lies in ``W``.

    Returned as lexicographically sorted tuples aligned with ``sorted(W)``.
    """
    W = sorted(set(W))
    cons = J.constraints_within(W)
    scope: list[int] = []
    pos: dict[int, int] = {}
    rows: list[tuple] = [()]
    while cons:
        best = max(range(len(cons)),
                   key=lambda i: (sum(v in pos for v in cons[i].scope), -len(cons[i])))
        c = cons.pop(best)
        shared = [i for i, v in enumerate(c.scope) if v in pos]
        fresh = [i for i, v in enumerate(c.scope) if v not in pos]
        index: dict[tuple, list[tuple]] = {}
        for t in c.relation:
            index.setdefault(tuple(t[i] for i in shared), []).append(tuple(t[i] for i in fresh))
        sh_pos = [pos[c.scope[i]] for i in shared]
        rows = [r + ext for r in rows for ext in index.get(tuple(r[p] for p in sh_pos), ())]
        for i in fresh:
            pos[c.scope[i]] = len(scope)
            scope.append(c.scope[i])
        if len(rows) > cap:
            raise ResourceLimitError(f"configuration count exceeds cap {cap} on a bag of {len(W)}")
    free = [v for v in W if v not in pos]
    if free:
        if len(rows) * prod(J.domains[v] for v in free) > cap:
            raise ResourceLimitError(f"configuration count exceeds cap {cap} on a bag of {len(W)}")
        rows = [r + ext for r in rows
                for ext in itertools.product(*(range(J.domains[v]) for v in free))]
        for v in free:
            pos[v] = len(scope)
            scope.append(v)
    order = [pos[v] for v in W]
    return sorted(tuple(r[p] for p in order) for r in rows)


# ------------------------------------------------------------------ dynamic program

@dataclass
class DpTables:
    """State spaces, child-compatibility indices and realizability per node.

    ``states[i]`` lists the bag configurations of node ``i`` (tuples over
    ``bags[i]``).  A child state is compatible with a parent state when they
    agree on the shared bag variables; the valid child pairs of ``(i, s)`` are
    the product of the two compatible lists.
    """

    J: CspInstance
    td: TreeDecomposition
    bags: list
    states: list
    index: list
    realizable: list
    up_key: list = field(repr=False)      # positions in the child's bag of vars shared with parent
    down_key: list = field(repr=False)    # positions in the parent's bag of the same vars
    groups: list = field(repr=False)      # groups[c][key] -> child state indices

    def compatible(self, c: int, parent_state: tuple) -> list[int]:
        key = tuple(parent_state[p] for p in self.down_key[c])
        return self.groups[c].get(key, [])

    def child_options(self, i: int, s: int) -> list[list[int]]:
        st = self.states[i][s]
        return [self.compatible(c, st) for c in self.td.children[i]]

    def valid_pairs(self, i: int, s: int):
        """The valid child-state pairs of state ``s`` at internal node ``i``."""
        opts = self.child_options(i, s)
        return itertools.product(*opts)

    def in_F(self, i: int, s: int, pair: Sequence[int]) -> bool:
        st = self.states[i][s]
        for c, w in zip(self.td.children[i], pair):
            cst = self.states[c][w]
            if tuple(cst[p] for p in self.up_key[c]) != tuple(st[p] for p in self.down_key[c]):
                return False
        return True

    def as_config(self, i: int, s: int) -> dict:
        return dict(zip(self.bags[i], self.states[i][s]))

    def max_states(self) -> int:
        return max(len(s) for s in self.states)

    def max_pairs(self) -> int:
        best = 0
        for i in self.td.nodes:
            if self.td.children[i]:
                for s in range(len(self.states[i])):
                    best = max(best, prod(len(o) for o in self.child_options(i, s)))
        return best

    def root_realizable(self) -> list[int]:
        r = self.td.root
        return [s for s in range(len(self.states[r])) if self.realizable[r][s]]


def build_dp(J: CspInstance, td: TreeDecomposition, cap: int = DEFAULT_STATE_CAP,
             check: bool = True) -> DpTables:
    if check:
        verts, edges = J.constraint_graph()
        rep = validate(td, verts, edges)
        if not rep:
            raise InvariantError(f"decomposition invalid for the CSP: {rep.property} {rep.witness}")
    bags = [tuple(sorted(b)) for b in td.bags]
    states = [configurations(J, b, cap) for b in bags]
    index = [{st: n for n, st in enumerate(ss)} for ss in states]
    n = len(bags)
    up_key, down_key, groups = [None] * n, [None] * n, [None] * n
    for c in td.nodes:
        p = td.parent[c]
        if p < 0:
            continue
        shared = [v for v in bags[c] if v in td.bags[p]]
        up_key[c] = [bags[c].index(v) for v in shared]
        down_key[c] = [bags[p].index(v) for v in shared]
        g: dict[tuple, list[int]] = {}
        for s, st in enumerate(states[c]):
            g.setdefault(tuple(st[q] for q in up_key[c]), []).append(s)
        groups[c] = g
    dp = DpTables(J, td, bags, states, index, [None] * n, up_key, down_key, groups)
    for i in td.postorder():
        kids = td.children[i]
        if not kids:
            dp.realizable[i] = [True] * len(states[i])
            continue
        real = []
        for s in range(len(states[i])):
            opts = dp.child_options(i, s)
            real.append(all(any(dp.realizable[c][w] for w in o) for c, o in zip(kids, opts)))
        dp.realizable[i] = real
    return dp


def partial_solutions(dp: DpTables, cap: int = DEFAULT_ENUM_CAP) -> list[list[list[dict]]]:
    """``H[i][s]``: every partial solution below ``i`` that induces state ``s``.

    Built bottom-up by combining the node state with compatible child partial
    solutions; exponential, for verification on small instances.
    """
    td = dp.td
    H: list = [None] * len(td.bags)
    total = 0
    for i in td.postorder():
        kids = td.children[i]
        H[i] = []
        for s in range(len(dp.states[i])):
            sigma = dp.as_config(i, s)
            if not kids:
                H[i].append([sigma])
                continue
            out = []
            for pair in dp.valid_pairs(i, s):
                for parts in itertools.product(*(H[c][w] for c, w in zip(kids, pair))):
                    h = dict(sigma)
                    for part in parts:
                        h.update(part)
                    out.append(h)
            total += len(out)
            if total > cap:
                raise ResourceLimitError(f"partial-solution enumeration exceeds cap {cap}")
            H[i].append(out)
    return H


def enumerate_feasible(J: CspInstance, td: TreeDecomposition, dp: DpTables | None = None,
                       cap: int = DEFAULT_ENUM_CAP) -> set[tuple]:
    """Feas(J) as full assignment tuples, read off the root partial solutions."""
    dp = dp or build_dp(J, td)
    H = partial_solutions(dp, cap)
    out = set()
    for sols in H[td.root]:
        for h in sols:
            if len(h) != J.n:
                missing = sorted(set(range(J.n)) - set(h))
                raise InvariantError(f"variables {missing[:5]} are in no bag")
            out.add(tuple(h[v] for v in range(J.n)))
    return out


# ------------------------------------------------------------------ independent oracle

def solve_all(J: CspInstance, variables: Iterable[int] | None = None,
              cap: int = DEFAULT_ENUM_CAP) -> list[dict]:
    """Backtracking enumeration of every assignment to ``variables`` that satisfies
    all constraints inside ``variables``.  Uses no decomposition."""
    W = sorted(set(range(J.n) if variables is None else variables))
    cons = J.constraints_within(W)
    touching = {v: [] for v in W}
    for ci, c in enumerate(cons):
        for v in c.scope:
            touching[v].append(ci)
    order, placed = [], set()
    remaining = set(W)
    while remaining:
        def score(v):
            done = sum(1 for ci in touching[v]
                       if all(u in placed or u == v for u in cons[ci].scope))
            linked = sum(1 for ci in touching[v] if any(u in placed for u in cons[ci].scope))
            return (done, linked, len(touching[v]), -v)
        v = max(remaining, key=score)
        order.append(v)
        placed.add(v)
        remaining.discard(v)
    step = {v: n for n, v in enumerate(order)}
    closing: list[list[Constraint]] = [[] for _ in order]
    for c in cons:
        closing[max(step[v] for v in c.scope)].append(c)

    out: list[dict] = []
    cur: dict[int, int] = {}

    def rec(d):
        if d == len(order):
            out.append(dict(cur))
            if len(out) > cap:
                raise ResourceLimitError(f"solution enumeration exceeds cap {cap}")
            return
        v = order[d]
        for x in range(J.domains[v]):
            cur[v] = x
            if all(tuple(cur[u] for u in c.scope) in c.relation for c in closing[d]):
                rec(d + 1)
        del cur[v]

    rec(0)
    return out
