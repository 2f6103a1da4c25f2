"""Reference semantics by exhaustive enumeration.

Set quantifiers range over all ``2^|V|`` (or ``2^|E|``) subsets, so this is
only usable on small graphs.  It is the ground truth the compiler is tested
against.
"""
from __future__ import annotations

from typing import Iterable, Mapping, Sequence

from ..errors import ResourceLimitError
from ..graph import Graph
from .formula import (EDGE, ESET, VERTEX, VSET, BinOp, Card, Const, EdgeAtom, Eq, Inc, Member,
                      MsoFormula, Node, Not, Quant)

DEFAULT_CAP = 12
DEFAULT_EDGE_CAP = 16


def _has_sort(node: Node, sort: str) -> bool:
    if isinstance(node, Quant) and node.sort == sort:
        return True
    return any(_has_sort(c, sort) for c in (getattr(node, "arg", None), getattr(node, "left", None),
                                            getattr(node, "right", None),
                                            getattr(node, "body", None)) if c is not None)


class NaiveEvaluator:
    """Closure-compiled evaluator for one (graph, formula) pair.

    Vertex sets are bitmasks over ``v - 1``; edge sets are bitmasks over the
    index of the edge in ``g.sorted_edges()``.
    """

    def __init__(self, g: Graph, phi: MsoFormula, cap: int = DEFAULT_CAP,
                 edge_cap: int = DEFAULT_EDGE_CAP):
        if g.n > cap:
            raise ResourceLimitError(f"naive evaluation capped at {cap} vertices, graph has {g.n}")
        if _has_sort(phi.body, ESET) and g.m > edge_cap:
            raise ResourceLimitError(
                f"edge-set quantifier over {g.m} edges exceeds the cap of {edge_cap}")
        self.g, self.phi = g, phi
        self.edges = g.sorted_edges()
        self.adj = [0] * (g.n + 1)
        for u, v in self.edges:
            self.adj[u] |= 1 << (v - 1)
            self.adj[v] |= 1 << (u - 1)
        self.domains = {
            VERTEX: range(1, g.n + 1), EDGE: range(len(self.edges)),
            VSET: range(1 << g.n), ESET: range(1 << len(self.edges)),
        }
        self._sorts: dict[str, str] = {name: VSET for name in phi.free}
        self._fn = self._compile(phi.body)

    def _compile(self, node: Node):
        if isinstance(node, Const):
            val = node.value
            return lambda env: val
        if isinstance(node, Not):
            f = self._compile(node.arg)
            return lambda env: not f(env)
        if isinstance(node, BinOp):
            a, b = self._compile(node.left), self._compile(node.right)
            if node.op == "&":
                return lambda env: a(env) and b(env)
            if node.op == "|":
                return lambda env: a(env) or b(env)
            if node.op == "->":
                return lambda env: (not a(env)) or b(env)
            return lambda env: a(env) == b(env)
        if isinstance(node, Quant):
            self._sorts[node.var] = node.sort
            body, var, dom = self._compile(node.body), node.var, self.domains[node.sort]
            if node.kind == "exists":
                def ex(env):
                    for val in dom:
                        env[var] = val
                        if body(env):
                            return True
                    return False
                return ex

            def fa(env):
                for val in dom:
                    env[var] = val
                    if not body(env):
                        return False
                return True
            return fa
        if isinstance(node, Member):
            x, s = node.elem, node.set
            if self._sorts[x] == VERTEX:
                return lambda env: (env[s] >> (env[x] - 1)) & 1 == 1
            return lambda env: (env[s] >> env[x]) & 1 == 1
        if isinstance(node, EdgeAtom):
            x, y, adj = node.x, node.y, self.adj
            return lambda env: (adj[env[x]] >> (env[y] - 1)) & 1 == 1
        if isinstance(node, Inc):
            x, e, edges = node.vertex, node.edge, self.edges
            return lambda env: env[x] in edges[env[e]]
        if isinstance(node, Eq):
            x, y = node.x, node.y
            return lambda env: env[x] == env[y]
        if isinstance(node, Card):
            s, q, p = node.set, node.q, node.p
            return lambda env: bin(env[s]).count("1") % q == p
        raise TypeError(node)

    def masks(self, t) -> dict[str, int]:
        """Normalise a free assignment to ``{name: bitmask}``."""
        if isinstance(t, Mapping):
            sets = [t[name] for name in self.phi.free]
        else:
            sets = list(t)
        if len(sets) != len(self.phi.free):
            raise ValueError(f"formula has {len(self.phi.free)} free variables, got {len(sets)} sets")
        out = {}
        for name, s in zip(self.phi.free, sets):
            if isinstance(s, int):
                out[name] = s
                continue
            m = 0
            for v in s:
                if not 1 <= v <= self.g.n:
                    raise ValueError(f"vertex {v} outside 1..{self.g.n}")
                m |= 1 << (v - 1)
            out[name] = m
        return out

    def __call__(self, t) -> bool:
        return bool(self._fn(self.masks(t)))

    def models(self) -> set[tuple]:
        """All satisfying assignments as tuples of bitmasks (one per free variable)."""
        k, n = len(self.phi.free), self.g.n
        out = set()
        for code in range(1 << (n * k)):
            ms = tuple((code >> (a * n)) & ((1 << n) - 1) for a in range(k))
            if self._fn(dict(zip(self.phi.free, ms))):
                out.add(ms)
        return out


def evaluate_naive(g: Graph, phi: MsoFormula, t: Sequence[Iterable[int]] | Mapping,
                   cap: int = DEFAULT_CAP) -> bool:
    """Truth value of ``phi`` on ``g`` with the free sets assigned by ``t``."""
    return NaiveEvaluator(g, phi, cap)(t)
