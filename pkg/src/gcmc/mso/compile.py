"""CSP extensions of graph formulas.

An extension ``J'`` has one binary base variable ``(v, a)`` per vertex and
part ("is ``v`` in ``U_a``") plus auxiliary variables.  Two kinds of pieces
are combined:

* relational constraints written directly on base variables (per edge,
  per vertex, per closed neighbourhood);
* automaton pieces: one state variable per decomposition node whose
  constraint ties the node state to the children's states and to the base
  variables the automaton reads at that node.  The root constraint keeps
  accepting states only.

The vertex decomposition is chosen so that every relational scope fits in a
bag; the decomposition of ``J'`` reuses its tree shape.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

from ..csp import CspInstance
from ..errors import InvariantError
from ..graph import Graph
from ..treedec import TreeDecomposition, decompose, validate
from .automata import DEFAULT_STATE_CAP, NodeContext, TreeAutomaton, automaton_for
from .formula import Const, MsoFormula, fold_constants


@dataclass
class CspExtensionResult:
    csp: CspInstance
    graph: Graph
    k: int
    base: dict                      # (v, a) -> variable id
    vertex_td: TreeDecomposition    # decomposition of G the pieces were built on
    td: TreeDecomposition           # decomposition of the constraint graph of ``csp``
    aux: list = field(default_factory=list)
    automaton_states: dict = field(default_factory=dict)

    @property
    def width(self) -> int:
        return self.td.width

    def project(self, assignment) -> tuple[int, ...]:
        """Free-set bitmasks (bit ``v-1``) encoded by a full assignment of ``csp``."""
        out = []
        for a in range(1, self.k + 1):
            m = 0
            for v in self.graph.vertices:
                if assignment[self.base[(v, a)]]:
                    m |= 1 << (v - 1)
            out.append(m)
        return tuple(out)

    def summary(self) -> dict:
        return {"variables": self.csp.n, "constraints": len(self.csp.constraints),
                "csp_size": self.csp.length, "aux_vars": len(self.aux), "width": self.width}


class ExtensionBuilder:
    """Accumulates relational and automaton pieces, then decomposes and emits ``J'``."""

    def __init__(self, g: Graph, k: int):
        if k < 1:
            raise ValueError("need at least one free set")
        self.g, self.k = g, k
        self.csp = CspInstance()
        self.base = {}
        for v in g.vertices:
            for a in range(1, k + 1):
                self.base[(v, a)] = self.csp.add_variable(f"x[{v},{a}]", 2)
        self._relations: list[tuple[tuple, list]] = []
        self._automata: list[tuple[Callable, tuple, str]] = []

    def add_relation(self, scope: Sequence[tuple], relation) -> None:
        """A constraint on base variables ``(v, a)``."""
        self._relations.append((tuple(scope), list(relation)))

    def add_automaton(self, factory: Callable[[NodeContext], TreeAutomaton | object],
                      parts: Sequence[int], label: str) -> None:
        """``factory(ctx)`` returns an automaton whose free slot ``s`` reads part ``parts[s]``."""
        self._automata.append((factory, tuple(parts), label))

    def structure_edges(self) -> set:
        edges = set(self.g.sorted_edges())
        for scope, _ in self._relations:
            vs = sorted({v for v, _ in scope})
            edges.update(itertools.combinations(vs, 2))
        return edges

    def finish(self, td: TreeDecomposition | None = None, cap: int = DEFAULT_STATE_CAP
               ) -> CspExtensionResult:
        g = self.g
        edges = self.structure_edges()
        if td is None:
            td = decompose(g.vertices, edges)
        else:
            rep = validate(td, g.vertices, edges)
            if not rep:
                raise InvariantError(f"vertex decomposition invalid for this instance: "
                                     f"{rep.property} {rep.witness}", stage="mso-compile")
        for scope, rel in self._relations:
            self.csp.add_constraint([self.base[x] for x in scope], rel)
        ctx = NodeContext(g, td) if self._automata else None
        n_nodes = len(td.bags)
        extra: list[set] = [set() for _ in range(n_nodes)]   # aux and read vars per J' bag
        aux, states = [], {}
        full = any(len({v for v, _ in s}) > 1 for s, _ in self._relations)
        for factory, parts, label in self._automata:
            built = factory(ctx)
            root = built.root if isinstance(built, TreeAutomaton) else built
            n_slots = built.n_slots if isinstance(built, TreeAutomaton) else len(parts)
            vars_, reads = _emit_automaton(self.csp, self.base, ctx, root, n_slots, parts, label)
            aux.extend(vars_)
            states[label] = root.n_states
            for i in range(n_nodes):
                extra[i].add(vars_[i])
                extra[i].update(vars_[c] for c in td.children[i])
                extra[i].update(reads[i])
            full = full or getattr(root, "reads", "home") == "bag"
        bags = []
        for i in range(n_nodes):
            if full or not self._automata:
                verts = td.bags[i]
                b = {self.base[(v, a)] for v in verts for a in range(1, self.k + 1)}
            else:
                b = set()
            bags.append(b | extra[i])
        if not full and self._automata:
            _close_paths(bags, td, self.base, self.k, ctx)
        jtd = TreeDecomposition([frozenset(b) for b in bags], list(td.parent),
                                [list(c) for c in td.children], td.root)
        return CspExtensionResult(self.csp, g, self.k, dict(self.base), td, jtd, aux, states)


def _close_paths(bags, td, base, k, ctx):
    """Make every base variable occupy a connected set of J' bags.

    A vertex is read at its home node and at nodes below it where it ends a
    home edge; the nodes in between get the variable as well.
    """
    for v in ctx.g.vertices:
        vars_ = [base[(v, a)] for a in range(1, k + 1)]
        top = ctx.geometry.hi[v]
        bags[top].update(vars_)
        for i in range(len(bags)):
            if i != top and any(x in bags[i] for x in vars_):
                j = i
                while j != top:
                    bags[j].update(vars_)
                    j = td.parent[j]


def _emit_automaton(csp: CspInstance, base: dict, ctx: NodeContext, root, n_slots: int,
                    parts: Sequence[int], label: str):
    """Enumerate the reachable runs of ``root`` and add its node constraints to ``csp``.

    Returns the state variable per node and the base variables read per node.
    """
    td = ctx.td
    n_nodes = len(td.bags)
    reads_bag = getattr(root, "reads", "home") == "bag"
    trans: list[list[tuple]] = [None] * n_nodes   # (state, kid states, bit values)
    reach: list[list[int]] = [None] * n_nodes
    read_pos = []
    for i in range(n_nodes):
        rm = (1 << len(ctx.bags[i])) - 1 if reads_bag else ctx.read_mask[i]
        read_pos.append([p for p in range(len(ctx.bags[i])) if (rm >> p) & 1])
    env = [0] * n_slots
    for i in td.postorder():
        pos = read_pos[i]
        kids = td.children[i]
        rows, seen = [], {}
        masks = [sum(1 << p for p, bit in zip(pos, bits) if bit)
                 for bits in itertools.product((0, 1), repeat=len(pos))]
        for combo in itertools.product(*(reach[c] for c in kids)):
            for ms in itertools.product(masks, repeat=len(parts)):
                for s, m in enumerate(ms):
                    env[s] = m
                q = root.step(i, env, combo)
                if root.fate(q) is False:
                    continue
                rows.append((q, combo, ms))
                seen[q] = None
        trans[i] = rows
        reach[i] = list(seen)
    # keep only runs that can still end in an accepting root state
    useful: list[set] = [set() for _ in range(n_nodes)]
    r = td.root
    trans[r] = [t for t in trans[r] if root.accept(t[0])]
    for i in td.bfs():
        if i != r:
            trans[i] = [t for t in trans[i] if t[0] in useful[i]]
        for q, combo, _ in trans[i]:
            for c, qc in zip(td.children[i], combo):
                useful[c].add(qc)
    local = []
    for i in range(n_nodes):
        qs = sorted({t[0] for t in trans[i]})
        local.append({q: n for n, q in enumerate(qs)})
    vars_ = [csp.add_variable(f"q[{label}][{i}]", max(1, len(local[i]))) for i in range(n_nodes)]
    reads = []
    for i in range(n_nodes):
        bits_vars = [base[(ctx.bags[i][p], parts[s])] for s in range(len(parts))
                     for p in read_pos[i]]
        reads.append(bits_vars)
        scope = [vars_[i]] + [vars_[c] for c in td.children[i]] + bits_vars
        rel = []
        for q, combo, ms in trans[i]:
            row = [local[i][q]] + [local[c][qc] for c, qc in zip(td.children[i], combo)]
            for m in ms:
                row.extend((m >> p) & 1 for p in read_pos[i])
            rel.append(row)
        csp.add_constraint(scope, rel)
    return vars_, reads


# ------------------------------------------------------------------ entry points

def compile(phi: MsoFormula, g: Graph, td: TreeDecomposition | None = None,
            cap: int = DEFAULT_STATE_CAP) -> CspExtensionResult:
    """CSP extension of ``phi`` on ``g`` built from its tree automaton.

    ``td`` decomposes ``g`` (vertex bags); one is computed when omitted.  The
    free set ``phi.free[a-1]`` is read from the base variables ``(v, a)``.
    """
    b = ExtensionBuilder(g, phi.k)
    body = fold_constants(phi.body)
    if isinstance(body, Const):
        first = (1, 1)
        b.add_relation([first], [(0,), (1,)] if body.value else [])
        return b.finish(td, cap)
    folded = MsoFormula(phi.free, body)
    b.add_automaton(lambda ctx: automaton_for(folded, g, ctx.td, cap, ctx),
                    list(range(1, phi.k + 1)), "phi")
    return b.finish(td, cap)
