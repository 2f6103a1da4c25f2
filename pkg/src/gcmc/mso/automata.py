"""Deterministic bottom-up tree automata over a tree decomposition of ``G``.

The automaton reads, at node ``i``, one bitmask per set variable: vertex sets
are masks over the positions of the sorted bag ``X_i``; edge sets are masks
over the edges *homed* at ``i`` (the highest node containing both endpoints).
Each element is inspected only at its home node, so every element is counted
exactly once.  Bound vertex-set variables keep their bits consistent between
neighbouring bags through the boundary bits stored by the subset construction.

States are interned integers per automaton.  ``fate(q)`` is ``True``/``False``
when acceptance at the root is already decided whatever happens above, which
lets products and subset constructions collapse dead or won branches.
"""
from __future__ import annotations

import itertools
from operator import itemgetter
from typing import Sequence

from ..errors import ResourceLimitError
from ..graph import Graph
from ..treedec import TreeDecomposition, node_geometry
from .formula import (EDGE, ESET, VERTEX, VSET, BinOp, Card, Const, EdgeAtom, Eq, Inc, Member,
                      MsoFormula, Node, Not, Quant, fold_constants, to_text)

DEFAULT_STATE_CAP = 50_000

_T, _F = -1, -2      # component states whose acceptance is already decided


class NodeContext:
    """Per-node lookup tables shared by every automaton over one (G, td)."""

    def __init__(self, g: Graph, td: TreeDecomposition):
        self.g, self.td = g, td
        geo = node_geometry(td)
        self.geometry = geo
        self.bags = [tuple(sorted(b)) for b in td.bags]
        self.pos = [{v: p for p, v in enumerate(b)} for b in self.bags]
        self.children = [tuple(c) for c in td.children]
        n_nodes = len(self.bags)
        self.home = [[] for _ in range(n_nodes)]
        for v in g.vertices:
            self.home[geo.hi[v]].append(v)
        self.home_mask = [sum(1 << self.pos[i][v] for v in self.home[i]) for i in range(n_nodes)]
        self.edges = g.sorted_edges()
        self.edge_home = []
        self.home_edges = [[] for _ in range(n_nodes)]   # (edge index, pos u, pos v)
        for idx, (u, v) in enumerate(self.edges):
            cands = [i for i in range(n_nodes) if u in td.bags[i] and v in td.bags[i]]
            if not cands:
                raise ValueError(f"edge {u}-{v} is not covered by the decomposition")
            h = min(cands, key=lambda i: geo.depth[i])
            self.edge_home.append(h)
            self.home_edges[h].append((idx, self.pos[h][u], self.pos[h][v]))
        # bits any atom may look at: home vertices and endpoints of home edges
        self.read_mask = list(self.home_mask)
        for i in range(n_nodes):
            for _, pu, pv in self.home_edges[i]:
                self.read_mask[i] |= (1 << pu) | (1 << pv)
        # boundary tables: vertex-set bits shared with the parent bag
        self.up: list[list[int]] = []
        self.down: list[list[int]] = [None] * n_nodes
        for i in range(n_nodes):
            p = td.parent[i]
            shared = [q for q, v in enumerate(self.bags[i]) if p >= 0 and v in td.bags[p]]
            self.up.append([_gather(m, shared) for m in range(1 << len(self.bags[i]))])
            if p >= 0:
                ppos = [self.pos[p][self.bags[i][q]] for q in shared]
                self.down[i] = [_gather(m, ppos) for m in range(1 << len(self.bags[p]))]

    def width(self, i: int, kind: str) -> int:
        return len(self.bags[i]) if kind == VSET else len(self.home_edges[i])

    def local_masks(self, i: int, global_mask: int) -> int:
        """Restrict a vertex mask over ``v-1`` to bag positions of node ``i``."""
        return sum(1 << p for p, v in enumerate(self.bags[i]) if (global_mask >> (v - 1)) & 1)

    def local_edge_mask(self, i: int, global_mask: int) -> int:
        return sum(1 << b for b, (idx, _, _) in enumerate(self.home_edges[i])
                   if (global_mask >> idx) & 1)


def _gather(mask: int, positions: Sequence[int]) -> int:
    out = 0
    for b, p in enumerate(positions):
        if (mask >> p) & 1:
            out |= 1 << b
    return out


# ------------------------------------------------------------------ automata

class Automaton:
    """Base class.  ``slots`` are the env indices the automaton depends on."""

    reads = "home"   # which free-variable bits matter: home vertices or the whole bag

    def __init__(self, ctx: NodeContext, slots, label: str, cap: int):
        self.ctx, self.label, self.cap = ctx, label, cap
        self.slots = tuple(sorted(set(slots)))
        self._get = itemgetter(*self.slots) if self.slots else (lambda env: None)
        self._memo: dict = {}
        self._sealed: dict = {}

    def step(self, i: int, env: list, kids: tuple) -> int:
        # env values carry read-mask bits only, so equal keys mean equal steps
        key = (i, self._get(env), kids)
        q = self._memo.get(key)
        if q is None:
            q = self._memo[key] = self._step(i, env, kids)
        return q

    def _step(self, i, env, kids) -> int:
        raise NotImplementedError

    def accept(self, q: int) -> bool:
        raise NotImplementedError

    def fate(self, q: int):
        return None

    def seal(self, q: int, slot: int) -> int:
        """State after learning that element variable ``slot`` has no elements further up.

        May return the sentinels ``_T`` / ``_F`` when acceptance becomes decided.
        """
        if slot not in self.slots:
            return q
        key = (q, slot)
        out = self._sealed.get(key)
        if out is None:
            out = self._sealed[key] = self._seal(q, slot)
        return out

    def _seal(self, q: int, slot: int) -> int:
        return q

    @property
    def n_states(self) -> int:
        return 0

    def run(self, env_at) -> list[int]:
        """Bottom-up run; ``env_at(i)`` gives the env list at node ``i``."""
        td = self.ctx.td
        states = [None] * len(td.bags)
        for i in td.postorder():
            states[i] = self.step(i, env_at(i), tuple(states[c] for c in td.children[i]))
        return states


class Interning(Automaton):
    def __init__(self, ctx, slots, label, cap):
        super().__init__(ctx, slots, label, cap)
        self._objs: list = []
        self._ids: dict = {}

    def intern(self, obj) -> int:
        q = self._ids.get(obj)
        if q is None:
            if len(self._objs) >= self.cap:
                raise ResourceLimitError(
                    f"automaton for subformula `{self.label}` exceeds the state cap of "
                    f"{self.cap}; consider a direct encoding", stage="mso-compile")
            q = len(self._objs)
            self._objs.append(obj)
            self._ids[obj] = q
        return q

    @property
    def n_states(self) -> int:
        return len(self._objs)


class ConstAut(Automaton):
    def __init__(self, ctx, value: bool, cap):
        super().__init__(ctx, (), "true" if value else "false", cap)
        self.value = value

    def _step(self, i, env, kids):
        return 0

    def accept(self, q):
        return self.value

    def fate(self, q):
        return self.value

    @property
    def n_states(self):
        return 1


def _home(ctx, i, kind):
    return ctx.home_mask[i] if kind == VSET else (1 << len(ctx.home_edges[i])) - 1


class SubsetAut(Automaton):
    """X ⊆ Y on home elements; state 1 while no violation has been seen."""

    def __init__(self, ctx, x, y, kind, label, cap):
        super().__init__(ctx, (x, y), label, cap)
        self.x, self.y, self.kind = x, y, kind

    def _step(self, i, env, kids):
        if not all(kids):
            return 0
        return int(env[self.x] & ~env[self.y] & _home(self.ctx, i, self.kind) == 0)

    def accept(self, q):
        return q == 1

    def fate(self, q):
        return False if q == 0 else None

    def _seal(self, q, slot):
        if slot == self.x and self.x != self.y:
            return _T if q == 1 else _F
        return q

    @property
    def n_states(self):
        return 2


class EqualAut(SubsetAut):
    def _step(self, i, env, kids):
        if not all(kids):
            return 0
        return int((env[self.x] ^ env[self.y]) & _home(self.ctx, i, self.kind) == 0)

    def _seal(self, q, slot):
        return q


class CountAut(Automaton):
    """|X| modulo ``q`` (``capped`` counts saturate at q-1 instead)."""

    def __init__(self, ctx, x, kind, q, p, label, cap, capped=False):
        super().__init__(ctx, (x,), label, cap)
        self.x, self.kind, self.q, self.p, self.capped = x, kind, q, p, capped

    def _step(self, i, env, kids):
        c = sum(kids) + bin(env[self.x] & _home(self.ctx, i, self.kind)).count("1")
        return min(c, self.q - 1) if self.capped else c % self.q

    def accept(self, q):
        return q == self.p

    def fate(self, q):
        if self.capped and q == self.q - 1 and self.p != q:
            return False
        return None

    def _seal(self, q, slot):
        return _T if self.accept(q) else _F

    @property
    def n_states(self):
        return self.q


def singleton(ctx, x, kind, label, cap):
    return CountAut(ctx, x, kind, 3, 1, label, cap, capped=True)


class FoundAut(Automaton):
    """Flag that latches once a home edge witnesses the atom."""

    def __init__(self, ctx, slots, test, label, cap):
        super().__init__(ctx, slots, label, cap)
        self.test = test

    def _step(self, i, env, kids):
        if any(kids):
            return 1
        return int(self.test(self.ctx, i, env))

    def accept(self, q):
        return q == 1

    def fate(self, q):
        return True if q == 1 else None

    def _seal(self, q, slot):
        return _T if q == 1 else _F

    @property
    def n_states(self):
        return 2


def edge_atom(ctx, x, y, label, cap):
    def test(ctx, i, env):
        mx, my = env[x], env[y]
        for _, pu, pv in ctx.home_edges[i]:
            if ((mx >> pu) & 1 and (my >> pv) & 1) or ((mx >> pv) & 1 and (my >> pu) & 1):
                return True
        return False
    return FoundAut(ctx, (x, y), test, label, cap)


def inc_atom(ctx, x, e, label, cap):
    def test(ctx, i, env):
        mx, me = env[x], env[e]
        for b, (_, pu, pv) in enumerate(ctx.home_edges[i]):
            if (me >> b) & 1 and ((mx >> pu) & 1 or (mx >> pv) & 1):
                return True
        return False
    return FoundAut(ctx, (x, e), test, label, cap)


class NotAut(Automaton):
    def __init__(self, inner: Automaton):
        super().__init__(inner.ctx, inner.slots, "!" + inner.label, inner.cap)
        self.inner = inner

    def step(self, i, env, kids):
        return self.inner.step(i, env, kids)

    def accept(self, q):
        return not self.inner.accept(q)

    def fate(self, q):
        f = self.inner.fate(q)
        return None if f is None else not f

    def seal(self, q, slot):
        r = self.inner.seal(q, slot)
        return _F if r == _T else _T if r == _F else r

    @property
    def n_states(self):
        return self.inner.n_states


def _kleene(op, a, b):
    if op == "&":
        if a is False or b is False:
            return False
        return True if a is True and b is True else None
    if op == "|":
        if a is True or b is True:
            return True
        return False if a is False and b is False else None
    if op == "->":
        return _kleene("|", None if a is None else not a, b)
    if a is None or b is None:
        return None
    return a == b


class ProductAut(Interning):
    """Synchronous product for a binary connective.

    A component whose fate is known is replaced by a sentinel and no longer
    stepped; when the connective's value is known the whole state collapses.
    """

    def __init__(self, op, a: Automaton, b: Automaton, label, cap):
        super().__init__(a.ctx, a.slots + b.slots, label, cap)
        self.op, self.a, self.b = op, a, b

    def _comp(self, aut, i, env, comps):
        for c in comps:
            if c < 0:
                return c
        q = aut.step(i, env, comps)
        f = aut.fate(q)
        return q if f is None else (_T if f else _F)

    def _step(self, i, env, kids):
        objs = [self._objs[k] for k in kids]
        for o in objs:
            if isinstance(o, bool):
                return self.intern(o)
        qa = self._comp(self.a, i, env, tuple(o[0] for o in objs))
        qb = self._comp(self.b, i, env, tuple(o[1] for o in objs))
        f = _kleene(self.op, self._cfate(self.a, qa), self._cfate(self.b, qb))
        return self.intern(f if f is not None else (qa, qb))

    @staticmethod
    def _cfate(aut, q):
        return True if q == _T else False if q == _F else None

    @staticmethod
    def _cacc(aut, q):
        return True if q == _T else False if q == _F else aut.accept(q)

    def accept(self, q):
        o = self._objs[q]
        if isinstance(o, bool):
            return o
        a, b = self._cacc(self.a, o[0]), self._cacc(self.b, o[1])
        return _kleene(self.op, a, b)

    def fate(self, q):
        o = self._objs[q]
        return o if isinstance(o, bool) else None

    def _seal(self, q, slot):
        o = self._objs[q]
        if isinstance(o, bool):
            return _T if o else _F
        qa = o[0] if o[0] < 0 else self._settle(self.a, self.a.seal(o[0], slot))
        qb = o[1] if o[1] < 0 else self._settle(self.b, self.b.seal(o[1], slot))
        f = _kleene(self.op, self._cfate(self.a, qa), self._cfate(self.b, qb))
        if f is not None:
            return _T if f else _F
        return self.intern((qa, qb))

    @staticmethod
    def _settle(aut, q):
        if q < 0:
            return q
        f = aut.fate(q)
        return q if f is None else (_T if f else _F)


class ExistsAut(Interning):
    """Subset construction for an existential set quantifier.

    A state is the set of (inner state, boundary bits, placed) triples reachable
    by some choice of the quantified set inside the subtree, or ``True`` once
    some choice is already bound to be accepted.  For an element variable,
    ``placed`` records that its element has been chosen; once that element has
    left the bag the inner state is sealed, which settles every atom on it, and
    no second element may be chosen.
    """

    def __init__(self, slot, kind, inner: Automaton, label, cap, element: bool = False):
        super().__init__(inner.ctx, [s for s in inner.slots if s != slot], label, cap)
        self.slot, self.kind, self.inner = slot, kind, inner
        # a first-order variable meets each bag in at most one element
        self.element = element
        self._groups: dict[int, dict] = {}
        self.empty = self.intern(frozenset())

    def _group(self, q):
        g = self._groups.get(q)
        if g is None:
            g = {}
            for iq, b, placed in self._objs[q]:
                g.setdefault(b, []).append((iq, placed))
            self._groups[q] = g
        return g

    def _step(self, i, env, kids):
        objs = [self._objs[k] for k in kids]
        if any(o is True for o in objs):
            return self.intern(True)
        if any(not o for o in objs):
            return self.empty
        ctx, s = self.ctx, self.slot
        step, fate, seal = self.inner.step, self.inner.fate, self.inner.seal
        vertex = self.kind == VSET
        element = self.element
        groups = [self._group(k) for k in kids]
        downs = [ctx.down[c] for c in ctx.children[i]] if vertex else None
        up = ctx.up[i] if vertex else None
        hm = ctx.read_mask[i] if vertex else -1
        out = set()
        saved = env[s]
        try:
            w = ctx.width(i, self.kind)
            masks = [0] + [1 << p for p in range(w)] if element else range(1 << w)
            for xm in masks:
                env[s] = xm & hm
                opts = []
                for n, g in enumerate(groups):
                    o = g.get(downs[n][xm] if vertex else 0)
                    if not o:
                        break
                    opts.append(o)
                else:
                    b = up[xm] if vertex else 0
                    for combo in itertools.product(*opts):
                        placed = False
                        if element:
                            # sealed children (placed, element gone) forbid a new element
                            sealed = sum(1 for n, (_, pl) in enumerate(combo)
                                         if pl and (downs[n][xm] if vertex else 0) == 0)
                            if sealed and (xm or sealed > 1
                                           or sum(pl for _, pl in combo) > 1):
                                continue
                            placed = bool(xm) or any(pl for _, pl in combo)
                        q = step(i, env, tuple(c[0] for c in combo))
                        f = fate(q)
                        if f is None and placed and b == 0:
                            q = seal(q, s)
                            f = True if q == _T else False if q == _F else fate(q)
                        if f is None:
                            out.add((q, b, placed))
                        elif f:
                            return self.intern(True)
        finally:
            env[s] = saved
        return self.intern(frozenset(out))

    def _seal(self, q, slot):
        o = self._objs[q]
        if o is True:
            return _T
        out = set()
        for iq, b, placed in o:
            r = self.inner.seal(iq, slot)
            if r == _T:
                return _T
            if r == _F:
                continue
            f = self.inner.fate(r)
            if f:
                return _T
            if f is None:
                out.add((r, b, placed))
        return self.intern(frozenset(out)) if out else _F

    def accept(self, q):
        o = self._objs[q]
        return o is True or any(self.inner.accept(iq) for iq, _, _ in o)

    def fate(self, q):
        o = self._objs[q]
        if o is True:
            return True
        return False if not o else None


# ------------------------------------------------------------------ construction

def _label(node: Node, limit: int = 80) -> str:
    s = to_text(node)
    return s if len(s) <= limit else s[: limit - 3] + "..."


class _Builder:
    def __init__(self, ctx, cap):
        self.ctx, self.cap = ctx, cap
        self.n_slots = 0
        self.automata: list[Automaton] = []

    def slot(self) -> int:
        self.n_slots += 1
        return self.n_slots - 1

    def keep(self, a):
        self.automata.append(a)
        return a

    def build(self, node: Node, scope: dict) -> Automaton:
        ctx, cap, lab = self.ctx, self.cap, _label(node)
        if isinstance(node, Const):
            return self.keep(ConstAut(ctx, node.value, cap))
        if isinstance(node, Not):
            return self.keep(NotAut(self.build(node.arg, scope)))
        if isinstance(node, BinOp):
            a, b = self.build(node.left, scope), self.build(node.right, scope)
            return self.keep(ProductAut(node.op, a, b, lab, cap))
        if isinstance(node, Quant):
            kind = VSET if node.sort in (VERTEX, VSET) else ESET
            s = self.slot()
            inner_scope = {**scope, node.var: (s, kind)}
            body = self.build(node.body, inner_scope)
            if node.sort in (VERTEX, EDGE):
                guard = self.keep(singleton(ctx, s, kind, f"singleton {node.var}", cap))
                if node.kind == "exists":
                    inner = self.keep(ProductAut("&", guard, body, lab, cap))
                    return self.keep(ExistsAut(s, kind, inner, lab, cap, element=True))
                inner = self.keep(ProductAut("&", guard, self.keep(NotAut(body)), lab, cap))
                return self.keep(NotAut(self.keep(ExistsAut(s, kind, inner, lab, cap,
                                                            element=True))))
            if node.kind == "exists":
                return self.keep(ExistsAut(s, kind, body, lab, cap))
            return self.keep(NotAut(self.keep(ExistsAut(s, kind, self.keep(NotAut(body)),
                                                         lab, cap))))
        if isinstance(node, Member):
            (x, kind), (y, _) = scope[node.elem], scope[node.set]
            return self.keep(SubsetAut(ctx, x, y, kind, lab, cap))
        if isinstance(node, Eq):
            (x, kind), (y, _) = scope[node.x], scope[node.y]
            return self.keep(EqualAut(ctx, x, y, kind, lab, cap))
        if isinstance(node, EdgeAtom):
            return self.keep(edge_atom(ctx, scope[node.x][0], scope[node.y][0], lab, cap))
        if isinstance(node, Inc):
            return self.keep(inc_atom(ctx, scope[node.vertex][0], scope[node.edge][0], lab, cap))
        if isinstance(node, Card):
            x, kind = scope[node.set]
            return self.keep(CountAut(ctx, x, kind, node.q, node.p, lab, cap))
        raise TypeError(f"unsupported formula node {node!r}")


class TreeAutomaton:
    """A compiled formula: the root automaton plus its context and free slots.

    The free variables occupy env slots ``0..k-1``.
    """

    def __init__(self, phi: MsoFormula, ctx: NodeContext, root: Automaton, n_slots: int,
                 parts: list[Automaton]):
        self.phi, self.ctx, self.root, self.n_slots = phi, ctx, root, n_slots
        self.parts = parts

    @property
    def k(self) -> int:
        return self.phi.k

    def env_at(self, i: int, masks: Sequence[int]) -> list:
        """Env at node ``i`` for free-set masks over ``v-1``."""
        env = [0] * self.n_slots
        for a, m in enumerate(masks):
            env[a] = self.ctx.local_masks(i, m) & self.ctx.read_mask[i]
        return env

    def run(self, masks: Sequence[int]) -> list[int]:
        return self.root.run(lambda i: self.env_at(i, masks))

    def accepts(self, masks: Sequence[int]) -> bool:
        return self.root.accept(self.run(masks)[self.ctx.td.root])

    def state_counts(self) -> dict[str, int]:
        """States interned so far per compound subformula (largest first)."""
        out = {}
        for a in self.parts:
            if isinstance(a, Interning):
                out[a.label] = max(out.get(a.label, 0), a.n_states)
        return dict(sorted(out.items(), key=lambda kv: -kv[1]))


def automaton_for(phi: MsoFormula, g: Graph, td: TreeDecomposition,
                  cap: int = DEFAULT_STATE_CAP, ctx: NodeContext | None = None) -> TreeAutomaton:
    """Build the deterministic automaton of ``phi`` over ``td`` (a decomposition of ``g``)."""
    ctx = ctx or NodeContext(g, td)
    b = _Builder(ctx, cap)
    scope = {name: (b.slot(), VSET) for name in phi.free}
    root = b.build(fold_constants(phi.body), scope)
    return TreeAutomaton(phi, ctx, root, b.n_slots, b.automata)
