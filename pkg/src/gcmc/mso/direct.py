"""Hand-written CSP encodings for common single-set constraints.

``vc``, ``is`` and ``precedence`` are per-edge relations, ``ds`` is one
relation per closed neighbourhood, and ``conn`` uses a component-partition
automaton with one state variable per decomposition node.
"""
from __future__ import annotations

import itertools
from typing import Iterable, Sequence

from ..graph import Graph
from ..treedec import TreeDecomposition
from .automata import DEFAULT_STATE_CAP, Interning, NodeContext
from .compile import CspExtensionResult, ExtensionBuilder

DIRECT_NAMES = ("vc", "is", "ds", "precedence", "conn")

VC = ((0, 1), (1, 0), (1, 1))
IS = ((0, 0), (0, 1), (1, 0))
PRECEDENCE = ((1, 0), (0, 0), (1, 1))


class ConnectedAut(Interning):
    """Connectivity of the set in slot 0, tracked as a partition of the bag.

    A state is ``(labels, closed)``: ``labels[p]`` is the component class of
    bag position ``p`` (``-1`` when outside the set) and ``closed`` counts
    components that no longer meet the bag.  The empty set is connected.
    """

    reads = "bag"
    DEAD = "dead"

    def __init__(self, ctx: NodeContext, cap: int = DEFAULT_STATE_CAP, label: str = "conn"):
        super().__init__(ctx, (0,), label, cap)
        self.inner_edges = []
        for i, bag in enumerate(ctx.bags):
            pos = ctx.pos[i]
            self.inner_edges.append([(pos[u], pos[v]) for u, v in ctx.edges
                                     if u in pos and v in pos])

    def _step(self, i, env, kids):
        ctx, s = self.ctx, env[0]
        w = len(ctx.bags[i])
        parent = list(range(w))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        closed = 0
        for c, kq in zip(ctx.children[i], kids):
            obj = self._objs[kq]
            if obj == self.DEAD:
                return kq
            labels, kclosed = obj
            closed += kclosed
            classes: dict[int, list[int]] = {}
            for cp, lab in enumerate(labels):
                pp = ctx.pos[i].get(ctx.bags[c][cp])
                if pp is None:
                    if lab >= 0:
                        classes.setdefault(lab, [])
                    continue
                if (lab >= 0) != bool((s >> pp) & 1):
                    return self.intern(self.DEAD)
                if lab >= 0:
                    classes.setdefault(lab, []).append(pp)
            for pps in classes.values():
                if not pps:
                    closed += 1
                for a, b in zip(pps, pps[1:]):
                    parent[find(a)] = find(b)
        for a, b in self.inner_edges[i]:
            if (s >> a) & 1 and (s >> b) & 1:
                parent[find(a)] = find(b)
        names: dict[int, int] = {}
        labels = []
        for p in range(w):
            if (s >> p) & 1:
                labels.append(names.setdefault(find(p), len(names)))
            else:
                labels.append(-1)
        if closed >= 2 or (closed == 1 and names):
            return self.intern(self.DEAD)
        return self.intern((tuple(labels), closed))

    def accept(self, q):
        obj = self._objs[q]
        if obj == self.DEAD:
            return False
        labels, closed = obj
        return closed + len({x for x in labels if x >= 0}) <= 1

    def fate(self, q):
        return False if self._objs[q] == self.DEAD else None


def add_direct(b: ExtensionBuilder, name: str, part: int = 1,
               arcs: Iterable[tuple[int, int]] | None = None,
               cap: int = DEFAULT_STATE_CAP) -> None:
    """Add the encoding of ``name`` for part ``part`` to an extension builder."""
    g = b.g
    if name in ("vc", "is"):
        rel = VC if name == "vc" else IS
        for u, v in g.sorted_edges():
            b.add_relation([(u, part), (v, part)], rel)
    elif name == "precedence":
        for u, v in (g.sorted_edges() if arcs is None else arcs):
            b.add_relation([(u, part), (v, part)], PRECEDENCE)
    elif name == "ds":
        for v in g.vertices:
            closed = [v] + sorted(g.neighbors(v))
            rel = [t for t in itertools.product((0, 1), repeat=len(closed)) if any(t)]
            b.add_relation([(u, part) for u in closed], rel)
    elif name == "conn":
        b.add_automaton(lambda ctx: ConnectedAut(ctx, cap, f"conn[{part}]"), [part],
                        f"conn[{part}]")
    else:
        raise KeyError(f"no direct encoding for {name!r}; known: {', '.join(DIRECT_NAMES)}")


def direct_encoding(name: str, g: Graph, td: TreeDecomposition | None = None, k: int = 1,
                    part: int = 1, arcs: Sequence[tuple[int, int]] | None = None,
                    cap: int = DEFAULT_STATE_CAP) -> CspExtensionResult:
    """Extension of the single-set constraint ``name`` applied to part ``part`` of ``k``.

    The other parts are unconstrained.  For ``precedence`` the arc ``(u, v)``
    means ``v`` may only be chosen together with ``u``; arcs default to the
    graph edges oriented from the smaller id.
    """
    if not 1 <= part <= k:
        raise ValueError(f"part {part} outside 1..{k}")
    b = ExtensionBuilder(g, k)
    add_direct(b, name, part, arcs, cap)
    return b.finish(td, cap)
