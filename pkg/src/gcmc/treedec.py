"""Rooted binary tree decompositions.

Construction runs a min-fill elimination, turns the elimination cliques into a
clique tree, roots it at a centre and pads it so that every internal node has
exactly two children.  Padding nodes carry a copy of their parent's bag;
disconnected components are joined under empty-bag nodes.
"""
from __future__ import annotations

import heapq
import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence


@dataclass(frozen=True)
class TreeDecomposition:
    bags: tuple           # bags[i] is a frozenset of vertices
    parent: tuple         # parent[i], -1 for the root
    children: tuple       # children[i] is a tuple of node ids
    root: int = 0

    @classmethod
    def from_parents(cls, bags: Sequence[Iterable], parent: Sequence[int]) -> "TreeDecomposition":
        bags = tuple(frozenset(b) for b in bags)
        kids = [[] for _ in bags]
        roots = []
        for i, p in enumerate(parent):
            if p < 0:
                roots.append(i)
            else:
                kids[p].append(i)
        return cls(bags, tuple(parent), tuple(tuple(c) for c in kids), roots[0] if roots else -1)

    def __len__(self):
        return len(self.bags)

    @property
    def nodes(self) -> range:
        return range(len(self.bags))

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=0) - 1

    def is_leaf(self, i: int) -> bool:
        return not self.children[i]

    @property
    def leaves(self) -> list[int]:
        return [i for i in self.nodes if not self.children[i]]

    def node_depths(self) -> list[int]:
        depth = [0] * len(self.bags)
        for i in self.bfs():
            for c in self.children[i]:
                depth[c] = depth[i] + 1
        return depth

    @property
    def depth(self) -> int:
        return max(self.node_depths(), default=0)

    def bfs(self) -> list[int]:
        order, queue = [], deque([self.root])
        while queue:
            i = queue.popleft()
            order.append(i)
            queue.extend(self.children[i])
        return order

    def postorder(self) -> list[int]:
        return self.bfs()[::-1]

    def variables(self) -> set:
        return set().union(*self.bags) if self.bags else set()

    def dump(self) -> str:
        """One line per node: ``i parent child child : v1 v2 ...`` (-1 for absent)."""
        lines = []
        for i in self.nodes:
            kids = list(self.children[i]) + [-1] * (2 - len(self.children[i]))
            verts = " ".join(str(v) for v in sorted(self.bags[i], key=_vkey))
            lines.append(f"{i} {self.parent[i]} {kids[0]} {kids[1]} : {verts}".rstrip())
        return "\n".join(lines)


def _vkey(v):
    return (0, v, "") if isinstance(v, int) else (1, 0, str(v))


# ------------------------------------------------------------------ construction

def min_fill_order(vertices: Sequence[Hashable], adj: dict) -> list[tuple]:
    """Eliminate greedily by fill-in; ties go to the smallest vertex.

    Returns ``(vertex, neighbourhood at elimination time)`` pairs.
    """
    adj = {v: set(adj[v]) for v in vertices}
    rank = {v: r for r, v in enumerate(sorted(vertices, key=_vkey))}
    alive = set(vertices)
    out = []

    def fill(v):
        nb = list(adj[v])
        return sum(1 for a, b in itertools.combinations(nb, 2) if b not in adj[a])

    while alive:
        v = min(alive, key=lambda x: (fill(x), rank[x]))
        nb = set(adj[v])
        out.append((v, frozenset(nb)))
        for a, b in itertools.combinations(nb, 2):
            adj[a].add(b)
            adj[b].add(a)
        for a in nb:
            adj[a].discard(v)
        alive.discard(v)
        del adj[v]
    return out


def _clique_forest(order):
    """Elimination cliques linked child -> parent; returns (bags, undirected adjacency)."""
    pos = {v: i for i, (v, _) in enumerate(order)}
    bags = [frozenset({v}) | nb for v, nb in order]
    nbr = [set() for _ in bags]
    for i, (v, nb) in enumerate(order):
        if nb:
            p = min(pos[u] for u in nb)
            nbr[i].add(p)
            nbr[p].add(i)
    return bags, nbr


def _contract_subsets(bags, nbr):
    alive = set(range(len(bags)))
    changed = True
    while changed:
        changed = False
        for a in sorted(alive):
            for b in sorted(nbr[a]):
                if bags[a] <= bags[b]:
                    for c in nbr[a]:
                        if c != b:
                            nbr[c].discard(a)
                            nbr[c].add(b)
                            nbr[b].add(c)
                    nbr[b].discard(a)
                    nbr[a] = set()
                    alive.discard(a)
                    changed = True
                    break
            if changed:
                break
    return alive


def _components(alive, nbr):
    seen, comps = set(), []
    for s in sorted(alive):
        if s in seen:
            continue
        comp, stack = [], [s]
        seen.add(s)
        while stack:
            x = stack.pop()
            comp.append(x)
            for y in nbr[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        comps.append(sorted(comp))
    return comps


def _ecc(start, nbr):
    dist = {start: 0}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for y in nbr[x]:
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    return max(dist.values())


class _Builder:
    """Mutable rooted tree used while normalising."""

    def __init__(self):
        self.bags, self.kids = [], []

    def add(self, bag, kids=()):
        self.bags.append(frozenset(bag))
        self.kids.append(list(kids))
        return len(self.bags) - 1

    def height(self, i):
        return 1 + max((self.height(c) for c in self.kids[i]), default=-1)

    def pair_up(self, items, bag):
        """Combine subtrees pairwise under copies of ``bag`` until two remain."""
        heap = [(self.height(c), n, c) for n, c in enumerate(items)]
        heapq.heapify(heap)
        tick = len(items)
        while len(heap) > 2:
            h1, _, a = heapq.heappop(heap)
            h2, _, b = heapq.heappop(heap)
            node = self.add(bag, [a, b])
            heapq.heappush(heap, (max(h1, h2) + 1, tick, node))
            tick += 1
        return [c for _, _, c in sorted(heap, key=lambda t: t[1])]


def decompose(vertices: Iterable[Hashable], edges: Iterable[tuple], balance: bool = True
              ) -> TreeDecomposition:
    """A valid rooted binary tree decomposition of the graph ``(vertices, edges)``.

    With ``balance`` each clique-tree component is rooted at a centre, which
    keeps the depth close to the radius of the clique tree.
    """
    vertices = sorted(set(vertices), key=_vkey)
    if not vertices:
        raise ValueError("cannot decompose an empty graph")
    adj = {v: set() for v in vertices}
    for u, v in edges:
        if u != v:
            adj[u].add(v)
            adj[v].add(u)

    bags, nbr = _clique_forest(min_fill_order(vertices, adj))
    alive = _contract_subsets(bags, nbr)

    b = _Builder()

    def grow(node, parent):
        kids = [grow(c, node) for c in sorted(nbr[node]) if c != parent]
        return b.add(bags[node], kids)

    roots = []
    for comp in _components(alive, nbr):
        centre = min(comp, key=lambda x: (_ecc(x, nbr), x)) if balance else comp[0]
        roots.append(grow(centre, None))
    if len(roots) > 1:
        roots = b.pair_up(roots, frozenset())
        root = b.add(frozenset(), roots)
    else:
        root = roots[0]
    return _binarize(b, root)


def _binarize(b: _Builder, root: int) -> TreeDecomposition:
    stack = [root]
    while stack:
        i = stack.pop()
        kids = b.kids[i]
        if len(kids) == 1:
            kids.append(b.add(b.bags[i]))
        elif len(kids) > 2:
            b.kids[i] = kids = b.pair_up(kids, b.bags[i])
        stack.extend(kids)
    return _renumber(b.bags, b.kids, root)


def _renumber(bags, kids, root) -> TreeDecomposition:
    order, queue = [], deque([root])
    while queue:
        i = queue.popleft()
        order.append(i)
        queue.extend(kids[i])
    new = {old: n for n, old in enumerate(order)}
    parent = [-1] * len(order)
    for old in order:
        for c in kids[old]:
            parent[new[c]] = new[old]
    return TreeDecomposition(
        tuple(bags[old] for old in order),
        tuple(parent),
        tuple(tuple(new[c] for c in kids[old]) for old in order),
        0,
    )


def expand(td: TreeDecomposition, mapping) -> TreeDecomposition:
    """Replace each vertex ``v`` of every bag by the items in ``mapping[v]``."""
    bags = tuple(frozenset(x for v in bag for x in mapping.get(v, ())) for bag in td.bags)
    return TreeDecomposition(bags, td.parent, td.children, td.root)


# ------------------------------------------------------------------ validation

@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    property: str | None = None
    witness: object = None

    def __bool__(self):
        return self.ok


def validate(td: TreeDecomposition, vertices: Iterable, edges: Iterable[tuple],
             require_binary: bool = True) -> ValidationReport:
    """Check tree shape, vertex and edge cover, connectivity and binarity.

    Reports the first violated property with a witness; never raises.
    """
    n = len(td.bags)
    roots = [i for i in range(n) if td.parent[i] < 0]
    if len(roots) != 1 or roots[0] != td.root:
        return ValidationReport(False, "structure", tuple(roots))
    for i in range(n):
        for c in td.children[i]:
            if td.parent[c] != i:
                return ValidationReport(False, "structure", (i, c))
        p = td.parent[i]
        if p >= 0 and i not in td.children[p]:
            return ValidationReport(False, "structure", (p, i))
    reached = td.bfs()
    if len(reached) != n or len(set(reached)) != n:
        return ValidationReport(False, "structure", "not a tree")

    holders: dict = {}
    for i, bag in enumerate(td.bags):
        for v in bag:
            holders.setdefault(v, []).append(i)
    for v in sorted(set(vertices), key=_vkey):
        if v not in holders:
            return ValidationReport(False, "vertex-cover", v)
    for u, v in edges:
        if u == v:
            continue
        if not any(u in td.bags[i] for i in holders.get(v, [])):
            return ValidationReport(False, "edge-cover", frozenset((u, v)))
    for v in sorted(holders, key=_vkey):
        nodes = set(holders[v])
        tops = [i for i in nodes if td.parent[i] not in nodes]
        if len(tops) != 1:
            return ValidationReport(False, "connectivity", v)
    if require_binary:
        for i in range(n):
            if len(td.children[i]) not in (0, 2):
                return ValidationReport(False, "binary", i)
    return ValidationReport(True)


# ------------------------------------------------------------------ geometry

@dataclass
class NodeGeometry:
    """Derived node sets used by the dynamic program, the LP and the rounding.

    ``T[i]`` holds the root-to-``i`` path together with the children of every
    path node other than ``i``; ``below[i]`` is the set of variables in the
    subtree of ``i``; ``hi[v]`` is the shallowest node whose bag holds ``v``.
    """

    td: TreeDecomposition
    depth: list
    T: list
    below: list
    hi: dict
    path: list = field(repr=False)

    def ancestors(self, i: int) -> list[int]:
        return self.path[i]

    def lca(self, a: int, b: int) -> int:
        pa, pb = self.path[a], self.path[b]
        out = pa[0]
        for x, y in zip(pa, pb):
            if x != y:
                break
            out = x
        return out

    def child_toward(self, anc: int, node: int) -> int:
        """The child of ``anc`` on the path down to ``node``."""
        p = self.path[node]
        return p[self.depth[anc] + 1]

    def is_ancestor(self, a: int, b: int) -> bool:
        return self.depth[a] <= self.depth[b] and self.path[b][self.depth[a]] == a


def node_geometry(td: TreeDecomposition) -> NodeGeometry:
    n = len(td.bags)
    depth = [0] * n
    path = [None] * n
    T = [None] * n
    for i in td.bfs():
        p = td.parent[i]
        if p < 0:
            path[i] = [i]
            T[i] = frozenset({i})
        else:
            depth[i] = depth[p] + 1
            path[i] = path[p] + [i]
            T[i] = T[p] | set(td.children[p])
    below = [None] * n
    for i in td.postorder():
        acc = set(td.bags[i])
        for c in td.children[i]:
            acc |= below[c]
        below[i] = frozenset(acc)
    hi = {}
    for i in td.bfs():
        for v in td.bags[i]:
            hi.setdefault(v, i)
    return NodeGeometry(td, depth, T, below, hi, path)
