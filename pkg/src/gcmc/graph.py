"""Graphs, pair weights, k-partitions and cut values.

Vertices are dense integers ``1..n``.  Files may use arbitrary labels; the
mapping is kept on :attr:`Graph.labels` so results can be reported in the
caller's vocabulary.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import ParseError


def _pair(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    n: int
    edges: frozenset
    labels: tuple = field(default=None, compare=False)

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("vertex count must be non-negative")
        norm = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (1 <= u <= self.n and 1 <= v <= self.n):
                raise ValueError(f"edge ({u}, {v}) has an endpoint outside 1..{self.n}")
            norm.add(_pair(u, v))
        object.__setattr__(self, "edges", frozenset(norm))
        if self.labels is None:
            object.__setattr__(self, "labels", tuple(str(v) for v in self.vertices))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], labels=None) -> "Graph":
        edges = list(edges)
        seen = set()
        for u, v in edges:
            p = _pair(u, v)
            if p in seen:
                raise ValueError(f"duplicate edge {p}")
            seen.add(p)
        return cls(n, frozenset(edges), tuple(labels) if labels is not None else None)

    @property
    def vertices(self) -> range:
        return range(1, self.n + 1)

    @property
    def m(self) -> int:
        return len(self.edges)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def neighbors(self, v: int) -> set[int]:
        return {b if a == v else a for a, b in self.edges if v in (a, b)}

    def adjacency(self) -> dict[int, set[int]]:
        adj = {v: set() for v in self.vertices}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def has_edge(self, u: int, v: int) -> bool:
        return _pair(u, v) in self.edges

    def label(self, v: int) -> str:
        return self.labels[v - 1]


class PairWeights:
    """Nonnegative weights on unordered vertex pairs; absent pairs weigh 0."""

    def __init__(self, n: int, weights: Mapping[tuple[int, int], float] | None = None):
        self.n = n
        self._w: dict[tuple[int, int], float] = {}
        for (u, v), w in (weights or {}).items():
            self.set(u, v, w)

    def set(self, u: int, v: int, w: float) -> None:
        if u == v:
            raise ValueError("weights are defined on pairs of distinct vertices")
        if not (1 <= u <= self.n and 1 <= v <= self.n):
            raise ValueError(f"pair ({u}, {v}) outside 1..{self.n}")
        w = float(w)
        if w < 0:
            raise ValueError(f"negative weight {w} on ({u}, {v})")
        if w == 0:
            self._w.pop(_pair(u, v), None)
        else:
            self._w[_pair(u, v)] = w

    def __call__(self, u: int, v: int) -> float:
        return self._w.get(_pair(u, v), 0.0)

    def positive_pairs(self) -> list[tuple[int, int, float]]:
        return [(u, v, w) for (u, v), w in sorted(self._w.items())]

    def total(self) -> float:
        return sum(self._w.values())

    def as_dict(self) -> dict[tuple[int, int], float]:
        return dict(self._w)

    def __eq__(self, other):
        return isinstance(other, PairWeights) and self.n == other.n and self._w == other._w

    def __repr__(self):
        return f"PairWeights(n={self.n}, {self._w})"


def weights_from_edges(g: Graph, default: float = 1.0,
                       overrides: Mapping[tuple[int, int], float] | None = None) -> PairWeights:
    """Weight ``default`` on every edge of ``g``, zero elsewhere, then apply ``overrides``."""
    if default < 0:
        raise ValueError("default weight must be non-negative")
    c = PairWeights(g.n, {e: default for e in g.edges})
    for (u, v), w in (overrides or {}).items():
        c.set(u, v, w)
    return c


@dataclass(frozen=True)
class KPartition:
    k: int
    assignment: tuple  # assignment[v - 1] is the part label of v, in 1..k

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")
        for v, a in enumerate(self.assignment, start=1):
            if not (1 <= a <= self.k):
                raise ValueError(f"vertex {v} has label {a} outside 1..{self.k}")

    @classmethod
    def from_parts(cls, n: int, parts: Sequence[Iterable[int]]) -> "KPartition":
        lab = [0] * n
        for a, part in enumerate(parts, start=1):
            for v in part:
                if lab[v - 1]:
                    raise ValueError(f"vertex {v} lies in two parts")
                lab[v - 1] = a
        missing = [v for v in range(1, n + 1) if not lab[v - 1]]
        if missing:
            raise ValueError(f"vertices {missing} are in no part")
        return cls(len(parts), tuple(lab))

    @property
    def n(self) -> int:
        return len(self.assignment)

    def __getitem__(self, v: int) -> int:
        return self.assignment[v - 1]

    def parts(self) -> list[frozenset]:
        out = [set() for _ in range(self.k)]
        for v, a in enumerate(self.assignment, start=1):
            out[a - 1].add(v)
        return [frozenset(p) for p in out]


def cut_value(h: KPartition, c: PairWeights) -> float:
    """Total weight of pairs whose endpoints receive different labels."""
    if h.n < c.n:
        raise ValueError(f"partition covers {h.n} vertices but weights span {c.n}")
    return sum(w for u, v, w in c.positive_pairs() if h[u] != h[v])


# ---------------------------------------------------------------- file formats

def _tokens(path_or_text) -> list[list[str]]:
    text = Path(path_or_text).read_text() if isinstance(path_or_text, Path) else path_or_text
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    return rows


def parse_graph(text: str) -> Graph:
    """Parse ``n m`` followed by ``m`` lines ``u v``.

    Integer labels within ``1..n`` are kept as ids; any other labelling is
    mapped to ids in order of first appearance.
    """
    rows = _tokens(text)
    if not rows or len(rows[0]) != 2:
        raise ParseError("graph file must start with 'n m'", 1, 1)
    try:
        n, m = int(rows[0][0]), int(rows[0][1])
    except ValueError:
        raise ParseError("graph header must be two integers", 1, 1) from None
    body = rows[1:]
    if len(body) != m:
        raise ParseError(f"header announces {m} edges, found {len(body)}", 1, 1)
    for i, r in enumerate(body, start=2):
        if len(r) != 2:
            raise ParseError("edge line must be 'u v'", i, 1)
    flat = [t for r in body for t in r]
    if all(t.isdigit() and 1 <= int(t) <= n for t in flat):
        ids = {str(v): v for v in range(1, n + 1)}
        labels = [str(v) for v in range(1, n + 1)]
    else:
        ids, labels = {}, []
        for t in flat:
            if t not in ids:
                ids[t] = len(ids) + 1
                labels.append(t)
        if len(ids) > n:
            raise ParseError(f"{len(ids)} distinct labels exceed n = {n}")
        while len(labels) < n:
            labels.append(f"_{len(labels) + 1}")
    try:
        return Graph.from_edges(n, [(ids[a], ids[b]) for a, b in body], labels)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def parse_weights(text: str, g: Graph, default: float = 1.0) -> PairWeights:
    """Lines ``u v w`` override the default edge weight (labels as in ``g``)."""
    ids = {lab: v for v, lab in enumerate(g.labels, start=1)}
    over = {}
    for i, r in enumerate(_tokens(text), start=1):
        if len(r) != 3:
            raise ParseError("weight line must be 'u v w'", i, 1)
        try:
            u, v, w = ids[r[0]], ids[r[1]], float(r[2])
        except KeyError as exc:
            raise ParseError(f"unknown vertex label {exc.args[0]!r}", i, 1) from None
        except ValueError:
            raise ParseError(f"bad weight {r[2]!r}", i, 3) from None
        over[(u, v)] = w
    try:
        return weights_from_edges(g, default, over)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def format_graph(g: Graph) -> str:
    lines = [f"{g.n} {g.m}"]
    lines += [f"{g.label(u)} {g.label(v)}" for u, v in g.sorted_edges()]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- named families

def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(1, n)])


def cycle_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i % n + 1) for i in range(1, n + 1)])


def star_graph(leaves: int) -> Graph:
    return Graph.from_edges(leaves + 1, [(1, i) for i in range(2, leaves + 2)])


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, itertools.combinations(range(1, n + 1), 2))


def grid_graph(rows: int, cols: int) -> Graph:
    idx = lambda r, c: r * cols + c + 1  # noqa: E731
    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append((idx(r, c), idx(r, c + 1)))
            if r + 1 < rows:
                edges.append((idx(r, c), idx(r + 1, c)))
    return Graph.from_edges(rows * cols, edges)


def complete_bipartite(a: int, b: int) -> Graph:
    return Graph.from_edges(a + b, [(i, a + j) for i in range(1, a + 1) for j in range(1, b + 1)])


def wheel_graph(rim: int) -> Graph:
    edges = [(1, i) for i in range(2, rim + 2)]
    edges += [(i, i + 1) for i in range(2, rim + 1)] + [(rim + 1, 2)]
    return Graph.from_edges(rim + 1, edges)


def empty_graph(n: int) -> Graph:
    return Graph.from_edges(n, [])


_NAMED = [
    (r"p(\d+)", lambda a: path_graph(a[0])),
    (r"c(\d+)", lambda a: cycle_graph(a[0])),
    (r"k(\d+)", lambda a: complete_graph(a[0])),
    (r"star(\d+)", lambda a: star_graph(a[0])),
    (r"grid(\d+)x(\d+)", lambda a: grid_graph(a[0], a[1])),
    (r"k(\d+)_(\d+)", lambda a: complete_bipartite(a[0], a[1])),
    (r"wheel(\d+)", lambda a: wheel_graph(a[0])),
    (r"empty(\d+)", lambda a: empty_graph(a[0])),
]


def named_graph(name: str) -> Graph:
    """Build a graph from a short name such as ``p5``, ``c6``, ``grid2x3``, ``k2_3``."""
    for pat, make in _NAMED:
        mt = re.fullmatch(pat, name.lower())
        if mt:
            return make([int(x) for x in mt.groups()])
    raise ValueError(f"unknown graph name {name!r}")


def load_graph(spec: str) -> Graph:
    """A graph from a file path, falling back to :func:`named_graph`."""
    p = Path(spec)
    if p.exists():
        return parse_graph(p.read_text())
    try:
        return named_graph(spec)
    except ValueError:
        raise ParseError(f"no graph file or known graph name {spec!r}") from None
