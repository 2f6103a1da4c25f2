"""Abstract syntax for graph MSO with free vertex-set variables.

Sorts: ``v`` vertex, ``e`` edge, ``V`` vertex set, ``E`` edge set.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

VERTEX, EDGE, VSET, ESET = "v", "e", "V", "E"
ELEMENT_SORTS = (VERTEX, EDGE)
SET_SORTS = (VSET, ESET)
SET_OF = {VERTEX: VSET, EDGE: ESET}

QUANT_KEYWORDS = {
    "exists_v": ("exists", VERTEX), "forall_v": ("forall", VERTEX),
    "exists_e": ("exists", EDGE), "forall_e": ("forall", EDGE),
    "exists_V": ("exists", VSET), "forall_V": ("forall", VSET),
    "exists_E": ("exists", ESET), "forall_E": ("forall", ESET),
}


class Node:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Node):
    value: bool


@dataclass(frozen=True)
class Not(Node):
    arg: Node


@dataclass(frozen=True)
class BinOp(Node):
    op: str  # one of & | -> <->
    left: Node
    right: Node


@dataclass(frozen=True)
class Quant(Node):
    kind: str  # exists | forall
    sort: str
    var: str
    body: Node
    pos: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Member(Node):
    elem: str
    set: str
    pos: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class EdgeAtom(Node):
    x: str
    y: str
    pos: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Inc(Node):
    vertex: str
    edge: str
    pos: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Eq(Node):
    x: str
    y: str
    pos: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Card(Node):
    set: str
    q: int
    p: int
    pos: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class MsoFormula:
    """A sort-checked formula whose free variables are the vertex sets ``free``."""

    free: tuple
    body: Node

    @property
    def k(self) -> int:
        return len(self.free)

    @property
    def size(self) -> int:
        return size(self.body)

    def text(self) -> str:
        return f"free {' '.join(self.free)}; {to_text(self.body)}"

    def __str__(self):
        return self.text()


# ------------------------------------------------------------------ traversal

def children(node: Node) -> tuple:
    if isinstance(node, Not):
        return (node.arg,)
    if isinstance(node, BinOp):
        return (node.left, node.right)
    if isinstance(node, Quant):
        return (node.body,)
    return ()


def size(node: Node) -> int:
    """Symbol count: connectives and quantifiers count their variable too."""
    if isinstance(node, Const):
        return 1
    if isinstance(node, Not):
        return 1 + size(node.arg)
    if isinstance(node, BinOp):
        return 1 + size(node.left) + size(node.right)
    if isinstance(node, Quant):
        return 2 + size(node.body)
    if isinstance(node, Card):
        return 4
    return 3


def free_vars(node: Node) -> set:
    if isinstance(node, Quant):
        return free_vars(node.body) - {node.var}
    if isinstance(node, Member):
        return {node.elem, node.set}
    if isinstance(node, (EdgeAtom, Eq)):
        return {node.x, node.y}
    if isinstance(node, Inc):
        return {node.vertex, node.edge}
    if isinstance(node, Card):
        return {node.set}
    out = set()
    for c in children(node):
        out |= free_vars(c)
    return out


_PREC = {"<->": 1, "->": 2, "|": 3, "&": 4}


def to_text(node: Node, prec: int = 0) -> str:
    """Render in the concrete syntax accepted by :func:`gcmc.mso.parser.parse`."""
    if isinstance(node, Const):
        return "true" if node.value else "false"
    if isinstance(node, Not):
        return "!" + to_text(node.arg, 5)
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        if node.op == "->":
            s = f"{to_text(node.left, p + 1)} -> {to_text(node.right, p)}"
        else:
            s = f"{to_text(node.left, p)} {node.op} {to_text(node.right, p + 1)}"
        return f"({s})" if p < prec else s
    if isinstance(node, Quant):
        s = f"{node.kind}_{node.sort} {node.var} . {to_text(node.body, 0)}"
        return f"({s})" if prec > 0 else s
    if isinstance(node, Member):
        s = f"{node.elem} in {node.set}"
        return f"({s})" if prec >= 5 else s
    if isinstance(node, EdgeAtom):
        return f"edge({node.x},{node.y})"
    if isinstance(node, Inc):
        return f"inc({node.vertex},{node.edge})"
    if isinstance(node, Eq):
        s = f"{node.x} = {node.y}"
        return f"({s})" if prec >= 5 else s
    if isinstance(node, Card):
        return f"card({node.set},{node.q}) = {node.p}"
    raise TypeError(node)


# ------------------------------------------------------------------ rewriting

def rename(node: Node, mapping: dict) -> Node:
    """Rename variables (free and bound) according to ``mapping``."""
    r = lambda x: mapping.get(x, x)  # noqa: E731
    if isinstance(node, Not):
        return Not(rename(node.arg, mapping))
    if isinstance(node, BinOp):
        return BinOp(node.op, rename(node.left, mapping), rename(node.right, mapping))
    if isinstance(node, Quant):
        return replace(node, var=r(node.var), body=rename(node.body, mapping))
    if isinstance(node, Member):
        return replace(node, elem=r(node.elem), set=r(node.set))
    if isinstance(node, (EdgeAtom, Eq)):
        return replace(node, x=r(node.x), y=r(node.y))
    if isinstance(node, Inc):
        return replace(node, vertex=r(node.vertex), edge=r(node.edge))
    if isinstance(node, Card):
        return replace(node, set=r(node.set))
    return node


def bound_vars(node: Node) -> set:
    out = {node.var} if isinstance(node, Quant) else set()
    for c in children(node):
        out |= bound_vars(c)
    return out


def fold_constants(node: Node) -> Node:
    """Propagate ``true``/``false`` through connectives and set quantifiers.

    Element quantifiers are left alone: over an empty domain ``exists x. true``
    is false.
    """
    if isinstance(node, Not):
        a = fold_constants(node.arg)
        return Const(not a.value) if isinstance(a, Const) else Not(a)
    if isinstance(node, BinOp):
        a, b = fold_constants(node.left), fold_constants(node.right)
        ca = a.value if isinstance(a, Const) else None
        cb = b.value if isinstance(b, Const) else None
        if node.op == "&":
            if ca is False or cb is False:
                return Const(False)
            if ca is True:
                return b
            if cb is True:
                return a
        elif node.op == "|":
            if ca is True or cb is True:
                return Const(True)
            if ca is False:
                return b
            if cb is False:
                return a
        elif node.op == "->":
            if ca is False or cb is True:
                return Const(True)
            if ca is True:
                return b
            if cb is False:
                return fold_constants(Not(a))
        elif ca is not None and cb is not None:
            return Const(ca == cb)
        return BinOp(node.op, a, b)
    if isinstance(node, Quant):
        body = fold_constants(node.body)
        if isinstance(body, Const) and node.sort in SET_SORTS:
            return body
        return replace(node, body=body)
    return node


def conj(parts: Sequence[Node]) -> Node:
    parts = list(parts)
    if not parts:
        return Const(True)
    out = parts[0]
    for p in parts[1:]:
        out = BinOp("&", out, p)
    return out


def disj(parts: Sequence[Node]) -> Node:
    parts = list(parts)
    if not parts:
        return Const(False)
    out = parts[0]
    for p in parts[1:]:
        out = BinOp("|", out, p)
    return out


def partition_wrapper(formulas: Sequence[MsoFormula], names: Sequence[str] | None = None
                      ) -> MsoFormula:
    """Conjoin "the free sets partition V" with one single-set formula per part."""
    k = len(formulas)
    if k < 2:
        raise ValueError("a partition needs at least two parts")
    names = list(names) if names is not None else [f"U{a}" for a in range(1, k + 1)]
    x = "x_cover"
    cover = disj([Member(x, u) for u in names])
    apart = [Not(BinOp("&", Member(x, names[a]), Member(x, names[b])))
             for a in range(k) for b in range(a + 1, k)]
    parts = [Quant("forall", VERTEX, x, conj([cover] + apart))]
    for a, f in enumerate(formulas):
        if f.k != 1:
            raise ValueError(f"part {a + 1} formula must have exactly one free variable")
        mapping = {v: f"{v}_p{a + 1}" for v in bound_vars(f.body)}
        mapping[f.free[0]] = names[a]
        parts.append(rename(f.body, mapping))
    return MsoFormula(tuple(names), conj(parts))
