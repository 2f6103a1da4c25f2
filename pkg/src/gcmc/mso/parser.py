"""Recursive-descent parser and sort checker for the formula file syntax.

    file    := "free" ident+ ";" formula
    formula := quant | formula bin formula | "!" formula | atom | "(" formula ")"

Precedence, tightest first: ``!``, ``&``, ``|``, ``->`` (right associative),
``<->``.  A quantifier body extends as far to the right as possible.
"""
from __future__ import annotations

import re

from ..errors import ParseError, SortError
from .formula import (ELEMENT_SORTS, EDGE, QUANT_KEYWORDS, SET_OF, SET_SORTS, VERTEX, VSET,
                      BinOp, Card, Const, EdgeAtom, Eq, Inc, Member, MsoFormula, Node, Not, Quant)

_TOKEN = re.compile(r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<op><->|->|[;.,()!&|=])
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
""", re.VERBOSE)

_KEYWORDS = {"free", "in", "edge", "inc", "card", "true", "false", *QUANT_KEYWORDS}


def tokenize(text: str) -> list[tuple[str, str, int, int]]:
    out, pos, line, col = [], 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind, val = m.lastgroup, m.group()
        if kind != "ws":
            if kind == "ident" and val in _KEYWORDS:
                kind = "kw"
            out.append((kind, val, line, col))
        nl = val.count("\n")
        if nl:
            line += nl
            col = len(val) - val.rfind("\n")
        else:
            col += len(val)
        pos = m.end()
    out.append(("eof", "", line, col))
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def error(self, msg):
        _, val, line, col = self.tok
        return ParseError(f"{msg}, found {val!r}" if val else f"{msg}, found end of input",
                          line, col)

    def take(self, value=None, kind=None):
        k, v, line, col = self.tok
        if (value is not None and v != value) or (kind is not None and k != kind):
            raise self.error(f"expected {value or kind}")
        self.i += 1
        return v, (line, col)

    def at(self, *values):
        return self.tok[1] in values and self.tok[0] in ("op", "kw")

    def ident(self):
        return self.take(kind="ident")

    # formula := iff
    def formula(self) -> Node:
        left = self.implication()
        while self.at("<->"):
            self.i += 1
            left = BinOp("<->", left, self.implication())
        return left

    def implication(self) -> Node:
        left = self.disjunction()
        if self.at("->"):
            self.i += 1
            return BinOp("->", left, self.implication())
        return left

    def disjunction(self) -> Node:
        left = self.conjunction()
        while self.at("|"):
            self.i += 1
            left = BinOp("|", left, self.conjunction())
        return left

    def conjunction(self) -> Node:
        left = self.unary()
        while self.at("&"):
            self.i += 1
            left = BinOp("&", left, self.unary())
        return left

    def unary(self) -> Node:
        if self.at("!"):
            self.i += 1
            return Not(self.unary())
        return self.primary()

    def primary(self) -> Node:
        kind, val, line, col = self.tok
        if kind == "kw" and val in QUANT_KEYWORDS:
            self.i += 1
            q, sort = QUANT_KEYWORDS[val]
            var, _ = self.ident()
            self.take(".")
            return Quant(q, sort, var, self.formula(), pos=(line, col))
        if self.at("("):
            self.i += 1
            f = self.formula()
            self.take(")")
            return f
        if self.at("true", "false"):
            self.i += 1
            return Const(val == "true")
        if self.at("edge", "inc"):
            self.i += 1
            self.take("(")
            a, _ = self.ident()
            self.take(",")
            b, _ = self.ident()
            self.take(")")
            return EdgeAtom(a, b, pos=(line, col)) if val == "edge" else Inc(a, b, pos=(line, col))
        if self.at("card"):
            self.i += 1
            self.take("(")
            s, _ = self.ident()
            self.take(",")
            q, qpos = self.take(kind="int")
            self.take(")")
            self.take("=")
            p, _ = self.take(kind="int")
            q, p = int(q), int(p)
            if q < 1 or not 0 <= p < q:
                raise ParseError(f"card modulus needs q >= 1 and 0 <= p < q, got q={q}, p={p}",
                                 *qpos)
            return Card(s, q, p, pos=(line, col))
        if kind == "ident":
            self.i += 1
            if self.at("in"):
                self.i += 1
                s, _ = self.ident()
                return Member(val, s, pos=(line, col))
            if self.at("="):
                self.i += 1
                b, _ = self.ident()
                return Eq(val, b, pos=(line, col))
            raise self.error("expected 'in' or '=' after variable")
        raise self.error("expected a formula")

    def file(self) -> tuple[tuple, Node]:
        self.take("free")
        names = []
        while self.tok[0] == "ident":
            names.append(self.ident()[0])
        if not names:
            raise self.error("expected at least one free variable")
        if len(set(names)) != len(names):
            raise ParseError("duplicate free variable", *self.tok[2:])
        self.take(";")
        body = self.formula()
        self.take(kind="eof")
        return tuple(names), body


def _where(node):
    return node.pos if getattr(node, "pos", None) else (None, None)


def check_sorts(free: tuple, body: Node) -> None:
    """Raise :class:`SortError` unless every variable is bound once and used at its sort."""

    def need(env, name, node, allowed):
        if name not in env:
            raise SortError(f"unbound variable {name!r}", *_where(node))
        if env[name] not in allowed:
            raise SortError(f"variable {name!r} has sort {env[name]}, expected one of "
                            f"{'/'.join(allowed)}", *_where(node))
        return env[name]

    def walk(node, env):
        if isinstance(node, Quant):
            if node.var in env:
                raise SortError(f"variable {node.var!r} is bound twice", *_where(node))
            walk(node.body, {**env, node.var: node.sort})
        elif isinstance(node, Member):
            s = need(env, node.elem, node, ELEMENT_SORTS)
            need(env, node.set, node, (SET_OF[s],))
        elif isinstance(node, EdgeAtom):
            need(env, node.x, node, (VERTEX,))
            need(env, node.y, node, (VERTEX,))
        elif isinstance(node, Inc):
            need(env, node.vertex, node, (VERTEX,))
            need(env, node.edge, node, (EDGE,))
        elif isinstance(node, Eq):
            s = need(env, node.x, node, ELEMENT_SORTS + SET_SORTS)
            need(env, node.y, node, (s,))
        elif isinstance(node, Card):
            need(env, node.set, node, SET_SORTS)
        else:
            for c in (getattr(node, "arg", None), getattr(node, "left", None),
                      getattr(node, "right", None)):
                if c is not None:
                    walk(c, env)

    walk(body, {name: VSET for name in free})


def parse(text: str) -> MsoFormula:
    """Parse and sort-check a formula file; errors carry line and column."""
    free, body = _Parser(text).file()
    check_sorts(free, body)
    return MsoFormula(free, body)


def parse_body(text: str, free: tuple) -> Node:
    """Parse a bare formula (no ``free`` header) against given free variables."""
    p = _Parser(text)
    body = p.formula()
    p.take(kind="eof")
    check_sorts(tuple(free), body)
    return body


__all__ = ["parse", "parse_body", "tokenize", "check_sorts"]
