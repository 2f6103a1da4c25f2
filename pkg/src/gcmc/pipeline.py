"""End-to-end driver: constraint specs to extension, DP, LP, solution and rounding."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence, Union

from .csp import DpTables, build_dp
from .errors import InfeasibleError
from .graph import Graph, KPartition, PairWeights, cut_value
from .mso.automata import DEFAULT_STATE_CAP, automaton_for
from .mso.catalog import NAMES as CATALOG_NAMES, catalog
from .mso.compile import CspExtensionResult, ExtensionBuilder
from .mso.direct import DIRECT_NAMES, add_direct
from .mso.formula import (VERTEX, BinOp, Const, Member, MsoFormula, Not, Quant, conj, disj,
                          fold_constants, partition_wrapper)
from .treedec import TreeDecomposition, node_geometry

PartSpec = Union[str, MsoFormula]


def _as_formula(spec: PartSpec) -> MsoFormula:
    return catalog(spec) if isinstance(spec, str) else spec


def _add_part(b: ExtensionBuilder, spec: PartSpec, part: int, generic: bool, cap: int) -> None:
    if isinstance(spec, str) and spec in DIRECT_NAMES and not generic:
        add_direct(b, spec, part, cap=cap)
        return
    phi = _as_formula(spec)
    if phi.k != 1:
        raise ValueError(f"a per-part formula needs exactly one free set, got {phi.k}")
    body = fold_constants(phi.body)
    if isinstance(body, Const):
        if not body.value and b.g.n:
            b.add_relation([(1, part)], [])
        return
    folded = MsoFormula(phi.free, body)
    g = b.g
    b.add_automaton(lambda ctx: automaton_for(folded, g, ctx.td, cap, ctx), [part],
                    f"part{part}")


def partition_extension(g: Graph, parts: Sequence[PartSpec] | None = None,
                        joint: MsoFormula | None = None, single_side: bool = False,
                        generic: bool = False, td: TreeDecomposition | None = None,
                        cap: int = DEFAULT_STATE_CAP) -> CspExtensionResult:
    """CSP extension for a constrained partition.

    Either ``parts`` gives one constraint per part (catalog name or one-set
    formula), or ``joint`` is a formula over all ``k`` parts.  For ``k >= 2``
    every vertex is put in exactly one part.  ``single_side`` keeps only the
    first part's constraint and one base variable per vertex; the second
    side is its complement and must be unconstrained.
    """
    if (parts is None) == (joint is None):
        raise ValueError("give either per-part constraints or a joint formula")
    if single_side:
        if joint is not None or len(parts) != 2:
            raise ValueError("single-side mode takes exactly two per-part constraints")
        other = parts[1]
        if not (other == "true" or (isinstance(other, MsoFormula)
                                     and fold_constants(other.body) == Const(True))):
            raise ValueError("single-side mode needs the second part unconstrained")
        b = ExtensionBuilder(g, 1)
        _add_part(b, parts[0], 1, generic, cap)
        return b.finish(td, cap)
    k = len(parts) if parts is not None else joint.k
    if k < 2:
        raise ValueError("a partition needs k >= 2 parts")
    b = ExtensionBuilder(g, k)
    one_hot = [tuple(int(a == x) for a in range(k)) for x in range(k)]
    for v in g.vertices:
        b.add_relation([(v, a) for a in range(1, k + 1)], one_hot)
    if joint is not None:
        body = fold_constants(joint.body)
        if isinstance(body, Const):
            if not body.value and g.n:
                b.add_relation([(1, 1)], [])
        else:
            folded = MsoFormula(joint.free, body)
            b.add_automaton(lambda ctx: automaton_for(folded, g, ctx.td, cap, ctx),
                            list(range(1, k + 1)), "joint")
    else:
        for a, spec in enumerate(parts, start=1):
            _add_part(b, spec, a, generic, cap)
    return b.finish(td, cap)


def wrapped_formula(parts: Sequence[PartSpec] | None = None,
                    joint: MsoFormula | None = None) -> MsoFormula:
    """The single formula over all parts that the naive evaluator checks."""
    if joint is None:
        return partition_wrapper([_as_formula(p) for p in parts])
    names = joint.free
    x = "x_cover"
    cover = disj([Member(x, u) for u in names])
    apart = [Not(BinOp("&", Member(x, a), Member(x, b)))
             for i, a in enumerate(names) for b in names[i + 1:]]
    return MsoFormula(names, BinOp("&", Quant("forall", VERTEX, x, conj([cover] + apart)),
                                   joint.body))


def partition_of(ext: CspExtensionResult, assignment) -> KPartition:
    """Read the partition encoded by a full assignment of ``ext.csp``."""
    n = ext.graph.n
    if ext.k == 1:
        lab = [1 if assignment[ext.base[(v, 1)]] else 2 for v in ext.graph.vertices]
        return KPartition(2, tuple(lab))
    lab = [0] * n
    for v in ext.graph.vertices:
        hits = [a for a in range(1, ext.k + 1) if assignment[ext.base[(v, a)]]]
        if len(hits) != 1:
            raise ValueError(f"vertex {v} is in parts {hits}")
        lab[v - 1] = hits[0]
    return KPartition(ext.k, tuple(lab))


@dataclass
class Prepared:
    """An instance carried through compilation, the DP and the LP build."""

    graph: Graph
    weights: PairWeights
    ext: CspExtensionResult
    dp: DpTables
    timings: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return bool(self.dp.root_realizable())


def prepare(g: Graph, c: PairWeights, parts=None, joint=None, single_side=False,
            generic=False, td=None, state_cap=DEFAULT_STATE_CAP) -> Prepared:
    t0 = time.perf_counter()
    ext = partition_extension(g, parts, joint, single_side, generic, td, state_cap)
    t1 = time.perf_counter()
    dp = build_dp(ext.csp, ext.td)
    t2 = time.perf_counter()
    return Prepared(g, c, ext, dp, {"compile": t1 - t0, "dp": t2 - t1})


__all__ = ["CATALOG_NAMES", "PartSpec", "Prepared", "partition_extension", "partition_of",
           "prepare", "wrapped_formula", "node_geometry", "cut_value", "InfeasibleError"]
