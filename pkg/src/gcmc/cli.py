"""Command-line entry point: ``gcmc {solve,oracle,check,compile,treedec}``.

Every run prints either one JSON document on stdout or one error line on
stderr.  Exit codes: 0 ok, 2 parse or usage, 3 infeasible, 4 resource cap,
5 internal invariant (including failed ``check`` instances).
"""
from __future__ import annotations

import argparse
import json
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from .csp import DEFAULT_STATE_CAP
from .errors import (GcmcError, InfeasibleError, InvariantError, ParseError,
                     ResourceLimitError)
from .graph import Graph, KPartition, PairWeights, load_graph, parse_weights, weights_from_edges
from .lp.build import DEFAULT_INDEX_CAP, build_lp, export_lp
from .lp.solve import SolverConfig, solve
from .mso.catalog import NAMES as CATALOG_NAMES
from .mso.direct import DIRECT_NAMES
from .mso.parser import parse
from .oracle import DEFAULT_ORACLE_CAP, brute_force, verification_corpus, verify_instance
from .pipeline import prepare
from .rounding import KERNEL, build_sampler, exact_cut_expectation, monte_carlo, round_solution
from .treedec import decompose

EXIT_OK, EXIT_PARSE, EXIT_INFEASIBLE, EXIT_RESOURCE, EXIT_INVARIANT = 0, 2, 3, 4, 5
MAX_PARTS = 9
CAP_KEYS = ("state", "index", "oracle")


@dataclass
class RunConfig:
    mode: str
    graph: Graph | None = None
    weights: PairWeights | None = None
    parts: tuple | None = None
    joint: object = None
    k: int = 2
    seed: int = 0
    samples: int = 1000
    caps: dict = field(default_factory=dict)
    single_side: bool = False
    generic: bool = False
    exact_expectation: bool = False
    lp_export: str | None = None
    json_out: str | None = None
    verbose: bool = False
    solver: SolverConfig = field(default_factory=SolverConfig)
    corpus: str = "quick"
    dump: bool = False

    def cap(self, key: str) -> int:
        return self.caps[key]


# ------------------------------------------------------------------ argument handling

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gcmc", description="Graph-constrained max-k-cut.")
    sub = p.add_subparsers(dest="mode", required=True)

    def common(sp, graph_required=True):
        sp.add_argument("--graph", required=graph_required,
                        help="graph file or name such as p5, c6, grid2x3")
        sp.add_argument("--weights", help="weight file with lines 'u v w'")
        sp.add_argument("--default-weight", type=float, default=1.0,
                        help="weight of each edge absent from --weights")
        sp.add_argument("--formula", help="formula file: one free set, or one per part")
        for i in range(1, MAX_PARTS + 1):
            sp.add_argument(f"--catalog{i}", metavar="NAME", help=argparse.SUPPRESS
                            if i > 3 else f"catalog constraint on part {i}")
            sp.add_argument(f"--formula{i}", metavar="PATH", help=argparse.SUPPRESS
                            if i > 3 else f"formula file constraining part {i}")
        sp.add_argument("--k", type=int, default=None, help="number of parts (default 2)")
        sp.add_argument("--single-side", action="store_true",
                        help="k=2 with one base variable per vertex; part 2 must be 'true'")
        sp.add_argument("--generic", action="store_true",
                        help="compile catalog constraints through automata")
        sp.add_argument("--caps", nargs="*", default=[], metavar="KEY=N",
                        help="caps: state, index, oracle")
        sp.add_argument("--json-out", help="also write the JSON document here")
        sp.add_argument("--verbose", action="store_true")

    s = sub.add_parser("solve", help="compile, solve the LP and round")
    common(s)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--samples", type=int, default=1000)
    s.add_argument("--exact-expectation", action="store_true",
                   help="report the exact expected cut of the rounding")
    s.add_argument("--lp-export", metavar="PATH", help="write the LP in CPLEX LP format")
    s.add_argument("--solver", choices=("highs", "highs-ipm", "simplex"), default="highs")
    s.add_argument("--exact-arith", action="store_true",
                   help="rational arithmetic in the built-in simplex (tiny LPs only)")

    o = sub.add_parser("oracle", help="exhaustive optimum")
    common(o)

    c = sub.add_parser("check", help="verify instances against brute force")
    common(c, graph_required=False)
    c.add_argument("--corpus", choices=("quick", "full", "dense"), default="quick")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--samples", type=int, default=1000)

    m = sub.add_parser("compile", help="print the compiled CSP")
    common(m)

    t = sub.add_parser("treedec", help="tree decomposition of the graph")
    t.add_argument("--graph", required=True)
    t.add_argument("--dump", action="store_true", help="print bags one node per line")
    t.add_argument("--no-balance", action="store_true")
    t.add_argument("--json-out")
    t.add_argument("--verbose", action="store_true")
    return p


def _read(path: str, what: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {what} {path!r}: {exc.strerror}", stage="cli") from None


def _caps(items) -> dict:
    caps = {"state": DEFAULT_STATE_CAP, "index": DEFAULT_INDEX_CAP, "oracle": DEFAULT_ORACLE_CAP}
    for item in items:
        key, _, val = item.partition("=")
        if key not in CAP_KEYS or not re.fullmatch(r"\d+(e\d+)?", val):
            raise ParseError(f"bad cap {item!r}; expected one of {', '.join(CAP_KEYS)}=N",
                             stage="cli")
        caps[key] = int(float(val))
    return caps


def _part_specs(ns) -> tuple[tuple | None, object]:
    """Resolve per-part constraints, or a joint formula, from the flags."""
    given = {}
    for i in range(1, MAX_PARTS + 1):
        cat, path = getattr(ns, f"catalog{i}"), getattr(ns, f"formula{i}")
        if cat and path:
            raise ParseError(f"part {i} has both --catalog{i} and --formula{i}", stage="cli")
        if cat:
            if cat not in CATALOG_NAMES and cat not in DIRECT_NAMES:
                raise ParseError(f"unknown catalog name {cat!r}", stage="cli")
            given[i] = cat
        elif path:
            given[i] = parse(_read(path, "formula"))
    joint = None
    if ns.formula:
        phi = parse(_read(ns.formula, "formula"))
        if phi.k == 1:
            if 1 in given:
                raise ParseError("--formula and a part-1 constraint both given", stage="cli")
            given[1] = phi
        elif given:
            raise ParseError("a multi-part --formula excludes per-part constraints", stage="cli")
        else:
            joint = phi
    if joint is not None:
        if ns.k is not None and ns.k != joint.k:
            raise ParseError(f"--k {ns.k} but the formula has {joint.k} free sets", stage="cli")
        return None, joint
    k = ns.k if ns.k is not None else max([2, *given])
    if k < 2:
        raise ParseError("k must be at least 2", stage="cli")
    extra = [i for i in given if i > k]
    if extra:
        raise ParseError(f"constraints given for parts {extra} beyond k = {k}", stage="cli")
    # unconstrained parts default to 'true'
    return tuple(given.get(i, "true") for i in range(1, k + 1)), None


def config_from_args(ns) -> RunConfig:
    cfg = RunConfig(ns.mode, verbose=ns.verbose, json_out=ns.json_out)
    if ns.mode == "treedec":
        cfg.graph = load_graph(ns.graph)
        cfg.dump = ns.dump
        cfg.generic = not ns.no_balance     # reused as the balance switch
        return cfg
    cfg.caps = _caps(ns.caps)
    cfg.seed = getattr(ns, "seed", 0)
    cfg.samples = getattr(ns, "samples", 1000)
    if cfg.seed < 0 or cfg.samples < 0:
        raise ParseError("seed and samples must be non-negative", stage="cli")
    cfg.corpus = getattr(ns, "corpus", "quick")
    if ns.mode == "check" and not ns.graph:
        return cfg
    cfg.graph = load_graph(ns.graph)
    if ns.default_weight < 0:
        raise ParseError("--default-weight must be non-negative", stage="cli")
    if ns.weights:
        cfg.weights = parse_weights(_read(ns.weights, "weights"), cfg.graph, ns.default_weight)
    else:
        cfg.weights = weights_from_edges(cfg.graph, ns.default_weight)
    cfg.parts, cfg.joint = _part_specs(ns)
    cfg.k = len(cfg.parts) if cfg.parts is not None else cfg.joint.k
    cfg.single_side, cfg.generic = ns.single_side, ns.generic
    if cfg.single_side and (cfg.parts is None or cfg.k != 2):
        raise ParseError("--single-side needs k = 2 with per-part constraints", stage="cli")
    cfg.exact_expectation = getattr(ns, "exact_expectation", False)
    cfg.lp_export = getattr(ns, "lp_export", None)
    if ns.mode == "solve":
        cfg.solver = SolverConfig(backend=ns.solver,
                                  arithmetic="exact" if ns.exact_arith else "float")
    return cfg


# ------------------------------------------------------------------ modes

def _partition_json(g: Graph, h: KPartition) -> list[list[str]]:
    return [[g.label(v) for v in sorted(part)] for part in h.parts()]


def _spec_name(spec) -> str:
    return spec if isinstance(spec, str) else spec.text()


def _instance_json(cfg: RunConfig) -> dict:
    g = cfg.graph
    out = {"n": g.n, "m": g.m, "k": cfg.k, "weight_total": cfg.weights.total(),
           "mode": "single-side" if cfg.single_side else "partition"}
    if cfg.parts is not None:
        out["parts"] = [_spec_name(p) for p in cfg.parts]
    else:
        out["formula"] = cfg.joint.text()
    return out


def _oracle(cfg: RunConfig):
    return brute_force(cfg.graph, cfg.weights, cfg.parts, cfg.joint, cfg.single_side,
                       cap=cfg.cap("oracle"))


def _prepare(cfg: RunConfig):
    prep = prepare(cfg.graph, cfg.weights, cfg.parts, cfg.joint, cfg.single_side, cfg.generic,
                   state_cap=cfg.cap("state"))
    if not prep.feasible:
        raise InfeasibleError("constraint unsatisfiable: the DP root has no realizable state",
                              stage="csp-dp")
    return prep


def run_solve(cfg: RunConfig) -> dict:
    t0 = time.perf_counter()
    prep = _prepare(cfg)
    ext, dp = prep.ext, prep.dp
    t1 = time.perf_counter()
    program = build_lp(ext, dp, cfg.weights, cap=cfg.cap("index"))
    if cfg.lp_export:
        export_lp(program, cfg.lp_export)
    t2 = time.perf_counter()
    sol = solve(program, cfg.solver)
    if sol.status == "infeasible":
        raise InfeasibleError("constraint unsatisfiable: the LP is infeasible", stage="lp-solve")
    if not sol.optimal:
        raise ResourceLimitError(f"LP solver stopped with status {sol.status}", stage="lp-solve")
    t3 = time.perf_counter()
    tables = build_sampler(program, sol)
    first = round_solution(program, sol, seed=[cfg.seed, 0], weights=cfg.weights, tables=tables)
    if not first.feasible:
        raise InvariantError("rounded assignment violates the constraint", stage="rounding")
    rounding = {"partition": _partition_json(cfg.graph, first.partition), "cut": first.cut,
                "feasible": first.feasible,
                "seed": cfg.seed, "samples": cfg.samples}
    if cfg.samples:
        mc = monte_carlo(program, sol, cfg.weights, cfg.samples, cfg.seed, tables=tables)
        rounding.update(mean=mc.mean, stderr=mc.stderr, feasible_rate=mc.feasible_rate,
                        best_cut=mc.best_cut,
                        best_partition=_partition_json(cfg.graph, mc.best.partition))
        if mc.feasible_rate != 1.0:
            raise InvariantError(f"feasibility rate {mc.feasible_rate} below 1", stage="rounding")
    else:
        rounding.update(mean=first.cut, stderr=None, feasible_rate=1.0)
    if cfg.exact_expectation:
        ex = exact_cut_expectation(program, sol, cfg.weights, tables=tables)
        rounding["expected_cut"] = ex.expected_cut
        rounding["half_lp"] = 0.5 * sol.objective
    t4 = time.perf_counter()
    td = ext.td
    out = {"instance": _instance_json(cfg),
           "decomposition": {"width": td.width, "depth": td.depth, "nodes": len(td),
                             "graph_width": ext.vertex_td.width},
           "compile": {**ext.summary(), "feasible": True},
           "lp": {"vars": program.n_vars, "rows": program.n_rows, "objective": sol.objective},
           "rounding": rounding}
    try:
        orc = _oracle(cfg)
    except ResourceLimitError:
        orc = None
    if orc is not None and orc.feasible:
        mean = rounding["mean"]
        out["opt"] = orc.opt
        out["ratio"] = mean / orc.opt if orc.opt > 0 else None
        out["ratio_floor"] = 0.5
    if cfg.verbose:
        out["lp"].update(sol.report(), size=program.summary())
        out["kernel"] = KERNEL
        out["timings"] = {**prep.timings, "prepare": t1 - t0, "lp_build": t2 - t1,
                          "lp_solve": t3 - t2, "rounding": t4 - t3}
    return out


def run_oracle(cfg: RunConfig) -> dict:
    orc = _oracle(cfg)
    if not orc.feasible:
        raise InfeasibleError("constraint unsatisfiable: no feasible partition", stage="oracle")
    out = {"instance": _instance_json(cfg), "opt": orc.opt,
           "optimal": [_partition_json(cfg.graph, h) for h in orc.optimal[:16]],
           "optimal_count": len(orc.optimal), "feasible_count": orc.feasible_count,
           "total": orc.total}
    if cfg.verbose:
        out["seconds"] = orc.seconds
    return out


def _corpus(name: str):
    insts = verification_corpus()
    if name == "quick":
        return [i for i in insts if i.graph.n <= 6 and "/dense/" not in i.name]
    if name == "dense":
        return [i for i in insts if "/dense/" in i.name]
    return insts


def run_check(cfg: RunConfig) -> dict:
    if cfg.graph is not None:
        if cfg.parts is None:
            raise ParseError("check takes per-part constraints", stage="cli")
        items = [("instance", cfg.graph, cfg.weights, cfg.parts)]
    else:
        items = [(i.name, i.graph, i.weights, i.parts) for i in _corpus(cfg.corpus)]
    reports = []
    for name, g, w, parts in items:
        rep = verify_instance(g, w, parts, samples=max(1, cfg.samples), seed=cfg.seed, name=name,
                              dp_suite=g.n <= 6, single_side=cfg.single_side)
        d = rep.as_dict()
        if cfg.verbose:
            d["timings"] = rep.timings
        reports.append(d)
    return {"passed": all(r["passed"] for r in reports), "instances": reports}


def compile_text(ext) -> str:
    """``J'`` as text: variables with domains, then ``scope : tuple ; tuple`` lines."""
    csp = ext.csp
    lines = [f"# variables {csp.n}", *(f"{i} {name} {d}" for i, (name, d)
                                       in enumerate(zip(csp.names, csp.domains)))]
    lines.append(f"# constraints {len(csp.constraints)}")
    for con in csp.constraints:
        tuples = " ; ".join(" ".join(map(str, t)) for t in sorted(con.relation))
        lines.append(f"{' '.join(map(str, con.scope))} : {tuples}".rstrip())
    return "\n".join(lines)


def run_compile(cfg: RunConfig) -> tuple[dict, str]:
    prep = prepare(cfg.graph, cfg.weights, cfg.parts, cfg.joint, cfg.single_side, cfg.generic,
                   state_cap=cfg.cap("state"))
    ext = prep.ext
    summary = {"instance": _instance_json(cfg),
               "compile": {**ext.summary(), "feasible": prep.feasible}}
    return summary, compile_text(ext)


def run_treedec(cfg: RunConfig) -> tuple[dict, str]:
    g = cfg.graph
    td = decompose(g.vertices, g.sorted_edges(), balance=cfg.generic)
    return {"width": td.width, "depth": td.depth, "nodes": len(td)}, td.dump()


# ------------------------------------------------------------------ entry point

def run(cfg: RunConfig) -> tuple[int, str]:
    """Execute ``cfg``; returns the exit code and the text for stdout."""
    text = None
    if cfg.mode == "solve":
        doc = run_solve(cfg)
    elif cfg.mode == "oracle":
        doc = run_oracle(cfg)
    elif cfg.mode == "check":
        doc = run_check(cfg)
    elif cfg.mode == "compile":
        doc, text = run_compile(cfg)
    else:
        doc, text = run_treedec(cfg)
        if not cfg.dump:
            text = None
    body = json.dumps(doc, indent=2, sort_keys=False)
    if cfg.json_out:
        Path(cfg.json_out).write_text(body + "\n")
    code = EXIT_OK
    if cfg.mode == "check" and not doc["passed"]:
        code = EXIT_INVARIANT
    return code, text if text is not None else body


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, ParseError):
        return EXIT_PARSE
    if isinstance(exc, InfeasibleError):
        return EXIT_INFEASIBLE
    if isinstance(exc, ResourceLimitError):
        return EXIT_RESOURCE
    if isinstance(exc, (InvariantError, AssertionError)):
        return EXIT_INVARIANT
    return EXIT_PARSE


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        code, out = run(config_from_args(ns))
    except GcmcError as exc:
        print(f"gcmc: error [{exc.stage}]: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except (ValueError, KeyError) as exc:
        msg = exc.args[0] if exc.args else exc
        print(f"gcmc: error [cli]: {msg}", file=sys.stderr)
        return EXIT_PARSE
    except AssertionError as exc:
        print(f"gcmc: error [invariant]: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    print(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
