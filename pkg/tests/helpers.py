"""Small pipeline helpers shared by the LP and rounding tests."""
from gcmc.graph import weights_from_edges
from gcmc.lp.build import build_lp
from gcmc.lp.solve import solve
from gcmc.pipeline import prepare


def build(g, parts, w=None, pruned=True, single_side=False):
    w = w if w is not None else weights_from_edges(g)
    prep = prepare(g, w, parts, single_side=single_side)
    return prep, build_lp(prep.ext, prep.dp, w, pruned=pruned)


def solved(g, parts, w=None, **kw):
    prep, program = build(g, parts, w, **kw)
    return prep, program, solve(program)
