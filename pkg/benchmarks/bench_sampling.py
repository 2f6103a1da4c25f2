"""Compare the compiled sampling kernel with the pure-Python fallback.

Both kernels get the same tables and the same uniforms; their outputs must
match exactly.  Usage: ``python benchmarks/bench_sampling.py --runs 20000``.
"""
import argparse
import time

import numpy as np

from gcmc import _sampling_py
from gcmc.graph import named_graph, weights_from_edges
from gcmc.lp.build import build_lp
from gcmc.lp.solve import solve
from gcmc.pipeline import prepare
from gcmc.rounding import build_sampler, run_uniforms

try:
    from gcmc import _sampling
except ImportError:
    _sampling = None

INSTANCES = [("p8", ("is", "true")), ("grid2x3", ("vc", "true")),
             ("c6", ("is", "true", "true"))]


def _time(fn, tab, uniforms, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        out = np.zeros((len(uniforms), tab.n_nodes), dtype=np.int64)
        t0 = time.perf_counter()
        code = fn(tab.root, tab.order, tab.row_base, tab.child1, tab.child2, tab.row_ptr,
                  tab.cum, tab.target, tab.root_cum, uniforms, out)
        best = min(best, time.perf_counter() - t0)
        assert code == 0
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _sampling is None:
        print("compiled kernel not built; only the fallback is available")
    print(f"{'instance':24s} {'nodes':>5s} {'rows':>6s} {'python s':>9s} "
          f"{'compiled s':>10s} {'speedup':>8s}")
    for gname, parts in INSTANCES:
        g = named_graph(gname)
        prep = prepare(g, weights_from_edges(g), parts)
        program = build_lp(prep.ext, prep.dp, weights_from_edges(g))
        tab = build_sampler(program, solve(program))
        uniforms = np.ascontiguousarray(run_uniforms(args.seed, range(args.runs), tab.draws))
        t_py, out_py = _time(_sampling_py.sample_paths, tab, uniforms, 1)
        name = f"{gname}/{'+'.join(parts)}"
        rows = len(tab.row_ptr) - 1
        if _sampling is None:
            print(f"{name:24s} {tab.n_nodes:5d} {rows:6d} {t_py:9.3f}")
            continue
        t_c, out_c = _time(_sampling.sample_paths, tab, uniforms, args.repeat)
        if not np.array_equal(out_py, out_c):
            raise SystemExit(f"{name}: kernels disagree")
        print(f"{name:24s} {tab.n_nodes:5d} {rows:6d} {t_py:9.3f} {t_c:10.4f} "
              f"{t_py / t_c:7.0f}x")


if __name__ == "__main__":
    main()
