"""Pure-Python top-down state sampler; same contract as the compiled ``_sampling``."""
from __future__ import annotations

from bisect import bisect_right


def sample_paths(root, order, row_base, child1, child2, row_ptr, cum, target, root_cum,
                 uniforms, out) -> int:
    """Fill ``out[r, i]`` with the sampled assignment index of ``T_i`` for run ``r``.

    ``uniforms[r, 0]`` picks the root assignment from ``root_cum``; then the
    internal nodes in ``order`` consume ``uniforms[r, 1:]`` in turn, choosing
    an extension of the realized ``T_i`` assignment from its cumulative row.
    Returns ``0`` on success, or ``-(r + 1)`` when run ``r`` reached a row
    without mass.
    """
    order, row_base, child1, child2, row_ptr, cum, target, root_cum = (
        _py(x) for x in (order, row_base, child1, child2, row_ptr, cum, target,
                                    root_cum))
    runs = len(uniforms)
    n_root = len(root_cum)
    for r in range(runs):
        u_row = [float(u) for u in uniforms[r]]
        a = bisect_right(root_cum, u_row[0])
        if a >= n_root:
            a = n_root - 1
        cur = {root: a}
        out[r, root] = a
        for k in range(len(order)):
            i = order[k]
            row = row_base[i] + cur[i]
            lo, hi = row_ptr[row], row_ptr[row + 1]
            if lo == hi:
                return -(r + 1)
            p = bisect_right(cum, u_row[k + 1], lo, hi)
            if p >= hi:
                p = hi - 1
            b = target[p]
            cur[child1[i]] = cur[child2[i]] = b
            out[r, child1[i]] = b
            out[r, child2[i]] = b
    return 0


def _py(v) -> list:
    return v.tolist() if hasattr(v, "tolist") else list(v)
