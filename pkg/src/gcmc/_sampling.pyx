# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled top-down state sampler; see ``_sampling_py`` for the contract."""

cdef Py_ssize_t _upper(const double[::1] cum, double u, Py_ssize_t lo, Py_ssize_t hi) noexcept nogil:
    # first index in [lo, hi) with cum[idx] > u
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if cum[mid] <= u:
            lo = mid + 1
        else:
            hi = mid
    return lo


def sample_paths(Py_ssize_t root, const long long[::1] order, const long long[::1] row_base,
                 const long long[::1] child1, const long long[::1] child2,
                 const long long[::1] row_ptr, const double[::1] cum,
                 const long long[::1] target, const double[::1] root_cum,
                 const double[:, ::1] uniforms, long long[:, ::1] out):
    cdef Py_ssize_t runs = uniforms.shape[0]
    cdef Py_ssize_t n_order = order.shape[0]
    cdef Py_ssize_t n_root = root_cum.shape[0]
    cdef Py_ssize_t r, k, i, row, lo, hi, p, a
    cdef long long b
    cdef long long status = 0
    with nogil:
        for r in range(runs):
            a = _upper(root_cum, uniforms[r, 0], 0, n_root)
            if a >= n_root:
                a = n_root - 1
            out[r, root] = a
            for k in range(n_order):
                i = order[k]
                row = row_base[i] + out[r, i]
                lo = row_ptr[row]
                hi = row_ptr[row + 1]
                if lo == hi:
                    status = -(r + 1)
                    break
                p = _upper(cum, uniforms[r, k + 1], lo, hi)
                if p >= hi:
                    p = hi - 1
                b = target[p]
                out[r, child1[i]] = b
                out[r, child2[i]] = b
            if status:
                break
    return status
