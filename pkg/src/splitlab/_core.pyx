# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled backend for the hot kernels.

Mirror of _pycore: same uniform-consumption protocol, same float expression
order (the build compiles with -ffp-contract=off so fused multiply-adds cannot
desynchronize the two backends). A seed therefore produces bit-identical trees
here and in the pure-Python fallback.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport log, pow, sqrt
from libc.stdint cimport int32_t, int64_t
from numpy.random cimport bitgen_t

cnp.import_array()

BACKEND = "compiled"

cdef enum:
    FAM_BST = 0
    FAM_BARY = 1
    FAM_MEDIAN = 2
    FAM_DIRICHLET = 3
    FAM_BETA_BINARY = 4


cdef bitgen_t *_get_bitgen(object bit_generator) except NULL:
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("expected a numpy BitGenerator")
    return <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")


cdef inline double _next_u(bitgen_t *bg) noexcept:
    return bg.next_double(bg.state)


cdef double _gamma_draw(bitgen_t *bg, double a) noexcept:
    cdef double d, c, v1, v2, ss, z, v, u, zz, boost
    if a < 1.0:
        # shape boost: run the body for a + 1, then one uniform
        d = (a + 1.0) - 1.0 / 3.0
        c = 1.0 / (3.0 * sqrt(d))
        while True:
            while True:
                v1 = 2.0 * _next_u(bg) - 1.0
                v2 = 2.0 * _next_u(bg) - 1.0
                ss = v1 * v1 + v2 * v2
                if 0.0 < ss and ss < 1.0:
                    break
            z = v1 * sqrt(-2.0 * log(ss) / ss)
            v = 1.0 + c * z
            if v <= 0.0:
                continue
            v = v * v * v
            u = _next_u(bg)
            zz = z * z
            if u < 1.0 - 0.0331 * zz * zz:
                break
            if log(u) < 0.5 * zz + d * (1.0 - v + log(v)):
                break
        boost = pow(_next_u(bg), 1.0 / a)
        return d * v * boost
    d = a - 1.0 / 3.0
    c = 1.0 / (3.0 * sqrt(d))
    while True:
        while True:
            v1 = 2.0 * _next_u(bg) - 1.0
            v2 = 2.0 * _next_u(bg) - 1.0
            ss = v1 * v1 + v2 * v2
            if 0.0 < ss and ss < 1.0:
                break
        z = v1 * sqrt(-2.0 * log(ss) / ss)
        v = 1.0 + c * z
        if v <= 0.0:
            continue
        v = v * v * v
        u = _next_u(bg)
        zz = z * z
        if u < 1.0 - 0.0331 * zz * zz:
            return d * v
        if log(u) < 0.5 * zz + d * (1.0 - v + log(v)):
            return d * v


cdef void _insertion_sort(double *a, int m) noexcept:
    cdef int i, j
    cdef double key
    for i in range(1, m):
        key = a[i]
        j = i - 1
        while j >= 0 and a[j] > key:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = key


cdef class TreeKernel:
    """Ball-insertion split-tree builder (see _pycore.TreeKernel)."""

    cdef public int b, s, s0, s1, family_id
    cdef double[::1] fparams
    cdef int64_t[::1] first_child, parent, ball_count, subtree_count
    cdef int32_t[::1] depth
    cdef double[:, ::1] cdf
    cdef int64_t[:, ::1] slots
    cdef Py_ssize_t cap, n_nodes
    cdef dict _arrays
    cdef double *scratch  # raw-vector workspace
    cdef object _scratch_arr
    cdef int64_t[::1] _ball_node
    cdef object _ball_node_arr
    # redistribution stack: (kind, node, ball)
    cdef int64_t[:, ::1] _stack
    cdef object _stack_arr

    def __init__(self, b, s, s0, s1, family_id, family_params):
        self.b = b
        self.s = s
        self.s0 = s0
        self.s1 = s1
        self.family_id = family_id
        fp = np.asarray(family_params, dtype=np.float64)
        if fp.ndim == 0:
            fp = fp.reshape(1)
        self.fparams = np.ascontiguousarray(fp)
        scratch_len = max(2 * b + 4, 64)
        if family_id == FAM_MEDIAN and len(family_params):
            scratch_len = max(scratch_len, 2 * <int> family_params[0] + 3)
        self._scratch_arr = np.zeros(scratch_len, dtype=np.float64)
        self.scratch = <double *> cnp.PyArray_DATA(self._scratch_arr)
        self._stack_arr = np.zeros((256, 3), dtype=np.int64)
        self._stack = self._stack_arr
        self._ball_node_arr = np.zeros(0, dtype=np.int64)
        self._ball_node = self._ball_node_arr
        self._alloc(16)

    cdef void _alloc(self, Py_ssize_t cap):
        self.cap = cap
        self._arrays = {
            "first_child": np.full(cap, -1, dtype=np.int64),
            "parent": np.full(cap, -1, dtype=np.int64),
            "depth": np.zeros(cap, dtype=np.int32),
            "ball_count": np.zeros(cap, dtype=np.int64),
            "subtree_count": np.zeros(cap, dtype=np.int64),
            "cdf": np.zeros((cap, self.b), dtype=np.float64),
            "slots": np.zeros((cap, max(self.s, 1)), dtype=np.int64),
        }
        self.first_child = self._arrays["first_child"]
        self.parent = self._arrays["parent"]
        self.depth = self._arrays["depth"]
        self.ball_count = self._arrays["ball_count"]
        self.subtree_count = self._arrays["subtree_count"]
        self.cdf = self._arrays["cdf"]
        self.slots = self._arrays["slots"]

    cdef void _grow(self):
        cdef dict old = self._arrays
        cdef Py_ssize_t oldcap = self.cap
        self._alloc(self.cap * 2)
        self._arrays["first_child"][:oldcap] = old["first_child"]
        self._arrays["parent"][:oldcap] = old["parent"]
        self._arrays["depth"][:oldcap] = old["depth"]
        self._arrays["ball_count"][:oldcap] = old["ball_count"]
        self._arrays["subtree_count"][:oldcap] = old["subtree_count"]
        self._arrays["cdf"][:oldcap] = old["cdf"]
        self._arrays["slots"][:oldcap] = old["slots"]
        self.first_child = self._arrays["first_child"]
        self.parent = self._arrays["parent"]
        self.depth = self._arrays["depth"]
        self.ball_count = self._arrays["ball_count"]
        self.subtree_count = self._arrays["subtree_count"]
        self.cdf = self._arrays["cdf"]
        self.slots = self._arrays["slots"]

    cdef Py_ssize_t _new_node(self, int64_t parent, int32_t depth):
        if self.n_nodes >= self.cap:
            self._grow()
        cdef Py_ssize_t i = self.n_nodes
        cdef int k
        self.n_nodes += 1
        self.first_child[i] = -1
        self.parent[i] = parent
        self.depth[i] = depth
        self.ball_count[i] = 0
        self.subtree_count[i] = 0
        for k in range(self.b):
            self.cdf[i, k] = 0.0  # arena reuse: leaf rows must read as unsplit
        return i

    # -- split vector protocol (mirror of _pycore._raw_vector etc.) ---------

    cdef void _raw_vector(self, bitgen_t *bg, double *vec):
        cdef int b = self.b
        cdef int i, k, m
        cdef double u, tot, g1, g2, mval
        cdef double *tmp = self.scratch + b  # second half of scratch
        if self.family_id == FAM_BST:
            u = _next_u(bg)
            vec[0] = u
            vec[1] = 1.0 - u
        elif self.family_id == FAM_BARY:
            for i in range(b - 1):
                tmp[i] = _next_u(bg)
            _insertion_sort(tmp, b - 1)
            vec[0] = tmp[0]
            for i in range(1, b - 1):
                vec[i] = tmp[i] - tmp[i - 1]
            vec[b - 1] = 1.0 - tmp[b - 2]
        elif self.family_id == FAM_MEDIAN:
            k = <int> self.fparams[0]
            m = 2 * k + 1
            for i in range(m):
                tmp[i] = _next_u(bg)
            _insertion_sort(tmp, m)
            mval = tmp[k]
            vec[0] = mval
            vec[1] = 1.0 - mval
        elif self.family_id == FAM_DIRICHLET:
            tot = 0.0
            for i in range(b):
                tmp[i] = _gamma_draw(bg, self.fparams[i])
                tot += tmp[i]
            for i in range(b):
                vec[i] = tmp[i] / tot
        else:  # FAM_BETA_BINARY
            g1 = _gamma_draw(bg, self.fparams[0])
            g2 = _gamma_draw(bg, self.fparams[1])
            vec[0] = g1 / (g1 + g2)
            vec[1] = 1.0 - vec[0]

    cdef void _store_split(self, bitgen_t *bg, Py_ssize_t node):
        cdef double *vec = self.scratch
        cdef int i
        cdef Py_ssize_t j
        cdef double swap, c
        self._raw_vector(bg, vec)
        for i in range(self.b - 1, 0, -1):
            j = <Py_ssize_t> (_next_u(bg) * (i + 1))
            swap = vec[i]
            vec[i] = vec[j]
            vec[j] = swap
        c = 0.0
        for i in range(self.b):
            c += vec[i]
            self.cdf[node, i] = c
        self.cdf[node, self.b - 1] = 1.0

    cdef int _route(self, bitgen_t *bg, Py_ssize_t node):
        cdef double u = _next_u(bg)
        cdef int i
        for i in range(self.b - 1):
            if u < self.cdf[node, i]:
                return i
        return self.b - 1

    # -- insertion -----------------------------------------------------------

    cdef void _push(self, Py_ssize_t top, int64_t kind, int64_t node, int64_t ball):
        if top >= self._stack.shape[0]:
            bigger = np.zeros((self._stack.shape[0] * 2, 3), dtype=np.int64)
            bigger[: self._stack.shape[0]] = self._stack_arr
            self._stack_arr = bigger
            self._stack = self._stack_arr
        self._stack[top, 0] = kind
        self._stack[top, 1] = node
        self._stack[top, 2] = ball

    cdef void _place(self, Py_ssize_t u, int64_t ball):
        cdef int64_t c = self.ball_count[u]
        self.slots[u, c] = ball
        self.ball_count[u] = c + 1
        self.subtree_count[u] += 1
        self._ball_node[ball] = u

    cdef void _insert(self, bitgen_t *bg, int64_t ball):
        cdef Py_ssize_t top = 0
        cdef Py_ssize_t u
        cdef int64_t kind, cur, fc
        self._push(0, 0, 0, ball)
        top = 1
        while top > 0:
            top -= 1
            kind = self._stack[top, 0]
            u = <Py_ssize_t> self._stack[top, 1]
            cur = self._stack[top, 2]
            if kind == 1:
                u = <Py_ssize_t> self.first_child[u] + self._route(bg, u)
            while True:
                fc = self.first_child[u]
                if fc >= 0:
                    self.subtree_count[u] += 1
                    u = <Py_ssize_t> fc + self._route(bg, u)
                    continue
                if self.ball_count[u] < self.s:
                    self._place(u, cur)
                    break
                top = self._overflow(bg, u, cur, top)
                break

    cdef Py_ssize_t _overflow(self, bitgen_t *bg, Py_ssize_t u, int64_t incoming, Py_ssize_t top):
        cdef int b = self.b, s = self.s, s0 = self.s0, s1 = self.s1
        cdef int64_t ids[4096]
        cdef int i, c, idx
        cdef Py_ssize_t j, fc, child
        cdef int64_t swap
        # s is small by construction; guard the fixed buffer anyway
        if s + 1 > 4096:
            raise ValueError("capacity s too large for the compiled kernel")
        for i in range(s):
            ids[i] = self.slots[u, i]
        ids[s] = incoming
        self.subtree_count[u] = s + 1
        self._store_split(bg, u)
        fc = self._new_node(u, self.depth[u] + 1)
        for i in range(b - 1):
            self._new_node(u, self.depth[u] + 1)
        self.first_child[u] = fc
        for i in range(s, 0, -1):
            j = <Py_ssize_t> (_next_u(bg) * (i + 1))
            swap = ids[i]
            ids[i] = ids[j]
            ids[j] = swap
        self.ball_count[u] = s0
        for i in range(s0):
            self.slots[u, i] = ids[i]
            self._ball_node[ids[i]] = u
        idx = s0
        for c in range(b):
            child = fc + c
            for i in range(s1):
                self._place(child, ids[idx])
                idx += 1
        for i in range(s, idx - 1, -1):
            self._push(top, 1, u, ids[i])
            top += 1
        return top

    cdef void _build_internal(self, object bit_generator, Py_ssize_t n):
        cdef bitgen_t *bg = _get_bitgen(bit_generator)
        cdef Py_ssize_t want = max(16, 4 * (n // max(self.s, 1) + 2))
        if self.cap < want:
            self._alloc(want)
        else:
            self._arrays["first_child"][: self.n_nodes] = -1
            self._arrays["parent"][: self.n_nodes] = -1
            self._arrays["ball_count"][: self.n_nodes] = 0
            self._arrays["subtree_count"][: self.n_nodes] = 0
            self._arrays["depth"][: self.n_nodes] = 0
        self.n_nodes = 0
        if <Py_ssize_t> self._ball_node.shape[0] < n:
            self._ball_node_arr = np.full(max(n, 16), -1, dtype=np.int64)
            self._ball_node = self._ball_node_arr
        cdef int64_t ball
        self._new_node(-1, 0)
        for ball in range(n):
            self._insert(bg, ball)

    def build(self, bit_generator, n):
        """Arena dict; see _pycore.TreeKernel.build."""
        self._build_internal(bit_generator, n)
        m = self.n_nodes
        return {
            "n": int(n),
            "b": self.b,
            "n_nodes": int(m),
            "first_child": self._arrays["first_child"][:m].copy(),
            "parent": self._arrays["parent"][:m].copy(),
            "depth": self._arrays["depth"][:m].copy(),
            "ball_count": self._arrays["ball_count"][:m].copy(),
            "subtree_count": self._arrays["subtree_count"][:m].copy(),
            "cdf": self._arrays["cdf"][:m].copy(),
            "ball_node": np.asarray(self._ball_node_arr[: int(n)]).copy(),
        }

    def stats(self, bit_generator, n):
        """(path_length, wiener, root child subtree sizes or None) without
        materializing python-side arenas; int64 internally (documented guard:
        n <= 10^7 keeps the Wiener total far below 2^63)."""
        if n > 10_000_000:
            raise ValueError("stats kernel accepts n <= 1e7")
        self._build_internal(bit_generator, n)
        cdef Py_ssize_t m = self.n_nodes
        cdef int64_t[::1] path_in = np.zeros(m, dtype=np.int64)
        cdef int64_t[::1] wien_in = np.zeros(m, dtype=np.int64)
        cdef Py_ssize_t u
        cdef int64_t p, nu_p, nu_u
        for u in range(m - 1, 0, -1):
            p = self.parent[u]
            nu_p = self.subtree_count[p]
            nu_u = self.subtree_count[u]
            path_in[p] += path_in[u] + nu_u
            wien_in[p] += wien_in[u] + (nu_p - nu_u) * (path_in[u] + nu_u)
        sizes = None
        cdef Py_ssize_t fc
        if self.first_child[0] >= 0:
            fc = <Py_ssize_t> self.first_child[0]
            sizes = self._arrays["subtree_count"][fc : fc + self.b].copy()
        return (int(path_in[0]) if m else 0), (int(wien_in[0]) if m else 0), sizes


def tree_totals(arena):
    """C-speed equivalent of _pycore.tree_totals."""
    cdef int64_t[::1] parent = arena["parent"]
    cdef int64_t[::1] sub = arena["subtree_count"]
    cdef Py_ssize_t m = arena["n_nodes"]
    if m == 0:
        return 0, 0
    cdef int64_t[::1] path_in = np.zeros(m, dtype=np.int64)
    cdef int64_t[::1] wien_in = np.zeros(m, dtype=np.int64)
    cdef Py_ssize_t u
    cdef int64_t p, nu_p, nu_u
    for u in range(m - 1, 0, -1):
        p = parent[u]
        nu_p = sub[p]
        nu_u = sub[u]
        path_in[p] += path_in[u] + nu_u
        wien_in[p] += wien_in[u] + (nu_p - nu_u) * (path_in[u] + nu_u)
    return int(path_in[0]), int(wien_in[0])


def wiener_brute_arrays(first_child_in, parent_in, depth_in, ball_count_in, b):
    """Brute-force Wiener index via Euler-tour sparse-table LCA."""
    cdef int64_t[::1] first_child = np.ascontiguousarray(first_child_in, dtype=np.int64)
    cdef int32_t[::1] depth = np.ascontiguousarray(depth_in, dtype=np.int32)
    cdef int64_t[::1] ball_count = np.ascontiguousarray(ball_count_in, dtype=np.int64)
    cdef Py_ssize_t m = first_child.shape[0]
    cdef int bb = b
    if m == 1:
        return 0

    cdef int64_t[::1] tour_depth = np.empty(2 * m - 1, dtype=np.int64)
    cdef int64_t[::1] first_occ = np.empty(m, dtype=np.int64)
    cdef int64_t[::1] child_iter = np.zeros(m, dtype=np.int64)
    cdef cnp.uint8_t[::1] seen = np.zeros(m, dtype=np.uint8)
    cdef int64_t[::1] stack = np.zeros(2 * m + 2, dtype=np.int64)
    cdef Py_ssize_t pos = 0, topp = 0
    cdef Py_ssize_t u
    cdef int64_t ci
    stack[0] = 0
    topp = 1
    while topp > 0:
        u = <Py_ssize_t> stack[topp - 1]
        if not seen[u]:
            seen[u] = 1
            first_occ[u] = pos
        tour_depth[pos] = depth[u]
        pos += 1
        ci = child_iter[u]
        if first_child[u] >= 0 and ci < bb:
            child_iter[u] += 1
            stack[topp] = first_child[u] + ci
            topp += 1
        else:
            topp -= 1

    cdef Py_ssize_t L = pos
    cdef int levels = 1
    while (1 << levels) <= L:
        levels += 1
    cdef int64_t[:, ::1] table = np.zeros((levels, L), dtype=np.int64)
    cdef Py_ssize_t i
    for i in range(L):
        table[0, i] = tour_depth[i]
    cdef int k
    cdef Py_ssize_t half, limit
    for k in range(1, levels):
        half = 1 << (k - 1)
        limit = L - (1 << k) + 1
        for i in range(limit):
            if table[k - 1, i] < table[k - 1, i + half]:
                table[k, i] = table[k - 1, i]
            else:
                table[k, i] = table[k - 1, i + half]
    cdef int64_t[::1] logs = np.zeros(L + 1, dtype=np.int64)
    for i in range(2, L + 1):
        logs[i] = logs[i >> 1] + 1

    occ_arr = np.flatnonzero(np.asarray(ball_count) > 0)
    cdef int64_t[::1] occ = np.ascontiguousarray(occ_arr, dtype=np.int64)
    cdef Py_ssize_t nocc = occ.shape[0]
    if nocc < 2:
        return 0
    cdef int64_t total = 0
    cdef Py_ssize_t a_, b_
    cdef int64_t lo, hi, kk, lca_d, da, db, dist
    cdef Py_ssize_t ua, ub
    for a_ in range(nocc - 1):
        ua = <Py_ssize_t> occ[a_]
        da = depth[ua]
        for b_ in range(a_ + 1, nocc):
            ub = <Py_ssize_t> occ[b_]
            lo = first_occ[ua]
            hi = first_occ[ub]
            if hi < lo:
                lo, hi = hi, lo
            kk = logs[hi - lo + 1]
            lca_d = table[kk, lo]
            if table[kk, hi - (1 << kk) + 1] < lca_d:
                lca_d = table[kk, hi - (1 << kk) + 1]
            db = depth[ub]
            dist = da + db - 2 * lca_d
            total += ball_count[ua] * ball_count[ub] * dist
    return int(total)
