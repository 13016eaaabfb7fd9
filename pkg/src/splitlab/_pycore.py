"""Pure-Python reference backend for the hot kernels.

This module defines the semantics; the compiled backend (_core) mirrors it
operation for operation. Both consume raw uniform doubles from the same bit
generator through one fixed protocol (documented inline), so a given seed
produces bit-identical trees on either backend. Keep the float expression
order in sync with _core.pyx when editing.

Kernel surface:
    TreeKernel(b, s, s0, s1, family_id, family_params)
        .build(bit_generator, n)  -> arena dict
        .stats(bit_generator, n)  -> (path_length, wiener, root_child_sizes)
    wiener_brute_arrays(first_child, depth, ball_count, b) -> int
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "python"

# family ids; keep aligned with splitters.kernel_code and _core.pyx
FAM_BST = 0
FAM_BARY = 1
FAM_MEDIAN = 2
FAM_DIRICHLET = 3
FAM_BETA_BINARY = 4


class _UniformStream:
    """Scalar uniform source; one next_double per call, same stream as the C path."""

    def __init__(self, bit_generator):
        self._gen = np.random.Generator(bit_generator)

    def next(self) -> float:
        return self._gen.random()


def _gamma_draw(stream: _UniformStream, a: float) -> float:
    # Marsaglia-Tsang driven by uniforms only (polar normals); boosts a < 1
    if a < 1.0:
        x = _gamma_draw(stream, a + 1.0)
        u = stream.next()
        return x * u ** (1.0 / a)
    d = a - 1.0 / 3.0
    c = 1.0 / (3.0 * math.sqrt(d))
    while True:
        while True:
            v1 = 2.0 * stream.next() - 1.0
            v2 = 2.0 * stream.next() - 1.0
            ss = v1 * v1 + v2 * v2
            if 0.0 < ss < 1.0:
                break
        z = v1 * math.sqrt(-2.0 * math.log(ss) / ss)
        v = 1.0 + c * z
        if v <= 0.0:
            continue
        v = v * v * v
        u = stream.next()
        zz = z * z
        if u < 1.0 - 0.0331 * zz * zz:
            return d * v
        if math.log(u) < 0.5 * zz + d * (1.0 - v + math.log(v)):
            return d * v


def _insertion_sort(a: list) -> None:
    for i in range(1, len(a)):
        key = a[i]
        j = i - 1
        while j >= 0 and a[j] > key:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = key


class TreeKernel:
    """Ball-insertion split-tree builder.

    The construction is the textbook procedure: each ball descends by the
    stored split vectors; a full leaf (s balls) receiving one more splits,
    keeps s0 uniformly chosen balls, hands s1 to each fresh child, and routes
    the remaining s+1-s0-b*s1 one by one through its own split vector.
    """

    def __init__(self, b: int, s: int, s0: int, s1: int, family_id: int, family_params):
        self.b = int(b)
        self.s = int(s)
        self.s0 = int(s0)
        self.s1 = int(s1)
        self.family_id = int(family_id)
        self.family_params = [float(x) for x in family_params]
        self._reset(16)

    # -- storage -----------------------------------------------------------

    def _reset(self, cap: int) -> None:
        self._cap = cap
        self.first_child = np.full(cap, -1, dtype=np.int64)
        self.parent = np.full(cap, -1, dtype=np.int64)
        self.depth = np.zeros(cap, dtype=np.int32)
        self.ball_count = np.zeros(cap, dtype=np.int64)  # C(u)
        self.subtree_count = np.zeros(cap, dtype=np.int64)  # N(u)
        self.cdf = np.zeros((cap, self.b), dtype=np.float64)
        self.slots = np.zeros((cap, max(self.s, 1)), dtype=np.int64)
        self.n_nodes = 0

    def _grow(self) -> None:
        cap = self._cap * 2
        for name in ("first_child", "parent", "depth", "ball_count", "subtree_count"):
            old = getattr(self, name)
            new = np.full(cap, -1, dtype=old.dtype) if name in ("first_child", "parent") else np.zeros(cap, dtype=old.dtype)
            new[: self._cap] = old
            setattr(self, name, new)
        new_cdf = np.zeros((cap, self.b), dtype=np.float64)
        new_cdf[: self._cap] = self.cdf
        self.cdf = new_cdf
        new_slots = np.zeros((cap, self.slots.shape[1]), dtype=np.int64)
        new_slots[: self._cap] = self.slots
        self.slots = new_slots
        self._cap = cap

    def _new_node(self, parent: int, depth: int) -> int:
        if self.n_nodes >= self._cap:
            self._grow()
        i = self.n_nodes
        self.n_nodes += 1
        self.first_child[i] = -1
        self.parent[i] = parent
        self.depth[i] = depth
        self.ball_count[i] = 0
        self.subtree_count[i] = 0
        return i

    # -- split vector protocol ----------------------------------------------

    def _raw_vector(self, stream: _UniformStream) -> list:
        fid, b = self.family_id, self.b
        if fid == FAM_BST:
            u = stream.next()
            return [u, 1.0 - u]
        if fid == FAM_BARY:
            tmp = [stream.next() for _ in range(b - 1)]
            _insertion_sort(tmp)
            vec = [0.0] * b
            vec[0] = tmp[0]
            for i in range(1, b - 1):
                vec[i] = tmp[i] - tmp[i - 1]
            vec[b - 1] = 1.0 - tmp[b - 2]
            return vec
        if fid == FAM_MEDIAN:
            k = int(self.family_params[0])
            tmp = [stream.next() for _ in range(2 * k + 1)]
            _insertion_sort(tmp)
            m = tmp[k]
            return [m, 1.0 - m]
        if fid == FAM_DIRICHLET:
            g = [_gamma_draw(stream, a) for a in self.family_params]
            tot = 0.0
            for x in g:
                tot += x
            return [x / tot for x in g]
        if fid == FAM_BETA_BINARY:
            g1 = _gamma_draw(stream, self.family_params[0])
            g2 = _gamma_draw(stream, self.family_params[1])
            v = g1 / (g1 + g2)
            return [v, 1.0 - v]
        raise ValueError(f"bad family id {self.family_id}")

    def _store_split(self, stream: _UniformStream, node: int) -> None:
        vec = self._raw_vector(stream)
        # exchangeability permutation, Fisher-Yates descending
        for i in range(self.b - 1, 0, -1):
            j = int(stream.next() * (i + 1))
            vec[i], vec[j] = vec[j], vec[i]
        c = 0.0
        for i in range(self.b):
            c += vec[i]
            self.cdf[node, i] = c
        self.cdf[node, self.b - 1] = 1.0  # kill roundoff residue; routing needs u < 1

    def _route(self, stream: _UniformStream, node: int) -> int:
        u = stream.next()
        row = self.cdf[node]
        for i in range(self.b - 1):
            if u < row[i]:
                return i
        return self.b - 1

    # -- insertion ----------------------------------------------------------

    def build(self, bit_generator, n: int):
        stream = _UniformStream(bit_generator)
        self._reset(max(16, 4 * (n // max(self.s, 1) + 2)))
        ball_node = np.full(n, -1, dtype=np.int64)
        root = self._new_node(-1, 0)
        for ball in range(n):
            self._insert(stream, root, ball, ball_node)
        m = self.n_nodes
        return {
            "n": n,
            "b": self.b,
            "n_nodes": m,
            "first_child": self.first_child[:m].copy(),
            "parent": self.parent[:m].copy(),
            "depth": self.depth[:m].copy(),
            "ball_count": self.ball_count[:m].copy(),
            "subtree_count": self.subtree_count[:m].copy(),
            "cdf": self.cdf[:m].copy(),
            "ball_node": ball_node,
        }

    def _insert(self, stream, start: int, ball: int, ball_node) -> None:
        # ("insert", node, ball): run the procedure at node
        # ("reroute", node, ball): pick a child at node without touching N(node),
        #   then run the procedure there (redistribution after an overflow)
        stack = [(0, start, ball)]
        while stack:
            kind, u, cur = stack.pop()
            if kind == 1:
                u = int(self.first_child[u]) + self._route(stream, u)
            while True:
                fc = self.first_child[u]
                if fc >= 0:
                    self.subtree_count[u] += 1
                    u = int(fc) + self._route(stream, u)
                    continue
                if self.ball_count[u] < self.s:
                    self._place(u, cur, ball_node)
                    break
                self._overflow(stream, u, cur, ball_node, stack)
                break

    def _place(self, u: int, ball: int, ball_node) -> None:
        c = self.ball_count[u]
        self.slots[u, c] = ball
        self.ball_count[u] = c + 1
        self.subtree_count[u] += 1
        ball_node[ball] = u

    def _overflow(self, stream, u: int, incoming: int, ball_node, stack) -> None:
        b, s, s0, s1 = self.b, self.s, self.s0, self.s1
        ids = [int(self.slots[u, i]) for i in range(s)] + [incoming]
        self.subtree_count[u] = s + 1
        self._store_split(stream, u)
        fc = self._new_node(u, int(self.depth[u]) + 1)
        for _ in range(b - 1):
            self._new_node(u, int(self.depth[u]) + 1)
        self.first_child[u] = fc
        # uniform selection of stayers and child seeds: one Fisher-Yates shuffle
        for i in range(s, 0, -1):
            j = int(stream.next() * (i + 1))
            ids[i], ids[j] = ids[j], ids[i]
        self.ball_count[u] = s0
        for i in range(s0):
            self.slots[u, i] = ids[i]
            ball_node[ids[i]] = u
        idx = s0
        for c in range(b):
            child = fc + c
            for _ in range(s1):
                self._place(child, ids[idx], ball_node)
                idx += 1
        # remaining balls re-enter one by one, routed by this node's split vector
        for ball2 in reversed(ids[idx:]):
            stack.append((1, u, ball2))

    # -- fast per-tree statistics -------------------------------------------

    def stats(self, bit_generator, n: int):
        """(path_length, wiener, root child subtree sizes or None)."""
        arena = self.build(bit_generator, n)
        path, wien = tree_totals(arena)
        if arena["first_child"][0] >= 0:
            fc = int(arena["first_child"][0])
            sizes = arena["subtree_count"][fc : fc + self.b].copy()
        else:
            sizes = None
        return path, wien, sizes


def tree_totals(arena) -> tuple[int, int]:
    """Total ball depth and Wiener index from an arena, one bottom-up pass.

    Children are created after their parent, so a reverse sweep sees every
    subtree before its root. Python ints throughout: exact at any size.
    """
    parent = arena["parent"]
    sub = arena["subtree_count"]
    m = arena["n_nodes"]
    if m == 0:
        return 0, 0
    path_in = [0] * m
    wien_in = [0] * m
    for u in range(m - 1, 0, -1):
        p = int(parent[u])
        nu_p = int(sub[p])
        nu_u = int(sub[u])
        # balls of this subtree sit one level below p; crossing pairs pick up
        # (N_p - N_u) * (depth mass of the subtree seen from p)
        path_in[p] += path_in[u] + nu_u
        wien_in[p] += wien_in[u] + (nu_p - nu_u) * (path_in[u] + nu_u)
    return path_in[0], wien_in[0]


def wiener_brute_arrays(first_child, parent, depth, ball_count, b: int) -> int:
    """Wiener index by brute-force pair summation over occupied nodes.

    Pair distances come from lowest-common-ancestor depths (Euler tour plus a
    sparse min table), fully independent of the subtree recursion above.
    """
    m = len(first_child)
    if m == 1:
        return 0
    # Euler tour: node visited once per incident edge traversal
    tour_depth = np.empty(2 * m - 1, dtype=np.int64)
    first_occ = np.empty(m, dtype=np.int64)
    seen = np.zeros(m, dtype=bool)
    pos = 0
    stack = [0]
    child_iter = np.zeros(m, dtype=np.int64)
    while stack:
        u = stack[-1]
        if not seen[u]:
            seen[u] = True
            first_occ[u] = pos
        tour_depth[pos] = depth[u]
        pos += 1
        ci = child_iter[u]
        if first_child[u] >= 0 and ci < b:
            child_iter[u] += 1
            stack.append(int(first_child[u]) + int(ci))
        else:
            stack.pop()
    L = pos
    tour_depth = tour_depth[:L]
    # sparse min table over the tour; RMQ(l, r) = LCA depth
    table = [tour_depth]
    k = 1
    while (1 << k) <= L:
        prev = table[-1]
        half = 1 << (k - 1)
        table.append(np.minimum(prev[: L - (1 << k) + 1], prev[half : L - half + 1]))
        k += 1
    logs = np.zeros(L + 1, dtype=np.int64)
    for i in range(2, L + 1):
        logs[i] = logs[i >> 1] + 1

    occ = np.flatnonzero(ball_count > 0)
    if len(occ) < 2:
        return 0
    fo = first_occ[occ]
    dp = depth[occ].astype(np.int64)
    w = ball_count[occ].astype(np.int64)
    total = 0
    for i in range(len(occ) - 1):
        lo = np.minimum(fo[i], fo[i + 1 :])
        hi = np.maximum(fo[i], fo[i + 1 :])
        kk = logs[hi - lo + 1]
        lca_d = np.minimum(
            _gather(table, kk, lo),
            _gather(table, kk, hi - (np.left_shift(np.int64(1), kk)) + 1),
        )
        dist = dp[i] + dp[i + 1 :] - 2 * lca_d
        total += int(np.dot(w[i] * w[i + 1 :], dist))
    return total


def _gather(table, kk, idx):
    out = np.empty(len(idx), dtype=np.int64)
    for k in np.unique(kk):
        mask = kk == k
        out[mask] = table[int(k)][idx[mask]]
    return out
