"""Random split trees: construction by ball insertion and per-tree statistics.

A tree is grown by inserting balls 1..n at the root. Each internal node holds
a split probability vector over its b children; a ball descends until it finds
a leaf with spare capacity. A full leaf (s balls) receiving one more splits:
it keeps s0 of the s+1 balls (uniformly chosen), seeds each new child with s1
of them, and routes the rest one by one through its own split vector. Split
vectors are sampled lazily, at the moment a node first splits.

Statistics: total ball depth (path length), the sum of pairwise ball
distances (Wiener index), and the ball counts of the root's child subtrees.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _backend
from ._rng import bit_generator, generator
from .errors import ConfigInvalid, RootNotSplit, TooLarge
from .splitters import SplitterSpec, kernel_code

# brute-force pair summation cost guard
_BRUTE_MAX_N = 5000


@dataclass(frozen=True)
class SplitTreeParams:
    """Model parameters (b, s, s0, s1).

    b children per split, s balls of leaf capacity, s0 balls retained by a
    splitting node, s1 balls seeded into each fresh child.
    """

    b: int
    s: int
    s0: int
    s1: int

    def __post_init__(self):
        for name in ("b", "s", "s0", "s1"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise ConfigInvalid(f"{name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.b < 2:
            raise ConfigInvalid(f"branching factor must satisfy b >= 2, got b={self.b}")
        if self.s < 1:
            raise ConfigInvalid(f"capacity must satisfy s > 0, got s={self.s}")
        if not 0 <= self.s0 <= self.s:
            raise ConfigInvalid(
                f"parameter constraint violated: 0 <= s_0 <= s (got s_0={self.s0}, s={self.s})"
            )
        if not 0 <= self.b * self.s1 <= self.s + 1 - self.s0:
            raise ConfigInvalid(
                "parameter constraint violated: 0 <= b*s_1 <= s+1-s_0 "
                f"(got b={self.b}, s_1={self.s1}, s={self.s}, s_0={self.s0})"
            )

    def eta(self, n: int) -> int:
        """Number of balls a splitting node routes by its split vector."""
        return n - self.s0 - self.b * self.s1


@lru_cache(maxsize=64)
def _kernel(params: SplitTreeParams, spec: SplitterSpec):
    if spec.b != params.b:
        raise ConfigInvalid(
            f"splitter branching factor b={spec.b} does not match tree parameter b={params.b}"
        )
    fid, fparams = kernel_code(spec)
    return _backend.TreeKernel(params.b, params.s, params.s0, params.s1, fid, fparams)


class SplitTree:
    """A realized split tree: node arena plus ball placements."""

    def __init__(self, params: SplitTreeParams, spec: SplitterSpec, arena: dict):
        self.params = params
        self.spec = spec
        self.arena = arena
        self._totals = None

    @property
    def n(self) -> int:
        return self.arena["n"]

    @property
    def n_nodes(self) -> int:
        return self.arena["n_nodes"]

    @property
    def ball_depths(self) -> np.ndarray:
        """Depth of the node holding each ball, in insertion order."""
        if self.n == 0:
            return np.zeros(0, dtype=np.int64)
        return self.arena["depth"][self.arena["ball_node"]].astype(np.int64)

    def root_split_vector(self) -> np.ndarray:
        """The split probabilities stored at the root once it has split."""
        if self.arena["first_child"][0] < 0:
            raise RootNotSplit(f"root has not split (n={self.n} <= s={self.params.s})")
        row = self.arena["cdf"][0]
        return np.diff(row, prepend=0.0)

    def _ensure_totals(self):
        if self._totals is None:
            self._totals = _backend.tree_totals(self.arena)
        return self._totals


def build_tree(
    params: SplitTreeParams, spec: SplitterSpec, n: int, rng: np.random.Generator
) -> SplitTree:
    """Grow a tree with n balls, consuming randomness from rng."""
    if n < 0:
        raise ConfigInvalid(f"ball count must be nonnegative, got n={n}")
    arena = _kernel(params, spec).build(rng.bit_generator, int(n))
    return SplitTree(params, spec, arena)


def path_length(tree: SplitTree) -> int:
    """Total depth of all balls."""
    return tree._ensure_totals()[0]


def wiener_index(tree: SplitTree) -> int:
    """Sum of pairwise ball distances, one bottom-up pass.

    Each subtree contributes its internal pair distances plus, for every pair
    crossing its boundary, the edges inside it. Balls sharing a node are at
    distance 0. Exact integer arithmetic at any size.
    """
    return tree._ensure_totals()[1]


def wiener_bruteforce(tree: SplitTree) -> int:
    """Independent Wiener computation: explicit pair summation over occupied
    nodes with lowest-common-ancestor depths from an Euler tour."""
    if tree.n > _BRUTE_MAX_N:
        raise TooLarge(
            f"brute-force pair summation capped at n <= {_BRUTE_MAX_N}, got n={tree.n}"
        )
    a = tree.arena
    return _backend.wiener_brute_arrays(
        a["first_child"], a["parent"], a["depth"], a["ball_count"], tree.params.b
    )


def root_subtree_sizes(tree: SplitTree) -> np.ndarray:
    """Ball counts of the root's child subtrees, in child order."""
    a = tree.arena
    if a["first_child"][0] < 0:
        raise RootNotSplit(f"root has not split (n={tree.n} <= s={tree.params.s})")
    fc = int(a["first_child"][0])
    return a["subtree_count"][fc : fc + tree.params.b].copy()


def tree_stats(
    params: SplitTreeParams, spec: SplitterSpec, n: int, rng: np.random.Generator
) -> tuple[int, int, np.ndarray | None]:
    """(path_length, wiener, root subtree sizes or None) without keeping the tree."""
    return _kernel(params, spec).stats(rng.bit_generator, int(n))


def simulate_stats(
    params: SplitTreeParams,
    spec: SplitterSpec,
    n: int,
    reps: int,
    master_seed: int,
    purpose: str = "simulate",
    rep_offset: int = 0,
) -> dict:
    """Monte Carlo ensemble of (P, W) over independent replicate streams.

    Replicate i draws from a stream keyed by (master_seed, purpose, i), so
    enlarging reps extends the ensemble without perturbing earlier draws.
    """
    kern = _kernel(params, spec)
    paths = np.empty(reps, dtype=np.int64)
    wieners = np.empty(reps, dtype=np.int64)
    for i in range(reps):
        bg = bit_generator(master_seed, purpose, rep_offset + i)
        p, w, _ = kern.stats(bg, int(n))
        paths[i] = p
        wieners[i] = w
    return {"n": int(n), "reps": int(reps), "path": paths, "wiener": wieners}


def simulate_root_sizes(
    params: SplitTreeParams,
    spec: SplitterSpec,
    n: int,
    reps: int,
    master_seed: int,
    purpose: str = "simulate",
) -> np.ndarray:
    """First root-subtree ball count over independent replicates."""
    kern = _kernel(params, spec)
    out = np.empty(reps, dtype=np.int64)
    for i in range(reps):
        bg = bit_generator(master_seed, purpose, i)
        _, _, sizes = kern.stats(bg, int(n))
        if sizes is None:
            raise RootNotSplit(f"root has not split (n={n} <= s={params.s})")
        out[i] = sizes[0]
    return out


def tree_to_records(tree: SplitTree) -> list[dict]:
    """Per-node records (id, parent, ball count, subtree count, depth) for dumps."""
    a = tree.arena
    m = a["n_nodes"]
    return [
        {
            "id": u,
            "parent": int(a["parent"][u]),
            "balls": int(a["ball_count"][u]),
            "subtree_balls": int(a["subtree_count"][u]),
            "depth": int(a["depth"][u]),
        }
        for u in range(m)
    ]


def default_params(spec: SplitterSpec) -> SplitTreeParams:
    """Reference (b, s, s0, s1) used by the command line for each family."""
    k = int(spec.params[0]) if spec.family == "median_of" else 1
    table = {
        "binary_search_tree": (2, 1, 1, 0),
        "median_of": (2, 2 * k + 1, 1, k),
        "bary_search_tree": (spec.b, 2, 2, 0),
        "dirichlet": (spec.b, 4, 2, 0),
        "beta_binary": (2, 3, 1, 1),
    }
    b, s, s0, s1 = table[spec.family]
    return SplitTreeParams(b=b, s=s, s0=s0, s1=s1)


__all__ = [
    "SplitTree",
    "SplitTreeParams",
    "build_tree",
    "default_params",
    "path_length",
    "root_subtree_sizes",
    "simulate_root_sizes",
    "simulate_stats",
    "tree_stats",
    "tree_to_records",
    "wiener_bruteforce",
    "wiener_index",
]
