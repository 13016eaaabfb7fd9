"""Split-vector families and their marginal laws.

A splitter is the law of a random probability vector V = (V_1, ..., V_b) used to
route balls to children. Every built-in family is continuous with identical
coordinate marginals (enforced by a uniformly random permutation of the raw
vector), and each marginal is a finite mixture of Beta laws. That structure is
what the rest of the package leans on: moments come from a density-weighted
quadrature rule, subtree-size rows from exact Beta-binomial mixtures.

Built-in families
-----------------
binary_search_tree       b = 2, V = (U, 1-U), U uniform; marginal Beta(1, 1)
bary_search_tree(b)      spacings of b-1 iid uniforms; marginal Beta(1, b-1)
median_of(k)             b = 2, V_1 the median of 2k+1 uniforms; Beta(k+1, k+1)
dirichlet(alpha)         b = len(alpha); marginal mixture of Beta(a_i, A - a_i)
beta_binary(a, c)        b = 2, V_1 ~ Beta(a, c); marginal (Beta(a,c)+Beta(c,a))/2

Lattice splitters (point masses, e.g. tries) have no density and are not
representable; asking for one raises UnsupportedSplitter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import betainc, betaln, roots_jacobi

from .errors import ConfigInvalid, QuadratureNotConverged, UnsupportedSplitter
from ._rng import generator as _derived_generator

FAMILIES = (
    "binary_search_tree",
    "bary_search_tree",
    "median_of",
    "dirichlet",
    "beta_binary",
)

# names people try that denote lattice-type splitters; rejected explicitly
_LATTICE_NAMES = ("trie", "lattice", "digital", "radix", "patricia", "bernoulli")

_KERNEL_CODES = {name: i for i, name in enumerate(FAMILIES)}


@dataclass(frozen=True)
class SplitterSpec:
    """Immutable description of a split-vector law.

    family           one of FAMILIES
    b                branching factor, >= 2
    params           family shape parameters (empty, (k,), alpha tuple, or (a, c))
    quadrature_nodes per-panel Gauss order for moment integrals, >= 4
    """

    family: str
    b: int
    params: tuple = ()
    quadrature_nodes: int = 16

    def __post_init__(self):
        if self.family not in FAMILIES:
            low = str(self.family).lower()
            if any(h in low for h in _LATTICE_NAMES):
                raise UnsupportedSplitter(
                    f"family {self.family!r} is a lattice-type splitter; split vectors "
                    "with atoms have no density and are not representable here"
                )
            raise UnsupportedSplitter(f"unknown splitter family {self.family!r}")
        if not isinstance(self.b, int) or self.b < 2:
            raise ConfigInvalid(f"branching factor b must be an integer >= 2, got {self.b}")
        if self.quadrature_nodes < 4:
            raise ConfigInvalid("quadrature_nodes must be >= 4")
        _validate_params(self.family, self.b, self.params)


def _validate_params(family: str, b: int, params: tuple) -> None:
    if family == "binary_search_tree":
        if b != 2 or params != ():
            raise ConfigInvalid("binary_search_tree takes b = 2 and no params")
    elif family == "bary_search_tree":
        if params != ():
            raise ConfigInvalid("bary_search_tree takes no shape params")
    elif family == "median_of":
        if b != 2 or len(params) != 1:
            raise ConfigInvalid("median_of takes b = 2 and params = (k,)")
        k = params[0]
        if not float(k).is_integer() or k < 1:
            raise ConfigInvalid("median_of order k must be an integer >= 1")
    elif family == "dirichlet":
        if len(params) != b:
            raise ConfigInvalid("dirichlet needs one concentration per coordinate")
        if any(a <= 0 for a in params):
            raise ConfigInvalid("dirichlet concentrations must be positive")
    elif family == "beta_binary":
        if b != 2 or len(params) != 2 or any(a <= 0 for a in params):
            raise ConfigInvalid("beta_binary takes b = 2 and two positive shapes")


# ---------------------------------------------------------------------------
# constructors

def binary_search_tree() -> SplitterSpec:
    return SplitterSpec("binary_search_tree", 2)


def bary_search_tree(b: int) -> SplitterSpec:
    return SplitterSpec("bary_search_tree", b)


def median_of(k: int) -> SplitterSpec:
    return SplitterSpec("median_of", 2, (int(k),))


def dirichlet(alpha) -> SplitterSpec:
    alpha = tuple(float(a) for a in alpha)
    return SplitterSpec("dirichlet", len(alpha), alpha)


def beta_binary(a: float, c: float) -> SplitterSpec:
    return SplitterSpec("beta_binary", 2, (float(a), float(c)))


def make_splitter(family: str, b: int | None = None, params=()) -> SplitterSpec:
    """Name-based constructor used by the CLI; unknown names raise UnsupportedSplitter."""
    params = tuple(params)
    if family == "binary_search_tree":
        return binary_search_tree()
    if family == "bary_search_tree":
        if b is None:
            raise ConfigInvalid("bary_search_tree requires b")
        return bary_search_tree(b)
    if family == "median_of":
        if len(params) != 1:
            raise ConfigInvalid("median_of requires params = (k,)")
        return median_of(int(params[0]))
    if family == "dirichlet":
        return dirichlet(params)
    if family == "beta_binary":
        if len(params) != 2:
            raise ConfigInvalid("beta_binary requires params = (a, c)")
        return beta_binary(*params)
    # triggers the UnsupportedSplitter diagnostics in SplitterSpec
    return SplitterSpec(family, b or 2, params)


# ---------------------------------------------------------------------------
# marginal structure

def marginal_components(spec: SplitterSpec) -> tuple[tuple[float, float, float], ...]:
    """Beta-mixture decomposition ((weight, p, q), ...) of the coordinate marginal."""
    if spec.family == "binary_search_tree":
        return ((1.0, 1.0, 1.0),)
    if spec.family == "bary_search_tree":
        return ((1.0, 1.0, float(spec.b - 1)),)
    if spec.family == "median_of":
        k = float(spec.params[0])
        return ((1.0, k + 1.0, k + 1.0),)
    if spec.family == "dirichlet":
        total = float(sum(spec.params))
        w = 1.0 / spec.b
        return tuple((w, float(a), total - float(a)) for a in spec.params)
    if spec.family == "beta_binary":
        a, c = spec.params
        return ((0.5, a, c), (0.5, c, a))
    raise UnsupportedSplitter(spec.family)


def kernel_code(spec: SplitterSpec) -> tuple[int, np.ndarray]:
    """(family id, float params) consumed by the tree-building kernels."""
    return _KERNEL_CODES[spec.family], np.asarray(spec.params, dtype=np.float64)


# ---------------------------------------------------------------------------
# density-weighted quadrature
#
# Panels graded dyadically toward singular endpoints; Gauss-Jacobi end panels
# absorb the x^(p-1) / (1-x)^(q-1) factors exactly, Gauss-Legendre elsewhere.
# Verified at machine precision against mpmath for log-singular integrands.

_LEVELS = 40  # deepest panel edge 2^-40; tail mass below ~1e-12 for any p >= 1e-1


def _component_rule(p: float, q: float, lo: float, hi: float, order: int):
    """Nodes x and weights w with sum w g(x) ~ int_lo^hi g(x) dBeta(p, q)(x)."""
    if hi <= lo:
        return np.empty(0), np.empty(0)
    lognorm = betaln(p, q)
    gl_x, gl_w = np.polynomial.legendre.leggauss(order)
    xs, ws = [], []

    def add_gl(a, b_):
        mid, half = (a + b_) / 2.0, (b_ - a) / 2.0
        x = mid + half * gl_x
        w = half * gl_w * np.exp((p - 1) * np.log(x) + (q - 1) * np.log1p(-x) - lognorm)
        xs.append(x)
        ws.append(w)

    edges = {lo, hi}
    eps = 2.0 ** (-_LEVELS)
    if lo == 0.0:
        edges.update(e for e in (2.0 ** (-k) for k in range(1, _LEVELS + 1)) if e < hi)
    if hi == 1.0:
        edges.update(1 - e for e in (2.0 ** (-k) for k in range(1, _LEVELS + 1)) if 1 - e > lo)
    # keep interior spans modest so plain Gauss stays spectrally accurate
    interior_lo, interior_hi = max(lo, 0.25), min(hi, 0.75)
    if interior_hi > interior_lo:
        edges.update(np.linspace(interior_lo, interior_hi, 5))
    edges = sorted(edges)

    for a, b_ in zip(edges[:-1], edges[1:]):
        if a == 0.0:
            # left Jacobi panel: weight (1+t)^(p-1) on [-1, 1], x = b_ (1+t)/2
            xj, wj = roots_jacobi(order, 0.0, p - 1.0)
            x = b_ * (xj + 1) / 2.0
            w = wj * (b_ / 2.0) ** p * np.exp((q - 1) * np.log1p(-x) - lognorm)
            xs.append(x)
            ws.append(w)
        elif b_ == 1.0:
            xj, wj = roots_jacobi(order, 0.0, q - 1.0)
            x = 1.0 - (1.0 - a) * (xj + 1) / 2.0
            w = wj * ((1.0 - a) / 2.0) ** q * np.exp((p - 1) * np.log(x) - lognorm)
            xs.append(x)
            ws.append(w)
        else:
            add_gl(a, b_)
    del eps
    return np.concatenate(xs), np.concatenate(ws)


@lru_cache(maxsize=128)
def _cached_rule(spec: SplitterSpec, order: int):
    xs, ws = [], []
    for wc, p, q in marginal_components(spec):
        x, w = _component_rule(p, q, 0.0, 1.0, order)
        xs.append(x)
        ws.append(wc * w)
    return np.concatenate(xs), np.concatenate(ws)


def mixture_rule(spec: SplitterSpec, order: int | None = None):
    """Quadrature rule (x, w) for E[g(V)] over the coordinate marginal; sum w = 1."""
    return _cached_rule(spec, int(order or spec.quadrature_nodes))


def mixture_expect(spec: SplitterSpec, g, order: int | None = None) -> float:
    x, w = mixture_rule(spec, order)
    return float(np.dot(w, g(x)))


def restricted_first_moment(spec: SplitterSpec, lo: float) -> float:
    """E[V ; V >= lo], exact-grade quadrature on the truncated range."""
    lo = float(lo)
    if lo <= 0.0:
        return float(mixture_expect(spec, lambda x: x))
    if lo >= 1.0:
        return 0.0
    total = 0.0
    for wc, p, q in marginal_components(spec):
        x, w = _component_rule(p, q, lo, 1.0, spec.quadrature_nodes)
        total += wc * float(np.dot(w, x))
    return total


# ---------------------------------------------------------------------------
# moments

@dataclass(frozen=True)
class SplitterMoments:
    """Marginal moment bundle.

    mu        -b E[V log V], the scale constant of the n log n terms; > 0
    ev2       E[V^2]
    ev2logv   E[V^2 log V]
    cross2    E[(sum_k V_k log V_k)^2]
    sum_ev2   sum_k E[V_k^2] = b E[V^2]; < 1 for nondegenerate laws
    sigma2    (cross2 / mu^2 - 1) / (1 - sum_ev2), limit variance of centered
              path length over n
    cross2_stderr  Monte Carlo standard error of cross2 (0 when quadrature-exact)
    """

    mu: float
    ev2: float
    ev2logv: float
    cross2: float
    sum_ev2: float
    sigma2: float
    cross2_stderr: float = 0.0


def _xlogx(x: np.ndarray) -> np.ndarray:
    return x * np.log(x)


def _moments_at_order(spec: SplitterSpec, order: int) -> tuple[float, float, float]:
    x, w = mixture_rule(spec, order)
    mu = -spec.b * float(np.dot(w, _xlogx(x)))
    ev2 = float(np.dot(w, x * x))
    ev2logv = float(np.dot(w, x * x * np.log(x)))
    return mu, ev2, ev2logv


def _cross2_quadrature(spec: SplitterSpec, order: int) -> float:
    # b = 2 only: sum_k V_k log V_k = V log V + (1-V) log(1-V)
    x, w = mixture_rule(spec, order)
    s = _xlogx(x) + _xlogx(1.0 - x)
    return float(np.dot(w, s * s))


def _cross2_monte_carlo(spec: SplitterSpec, draws: int) -> tuple[float, float]:
    # deterministic internal stream keyed on the spec itself
    key = hash((spec.family, spec.b, spec.params)) & 0x7FFFFFFF
    rng = _derived_generator(key, "splitter-mc")
    total = 0.0
    total_sq = 0.0
    done = 0
    chunk = 1_000_000
    while done < draws:
        m = min(chunk, draws - done)
        v = sample_split_vectors(spec, rng, m)
        s = np.einsum("ij->i", np.where(v > 0, v * np.log(np.maximum(v, 1e-300)), 0.0))
        s2 = s * s
        total += float(s2.sum())
        total_sq += float(np.dot(s2, s2))
        done += m
    mean = total / draws
    var = max(total_sq / draws - mean * mean, 0.0)
    return mean, math.sqrt(var / draws)


def splitter_moments(spec: SplitterSpec, mc_draws: int = 10_000_000) -> SplitterMoments:
    """Moment bundle with a refinement check.

    Raises QuadratureNotConverged if the refined rule moves any quadrature moment
    by more than 1e-8.
    """
    base = spec.quadrature_nodes
    refined = base + max(8, base // 2)
    m0 = _moments_at_order(spec, base)
    m1 = _moments_at_order(spec, refined)
    if any(abs(a - b_) > 1e-8 for a, b_ in zip(m0, m1)):
        raise QuadratureNotConverged(f"moment rule at order {base} vs {refined}: {m0} vs {m1}")
    mu, ev2, ev2logv = m1

    x, w = mixture_rule(spec, base)
    if abs(float(w.sum()) - 1.0) > 1e-12:
        raise QuadratureNotConverged("quadrature weights do not sum to 1")

    if spec.b == 2:
        cross2 = _cross2_quadrature(spec, refined)
        if abs(cross2 - _cross2_quadrature(spec, base)) > 1e-8:
            raise QuadratureNotConverged("cross2 rule not converged")
        stderr = 0.0
    else:
        cross2, stderr = _cross2_monte_carlo(spec, mc_draws)

    sum_ev2 = spec.b * ev2
    if not (0.0 < mu):
        raise ConfigInvalid("degenerate splitter: mu <= 0")
    if not (sum_ev2 < 1.0):
        raise ConfigInvalid("degenerate splitter: sum E[V_k^2] >= 1")
    sigma2 = (cross2 / (mu * mu) - 1.0) / (1.0 - sum_ev2)
    return SplitterMoments(
        mu=mu,
        ev2=ev2,
        ev2logv=ev2logv,
        cross2=cross2,
        sum_ev2=sum_ev2,
        sigma2=sigma2,
        cross2_stderr=stderr,
    )


# ---------------------------------------------------------------------------
# sampling (vectorized; used by the chain and fixed-point modules)

def sample_split_vectors(spec: SplitterSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    """(size, b) matrix of split vectors; rows permuted for exchangeability."""
    b = spec.b
    if spec.family == "binary_search_tree":
        u = rng.random(size)
        raw = np.column_stack([u, 1.0 - u])
    elif spec.family == "bary_search_tree":
        u = np.sort(rng.random((size, b - 1)), axis=1)
        pads = np.zeros((size, 1)), np.ones((size, 1))
        raw = np.diff(np.hstack([pads[0], u, pads[1]]), axis=1)
    elif spec.family == "median_of":
        k = int(spec.params[0])
        m = np.median(rng.random((size, 2 * k + 1)), axis=1)
        raw = np.column_stack([m, 1.0 - m])
    elif spec.family == "dirichlet":
        raw = rng.dirichlet(spec.params, size)
    elif spec.family == "beta_binary":
        a, c = spec.params
        v = rng.beta(a, c, size)
        raw = np.column_stack([v, 1.0 - v])
    else:  # pragma: no cover
        raise UnsupportedSplitter(spec.family)
    return rng.permuted(raw, axis=1)


def sample_split_vector(spec: SplitterSpec, rng: np.random.Generator) -> np.ndarray:
    """One split vector; nonnegative entries, sum 1 within 1e-12, exchangeable."""
    return sample_split_vectors(spec, rng, 1)[0]


def sample_marginal(spec: SplitterSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draws of a single coordinate V (the permuted marginal)."""
    comps = marginal_components(spec)
    if len(comps) == 1:
        _, p, q = comps[0]
        return rng.beta(p, q, size)
    weights = np.array([c[0] for c in comps])
    pick = rng.choice(len(comps), size=size, p=weights)
    out = np.empty(size)
    for i, (_, p, q) in enumerate(comps):
        m = pick == i
        out[m] = rng.beta(p, q, int(m.sum()))
    return out


# ---------------------------------------------------------------------------
# standing-assumption probe

def check_general_assumption(spec: SplitterSpec, deltas=(0.1, 0.01, 0.001)) -> dict:
    """Report on the standing assumptions: a density exists and V puts mass
    arbitrarily close to 1 (so the support is not bounded away from 1).

    Built-in families are absolutely continuous by construction; the tail masses
    P(V > 1 - delta) are exact incomplete-Beta evaluations.
    """
    tail = {}
    for d in deltas:
        total = 0.0
        for wc, p, q in marginal_components(spec):
            # P(V > 1-d) under Beta(p, q) = regularized incomplete beta I_d(q, p)
            total += wc * float(betainc(q, p, d))
        tail[d] = total
    return {
        "density_exists": True,
        "tail_mass_near_one": tail,
        "mass_near_one_positive": all(v > 0.0 for v in tail.values()),
    }
