"""Distributional fixed points of the split-tree limit recursions.

The centered limits of path length and Wiener index solve distributional
equations driven by one split vector: the path limit satisfies

    X = sum_k V_k X_k + 1 + (1/mu) sum_k V_k log V_k

with X_1..X_b independent copies of X, and the joint limit Z = (Y, X) of
(Wiener, path) satisfies Z = sum_k A_k Z_k + offset with the matrices

    A_k = [[V_k^2, V_k (1 - V_k)], [0, V_k]].

Both maps are strict contractions in the Wasserstein-2 metric on centered
laws with finite second moment, so population iteration converges: hold a
sample population, rebuild every member from b uniformly resampled old
members plus a fresh split vector, re-center, repeat.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from ._rng import generator
from .errors import ConfigInvalid, DimMismatch, TooLarge
from .splitters import (
    SplitterSpec,
    mixture_expect,
    sample_split_vectors,
    splitter_moments,
)
from .trees import SplitTreeParams, simulate_stats
from .means import exact_mean_path


@dataclass(frozen=True)
class EmpiricalDistribution:
    """A sample cloud standing in for a 1-d or 2-d centered law."""

    dim: int
    samples: np.ndarray  # shape (N,) for dim 1, (N, 2) for dim 2
    centered: bool

    @property
    def size(self) -> int:
        return int(self.samples.shape[0])

    def variance(self) -> np.ndarray:
        return np.atleast_1d(np.var(self.samples, axis=0))

    def mean(self) -> np.ndarray:
        return np.atleast_1d(self.samples.mean(axis=0))

    def recentered(self) -> "EmpiricalDistribution":
        return EmpiricalDistribution(
            dim=self.dim, samples=self.samples - self.samples.mean(axis=0), centered=True
        )


@dataclass(frozen=True)
class CoefficientDraw:
    """One realization of the random coefficients of the 2-d map."""

    v: np.ndarray  # split vector, length b
    matrices: np.ndarray  # (b, 2, 2)
    offset: np.ndarray  # length 2
    toll: float  # scalar toll of the 1-d map


def make_coefficient_draw(
    spec: SplitterSpec, c_p: float, c_w: float, rng: np.random.Generator
) -> CoefficientDraw:
    v = sample_split_vectors(spec, rng, 1)[0]
    mu = splitter_moments(spec).mu
    mats = np.zeros((spec.b, 2, 2))
    mats[:, 0, 0] = v * v
    mats[:, 0, 1] = v * (1.0 - v)
    mats[:, 1, 1] = v
    svl = float(np.sum(v * np.log(v)))
    toll = 1.0 + svl / mu
    offset = np.array(
        [svl / mu + (1.0 + c_p - c_w) * (1.0 - float(np.sum(v * v))), toll]
    )
    return CoefficientDraw(v=v, matrices=mats, offset=offset, toll=toll)


def fixed_point_1d(
    spec: SplitterSpec,
    pop_size: int = 10**5,
    iters: int = 40,
    master_seed: int = 0,
    zero_toll: bool = False,
    start_sd: float = 1.0,
    track_w2: bool = False,
) -> EmpiricalDistribution | tuple[EmpiricalDistribution, np.ndarray]:
    """Iterate the path-limit map on a resampled population.

    Starts from a normal cloud with the given spread, applies the map with
    fresh split vectors and uniform resampling of the b arguments, and
    re-centers after every iteration. With track_w2 the exact one-dimensional
    W2 distance between consecutive populations is recorded per iteration.
    """
    if pop_size < 10**4:
        raise ConfigInvalid(f"population must be at least 1e4, got {pop_size}")
    rng = generator(master_seed, "fixedpoint", 0 if not zero_toll else 2)
    mu = splitter_moments(spec).mu
    pop = rng.normal(0.0, start_sd, pop_size)
    pop -= pop.mean()
    curve = []
    for _ in range(int(iters)):
        v = sample_split_vectors(spec, rng, pop_size)
        idx = rng.integers(0, pop_size, size=(pop_size, spec.b))
        new = np.einsum("ij,ij->i", v, pop[idx])
        if not zero_toll:
            new += 1.0 + np.sum(v * np.log(v), axis=1) / mu
        new -= new.mean()
        if track_w2:
            curve.append(_w2_sorted(pop, new))
        pop = new
    dist = EmpiricalDistribution(dim=1, samples=pop, centered=True)
    if track_w2:
        return dist, np.array(curve)
    return dist


def fixed_point_2d(
    spec: SplitterSpec,
    c_p: float,
    c_w: float,
    pop_size: int = 10**5,
    iters: int = 40,
    master_seed: int = 0,
) -> EmpiricalDistribution:
    """Iterate the joint (Wiener, path) map; rows follow the matrices A_k.

    The second coordinate evolves by the 1-d path map, so its marginal
    reproduces the 1-d fixed point. The first coordinate couples to it
    through the off-diagonal entries V_k (1 - V_k) and carries the offset
    (1/mu) sum V_k log V_k + (1 + c_p - c_w)(1 - sum V_k^2).
    """
    if pop_size < 10**4:
        raise ConfigInvalid(f"population must be at least 1e4, got {pop_size}")
    rng = generator(master_seed, "fixedpoint", 1)
    mu = splitter_moments(spec).mu
    combo = 1.0 + c_p - c_w
    pop = rng.normal(0.0, 1.0, (pop_size, 2))
    pop -= pop.mean(axis=0)
    for _ in range(int(iters)):
        v = sample_split_vectors(spec, rng, pop_size)
        idx = rng.integers(0, pop_size, size=(pop_size, spec.b))
        y = pop[idx, 0]
        x = pop[idx, 1]
        svl = np.sum(v * np.log(v), axis=1)
        sv2 = np.sum(v * v, axis=1)
        new = np.empty_like(pop)
        new[:, 0] = (
            np.sum(v * v * y + v * (1.0 - v) * x, axis=1) + svl / mu + combo * (1.0 - sv2)
        )
        new[:, 1] = np.sum(v * x, axis=1) + 1.0 + svl / mu
        new -= new.mean(axis=0)
        pop = new
    return EmpiricalDistribution(dim=2, samples=pop, centered=True)


# ---------------------------------------------------------------------------
# Wasserstein-2 distances between sample clouds

def _w2_sorted(a: np.ndarray, b: np.ndarray) -> float:
    """Exact W2 between two 1-d empirical laws (any sizes), by quantile pairing."""
    sa = np.sort(a)
    sb = np.sort(b)
    na, nb = len(sa), len(sb)
    if na == nb:
        return float(np.sqrt(np.mean((sa - sb) ** 2)))
    # piecewise-constant quantile functions integrated over merged breakpoints
    cuts = np.union1d(np.arange(1, na) / na, np.arange(1, nb) / nb)
    edges = np.concatenate([[0.0], cuts, [1.0]])
    mids = 0.5 * (edges[:-1] + edges[1:])
    qa = sa[np.minimum((mids * na).astype(np.int64), na - 1)]
    qb = sb[np.minimum((mids * nb).astype(np.int64), nb - 1)]
    return float(np.sqrt(np.sum((qa - qb) ** 2 * np.diff(edges))))


def w2_distance(
    da: EmpiricalDistribution | np.ndarray,
    db: EmpiricalDistribution | np.ndarray,
    master_seed: int = 0,
    subsample: int = 512,
    draws: int = 8,
) -> float:
    """W2 between two sample clouds of equal dimension.

    Dimension 1: exact, by sorted-quantile pairing. Dimension 2: the exact
    optimal assignment is solved on matched subsamples of at most `subsample`
    points, averaged over `draws` independent subsample pairs.
    """
    return w2_distance_with_spread(da, db, master_seed, subsample, draws)[0]


def w2_distance_with_spread(
    da: EmpiricalDistribution | np.ndarray,
    db: EmpiricalDistribution | np.ndarray,
    master_seed: int = 0,
    subsample: int = 512,
    draws: int = 8,
) -> tuple[float, float]:
    """As w2_distance, also returning the spread (stdev over subsample draws; 0 in 1-d)."""
    xa = da.samples if isinstance(da, EmpiricalDistribution) else np.asarray(da)
    xb = db.samples if isinstance(db, EmpiricalDistribution) else np.asarray(db)
    dim_a = 1 if xa.ndim == 1 else xa.shape[1]
    dim_b = 1 if xb.ndim == 1 else xb.shape[1]
    if dim_a != dim_b:
        raise DimMismatch(f"dimensions differ: {dim_a} vs {dim_b}")
    if dim_a == 1:
        return _w2_sorted(xa.ravel(), xb.ravel()), 0.0
    if dim_a != 2:
        raise DimMismatch(f"only dimensions 1 and 2 are supported, got {dim_a}")
    rng = generator(master_seed, "fixedpoint", 3)
    k = min(subsample, len(xa), len(xb))
    vals = []
    for _ in range(draws):
        pa = xa[rng.choice(len(xa), size=k, replace=False)]
        pb = xb[rng.choice(len(xb), size=k, replace=False)]
        cost = (
            (pa[:, None, 0] - pb[None, :, 0]) ** 2
            + (pa[:, None, 1] - pb[None, :, 1]) ** 2
        )
        ri, ci = linear_sum_assignment(cost)
        vals.append(math.sqrt(cost[ri, ci].mean()))
    vals = np.array(vals)
    return float(vals.mean()), float(vals.std(ddof=1))


# ---------------------------------------------------------------------------
# contraction certificate

def lambda_eigenvalue(x: np.ndarray) -> np.ndarray:
    """Larger eigenvalue of A^T A for the 2-d coefficient matrix at split share x."""
    x = np.asarray(x, dtype=np.float64)
    return x * x * (1.0 - x + x * x + (1.0 - x) * np.sqrt(x * x + 1.0))


def contraction_certificate(spec: SplitterSpec) -> dict:
    """Quadrature certificate that both limit maps contract in W2.

    The 1-d map contracts when sum_k E[V_k^2] < 1; the 2-d map when
    sum_k E[lambda(V_k)] < 1, with lambda the closed-form larger eigenvalue
    of A_k^T A_k. Both expectations reduce to b times a marginal integral.
    """
    moments = splitter_moments(spec)
    sum_ev2 = moments.sum_ev2
    sum_norms = spec.b * mixture_expect(spec, lambda x: lambda_eigenvalue(x))
    return {
        "sum_op_norms_2d": float(sum_norms),
        "sum_ev2_1d": float(sum_ev2),
        "pass": bool(sum_norms < 1.0 and sum_ev2 < 1.0),
    }


# ---------------------------------------------------------------------------
# moment probes

def exp_moment_curve(sample: np.ndarray, lambda_grid: np.ndarray) -> np.ndarray:
    """Empirical E[exp(lambda X)] over the grid; grid clamped to |lambda| <= 2."""
    lam = np.asarray(lambda_grid, dtype=np.float64)
    if np.any(np.abs(lam) > 2.0):
        raise ConfigInvalid("exponential-moment grid is limited to |lambda| <= 2")
    x = np.asarray(sample, dtype=np.float64)
    return np.exp(lam[:, None] * x[None, :]).mean(axis=1)


def tail_probe(
    params: SplitTreeParams,
    spec: SplitterSpec,
    n: int,
    eps: float,
    reps: int = 10**5,
    master_seed: int = 0,
) -> float:
    """Empirical P(|P_n - E[P_n]| >= eps E[P_n]) from fresh simulations."""
    if reps < 10**5:
        raise ConfigInvalid(f"tail probe needs at least 1e5 replicates, got {reps}")
    ep = exact_mean_path(n, params, spec)[n]
    sims = simulate_stats(params, spec, n, reps, master_seed)
    dev = np.abs(sims["path"].astype(np.float64) - ep)
    return float(np.mean(dev >= eps * ep))


__all__ = [
    "CoefficientDraw",
    "EmpiricalDistribution",
    "contraction_certificate",
    "exp_moment_curve",
    "fixed_point_1d",
    "fixed_point_2d",
    "lambda_eigenvalue",
    "make_coefficient_draw",
    "tail_probe",
    "w2_distance",
    "w2_distance_with_spread",
]
