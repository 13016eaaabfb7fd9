"""Law of the first root-subtree ball count.

Once the root of an (b, s, s0, s1) tree has split, the number of balls in a
fixed child subtree is s1 plus a mixed binomial: conditionally on the split
coordinate V = x, Binomial(eta_n, x) with eta_n = n - s0 - b*s1. Every
built-in splitter has a Beta-mixture marginal, so the mixed binomial is a
beta-binomial mixture and each pmf entry has a closed product form. The
recurrence below evaluates rows exactly; no quadrature is involved, which
matters because at large eta_n the binomial kernel is narrower than any
fixed quadrature grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betaln, gammaln

from ._rng import generator
from .errors import QuadratureNotConverged, RootNotSplit
from .splitters import SplitterSpec, marginal_components, sample_marginal, splitter_moments
from .trees import SplitTreeParams

_MASS_TOL = 1e-10


def beta_binomial_row(eta: int, p: float, q: float) -> np.ndarray:
    """Exact pmf of the beta-binomial law on {0, ..., eta} with mixing Beta(p, q).

    Multiplicative recurrence seeded at k = 0; one pass, O(eta). Falls back to
    log-space evaluation if the seed underflows (very peaked mixtures).
    """
    eta = int(eta)
    if eta == 0:
        return np.ones(1)
    log_p0 = betaln(p, eta + q) - betaln(p, q)
    k = np.arange(eta, dtype=np.float64)
    if log_p0 > -700.0:
        ratios = (eta - k) * (k + p) / ((k + 1.0) * (eta - 1.0 - k + q))
        row = np.empty(eta + 1)
        row[0] = 1.0
        np.cumprod(ratios, out=row[1:])
        row *= np.exp(log_p0)
        return row
    kk = np.arange(eta + 1, dtype=np.float64)
    logrow = (
        gammaln(eta + 1.0)
        - gammaln(kk + 1.0)
        - gammaln(eta - kk + 1.0)
        + betaln(kk + p, eta - kk + q)
        - betaln(p, q)
    )
    return np.exp(logrow)


def mixture_row(spec: SplitterSpec, eta: int) -> np.ndarray:
    """Exact pmf of the mixed binomial over {0, ..., eta} for this splitter."""
    comps = marginal_components(spec)
    if comps == ((1.0, 1.0, 1.0),):
        # uniform mixing integrates the binomial kernel to a flat row
        return np.full(eta + 1, 1.0 / (eta + 1))
    row = np.zeros(eta + 1)
    for w, p, q in comps:
        row += w * beta_binomial_row(eta, p, q)
    return row


@dataclass(frozen=True)
class SubtreePmf:
    """Distribution of the first root-subtree ball count.

    probs[i] is the probability of i + support_start balls; support runs over
    {s1, ..., eta_n + s1}.
    """

    n: int
    eta_n: int
    support_start: int
    probs: np.ndarray

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.support_start, self.support_start + self.eta_n + 1)

    def mean(self) -> float:
        return float(np.dot(self.support, self.probs))

    def prob_of(self, k: int) -> float:
        """Probability of exactly k balls (0 outside the support)."""
        i = k - self.support_start
        if 0 <= i <= self.eta_n:
            return float(self.probs[i])
        return 0.0


def subtree_pmf(n: int, params: SplitTreeParams, spec: SplitterSpec) -> SubtreePmf:
    """Exact law of the first root-subtree ball count for a tree with n balls."""
    if n <= params.s:
        raise RootNotSplit(f"subtree law needs a split root: n={n} <= s={params.s}")
    eta = params.eta(n)
    probs = mixture_row(spec, eta)
    mass = float(probs.sum())
    if abs(mass - 1.0) > _MASS_TOL:
        raise QuadratureNotConverged(f"pmf mass {mass} deviates from 1 beyond {_MASS_TOL}")
    return SubtreePmf(n=int(n), eta_n=eta, support_start=params.s1, probs=probs)


def concentration_report(
    n: int,
    params: SplitTreeParams,
    spec: SplitterSpec,
    eps: float,
    reps: int = 10**6,
    master_seed: int = 0,
) -> dict:
    """Empirical P(|I/n - V| >= eps) from coupled draws against 2 exp(-n eps^2 / 4).

    The coupling draws V first, then the conditional binomial count, so the
    deviation is measured against the very split coordinate that produced it.
    """
    if n < 10:
        raise RootNotSplit(f"concentration probe needs n >= 10, got {n}")
    eta = params.eta(n)
    rng = generator(master_seed, "splitter-mc", n)
    v = sample_marginal(spec, rng, reps)
    counts = params.s1 + rng.binomial(eta, v)
    empirical = float(np.mean(np.abs(counts / n - v) >= eps))
    bound = 2.0 * float(np.exp(-n * eps * eps / 4.0))
    return {
        "empirical": empirical,
        "bernstein_bound": bound,
        "reps": int(reps),
        "within_bound": empirical <= bound * 1.05,
    }


def moment_asymptotics(n: int, params: SplitTreeParams, spec: SplitterSpec) -> dict:
    """Exact low moments of the subtree count next to their expansions.

    Expansions (natural log, first plus second order):
        E[I^2]       = E[V^2] n^2 + o(n^2)
        E[I log I]   = n log n / b + E[V log V] n + o(n)
        E[I^2 log I] = E[V^2] n^2 log n + E[V^2 log V] n^2 + o(n^2)
    """
    pmf = subtree_pmf(n, params, spec)
    k = pmf.support.astype(np.float64)
    logk = np.where(k > 0, np.log(np.maximum(k, 1.0)), 0.0)  # 0 log 0 := 0
    p = pmf.probs
    ei2 = float(np.dot(k * k, p))
    eilogi = float(np.dot(k * logk, p))
    ei2logi = float(np.dot(k * k * logk, p))

    m = splitter_moments(spec)
    ev_logv = -m.mu / spec.b
    ln_n = float(np.log(n))
    predictions = {
        "ei2": m.ev2 * n * n,
        "eilogi": n * ln_n / spec.b + ev_logv * n,
        "ei2logi": m.ev2 * n * n * ln_n + m.ev2logv * n * n,
    }
    exact = {"ei2": ei2, "eilogi": eilogi, "ei2logi": ei2logi}
    gaps = {
        key: abs(exact[key] - predictions[key]) / max(abs(exact[key]), 1e-300)
        for key in exact
    }
    return {**exact, "predictions": predictions, "relative_gaps": gaps}


__all__ = [
    "SubtreePmf",
    "beta_binomial_row",
    "concentration_report",
    "mixture_row",
    "moment_asymptotics",
    "subtree_pmf",
]
