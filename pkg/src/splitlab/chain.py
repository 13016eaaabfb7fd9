"""The size-biased subtree chain and its renewal machinery.

A ball inserted into a large tree walks down a sequence of nested subtrees
whose ball counts n = n_0 > n_1 > ... shrink by a size-biased split at every
level. On the scale S_t = -log n_t this is a Markov chain with asymptotically
iid positive increments, which makes renewal arguments available: stopping
rules, an exact representation of normalized mean sequences as stopped
functionals, total-variation decay of stopped laws, and a pathwise sandwich
between two true renewal processes built from envelope increment laws.

States are kept as integers n >= 0 internally; n = 0 is the absorbing state.
The exposed value of a state is -log n, with the convention value(0) = 1.0
(any constant outside {-log n} works; trajectories terminate there).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._rng import generator
from .errors import ConfigInvalid, StepBudgetExceeded, TooLarge
from .splitters import (
    SplitterSpec,
    marginal_components,
    restricted_first_moment,
    sample_split_vectors,
)
from .subtree_law import mixture_row
from .trees import SplitTreeParams

_DP_MAX_START = 8000
_STEP_BUDGET = 10**6


def state_value(n: int) -> float:
    """-log n for live states; 1.0 marks the absorbing state."""
    return 1.0 if n == 0 else -math.log(n)


def level_to_size(a: float) -> int:
    """Largest integer state at or past value level a (value(n) >= a <=> n <= this)."""
    return int(math.floor(math.exp(-a) + 1e-9))


# ---------------------------------------------------------------------------
# one-step transition measure

@dataclass(frozen=True)
class NuTransition:
    """One-step law from state n: probs[k] = chance the next state is k."""

    n: int
    probs: np.ndarray

    @property
    def mass(self) -> float:
        return float(self.probs.sum())

    @property
    def support(self) -> np.ndarray:
        return np.arange(len(self.probs))


def nu_row(n: int, params: SplitTreeParams, spec: SplitterSpec) -> np.ndarray:
    """Transition probabilities from state n as a dense vector over 0..n-s0.

    For n with eta_n >= 0 this is the size-biased subtree law plus the
    retained-ball atom: b (k/n) P(I=k) + (s0/n) at k = n-s0. The parameter
    constraint makes eta_n >= 0 whenever n > s; below that (and wherever
    eta_n < 0) the walk has nowhere to descend and absorbs: a point mass at 0.
    """
    if n < 1:
        raise ConfigInvalid(f"transition defined for states n >= 1, got {n}")
    b, s0, s1 = params.b, params.s0, params.s1
    eta = params.eta(n)
    if eta < 0:
        return np.ones(1)
    pmf_i = np.zeros(n - s0 + 1)
    pmf_i[s1 : s1 + eta + 1] = mixture_row(spec, eta)
    k = np.arange(n - s0 + 1, dtype=np.float64)
    row = b * (k / n) * pmf_i
    row[n - s0] += s0 / n
    return row


def nu_pmf(n: int, params: SplitTreeParams, spec: SplitterSpec) -> NuTransition:
    row = nu_row(n, params, spec)
    mass = float(row.sum())
    if abs(mass - 1.0) > 1e-10:
        raise ConfigInvalid(f"transition mass {mass} should be 1 within 1e-10")
    return NuTransition(n=int(n), probs=row)


def sample_transitions(
    n: np.ndarray, params: SplitTreeParams, spec: SplitterSpec, rng: np.random.Generator
) -> np.ndarray:
    """Vectorized structural one-step sampler from heterogeneous states.

    Realizes the transition by its construction: draw the split vector, draw
    the multinomial subtree sizes, then land in child j with probability
    I_j / n and on the retained atom n - s0 with probability s0 / n.
    """
    n = np.asarray(n, dtype=np.int64)
    m = n.size
    b, s0, s1 = params.b, params.s0, params.s1
    out = np.zeros(m, dtype=np.int64)
    eta = n - s0 - b * s1
    live = eta >= 0
    if not np.any(live):
        return out
    nl = n[live]
    etal = eta[live]
    v = sample_split_vectors(spec, rng, int(nl.size))
    sizes = np.empty((int(nl.size), b), dtype=np.int64)
    rem = etal.copy()
    p_rem = np.ones(nl.size)
    for j in range(b - 1):
        pj = np.clip(v[:, j] / np.maximum(p_rem, 1e-300), 0.0, 1.0)
        sizes[:, j] = rng.binomial(rem, pj)
        rem -= sizes[:, j]
        p_rem -= v[:, j]
    sizes[:, b - 1] = rem
    sizes += s1
    # partition [0, n): the retained atom takes [0, s0), child j the next I_j
    u = rng.random(nl.size) * nl
    cuts = s0 + np.cumsum(sizes, axis=1)
    pick = (u[:, None] >= cuts[:, :-1]).sum(axis=1)
    chosen = np.take_along_axis(sizes, pick[:, None], axis=1)[:, 0]
    out[live] = np.where(u < s0, nl - s0, chosen)
    return out


def sample_transition(
    n: int, params: SplitTreeParams, spec: SplitterSpec, rng: np.random.Generator
) -> int:
    """One draw of the next state from n."""
    return int(sample_transitions(np.array([n]), params, spec, rng)[0])


# ---------------------------------------------------------------------------
# stopping rules and trajectories

@dataclass(frozen=True)
class StoppingRule:
    """When a trajectory ends.

    kind "size": stop on reaching a state n <= parameter (parameter = n1).
    kind "level": stop when the value -log n reaches parameter or above.
    kind "climb": stop when the value has risen by at least parameter.
    The absorbing state stops every rule.
    """

    kind: str
    parameter: float

    def __post_init__(self):
        if self.kind not in ("size", "level", "climb"):
            raise ConfigInvalid(f"unknown stopping rule kind {self.kind!r}")

    def is_met(self, n: int, start_value: float) -> bool:
        if n == 0:
            return True
        if self.kind == "size":
            return n <= self.parameter
        if self.kind == "level":
            return state_value(n) >= self.parameter
        return state_value(n) - start_value >= self.parameter


def stop_at_size(n1: int) -> StoppingRule:
    return StoppingRule("size", float(n1))


def stop_at_level(d: float) -> StoppingRule:
    return StoppingRule("level", float(d))


def stop_after_climb(d: float) -> StoppingRule:
    if d <= 0:
        raise ConfigInvalid(f"climb must be positive, got {d}")
    return StoppingRule("climb", float(d))


@dataclass(frozen=True)
class Trajectory:
    states: np.ndarray  # integer states, starting state first
    values: np.ndarray
    rule: StoppingRule
    steps: int

    @property
    def stopped_n(self) -> int:
        return int(self.states[-1])

    @property
    def stopped_value(self) -> float:
        return float(self.values[-1])


def run_chain(
    start_n: int,
    rule: StoppingRule,
    params: SplitTreeParams,
    spec: SplitterSpec,
    rng: np.random.Generator,
    step_budget: int = _STEP_BUDGET,
) -> Trajectory:
    """One stopped trajectory; raises StepBudgetExceeded past step_budget steps."""
    if start_n < 1:
        raise ConfigInvalid(f"start state must be >= 1, got {start_n}")
    states = [int(start_n)]
    v0 = state_value(start_n)
    n = int(start_n)
    while not rule.is_met(n, v0):
        if len(states) > step_budget:
            raise StepBudgetExceeded(f"no stop after {step_budget} steps from {start_n}")
        n = sample_transition(n, params, spec, rng)
        states.append(n)
    arr = np.array(states, dtype=np.int64)
    return Trajectory(
        states=arr,
        values=np.array([state_value(int(k)) for k in arr]),
        rule=rule,
        steps=len(states) - 1,
    )


# ---------------------------------------------------------------------------
# exact stopped distributions (dynamic programming)

def stopped_state_pmf(
    start_n: int,
    params: SplitTreeParams,
    spec: SplitterSpec,
    n1: int | None = None,
    a: float | None = None,
) -> np.ndarray:
    """Exact law of the stopped state, as probabilities over 0..n1.

    The stopping set {n <= n1} may be given directly or through a value level
    a (stop when -log n >= a). One downward sweep: states only decrease, so
    each live state hands its mass to lower states exactly once. A state that
    can return itself (only possible when s0 = 0 = s1) is resolved by its
    geometric self-loop total.
    """
    if n1 is None:
        if a is None:
            raise ConfigInvalid("need a stopping size n1 or a value level a")
        n1 = level_to_size(a)
    n1 = int(n1)
    if start_n > _DP_MAX_START:
        raise TooLarge(f"exact sweeps capped at start_n <= {_DP_MAX_START}, got {start_n}")
    if start_n <= n1:
        out = np.zeros(n1 + 1)
        out[start_n] = 1.0
        return out
    mass = np.zeros(start_n + 1)
    mass[start_n] = 1.0
    for m in range(start_n, n1, -1):
        if mass[m] == 0.0:
            continue
        row = nu_row(m, params, spec)
        arriving = mass[m]
        if len(row) == m + 1 and row[m] > 0.0:  # self-loop: resolve geometrically
            arriving = arriving / (1.0 - row[m])
            row = row.copy()
            row[m] = 0.0
        mass[m] = 0.0
        mass[: len(row)] += arriving * row
    out = mass[: n1 + 1].copy()
    total = float(out.sum())
    if abs(total - 1.0) > 1e-9:
        raise ConfigInvalid(f"stopped mass {total} should be 1 within 1e-9")
    return out


def expected_visits(
    start_n: int, params: SplitTreeParams, spec: SplitterSpec, n1: int
) -> np.ndarray:
    """Expected visit counts of live states n1 < m <= start_n before stopping."""
    if start_n > _DP_MAX_START:
        raise TooLarge(f"exact sweeps capped at start_n <= {_DP_MAX_START}, got {start_n}")
    visits = np.zeros(start_n + 1)
    mass = np.zeros(start_n + 1)
    mass[start_n] = 1.0
    for m in range(start_n, n1, -1):
        if mass[m] == 0.0:
            continue
        row = nu_row(m, params, spec)
        arriving = mass[m]
        if len(row) == m + 1 and row[m] > 0.0:
            arriving = arriving / (1.0 - row[m])
            row = row.copy()
            row[m] = 0.0
        visits[m] = arriving
        mass[m] = 0.0
        mass[: len(row)] += arriving * row
    return visits


def tv_stopped(
    start_n: int, start_m: int, a: float, params: SplitTreeParams, spec: SplitterSpec
) -> float:
    """Total variation between the two exact stopped laws, as sum |p - q| in [0, 2].

    The halved convention (max-event probability gap, in [0, 1]) is this value
    divided by 2; see tv_stopped_prob.
    """
    p = stopped_state_pmf(start_n, params, spec, a=a)
    q = stopped_state_pmf(start_m, params, spec, a=a)
    return float(np.abs(p - q).sum())


def tv_stopped_prob(
    start_n: int, start_m: int, a: float, params: SplitTreeParams, spec: SplitterSpec
) -> float:
    """Halved total variation, in [0, 1]."""
    return 0.5 * tv_stopped(start_n, start_m, a, params, spec)


# ---------------------------------------------------------------------------
# representation of normalized mean sequences

def representation_check(
    n: int,
    n1: int,
    excess: np.ndarray,
    residual: np.ndarray,
    params: SplitTreeParams,
    spec: SplitterSpec,
    master_seed: int = 0,
    trajectories: int = 10**6,
) -> dict:
    """Stopped-functional representation of the excess sequence, two ways.

    If excess[m] = sum_k nu_m(k) excess[k] + residual[m] for every live m, then
    excess[n] = E[excess at the stopped state] + E[sum of residual over visited
    live states]. The right side is evaluated exactly (visit-count sweep) and
    by Monte Carlo over independent trajectories; the report carries both.
    """
    if len(excess) <= n or len(residual) <= n:
        raise ConfigInvalid("excess/residual tables must cover 0..n")
    lhs = float(excess[n])
    pmf = stopped_state_pmf(n, params, spec, n1=n1)
    visits = expected_visits(n, params, spec, n1)
    rhs_exact = float(np.dot(pmf, excess[: n1 + 1]) + np.dot(visits, residual[: len(visits)]))

    rng = generator(master_seed, "chain", n)
    states = np.full(trajectories, n, dtype=np.int64)
    acc = np.zeros(trajectories)
    active = states > n1
    while np.any(active):
        idx = np.flatnonzero(active)
        acc[idx] += residual[states[idx]]
        states[idx] = sample_transitions(states[idx], params, spec, rng)
        active[idx] = states[idx] > n1
    samples = acc + excess[states]
    rhs_mc = float(samples.mean())
    stderr = float(samples.std(ddof=1) / math.sqrt(trajectories))
    return {
        "lhs": lhs,
        "rhs_exact": rhs_exact,
        "rhs_mc": rhs_mc,
        "stderr": stderr,
        "within_4_stderr": abs(lhs - rhs_mc) <= 4.0 * stderr,
        "trajectories": int(trajectories),
    }


# ---------------------------------------------------------------------------
# limiting increment law

def limit_increment_cdf(spec: SplitterSpec, y_grid: np.ndarray) -> np.ndarray:
    """Limit law of one value increment: F(y) = b E[V; -log V <= y].

    As n grows, one size-biased step multiplies the subtree share by roughly a
    size-biased split coordinate, so the increment -log(next/n) converges to
    -log of that coordinate. Computed by truncated-range quadrature.
    """
    y = np.asarray(y_grid, dtype=np.float64)
    if np.any(y < 0):
        raise ConfigInvalid("increment levels must be nonnegative")
    vals = np.array(
        [spec.b * restricted_first_moment(spec, math.exp(-float(t))) for t in y]
    )
    return vals


def empirical_increment_cdf(
    n: int,
    params: SplitTreeParams,
    spec: SplitterSpec,
    y_grid: np.ndarray,
    draws: int = 10**5,
    master_seed: int = 0,
) -> np.ndarray:
    """Empirical CDF of one increment from state n on the given grid."""
    rng = generator(master_seed, "chain", n)
    nxt = sample_transitions(np.full(draws, n, dtype=np.int64), params, spec, rng)
    # absorbing draws (possible only for tiny n) sit at +infinity on this scale
    inc = np.where(nxt > 0, np.log(n / np.maximum(nxt, 1)), np.inf)
    y = np.asarray(y_grid, dtype=np.float64)
    return np.searchsorted(np.sort(inc), y, side="right") / draws


# ---------------------------------------------------------------------------
# exact one-step increment CDFs and the renewal sandwich

def _is_classic_binary(params: SplitTreeParams, spec: SplitterSpec) -> bool:
    return (
        marginal_components(spec) == ((1.0, 1.0, 1.0),)
        and params.b == 2
        and params.s0 == 1
        and params.s1 == 0
    )


def _classic_tail(m: np.ndarray, k0: np.ndarray) -> np.ndarray:
    """P(next >= k0) from state m for the uniform binary configuration."""
    m = m.astype(np.float64)
    k0c = np.clip(k0.astype(np.float64), 0.0, None)
    tail = (m * (m - 1.0) - k0c * (k0c - 1.0)) / (m * m) + 1.0 / m
    tail = np.where(k0c >= m, 0.0, tail)
    return np.clip(tail, 0.0, 1.0)


def _classic_next(m: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Tail inversion of the one-step law for the uniform binary configuration.

    Returns the largest k with P(next >= k) >= u, so the value increment
    log(m / next) is increasing in u, matching the orientation of the envelope
    inversions that share the same uniforms. Solves the quadratic tail formula
    k (k - 1) <= m^2 (1 - u), then corrects any float off-by-one in integers.
    """
    mf = m.astype(np.float64)
    c = mf * mf * (1.0 - u)
    k = np.floor((1.0 + np.sqrt(1.0 + 4.0 * c)) / 2.0).astype(np.int64)
    over = k * (k - 1) > c
    k = np.where(over, k - 1, k)
    under = (k + 1) * k <= c
    k = np.where(under, k + 1, k)
    return np.clip(k, 1, m - 1)


@lru_cache(maxsize=512)
def _cached_cumrow(n: int, params: SplitTreeParams, spec: SplitterSpec) -> np.ndarray:
    return np.cumsum(nu_row(n, params, spec))


def one_step_cdf_on_grid(
    m_values: np.ndarray,
    y_grid: np.ndarray,
    params: SplitTreeParams,
    spec: SplitterSpec,
) -> np.ndarray:
    """Matrix of exact one-step increment CDFs: rows states, columns grid points."""
    y = np.asarray(y_grid, dtype=np.float64)
    ms = np.asarray(m_values, dtype=np.int64)
    if _is_classic_binary(params, spec):
        k0 = np.ceil(ms[:, None] * np.exp(-y)[None, :] - 1e-12).astype(np.int64)
        return _classic_tail(np.broadcast_to(ms[:, None], k0.shape), k0)
    out = np.empty((ms.size, y.size))
    for i, m in enumerate(ms):
        cum = _cached_cumrow(int(m), params, spec)
        k0 = np.ceil(m * np.exp(-y) - 1e-12).astype(np.int64)
        # P(next >= k0) = 1 - cum[k0 - 1]; k0 <= 0 is the whole mass
        tail = 1.0 - cum[np.clip(k0 - 1, 0, len(cum) - 1)]
        tail = np.where(k0 <= 0, 1.0, tail)
        out[i] = np.where(k0 > len(cum) - 1, 0.0, tail)
    return out


@dataclass(frozen=True)
class RenewalSandwich:
    """Envelope increment CDFs bracketing every one-step law past the level a.

    bar is the pointwise smallest CDF (stochastically largest increments),
    under the pointwise largest (smallest increments). Both are step functions
    on y_grid arranged so the bracketing is safe between grid points: bar is
    read right-continuously (an underestimate of the true infimum there) and
    under is carried backward from the right grid point (an overestimate).
    """

    a: float
    y_grid: np.ndarray
    bar: np.ndarray
    under: np.ndarray
    m_min: int
    m_cap: int
    truncation_gap: float

    def bar_increments(self, u: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.bar, u, side="left")
        idx = np.minimum(idx, len(self.y_grid) - 1)
        return self.y_grid[idx]

    def under_increments(self, u: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.under, u, side="left")
        return self.y_grid[np.maximum(idx - 1, 0)]


def build_sandwich(
    a: float,
    params: SplitTreeParams,
    spec: SplitterSpec,
    start_n: int,
    grid_size: int = 512,
) -> RenewalSandwich:
    """Envelopes over all states at value <= a (sizes m >= exp(-a)).

    Exact one-step CDFs are computed for every integer state up to a cap
    (closed form for the uniform binary configuration, beta-binomial rows
    otherwise) plus the limiting increment law; pointwise extrema over that
    family give the envelopes. The reported truncation gap is the sup distance
    between the two envelopes, which bounds what any omitted state could add.
    """
    m_min = level_to_size(a) + 1
    if _is_classic_binary(params, spec):
        m_cap = max(int(start_n), 10**5)
    else:
        m_cap = min(max(int(start_n), 4000), 2 * 10**4)
        if start_n > m_cap:
            raise TooLarge(
                f"sandwich for this family caps start_n at {m_cap}, got {start_n}"
            )
    if m_min > m_cap:
        raise ConfigInvalid(f"no states between exp(-a)={m_min - 1} and the cap {m_cap}")
    y_max = math.log(m_cap) + 0.1
    y_grid = np.concatenate([[0.0], np.geomspace(1e-6, y_max, grid_size - 1)])
    bar = np.ones(grid_size)
    under = np.zeros(grid_size)
    for lo in range(m_min, m_cap + 1, 8192):  # chunked: the full table is large
        ms = np.arange(lo, min(lo + 8192, m_cap + 1), dtype=np.int64)
        table = one_step_cdf_on_grid(ms, y_grid, params, spec)
        bar = np.minimum(bar, table.min(axis=0))
        under = np.maximum(under, table.max(axis=0))
    limit = limit_increment_cdf(spec, y_grid)
    bar = np.minimum(bar, limit)
    under = np.maximum(under, limit)
    bar[-1] = 1.0
    under[-1] = max(under[-1], 1.0)
    return RenewalSandwich(
        a=float(a),
        y_grid=y_grid,
        bar=np.maximum.accumulate(bar),
        under=np.maximum.accumulate(under),
        m_min=m_min,
        m_cap=m_cap,
        truncation_gap=float(np.max(under - bar)),
    )


def _chain_next_shared_u(
    states: np.ndarray,
    u: np.ndarray,
    params: SplitTreeParams,
    spec: SplitterSpec,
) -> np.ndarray:
    """Exact tail-inversion step of the chain driven by given uniforms.

    next = max{k : P(next >= k) >= u}, the orientation under which the value
    increment grows with u like the envelope inversions do.
    """
    if _is_classic_binary(params, spec):
        return _classic_next(states, u)
    out = np.empty_like(states)
    for i, (m, ui) in enumerate(zip(states, u)):
        cum = _cached_cumrow(int(m), params, spec)
        k = np.searchsorted(cum, 1.0 - ui, side="right")
        out[i] = min(max(int(k), 1), len(cum) - 1)
    return out


def sandwich_run(
    a: float,
    d: float,
    start_n: int,
    params: SplitTreeParams,
    spec: SplitterSpec,
    master_seed: int = 0,
    trajectories: int = 10**5,
    alpha: float = 1.0,
) -> dict:
    """Coupled climb-d runs of the chain and its two renewal envelopes.

    All three processes consume the same uniforms through their quantile maps,
    so their increments are ordered at every step and the three exponential
    sums sum_t exp(-alpha (S_t - S_0)) over t before the respective climbs are
    ordered pathwise: under_sum >= chain_sum >= bar_sum. Sums include t = 0.
    """
    if state_value(start_n) + d > a:
        raise ConfigInvalid(
            f"the climb window must stay at values <= a: -log({start_n}) + {d} > {a}"
        )
    sw = build_sandwich(a, params, spec, start_n)
    rng = generator(master_seed, "sandwich", start_n)
    T = int(trajectories)

    chain_state = np.full(T, start_n, dtype=np.int64)
    chain_rise = np.zeros(T)
    bar_rise = np.zeros(T)
    under_rise = np.zeros(T)
    chain_sum = np.zeros(T)
    bar_sum = np.zeros(T)
    under_sum = np.zeros(T)
    ordered = True
    guard = 0
    while True:
        chain_live = chain_rise < d
        bar_live = bar_rise < d
        under_live = under_rise < d
        if not (chain_live.any() or bar_live.any() or under_live.any()):
            break
        guard += 1
        if guard > _STEP_BUDGET:
            raise StepBudgetExceeded("sandwich runs did not reach their climbs")
        chain_sum[chain_live] += np.exp(-alpha * chain_rise[chain_live])
        bar_sum[bar_live] += np.exp(-alpha * bar_rise[bar_live])
        under_sum[under_live] += np.exp(-alpha * under_rise[under_live])
        u = rng.random(T)
        bar_y = sw.bar_increments(u)
        under_y = sw.under_increments(u)
        nxt = _chain_next_shared_u(
            np.maximum(chain_state, sw.m_min), u, params, spec
        )
        chain_y = np.log(np.maximum(chain_state, sw.m_min) / np.maximum(nxt, 1e-300))
        cl = chain_live  # increments are meaningful only where the chain still moves
        if np.any((chain_y[cl] > bar_y[cl] + 1e-12) | (under_y[cl] > chain_y[cl] + 1e-12)):
            ordered = False
        chain_rise[cl] += chain_y[cl]
        chain_state[cl] = nxt[cl]
        bar_rise[bar_live] += bar_y[bar_live]
        under_rise[under_live] += under_y[under_live]

    def _summ(x: np.ndarray) -> dict:
        return {
            "mean": float(x.mean()),
            "stderr": float(x.std(ddof=1) / math.sqrt(T)),
        }

    return {
        "chain_sum": chain_sum,
        "bar_sum": bar_sum,
        "under_sum": under_sum,
        "chain": _summ(chain_sum),
        "bar": _summ(bar_sum),
        "under": _summ(under_sum),
        "pathwise_ordered": bool(
            ordered
            and np.all(under_sum >= chain_sum - 1e-9)
            and np.all(chain_sum >= bar_sum - 1e-9)
        ),
        "truncation_gap": sw.truncation_gap,
        "trajectories": T,
    }


def occupation_bound(
    a: float,
    start_n: int,
    params: SplitTreeParams,
    spec: SplitterSpec,
    master_seed: int = 0,
    trajectories: int = 10**4,
) -> dict:
    """Expected unit-interval occupation of the chain vs the slow renewal envelope.

    The envelope with the smallest increments visits every window at least as
    often on average, so its maximal unit-interval occupancy bounds the
    chain's. Both are measured empirically on trajectories run down to a.
    """
    sw = build_sandwich(a, params, spec, start_n)
    rng = generator(master_seed, "sandwich", start_n + 1)
    T = int(trajectories)
    v0 = state_value(start_n)
    total = a - v0
    n_bins = max(int(math.floor(total)), 1)

    def _occupancy(rises: list[np.ndarray]) -> np.ndarray:
        # rises: per-step cumulative climb arrays, one entry per step
        counts = np.zeros((T, n_bins))
        for r in rises:
            idx = np.floor(r).astype(np.int64)
            ok = (idx >= 0) & (idx < n_bins)
            counts[np.flatnonzero(ok), idx[ok]] += 1
        return counts

    chain_state = np.full(T, start_n, dtype=np.int64)
    chain_rise = np.zeros(T)
    under_rise = np.zeros(T)
    chain_hist, under_hist = [chain_rise.copy()], [under_rise.copy()]
    guard = 0
    while np.any(chain_rise < total) or np.any(under_rise < total):
        guard += 1
        if guard > _STEP_BUDGET:
            raise StepBudgetExceeded("occupation runs did not finish")
        u = rng.random(T)
        live_c = chain_rise < total
        live_u = under_rise < total
        nxt = _chain_next_shared_u(np.maximum(chain_state, sw.m_min), u, params, spec)
        inc_c = np.log(np.maximum(chain_state, sw.m_min) / np.maximum(nxt, 1e-300))
        chain_rise = np.where(live_c, chain_rise + inc_c, chain_rise)
        chain_state = np.where(live_c, nxt, chain_state)
        under_rise = np.where(live_u, under_rise + sw.under_increments(u), under_rise)
        chain_hist.append(chain_rise.copy())
        under_hist.append(under_rise.copy())
    occ_c = _occupancy(chain_hist)
    occ_u = _occupancy(under_hist)
    u_hat = float(occ_u.mean(axis=0).max())
    u_err = float(occ_u.std(axis=0, ddof=1).max() / math.sqrt(T))
    c_max = float(occ_c.mean(axis=0).max())
    return {
        "u_hat": u_hat,
        "u_hat_stderr": u_err,
        "chain_max_occupation": c_max,
        "within_bound": c_max <= u_hat + 3.0 * u_err,
    }


# ---------------------------------------------------------------------------
# coupling of two stopped chains

def _draw_from_pmf(pmf: np.ndarray, total: float, rng: np.random.Generator) -> int:
    cum = np.cumsum(pmf)
    return int(np.searchsorted(cum, rng.random() * total, side="right"))


def coupling_step(
    x_n: int,
    y_n: int,
    a: float,
    params: SplitTreeParams,
    spec: SplitterSpec,
    rng: np.random.Generator,
) -> tuple[int, int]:
    """One step of the maximal coupling of two stopped chains.

    States at or past the level a hold still. Equal live states draw a single
    transition, so the diagonal is preserved; unequal states draw from the
    overlap of their one-step laws with the maximal probability and move
    together when that happens.
    """
    n1 = level_to_size(a)
    x_stop, y_stop = x_n <= n1, y_n <= n1
    if x_stop and y_stop:
        return x_n, y_n
    if x_n == y_n:
        nx = sample_transition(x_n, params, spec, rng)
        return nx, nx
    px = nu_row(x_n, params, spec) if not x_stop else None
    py = nu_row(y_n, params, spec) if not y_stop else None
    if px is None or py is None:
        if px is not None:
            return _draw_from_pmf(px, 1.0, rng), y_n
        return x_n, _draw_from_pmf(py, 1.0, rng)
    L = max(len(px), len(py))
    pxp = np.zeros(L)
    pyp = np.zeros(L)
    pxp[: len(px)] = px
    pyp[: len(py)] = py
    both = np.minimum(pxp, pyp)
    overlap = float(both.sum())
    if rng.random() < overlap:
        k = _draw_from_pmf(both, overlap, rng)
        return k, k
    rx = pxp - both
    ry = pyp - both
    return (
        _draw_from_pmf(rx, float(rx.sum()), rng),
        _draw_from_pmf(ry, float(ry.sum()), rng),
    )


def coupled_run(
    x_n: int,
    y_n: int,
    a: float,
    params: SplitTreeParams,
    spec: SplitterSpec,
    rng: np.random.Generator,
    step_budget: int = _STEP_BUDGET,
) -> dict:
    """Run the coupled pair until both stop or they meet."""
    n1 = level_to_size(a)
    steps = 0
    while True:
        if x_n == y_n:
            return {"met": True, "steps": steps, "final": (x_n, y_n)}
        if x_n <= n1 and y_n <= n1:
            return {"met": False, "steps": steps, "final": (x_n, y_n)}
        if steps > step_budget:
            raise StepBudgetExceeded("coupled pair ran past the step budget")
        x_n, y_n = coupling_step(x_n, y_n, a, params, spec, rng)
        steps += 1


__all__ = [
    "NuTransition",
    "RenewalSandwich",
    "StoppingRule",
    "Trajectory",
    "build_sandwich",
    "coupled_run",
    "coupling_step",
    "empirical_increment_cdf",
    "expected_visits",
    "level_to_size",
    "limit_increment_cdf",
    "nu_pmf",
    "nu_row",
    "occupation_bound",
    "representation_check",
    "run_chain",
    "sample_transition",
    "sample_transitions",
    "sandwich_run",
    "state_value",
    "stop_after_climb",
    "stop_at_level",
    "stop_at_size",
    "stopped_state_pmf",
    "tv_stopped",
    "tv_stopped_prob",
]
