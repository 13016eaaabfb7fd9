"""Acceptance checks: every headline claim of the package, runnable as one suite.

Each check covers one quantitative statement about split trees that the code
must reproduce: exact Wiener identities, mean expansions and their constants,
the variance law, fixed-point convergence, contraction certificates, and the
renewal machinery of the size-biased chain. Heavy inputs (Monte Carlo
ensembles, mean tables, fixed-point populations) are cached on a context and
shared between checks, so the full suite costs one ensemble rather than five.

Checks return structured results; the command-line front end and the test
suite both consume this module, keeping the single source of truth here.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import chain as chain_mod
from . import fixedpoint as fp
from . import means
from ._rng import generator
from .splitters import (
    SplitterSpec,
    binary_search_tree,
    make_splitter,
    splitter_moments,
)
from .subtree_law import mixture_row
from .trees import (
    SplitTreeParams,
    build_tree,
    default_params,
    simulate_stats,
    wiener_bruteforce,
    wiener_index,
)

_EULER_GAMMA = 0.5772156649015328606
_FAMILY_CONFIGS: tuple[tuple[str, dict], ...] = (
    ("binary_search_tree", {}),
    ("median_of", {"k": 1}),
    ("bary_search_tree", {"b": 3}),
    ("dirichlet", {"alpha": (1.5, 1.5, 1.5), "b": 3}),
    ("beta_binary", {"a": 2.0, "c": 1.0}),
)


def _builtin(name: str, **kw) -> tuple[SplitTreeParams, SplitterSpec]:
    if name == "binary_search_tree":
        spec = binary_search_tree()
    elif name == "median_of":
        from .splitters import median_of

        spec = median_of(kw["k"])
    elif name == "bary_search_tree":
        from .splitters import bary_search_tree

        spec = bary_search_tree(kw["b"])
    elif name == "dirichlet":
        from .splitters import dirichlet

        spec = dirichlet(kw["alpha"])
    elif name == "beta_binary":
        from .splitters import beta_binary

        spec = beta_binary(kw["a"], kw["c"])
    else:
        raise ValueError(name)
    return default_params(spec), spec


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    runtime_s: float
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extras = ", ".join(
            f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
            for k, v in self.details.items()
            if not isinstance(v, (list, dict, np.ndarray))
        )
        return f"criterion {self.criterion:2d} [{status}] {self.name}: {extras}"


class VerifyContext:
    """Caches the expensive shared artifacts of the acceptance suite.

    quick mode is a smoke run: it keeps every tolerance but shrinks the tree
    sizes, replicate counts, and trajectory counts to what still resolves the
    targets in well under a minute. The acceptance gate always runs full scale
    at the sizes named in the check docstrings.
    """

    def __init__(self, quick: bool = False, master_seed: int = 20260819):
        self.quick = quick
        self.master_seed = master_seed
        self._cache: dict = {}
        self.bst_params, self.bst_spec = _builtin("binary_search_tree")

    @property
    def ensemble_reps(self) -> int:
        return 2000 if self.quick else 10**4

    @property
    def big_n(self) -> int:
        """Tree size standing in for 1e5 in the Monte Carlo checks."""
        return 3 * 10**4 if self.quick else 10**5

    @property
    def mid_n(self) -> int:
        """Tree size standing in for 3e4 in the Monte Carlo checks."""
        return 2 * 10**4 if self.quick else 3 * 10**4

    @property
    def pop_size(self) -> int:
        return 3 * 10**4 if self.quick else 10**5

    def scale(self, full: int, floor: int = 1) -> int:
        return max(full // 100, floor) if self.quick else full

    def mean_table_bst(self) -> means.MeanTable:
        if "table_bst" not in self._cache:
            self._cache["table_bst"] = means.mean_table(
                10**4, self.bst_params, self.bst_spec
            )
        return self._cache["table_bst"]

    def mean_table_med3(self) -> means.MeanTable:
        if "table_med3" not in self._cache:
            p, s = _builtin("median_of", k=1)
            self._cache["table_med3"] = means.mean_table(10**4, p, s)
        return self._cache["table_med3"]

    def ensemble(self, n: int) -> dict:
        key = ("ens", n)
        if key not in self._cache:
            self._cache[key] = simulate_stats(
                self.bst_params, self.bst_spec, n, self.ensemble_reps, self.master_seed
            )
        return self._cache[key]

    def fixed_point_1d(self) -> fp.EmpiricalDistribution:
        if "fp1" not in self._cache:
            self._cache["fp1"] = fp.fixed_point_1d(
                self.bst_spec,
                pop_size=self.pop_size,
                iters=40,
                master_seed=self.master_seed,
            )
        return self._cache["fp1"]

    def fixed_point_2d(self) -> fp.EmpiricalDistribution:
        if "fp2" not in self._cache:
            c_p = 2 * _EULER_GAMMA - 4
            lam2 = splitter_moments(self.bst_spec).sum_ev2
            c_w = c_p + 1.0 - 1.0 / (1.0 - lam2)
            self._cache["fp2"] = fp.fixed_point_2d(
                self.bst_spec,
                c_p,
                c_w,
                pop_size=self.pop_size,
                iters=40,
                master_seed=self.master_seed,
            )
        return self._cache["fp2"]


# ---------------------------------------------------------------------------
# the twelve checks

def check_wiener_oracle(ctx: VerifyContext) -> CheckResult:
    """Exact integer equality of the pass-based and brute-force Wiener index."""
    t0 = time.time()
    n_top = 60 if ctx.quick else 200
    per_n = 20 if ctx.quick else 100
    mismatches = 0
    trees = 0
    for fam_idx, (name, kw) in enumerate(_FAMILY_CONFIGS):
        params, spec = _builtin(name, **kw)
        rng = generator(ctx.master_seed, "verify", fam_idx)
        for n in range(1, n_top + 1):
            for _ in range(per_n):
                t = build_tree(params, spec, n, rng)
                trees += 1
                if wiener_index(t) != wiener_bruteforce(t):
                    mismatches += 1
    return CheckResult(
        1,
        "wiener index matches brute force",
        mismatches == 0,
        time.time() - t0,
        {"trees": trees, "mismatches": mismatches},
    )


def check_closed_form_means(ctx: VerifyContext) -> CheckResult:
    """Mean path DP against the harmonic-number closed form of the binary family."""
    t0 = time.time()
    table = ctx.mean_table_bst()
    n = np.arange(10**4 + 1, dtype=np.float64)
    harm = np.concatenate([[0.0], np.cumsum(1.0 / n[1:])])
    closed = 2.0 * (n + 1.0) * harm - 4.0 * n
    rel = np.abs(table.ep[2:] - closed[2:]) / np.abs(closed[2:])
    worst = float(rel.max())
    return CheckResult(
        2,
        "exact mean path equals closed form",
        worst < 1e-9,
        time.time() - t0,
        {"max_rel_err": worst},
    )


def check_leading_coefficients(ctx: VerifyContext) -> CheckResult:
    """Leading n log n coefficients of both mean expansions.

    The raw ratio ep[n]/(n log n) at n = 1e4 still carries the second-order
    term c_p/log n (about -0.31 for the binary family), so the coefficient is
    read off by the dyadic slope (ep[n] - 2 ep[n/2])/(n log 2), which cancels
    the linear term exactly. Raw ratios are reported alongside.
    """
    t0 = time.time()
    tb = ctx.mean_table_bst()
    tm = ctx.mean_table_med3()
    n = 10**4
    slope_p = means.leading_coefficient(tb, kind="path")
    slope_w = means.leading_coefficient(tb, kind="wiener")
    slope_m = means.leading_coefficient(tm, kind="path")
    raw_p = float(tb.ep[n] / (n * math.log(n)))
    raw_w = float(tb.ew[n] / (n**2 * math.log(n)))
    target_m = 12.0 / 7.0
    ok = (
        abs(slope_p / 2.0 - 1.0) < 0.03
        and abs(slope_w / 2.0 - 1.0) < 0.05
        and abs(slope_m / target_m - 1.0) < 0.05
    )
    return CheckResult(
        3,
        "leading mean coefficients",
        ok,
        time.time() - t0,
        {
            "path_slope": slope_p,
            "wiener_slope": slope_w,
            "median3_path_slope": slope_m,
            "raw_path_ratio": raw_p,
            "raw_wiener_ratio": raw_w,
        },
    )


def check_second_order_constant(ctx: VerifyContext) -> CheckResult:
    """Windowed tail estimate of the linear correction in the mean path."""
    t0 = time.time()
    report = means.extract_constants(ctx.mean_table_bst())
    truth = 2 * _EULER_GAMMA - 4
    err = abs(report.c_p - truth)
    return CheckResult(
        4,
        "second-order path constant",
        err < 0.01,
        time.time() - t0,
        {"c_p": report.c_p, "target": truth, "abs_err": err, "stderr": report.c_p_stderr},
    )


def check_variance_law(ctx: VerifyContext) -> CheckResult:
    """Var(P_n)/n^2 against the quadrature limit variance (n = 1e5, 1e4 reps)."""
    t0 = time.time()
    n = ctx.big_n
    sims = ctx.ensemble(n)
    sigma2 = splitter_moments(ctx.bst_spec).sigma2
    v = float(sims["path"].astype(np.float64).var(ddof=1) / n**2)
    rel = abs(v / sigma2 - 1.0)
    return CheckResult(
        5,
        "path variance law",
        rel < 0.05,
        time.time() - t0,
        {"var_over_n2": v, "sigma2": sigma2, "rel_gap": rel, "reps": int(sims["reps"])},
    )


def check_fixed_point_convergence(ctx: VerifyContext) -> CheckResult:
    """Empirical path fluctuations against the 1-d fixed point, plus W2 decay.

    The consecutive-iterate W2 ratio is measured on a far-started population
    (spread 10) while the distances stay above ten times the resampling noise
    floor; at the fixed point the ratio is noise over noise and carries no
    information about the map.
    """
    t0 = time.time()
    n = ctx.big_n
    sims = ctx.ensemble(n)
    ep = means.exact_mean_path(n, ctx.bst_params, ctx.bst_spec)[n]
    x_emp = (sims["path"].astype(np.float64) - ep) / n
    dist = ctx.fixed_point_1d()
    w2 = fp.w2_distance(x_emp, dist.samples)
    _, curve = fp.fixed_point_1d(
        ctx.bst_spec,
        pop_size=ctx.pop_size,
        iters=14,
        master_seed=ctx.master_seed + 1,
        start_sd=10.0,
        track_w2=True,
    )
    floor = 20.0 / math.sqrt(ctx.pop_size)
    ratios = [
        float(curve[i] / curve[i - 1])
        for i in range(6, len(curve))
        if curve[i - 1] > floor
    ]
    ratio_ok = bool(ratios) and max(ratios) <= 0.85
    return CheckResult(
        6,
        "fixed-point convergence of path fluctuations",
        w2 < 0.05 and ratio_ok,
        time.time() - t0,
        {"w2_empirical": w2, "max_iterate_ratio": max(ratios) if ratios else float("nan")},
    )


def check_bivariate_limit(ctx: VerifyContext) -> CheckResult:
    """Joint (Wiener, path) fixed point: marginal match and Wiener variance."""
    t0 = time.time()
    d2 = ctx.fixed_point_2d()
    d1 = ctx.fixed_point_1d()
    w2_marginal = fp.w2_distance(d2.samples[:, 1], d1.samples)
    var_y = float(d2.samples[:, 0].var(ddof=1))
    gaps = {}
    ok = w2_marginal < 0.05
    for n in (ctx.mid_n, ctx.big_n):
        sims = ctx.ensemble(n)
        v = float(sims["wiener"].astype(np.float64).var(ddof=1) / float(n) ** 4)
        gaps[f"var_gap_n{n}"] = abs(v / var_y - 1.0)
        ok = ok and abs(v / var_y - 1.0) < 0.10
    return CheckResult(
        7,
        "bivariate limit law",
        ok,
        time.time() - t0,
        {"w2_marginal": w2_marginal, "fp_var_wiener": var_y, **gaps},
    )


def check_contraction_certificate(ctx: VerifyContext) -> CheckResult:
    """Certificates for every built-in family plus the pointwise eigenvalue bound."""
    t0 = time.time()
    worst_norm = 0.0
    worst_ev2 = 0.0
    all_pass = True
    for name, kw in _FAMILY_CONFIGS:
        _, spec = _builtin(name, **kw)
        cert = fp.contraction_certificate(spec)
        worst_norm = max(worst_norm, cert["sum_op_norms_2d"])
        worst_ev2 = max(worst_ev2, cert["sum_ev2_1d"])
        all_pass = all_pass and cert["pass"]
    x = np.linspace(0.0, 1.0, 10**4 + 1)[1:-1]
    pointwise = bool(np.all(fp.lambda_eigenvalue(x) < x))
    return CheckResult(
        8,
        "contraction certificates",
        all_pass and pointwise,
        time.time() - t0,
        {"max_sum_op_norms": worst_norm, "max_sum_ev2": worst_ev2, "pointwise": pointwise},
    )


def check_increment_limit_law(ctx: VerifyContext) -> CheckResult:
    """One-step increment law at a large state against quadrature and closed form."""
    t0 = time.time()
    n = 10**6
    draws = 2 * 10**4 if ctx.quick else 10**5
    y = np.linspace(0.0, 8.0, 321)
    f_quad = chain_mod.limit_increment_cdf(ctx.bst_spec, y)
    f_emp = chain_mod.empirical_increment_cdf(
        n, ctx.bst_params, ctx.bst_spec, y, draws=draws, master_seed=ctx.master_seed
    )
    sup_gap = float(np.abs(f_emp - f_quad).max())
    closed_gap = float(np.abs(f_quad - (1.0 - np.exp(-2.0 * y))).max())
    return CheckResult(
        9,
        "chain increment limit law",
        sup_gap <= 0.02 and closed_gap < 1e-8,
        time.time() - t0,
        {"sup_gap_empirical": sup_gap, "sup_gap_closed_form": closed_gap},
    )


def check_tv_decay(ctx: VerifyContext) -> CheckResult:
    """Total variation between stopped laws shrinks in the start size."""
    t0 = time.time()
    a = -math.log(50.0)
    p, s = ctx.bst_params, ctx.bst_spec
    tv_small = chain_mod.tv_stopped(400, 600, a, p, s)
    tv_big = chain_mod.tv_stopped(4000, 6000, a, p, s)
    tv_far = chain_mod.tv_stopped(5000, 8000, a, p, s)
    ok = tv_big <= tv_small + 1e-15 and tv_far < 0.2
    return CheckResult(
        10,
        "stopped-law total variation decay",
        ok,
        time.time() - t0,
        {"tv_400_600": tv_small, "tv_4000_6000": tv_big, "tv_5000_8000": tv_far},
    )


def check_representation_identity(ctx: VerifyContext) -> CheckResult:
    """Excess mean path as a stopped functional of the size-biased chain."""
    t0 = time.time()
    table = ctx.mean_table_bst()
    toll = means.toll_functions(table, which="path")
    rep = chain_mod.representation_check(
        500,
        20,
        toll["excess"],
        toll["residual"],
        ctx.bst_params,
        ctx.bst_spec,
        master_seed=ctx.master_seed,
        trajectories=ctx.scale(10**6, 10**4),
    )
    return CheckResult(
        11,
        "stopped-functional representation",
        rep["within_4_stderr"] and abs(rep["lhs"] - rep["rhs_exact"]) < 1e-8,
        time.time() - t0,
        {
            "lhs": rep["lhs"],
            "rhs_mc": rep["rhs_mc"],
            "stderr": rep["stderr"],
            "exact_gap": abs(rep["lhs"] - rep["rhs_exact"]),
        },
    )


def check_renewal_sandwich(ctx: VerifyContext) -> CheckResult:
    """Pathwise envelope ordering and start-insensitivity of the renewal sums."""
    t0 = time.time()
    a = -math.log(50.0)
    traj = ctx.scale(10**5, 2000)
    runs = {}
    for idx, start in enumerate((10**4, 10**5)):
        runs[start] = chain_mod.sandwich_run(
            a,
            3.0,
            start,
            ctx.bst_params,
            ctx.bst_spec,
            master_seed=ctx.master_seed + idx,
            trajectories=traj,
        )
    ordered = all(r["pathwise_ordered"] for r in runs.values())
    m1, m2 = runs[10**4]["chain"], runs[10**5]["chain"]
    diff = abs(m1["mean"] - m2["mean"])
    two_se = 2.0 * math.hypot(m1["stderr"], m2["stderr"])
    return CheckResult(
        12,
        "renewal sandwich",
        ordered and diff <= two_se,
        time.time() - t0,
        {"ordered": ordered, "mean_diff": diff, "two_stderr": two_se},
    )


CHECKS = (
    check_wiener_oracle,
    check_closed_form_means,
    check_leading_coefficients,
    check_second_order_constant,
    check_variance_law,
    check_fixed_point_convergence,
    check_bivariate_limit,
    check_contraction_certificate,
    check_increment_limit_law,
    check_tv_decay,
    check_representation_identity,
    check_renewal_sandwich,
)


def run_checks(
    quick: bool = False,
    criteria: list[int] | None = None,
    master_seed: int = 20260819,
) -> list[CheckResult]:
    """Run the selected acceptance checks (all twelve by default), sharing caches."""
    ctx = VerifyContext(quick=quick, master_seed=master_seed)
    wanted = set(criteria) if criteria else set(range(1, len(CHECKS) + 1))
    results = []
    for i, fn in enumerate(CHECKS, start=1):
        if i in wanted:
            results.append(fn(ctx))
    return results


def format_report(results: list[CheckResult]) -> str:
    lines = [r.line() for r in results]
    n_pass = sum(r.passed for r in results)
    lines.append(f"{n_pass}/{len(results)} checks passed")
    return "\n".join(lines)


__all__ = [
    "CheckResult",
    "VerifyContext",
    "CHECKS",
    "format_report",
    "run_checks",
]
