"""Tree construction: statistics against brute-force oracles, determinism,
edge sizes, and the conditional subtree-size law at the root."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from splitlab._rng import generator
from splitlab.errors import ConfigInvalid, RootNotSplit
from splitlab.splitters import binary_search_tree, median_of, sample_split_vectors
from splitlab.subtree_law import subtree_pmf
from splitlab.trees import (
    SplitTreeParams,
    build_tree,
    default_params,
    path_length,
    root_subtree_sizes,
    simulate_root_sizes,
    simulate_stats,
    tree_to_records,
    wiener_bruteforce,
    wiener_index,
)


def _walk_path_length(tree) -> int:
    # independent recomputation: sum of ball depths straight off the arena
    a = tree.arena
    return int(np.dot(a["ball_count"][: a["n_nodes"]], a["depth"][: a["n_nodes"]]))


@pytest.mark.parametrize("family", ["bst", "med3", "bary3", "dir3", "bb"])
@pytest.mark.parametrize("n", [0, 1, 2, 5, 40, 250])
def test_statistics_match_brute_force(family, n, family_specs, family_params):
    spec = family_specs[family]
    params = family_params[family]
    for rep in range(3):
        rng = generator(7, "test", 100 * rep + n)
        tree = build_tree(params, spec, n, rng)
        assert path_length(tree) == _walk_path_length(tree)
        assert wiener_index(tree) == wiener_bruteforce(tree)


def test_small_trees_have_zero_statistics(family_specs, family_params):
    for family in family_specs:
        spec, params = family_specs[family], family_params[family]
        for n in range(0, params.s + 1):
            tree = build_tree(params, spec, n, generator(1, "test", n))
            assert tree.n == n
            assert path_length(tree) == 0
            assert wiener_index(tree) == 0
            with pytest.raises(RootNotSplit):
                root_subtree_sizes(tree)


def test_ball_and_subtree_counts_are_conserved(family_specs, family_params):
    for family in ("bst", "dir3"):
        spec, params = family_specs[family], family_params[family]
        tree = build_tree(params, spec, 500, generator(3, "test", 0))
        recs = tree_to_records(tree)
        assert sum(r["balls"] for r in recs) == 500
        roots = [r for r in recs if r["parent"] < 0]
        assert len(roots) == 1 and roots[0]["subtree_balls"] == 500
        sizes = root_subtree_sizes(tree)
        assert len(sizes) == params.b
        assert sizes.sum() == 500 - params.s0


def test_bst_mean_path_small_n(rng):
    # E[P_3] = 8/3 for the binary search tree parameters
    spec = binary_search_tree()
    params = default_params(spec)
    sims = simulate_stats(params, spec, 3, 40000, master_seed=11, purpose="test")
    se = sims["path"].std() / np.sqrt(len(sims["path"]))
    assert sims["path"].mean() == pytest.approx(8.0 / 3.0, abs=5 * se)


def test_simulate_stats_deterministic_and_extendable():
    spec = binary_search_tree()
    params = default_params(spec)
    a = simulate_stats(params, spec, 100, 10, master_seed=42)
    b = simulate_stats(params, spec, 100, 10, master_seed=42)
    np.testing.assert_array_equal(a["path"], b["path"])
    np.testing.assert_array_equal(a["wiener"], b["wiener"])
    c = simulate_stats(params, spec, 100, 25, master_seed=42)
    np.testing.assert_array_equal(c["path"][:10], a["path"])
    d = simulate_stats(params, spec, 100, 10, master_seed=43)
    assert not np.array_equal(d["path"], a["path"])


def test_parameter_validation():
    spec = binary_search_tree()
    with pytest.raises(ConfigInvalid):
        SplitTreeParams(b=2, s=1, s0=5, s1=0)  # violates 0 <= s_0 <= s
    with pytest.raises(ConfigInvalid):
        SplitTreeParams(b=2, s=1, s0=0, s1=3)  # violates 0 <= b s_1 <= s + 1 - s_0
    with pytest.raises(ConfigInvalid):
        build_tree(SplitTreeParams(b=3, s=2, s0=2, s1=0), spec, 10, generator(0, "test", 0))


def test_default_params_table(family_specs):
    expected = {
        "bst": (2, 1, 1, 0),
        "med3": (2, 3, 1, 1),
        "bary3": (3, 2, 2, 0),
        "dir3": (3, 4, 2, 0),
        "bb": (2, 3, 1, 1),
    }
    for family, (b, s, s0, s1) in expected.items():
        p = default_params(family_specs[family])
        assert (p.b, p.s, p.s0, p.s1) == (b, s, s0, s1)


@pytest.mark.parametrize("family", ["bst", "med3", "dir3"])
def test_root_subtree_law_matches_exact_pmf(family, family_specs, family_params):
    # GOF of the realized first root-subtree size against its exact law
    spec, params = family_specs[family], family_params[family]
    n, reps = 120, 4000
    draws = simulate_root_sizes(params, spec, n, reps, master_seed=5, purpose="test")
    pmf = subtree_pmf(n, params, spec)
    lo, hi = pmf.support[0], pmf.support[-1]
    assert np.all((draws >= lo) & (draws <= hi))
    # chi-square on quintile bins of the exact law
    edges = np.searchsorted(np.cumsum(pmf.probs), [0.2, 0.4, 0.6, 0.8])
    bins = np.concatenate(([lo - 0.5], pmf.support[edges] + 0.5, [hi + 0.5]))
    observed, _ = np.histogram(draws, bins=bins)
    expected = np.diff([0.0] + list(np.cumsum(pmf.probs)[edges]) + [1.0]) * reps
    chi2 = float(((observed - expected) ** 2 / expected).sum())
    pvalue = stats.chi2.sf(chi2, df=len(observed) - 1)
    assert pvalue > 1e-4, (family, chi2, pvalue)


def test_conditional_binomial_pit_is_uniform():
    # conditional on the root split vector, the first subtree count is
    # s1 + Binomial(eta_n, V_1); randomized PIT values must be uniform
    spec = median_of(1)
    params = default_params(spec)
    n, reps = 200, 1500
    rng = generator(9, "test", 0)
    pit = np.empty(reps)
    for i in range(reps):
        tree = build_tree(params, spec, n, generator(9, "test", i + 1))
        count = int(root_subtree_sizes(tree)[0]) - params.s1
        v = tree.root_split_vector()[0]
        eta = params.eta(n)
        lo = stats.binom.cdf(count - 1, eta, v)
        hi = stats.binom.cdf(count, eta, v)
        pit[i] = lo + rng.random() * (hi - lo)
    res = stats.kstest(pit, "uniform")
    assert res.pvalue > 1e-4, res


@settings(max_examples=25, deadline=None)
@given(n=st.integers(min_value=0, max_value=120), seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_wiener_oracle_agreement_is_universal(n, seed):
    spec = binary_search_tree()
    params = default_params(spec)
    tree = build_tree(params, spec, n, generator(seed, "test", 0))
    assert wiener_index(tree) == wiener_bruteforce(tree)
    assert path_length(tree) == _walk_path_length(tree)
