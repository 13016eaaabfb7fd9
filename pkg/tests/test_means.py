"""Exact mean tables: closed forms, Monte Carlo cross-checks, constant
extraction, and toll-function diagnostics."""

from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest

from splitlab import means
from splitlab.errors import TooLarge
from splitlab.splitters import binary_search_tree, median_of, splitter_moments
from splitlab.trees import default_params, simulate_stats

BST_SPEC = binary_search_tree()
BST_PARAMS = default_params(BST_SPEC)


def test_bst_path_means_match_harmonic_closed_form():
    # E[P_n] = 2 (n+1) H_n - 4 n for the binary search tree parameters
    n_max = 3000
    ep = means.exact_mean_path(n_max, BST_PARAMS, BST_SPEC)
    h = np.concatenate(([0.0], np.cumsum(1.0 / np.arange(1, n_max + 1))))
    n = np.arange(n_max + 1)
    closed = 2.0 * (n + 1) * h - 4.0 * n
    np.testing.assert_allclose(ep, closed, rtol=1e-12, atol=1e-9)
    with mpmath.workdps(40):
        exact_100 = float(2 * 101 * mpmath.harmonic(100) - 400)
    assert ep[100] == pytest.approx(exact_100, rel=1e-13)


def test_tiny_closed_values():
    ep = means.exact_mean_path(5, BST_PARAMS, BST_SPEC)
    assert ep[0] == 0 and ep[1] == 0
    assert ep[2] == pytest.approx(1.0)
    assert ep[3] == pytest.approx(8.0 / 3.0)


@pytest.mark.parametrize("family,n", [("med3", 150), ("bary3", 150), ("bb", 150)])
def test_general_recursion_matches_monte_carlo(family, n, family_specs, family_params):
    spec, params = family_specs[family], family_params[family]
    ep = means.exact_mean_path(n, params, spec)
    sims = simulate_stats(params, spec, n, 20000, master_seed=21, purpose="test")
    se = sims["path"].std() / math.sqrt(len(sims["path"]))
    assert sims["path"].mean() == pytest.approx(ep[n], abs=5 * se)


def test_wiener_mean_matches_monte_carlo():
    n = 120
    table = means.mean_table(n, BST_PARAMS, BST_SPEC)
    sims = simulate_stats(BST_PARAMS, BST_SPEC, n, 20000, master_seed=22, purpose="test")
    se = sims["wiener"].std() / math.sqrt(len(sims["wiener"]))
    assert sims["wiener"].mean() == pytest.approx(table.ew[n], abs=5 * se)


def test_mean_table_flags_and_caps():
    table = means.mean_table(500, BST_PARAMS, BST_SPEC, with_wiener=False)
    assert table.ew is None
    with pytest.raises(TooLarge):
        means.exact_mean_wiener(30000, BST_PARAMS, BST_SPEC)


def test_uniform_path_table_reaches_large_n():
    ep = means.exact_mean_path(10**5, BST_PARAMS, BST_SPEC)
    n = 10**5
    # leading behavior 2 n ln n
    assert ep[n] / (n * math.log(n)) == pytest.approx(2.0, abs=0.3)


def test_leading_coefficient_estimator():
    table = means.mean_table(10**5, BST_PARAMS, BST_SPEC, with_wiener=False)
    slope = means.leading_coefficient(table, kind="path")
    assert slope == pytest.approx(2.0, abs=0.01)


def test_extract_constants_bst():
    table = means.mean_table(8000, BST_PARAMS, BST_SPEC)
    rep = means.extract_constants(table)
    euler_gamma = float(mpmath.euler)
    assert rep.mu_inv == pytest.approx(2.0, abs=1e-12)
    assert rep.c_p == pytest.approx(2 * euler_gamma - 4, abs=0.02)
    # bivariate-map consistency pins 1 + c_p - c_w = 1/(1 - E[sum V^2])
    m = splitter_moments(BST_SPEC)
    c_w_exact = (2 * euler_gamma - 4) + 1 - 1 / (1 - m.sum_ev2)
    assert rep.c_w == pytest.approx(c_w_exact, abs=0.05)
    assert rep.c_p_stderr < 0.02


def test_median_of_three_mu_inv():
    spec = median_of(1)
    params = default_params(spec)
    table = means.mean_table(4000, params, spec, with_wiener=False)
    slope = means.leading_coefficient(table, kind="path")
    assert slope == pytest.approx(12.0 / 7.0, rel=0.01)


def test_toll_functions_decay():
    table = means.mean_table(4000, BST_PARAMS, BST_SPEC, with_wiener=False)
    tolls = means.toll_functions(table, which="path")
    assert tolls["decays"]
    assert tolls["late_max"] < 0.1
