"""Splitter laws: moments against independent oracles, sampling, validation."""

from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from splitlab.errors import ConfigInvalid, UnsupportedSplitter
from splitlab.splitters import (
    SplitterMoments,
    bary_search_tree,
    beta_binary,
    binary_search_tree,
    check_general_assumption,
    dirichlet,
    make_splitter,
    marginal_components,
    median_of,
    mixture_expect,
    restricted_first_moment,
    sample_marginal,
    sample_split_vectors,
    splitter_moments,
)


# ---------------------------------------------------------------------------
# closed-form oracles, recomputed here rather than imported

def test_bst_moments_match_closed_forms():
    m = splitter_moments(binary_search_tree())
    assert m.mu == pytest.approx(0.5, abs=1e-12)
    assert m.ev2 == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert m.sum_ev2 == pytest.approx(2.0 / 3.0, abs=1e-12)
    # E[(V ln V + (1-V) ln(1-V))^2] for V uniform
    cross2 = 5.0 / 6.0 - math.pi**2 / 18.0
    assert m.cross2 == pytest.approx(cross2, abs=1e-10)
    sigma2 = 7.0 - 2.0 * math.pi**2 / 3.0
    assert m.sigma2 == pytest.approx(sigma2, abs=1e-9)


def test_median_of_three_mu():
    # marginal is Beta(2, 2); mu = -2 E[V ln V] = -2 * (-7/24) = 7/12
    m = splitter_moments(median_of(1))
    assert m.mu == pytest.approx(7.0 / 12.0, abs=1e-12)


def test_beta22_marginal_moments_via_mpmath():
    spec = median_of(1)
    with mpmath.workdps(30):
        density = lambda x: 6 * x * (1 - x)
        exact_xlogx = float(mpmath.quad(lambda x: density(x) * x * mpmath.log(x), [0, 1]))
        exact_x2 = float(mpmath.quad(lambda x: density(x) * x**2, [0, 1]))
    assert mixture_expect(spec, lambda x: x * np.log(x)) == pytest.approx(exact_xlogx, abs=1e-12)
    assert mixture_expect(spec, lambda x: x * x) == pytest.approx(exact_x2, abs=1e-12)


@pytest.mark.parametrize(
    "spec",
    [binary_search_tree(), median_of(2), bary_search_tree(4), beta_binary(2.0, 1.0), beta_binary(0.8, 2.5)],
    ids=["bst", "med5", "bary4", "bb21", "bb-sub1"],
)
def test_mixture_expect_against_scipy_quadrature(spec):
    # the marginal is a mixture of Beta(p, q) components
    g = lambda x: np.sqrt(x) * np.log1p(x)
    expect = 0.0
    for w, p, q in marginal_components(spec):
        val, err = integrate.quad(
            lambda x: g(np.asarray(x)) * stats.beta.pdf(x, p, q), 0, 1, limit=200
        )
        expect += w * val
    assert mixture_expect(spec, g) == pytest.approx(expect, abs=1e-9)


@pytest.mark.parametrize("lo", [0.0, 0.1, 0.5, 0.9, 1.0])
def test_restricted_first_moment_matches_quadrature(lo):
    spec = beta_binary(2.0, 1.0)
    expect = 0.0
    for w, p, q in marginal_components(spec):
        val, _ = integrate.quad(lambda x: x * stats.beta.pdf(x, p, q), lo, 1)
        expect += w * val
    assert restricted_first_moment(spec, lo) == pytest.approx(expect, abs=1e-10)


def test_restricted_first_moment_bst_closed_form():
    # uniform marginal: E[V 1{V >= t}] = (1 - t^2) / 2
    spec = binary_search_tree()
    for t in (0.0, 0.25, 0.7, 1.0):
        assert restricted_first_moment(spec, t) == pytest.approx((1 - t * t) / 2, abs=1e-12)


# ---------------------------------------------------------------------------
# sampling

@pytest.mark.parametrize(
    "spec",
    [binary_search_tree(), median_of(1), bary_search_tree(3), dirichlet((1.5, 1.5, 1.5)), beta_binary(2.0, 1.0)],
    ids=["bst", "med3", "bary3", "dir3", "bb"],
)
def test_sampled_vectors_live_on_simplex(spec, rng):
    v = sample_split_vectors(spec, rng, 2000)
    assert v.shape == (2000, spec.b)
    assert np.all(v >= 0)
    np.testing.assert_allclose(v.sum(axis=1), 1.0, atol=1e-12)


@pytest.mark.parametrize(
    "spec",
    [binary_search_tree(), median_of(1), bary_search_tree(3), dirichlet((1.5, 1.5, 1.5)), beta_binary(2.0, 1.0)],
    ids=["bst", "med3", "bary3", "dir3", "bb"],
)
def test_sample_marginal_ks_against_mixture_cdf(spec, rng):
    draws = sample_marginal(spec, rng, 20000)

    def cdf(x):
        total = np.zeros_like(np.asarray(x, dtype=float))
        for w, p, q in marginal_components(spec):
            total += w * stats.beta.cdf(x, p, q)
        return total

    res = stats.kstest(draws, cdf)
    assert res.pvalue > 1e-4, res


def test_sample_moments_match_quadrature(rng):
    spec = dirichlet((2.0, 1.0, 1.5))
    v = sample_split_vectors(spec, rng, 200000)
    m = splitter_moments(spec)
    xlx = np.sum(v * np.log(np.maximum(v, 1e-300)), axis=1)
    assert xlx.mean() == pytest.approx(-m.mu, abs=5 * xlx.std() / np.sqrt(len(xlx)))
    ev2 = (v**2).sum(axis=1)
    assert ev2.mean() == pytest.approx(m.sum_ev2, abs=5 * ev2.std() / np.sqrt(len(ev2)))
    assert np.mean(xlx**2) == pytest.approx(m.cross2, rel=0.02)


# ---------------------------------------------------------------------------
# construction and validation

def test_make_splitter_aliases_and_rejections():
    assert make_splitter("binary_search_tree").b == 2
    assert make_splitter("median_of", params=(2,)).b == 2
    assert make_splitter("bary_search_tree", b=4).b == 4
    with pytest.raises(UnsupportedSplitter):
        make_splitter("trie")
    with pytest.raises(UnsupportedSplitter):
        make_splitter("digital")


def test_invalid_family_parameters_raise():
    with pytest.raises(ConfigInvalid):
        bary_search_tree(1)
    with pytest.raises(ConfigInvalid):
        dirichlet((1.0,))
    with pytest.raises(ConfigInvalid):
        dirichlet((1.0, -2.0))
    with pytest.raises(ConfigInvalid):
        beta_binary(0.0, 1.0)
    with pytest.raises(ConfigInvalid):
        median_of(0)


def test_general_assumption_report():
    rep = check_general_assumption(binary_search_tree())
    assert rep["density_exists"]
    assert rep["mass_near_one_positive"]
    # uniform marginal: P(V > 1 - d) = d exactly
    for d, mass in rep["tail_mass_near_one"].items():
        assert mass == pytest.approx(d, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(
    a=st.floats(min_value=0.3, max_value=5.0),
    c=st.floats(min_value=0.3, max_value=5.0),
    s=st.floats(min_value=0.1, max_value=2.0),
    t=st.floats(min_value=-1.0, max_value=1.0),
)
def test_mixture_expect_is_linear(a, c, s, t):
    spec = beta_binary(a, c)
    f = lambda x: x * x
    g = lambda x: np.log1p(x)
    lhs = mixture_expect(spec, lambda x: s * f(x) + t * g(x))
    rhs = s * mixture_expect(spec, f) + t * mixture_expect(spec, g)
    assert lhs == pytest.approx(rhs, abs=1e-10)


@settings(max_examples=20, deadline=None)
@given(k=st.integers(min_value=1, max_value=6))
def test_median_of_moments_are_consistent(k):
    m = splitter_moments(median_of(k))
    assert isinstance(m, SplitterMoments)
    assert m.mu > 0
    assert 0 < m.sum_ev2 < 1
    # marginal Beta(k+1, k+1): E[V^2] = (k+2) / (4k + 6)
    assert m.ev2 == pytest.approx((k + 2) / (4 * k + 6), abs=1e-10)
