"""Distributional fixed points: Wasserstein machinery, population iteration,
contraction certificates, and moment probes."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate

from splitlab import fixedpoint as fp
from splitlab._rng import generator
from splitlab.errors import ConfigInvalid, DimMismatch
from splitlab.splitters import binary_search_tree, marginal_components, splitter_moments
from splitlab.trees import default_params

BST_SPEC = binary_search_tree()
EULER_GAMMA = 0.5772156649015329
SIGMA2_BST = 7.0 - 2.0 * math.pi**2 / 3.0


# ---------------------------------------------------------------------------
# Wasserstein distance

def test_w2_translation_and_identity():
    x = np.linspace(-2, 3, 1001)
    assert fp.w2_distance(x, x) == 0.0
    assert fp.w2_distance(x, x + 1.5) == pytest.approx(1.5, abs=1e-12)
    assert fp.w2_distance(x, 2 * x) == pytest.approx(
        math.sqrt(np.mean(x**2)), abs=1e-12
    )


def test_w2_unequal_sizes_matches_inverse_cdf_integral(rng):
    a = np.sort(rng.normal(size=400))
    b = np.sort(rng.normal(loc=0.7, scale=1.3, size=233))

    def quantile(sample, t):
        # left-continuous empirical quantile function
        idx = np.minimum((t * len(sample)).astype(np.int64), len(sample) - 1)
        return sample[idx]

    t = (np.arange(2_000_000) + 0.5) / 2_000_000
    brute = math.sqrt(np.mean((quantile(a, t) - quantile(b, t)) ** 2))
    assert fp.w2_distance(a, b) == pytest.approx(brute, abs=2e-3)


def test_w2_dimension_checks():
    with pytest.raises(DimMismatch):
        fp.w2_distance(np.zeros(10), np.zeros((10, 2)))
    with pytest.raises(DimMismatch):
        fp.w2_distance(np.zeros((10, 3)), np.zeros((10, 3)))


def test_w2_2d_translation(rng):
    cloud = rng.normal(size=(3000, 2))
    shifted = cloud + np.array([0.6, -0.8])
    d, spread = fp.w2_distance_with_spread(cloud, shifted, master_seed=1)
    assert d == pytest.approx(1.0, abs=0.08)
    assert spread < 0.1
    same, _ = fp.w2_distance_with_spread(cloud, cloud, master_seed=2)
    # subsample pairing noise keeps the same-cloud value small but nonzero
    assert same < 0.45


# ---------------------------------------------------------------------------
# the 1-d fixed point

def test_zero_toll_iteration_contracts_geometrically():
    dist, curve = fp.fixed_point_1d(
        BST_SPEC, pop_size=2 * 10**4, iters=10, master_seed=5, zero_toll=True, track_w2=True
    )
    # with no toll, variance decays by E[sum V_k^2] = 2/3 per iteration
    assert dist.variance()[0] == pytest.approx((2.0 / 3.0) ** 10, rel=0.35)
    assert len(curve) == 10


def test_fixed_point_1d_reaches_limit_variance():
    dist = fp.fixed_point_1d(BST_SPEC, pop_size=3 * 10**4, iters=30, master_seed=7)
    assert dist.centered
    assert dist.mean()[0] == pytest.approx(0.0, abs=1e-12)
    assert dist.variance()[0] == pytest.approx(SIGMA2_BST, rel=0.05)


def test_fixed_point_population_guard():
    with pytest.raises(ConfigInvalid):
        fp.fixed_point_1d(BST_SPEC, pop_size=100, iters=2)


def test_fixed_point_2d_marginals():
    c_p = 2 * EULER_GAMMA - 4
    c_w = 2 * EULER_GAMMA - 6  # pinned by 1 + c_p - c_w = 1/(1 - E[sum V^2]) = 3
    dist = fp.fixed_point_2d(BST_SPEC, c_p, c_w, pop_size=3 * 10**4, iters=30, master_seed=9)
    assert dist.dim == 2 and dist.samples.shape[1] == 2
    np.testing.assert_allclose(dist.mean(), [0.0, 0.0], atol=1e-12)
    # second coordinate iterates the 1-d path map, so its variance is sigma^2
    assert dist.variance()[1] == pytest.approx(SIGMA2_BST, rel=0.06)
    assert dist.variance()[0] > 0


def test_coefficient_draw_shapes(rng):
    draw = fp.make_coefficient_draw(BST_SPEC, -2.8, -4.8, rng)
    assert draw.v.shape == (2,)
    assert draw.matrices.shape == (2, 2, 2)
    assert draw.offset.shape == (2,)
    # the path row of each matrix is (0, v): applying it to (Y, X) gives v X
    np.testing.assert_allclose(draw.matrices[:, 1, 0], 0.0)
    np.testing.assert_allclose(draw.matrices[:, 1, 1], draw.v)
    assert draw.toll == pytest.approx(1.0 + float(np.sum(draw.v * np.log(draw.v))) / 0.5)


# ---------------------------------------------------------------------------
# contraction certificates

def test_lambda_eigenvalue_is_the_top_eigenvalue():
    for x in (0.2, 0.5, 0.9):
        a = np.array([[x * x, x * (1 - x)], [0.0, x]])
        top = np.linalg.eigvalsh(a.T @ a).max()
        assert fp.lambda_eigenvalue(x) == pytest.approx(top, abs=1e-12)
    grid = np.linspace(1e-6, 1 - 1e-6, 1001)
    lam = fp.lambda_eigenvalue(grid)
    assert np.all(lam < grid)
    assert np.all(lam > 0)


def test_certificates_for_all_families(family_specs):
    frozen = {
        "bst": (0.76319, 2.0 / 3.0),
        "med3": (0.7181, 0.6),
        "bary3": (0.62616, 0.5),
        "dir3": (0.59042, 5.0 / 11.0),
        "bb": (0.76319, 2.0 / 3.0),
    }
    for family, spec in family_specs.items():
        cert = fp.contraction_certificate(spec)
        assert cert["pass"], family
        norm2d, ev2 = frozen[family]
        assert cert["sum_op_norms_2d"] == pytest.approx(norm2d, abs=2e-4), family
        assert cert["sum_ev2_1d"] == pytest.approx(ev2, abs=1e-9), family


def test_certificate_quadrature_against_scipy():
    from scipy import stats as sstats

    total = 0.0
    for w, p, q in marginal_components(BST_SPEC):
        val, _ = integrate.quad(
            lambda x: fp.lambda_eigenvalue(x) * sstats.beta.pdf(x, p, q), 0, 1
        )
        total += w * val
    cert = fp.contraction_certificate(BST_SPEC)
    assert cert["sum_op_norms_2d"] == pytest.approx(BST_SPEC.b * total, abs=1e-9)


# ---------------------------------------------------------------------------
# moment probes

def test_exp_moment_curve_guard_and_values(rng):
    sample = rng.normal(size=5000)
    lam = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    curve = fp.exp_moment_curve(sample, lam)
    assert curve.shape == lam.shape
    assert curve[2] == pytest.approx(1.0, abs=1e-12)
    assert np.all(curve >= 1.0 - 1e-9)  # Jensen, mean approximately 0
    with pytest.raises(ConfigInvalid):
        fp.exp_moment_curve(sample, np.array([2.5]))


def test_tail_probe_guard():
    params = default_params(BST_SPEC)
    with pytest.raises(ConfigInvalid):
        fp.tail_probe(params, BST_SPEC, 1000, 0.1, reps=10**4)


def test_tail_probe_decreases_with_eps():
    # relative deviations of P_n concentrate: the tail mass must drop sharply
    # as the deviation threshold widens (same ensemble size, same n)
    params = default_params(BST_SPEC)
    p_narrow = fp.tail_probe(params, BST_SPEC, 300, 0.10, reps=10**5, master_seed=3)
    p_wide = fp.tail_probe(params, BST_SPEC, 300, 0.25, reps=10**5, master_seed=3)
    assert 0.0 <= p_wide < p_narrow < 0.5
    assert p_wide < 0.01
