#!/usr/bin/env python3
"""
Tests for the limit laws xi_G: series sampling, moments, the closed-form
characteristic functions and the distance helpers.
"""
import math
import os
import sys
from unittest.mock import Mock, patch

import numpy as np
import pytest
from scipy import stats

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import limit_laws
from ensembles import EULER_GAMMA, DomainError, GroupId, ensemble_spec
from limit_laws import (
    XiSampleConfig,
    centered_statistic,
    empirical_cf,
    levy_distance,
    sample_xi,
    sample_xi_batch,
    xi_cf,
    xi_cf_product,
    xi_density_from_cf,
    xi_moments,
    xi_series_variance,
    xi_tail_variance,
    xi_u_cdf,
    xi_u_density,
)

FAMILIES = [GroupId.U, GroupId.SO_ODD, GroupId.SO_EVEN]


def _zero_rng():
    """Generator stand-in whose Gaussians are all zero."""
    rng = Mock()
    rng.standard_normal.side_effect = lambda shape: np.zeros(shape)
    rng.normal.side_effect = lambda loc, scale, size: np.zeros(size)
    return rng


def _harmonic(n):
    return math.fsum(1.0 / k for k in range(1, n + 1))


def test_zero_gaussians_give_minus_two_harmonic():
    """With every Gaussian zero each family's truncated series is -2 H_K."""
    print("\n" + "=" * 70)
    print("Test: sampling hooks")
    print("=" * 70)

    for group in FAMILIES:
        cfg = XiSampleConfig(group=group, k_max=10)
        assert math.isclose(sample_xi(cfg, _zero_rng()), -2 * _harmonic(10), rel_tol=1e-14)
        batch = sample_xi_batch(cfg, _zero_rng(), 3)
        assert np.allclose(batch, -2 * _harmonic(10), rtol=1e-14)
    print("✓ zero Gaussians give -2 H_K")


def test_batch_tail_replacement():
    """Above XI_EXACT_TERMS the remaining terms are one Gaussian draw with the exact tail variance."""
    with patch.object(limit_laws, "XI_EXACT_TERMS", 5):
        rng = _zero_rng()
        cfg = XiSampleConfig(group="so-even", k_max=100)
        out = sample_xi_batch(cfg, rng, 4)
        assert np.allclose(out, -2 * _harmonic(5), rtol=1e-14)
        loc, scale, size = rng.normal.call_args.args
        assert size == 4
        assert math.isclose(scale ** 2, xi_tail_variance("so-even", 6, 100), rel_tol=1e-12)
        assert math.isclose(cfg.gaussian_tail_std, scale, rel_tol=1e-12)
        assert XiSampleConfig(group="so-even", k_max=5).gaussian_tail_std == 0.0
    print("✓ Gaussian tail replacement")


def test_series_variance_limits():
    """The full series variance is sigma_G; partial variances add up."""
    for group in GroupId:
        total = xi_tail_variance(group, 1)
        sigma = ensemble_spec(group, 1).sigma_g
        assert math.isclose(total, sigma, rel_tol=1e-12), f"{group}: {total} vs {sigma}"
        split = xi_series_variance(group, 40) + xi_tail_variance(group, 41)
        assert math.isclose(split, sigma, rel_tol=1e-12)
        assert xi_moments(group) == (0.0, sigma)
    # direct sum of the per-term variances 8/k^2 + 16/k^3 on odd k
    direct = math.fsum(8 / k ** 2 + (16 / k ** 3 if k % 2 else 0.0) for k in range(1, 31))
    assert math.isclose(xi_series_variance("so-odd", 30), direct, rel_tol=1e-12)
    assert xi_tail_variance("u", 5, 4) == 0.0
    with pytest.raises(DomainError):
        xi_tail_variance("u", 0)
    print("✓ series variances")


def test_config_tail_std():
    """tail_std is the truncation standard deviation and stays below the nominal bound."""
    for group in FAMILIES:
        cfg = XiSampleConfig(group=group, k_max=1000)
        assert 0 < cfg.tail_std <= cfg.tail_bound
        assert math.isclose(cfg.tail_std ** 2, xi_tail_variance(group, 1001), rel_tol=1e-14)
    with pytest.raises(DomainError):
        XiSampleConfig(group="u", k_max=0)
    with pytest.raises(DomainError):
        XiSampleConfig(group="u", replicates=0)
    print("✓ XiSampleConfig")


def test_sample_moments():
    """Exact batch draws have mean near 0 and variance near the truncated series variance."""
    for group in FAMILIES:
        cfg = XiSampleConfig(group=group, k_max=500)
        draws = sample_xi_batch(cfg, np.random.default_rng(21), 20_000)
        target = xi_series_variance(group, 500)
        assert abs(np.mean(draws)) < 0.16, f"{group}: mean {np.mean(draws):.4f}"
        assert abs(np.var(draws, ddof=1) / target - 1) < 0.08, f"{group}: variance {np.var(draws):.4f}"
    print("✓ sample moments")


def test_cf_basic_properties():
    """phi(0) = 1, phi(-t) = conj(phi(t)), |phi| <= 1; scalars and arrays both work."""
    ts = np.linspace(-5, 5, 21)
    for group in GroupId:
        assert abs(xi_cf(group, 0.0) - 1.0) < 1e-14
        values = xi_cf(group, ts)
        assert values.shape == ts.shape
        assert np.allclose(values, np.conj(xi_cf(group, -ts)), atol=1e-14)
        assert np.all(np.abs(values) <= 1 + 1e-12)
    with pytest.raises(DomainError):
        xi_cf("u", 51.0)
    print("✓ characteristic function basics")


def test_cf_closed_form_matches_product():
    """The Gamma/digamma closed form equals the long truncated product."""
    for group in GroupId:
        for t in (-1.5, -0.3, 0.7, 2.0):
            closed = xi_cf(group, t)
            product = xi_cf_product(group, t, 1_000_000)
            assert abs(closed - product) < 1e-4, f"{group} t={t}: {closed} vs {product}"
    with pytest.raises(DomainError):
        xi_cf_product("u", 1.0, 0)
    print("✓ closed form matches product")


def test_cf_second_derivative_is_variance():
    """-phi''(0) = sigma_G by central differences (the mean is zero)."""
    h = 1e-3
    for group in FAMILIES:
        second = (xi_cf(group, h) - 2 * xi_cf(group, 0.0) + xi_cf(group, -h)).real / (h * h)
        sigma = ensemble_spec(group, 1).sigma_g
        assert abs(-second - sigma) < 1e-3 * sigma, f"{group}: {-second} vs {sigma}"
        first = (xi_cf(group, h) - xi_cf(group, -h)).imag / (2 * h)
        assert abs(first) < 1e-4, f"{group}: mean {first}"
    print("✓ variance from the characteristic function")


def test_empirical_cf_matches_closed_form():
    """Empirical CF of exact draws tracks the closed form up to Monte Carlo error and truncation."""
    cfg = XiSampleConfig(group="so-odd", k_max=2000)
    draws = sample_xi_batch(cfg, np.random.default_rng(8), 40_000)
    ts = np.array([-1.0, -0.25, 0.5, 1.0])
    deviation = np.max(np.abs(empirical_cf(draws, ts) - xi_cf("so-odd", ts)))
    assert deviation < 0.02 + cfg.tail_std, f"max deviation {deviation:.4f}"
    assert isinstance(empirical_cf(draws, 0.5), complex)
    with pytest.raises(DomainError):
        empirical_cf([], 1.0)
    print(f"✓ empirical CF (max deviation {deviation:.4f})")


def test_xi_u_closed_forms():
    """Density peak value, CDF consistency and Fourier inversion of the U law."""
    assert math.isclose(xi_u_density(-2 * EULER_GAMMA), 0.5 * math.exp(-1), rel_tol=1e-14)
    assert math.isclose(xi_u_cdf(-2 * EULER_GAMMA), math.exp(-1), rel_tol=1e-14)
    xs = np.array([-3.0, -1.0, 0.5, 4.0])
    h = 1e-5
    numeric = (xi_u_cdf(xs + h) - xi_u_cdf(xs - h)) / (2 * h)
    assert np.allclose(numeric, xi_u_density(xs), atol=1e-8)
    inverted = xi_density_from_cf("u", xs)
    assert np.allclose(inverted, xi_u_density(xs), atol=1e-6), f"{inverted} vs {xi_u_density(xs)}"
    print("✓ xi_U density and CDF")


def test_density_from_cf_integrates_to_one():
    """Inverted densities are probability densities with mean zero."""
    xs = np.arange(-15.0, 80.0, 0.25)
    for group in (GroupId.SO_ODD, GroupId.USP):
        f = xi_density_from_cf(group, xs, t_max=30.0, step=0.02)
        assert abs(np.trapezoid(f, xs) - 1.0) < 1e-3, f"{group}: mass {np.trapezoid(f, xs)}"
        assert abs(np.trapezoid(xs * f, xs)) < 1e-2
        assert np.min(f) > -1e-4
    with pytest.raises(DomainError):
        xi_density_from_cf("u", 0.0, t_max=60.0)
    print("✓ inverted densities integrate to one")


def test_levy_distance():
    """Levy distance of one atom at 0 against U[0, 1] is 1/2 and never exceeds KS."""
    uniform = lambda x: np.clip(x, 0.0, 1.0)
    assert abs(levy_distance([0.0], uniform) - 0.5) < 1e-12

    rng = np.random.default_rng(3)
    draws = -2 * EULER_GAMMA - 2 * np.log(-np.log(rng.uniform(size=5000)))
    ks = stats.kstest(draws, xi_u_cdf).statistic
    levy = levy_distance(draws, xi_u_cdf)
    assert 0 <= levy <= ks + 1e-12, f"levy {levy} vs ks {ks}"
    assert ks < 0.035
    with pytest.raises(DomainError):
        levy_distance([], uniform)
    print(f"✓ Levy distance {levy:.4f} <= KS {ks:.4f}")


def test_centered_statistic():
    """The leading-order mean maps to zero."""
    spec = ensemble_spec("so-even", 4)
    w2 = (2 * math.log(spec.n0) + spec.c_g) / spec.n0 ** 2
    assert abs(centered_statistic(spec, w2)) < 1e-12
    print("✓ centered statistic")


def main():
    tests = [
        test_zero_gaussians_give_minus_two_harmonic,
        test_batch_tail_replacement,
        test_series_variance_limits,
        test_config_tail_std,
        test_sample_moments,
        test_cf_basic_properties,
        test_cf_closed_form_matches_product,
        test_cf_second_derivative_is_variance,
        test_empirical_cf_matches_closed_form,
        test_xi_u_closed_forms,
        test_density_from_cf_integrates_to_one,
        test_levy_distance,
        test_centered_statistic,
    ]
    for test in tests:
        test()
    print("\n✓ ALL LIMIT LAW TESTS PASSED")


if __name__ == "__main__":
    main()
