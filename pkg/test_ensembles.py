#!/usr/bin/env python3
"""
Tests for the group registry: spec fields, aliases, kernels and the
equispaced interval rule.
"""
import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from ensembles import (
    C_EVEN,
    C_ODD,
    C_UNITARY,
    SIGMA_EVEN,
    SIGMA_ODD,
    SIGMA_UNITARY,
    DomainError,
    GroupId,
    KernelKind,
    basis_eval,
    check_angles,
    ensemble_spec,
    feature_map,
    interval_rule,
    kernel_diagonal,
    kernel_eval,
    kernel_sup,
)

ALL_GROUPS = list(GroupId)


def test_spec_table():
    """N0, trivial eigenvalues, kernel kind and constants for every group."""
    print("\n" + "=" * 70)
    print("Test: ensemble_spec table")
    print("=" * 70)

    expected = {
        GroupId.U: (5, (), KernelKind.EXP, C_UNITARY, SIGMA_UNITARY, GroupId.U),
        GroupId.SU: (5, (), KernelKind.EXP, C_UNITARY, SIGMA_UNITARY, GroupId.U),
        GroupId.SO_ODD: (10, (1,), KernelKind.SIN_HALF, C_ODD, SIGMA_ODD, GroupId.SO_ODD),
        GroupId.O_ODD: (10, (-1,), KernelKind.SIN_HALF, C_ODD, SIGMA_ODD, GroupId.SO_ODD),
        GroupId.SO_EVEN: (10, (), KernelKind.COS, C_EVEN, SIGMA_EVEN, GroupId.SO_EVEN),
        GroupId.O_MINUS: (10, (1, -1), KernelKind.SIN, C_EVEN, SIGMA_EVEN, GroupId.USP),
        GroupId.USP: (10, (), KernelKind.SIN, C_EVEN, SIGMA_EVEN, GroupId.USP),
    }
    for group, (n0, trivial, kind, c_g, sigma_g, sampled_as) in expected.items():
        spec = ensemble_spec(group, 5)
        assert spec.n0 == n0, f"{group}: n0 {spec.n0}"
        assert spec.trivial == trivial, f"{group}: trivial {spec.trivial}"
        assert spec.kernel.family is kind and spec.kernel.rank == 5
        assert spec.c_g == c_g and spec.sigma_g == sigma_g
        assert spec.sampled_as is sampled_as
        assert spec.interval[1] == (2 * math.pi if kind is KernelKind.EXP else math.pi)
    print("✓ spec table correct for all seven groups")


def test_limit_constants():
    """c_G and sigma_G numeric values."""
    assert math.isclose(C_UNITARY, 3.1544313298030657, rel_tol=1e-14)
    assert math.isclose(SIGMA_UNITARY, 6.579736267392906, rel_tol=1e-14)
    assert math.isclose(SIGMA_ODD - SIGMA_EVEN, 12 * 1.2020569031595943, rel_tol=1e-14)
    assert math.isclose(C_ODD - C_EVEN, math.pi ** 2 / 6, rel_tol=1e-14)
    print("✓ limit constants")


def test_group_parsing_and_domain():
    """CLI strings parse case-insensitively; bad groups and n < 1 raise DomainError."""
    assert GroupId.parse("SO_ODD") is GroupId.SO_ODD
    assert GroupId.parse(" usp ") is GroupId.USP
    with pytest.raises(DomainError):
        GroupId.parse("sp")
    with pytest.raises(DomainError):
        ensemble_spec("u", 0)
    with pytest.raises(DomainError):
        ensemble_spec("u", 2.5)
    print("✓ parsing and n validation")


def test_basis_is_orthonormal():
    """The interval rule integrates phi_i conj(phi_j) to the identity."""
    for group in ALL_GROUPS:
        spec = ensemble_spec(group, 6)
        nodes, weights = interval_rule(spec, 64)
        phi = feature_map(spec, nodes)
        gram = (phi * weights[:, None]).T @ phi.conj()
        assert np.allclose(gram, np.eye(6), atol=1e-12), f"{group}: basis not orthonormal"
    print("✓ basis orthonormal under the interval rule")


def test_kernel_consistency():
    """kernel_eval, kernel_diagonal and basis_eval agree; the diagonal stays below kernel_sup."""
    rng = np.random.default_rng(7)
    for group in ALL_GROUPS:
        spec = ensemble_spec(group, 4)
        a, b = spec.interval
        x = rng.uniform(a, b, 50)
        y = rng.uniform(a, b, 50)
        direct = sum(basis_eval(spec, j, x) * np.conj(basis_eval(spec, j, y)) for j in range(4))
        assert np.allclose(kernel_eval(spec, x, y), direct, atol=1e-12)
        diag = kernel_diagonal(spec, x)
        assert np.allclose(diag, np.real(kernel_eval(spec, x, x)), atol=1e-12)
        assert np.all(diag <= kernel_sup(spec) + 1e-12), f"{group}: diagonal above sup"
        # Hermitian / symmetric
        assert np.allclose(kernel_eval(spec, x, y), np.conj(kernel_eval(spec, y, x)), atol=1e-12)
    u = ensemble_spec("u", 3)
    assert math.isclose(kernel_diagonal(u, np.array([1.234]))[0], 3.0, rel_tol=1e-12)
    print("✓ kernels consistent")


def test_sin_half_kernel_closed_form():
    """SIN_HALF kernel equals the Dirichlet-type closed form on the interval."""
    spec = ensemble_spec("so-odd", 3)
    x, y = 0.7, 2.1
    expected = sum(2 * math.sin((2 * j + 1) * x / 2) * math.sin((2 * j + 1) * y / 2) for j in range(3))
    assert math.isclose(kernel_eval(spec, x, y), expected, rel_tol=1e-12)
    print("✓ SIN_HALF kernel")


def test_angle_checks():
    """Angles outside the interval raise; endpoints pass."""
    spec = ensemble_spec("usp", 2)
    check_angles(spec, [0.0, math.pi])
    with pytest.raises(DomainError):
        check_angles(spec, [3.5])
    with pytest.raises(DomainError):
        basis_eval(spec, 2, 0.3)
    with pytest.raises(DomainError):
        interval_rule(spec, 0)
    print("✓ angle and index checks")


def test_interval_rule_weights():
    """Weights sum to one and integrate a low-degree cosine polynomial exactly."""
    spec = ensemble_spec("so-even", 2)
    nodes, weights = interval_rule(spec, 10)
    assert nodes.size == 11 and math.isclose(weights.sum(), 1.0, rel_tol=1e-14)
    assert abs(np.sum(weights * np.cos(4 * nodes) ** 2) - 0.5) < 1e-14
    u = ensemble_spec("u", 2)
    nodes, weights = interval_rule(u, 10)
    assert nodes.size == 10 and abs(np.sum(weights * np.exp(3j * nodes))) < 1e-14
    print("✓ interval rule")


def main():
    tests = [
        test_spec_table,
        test_limit_constants,
        test_group_parsing_and_domain,
        test_basis_is_orthonormal,
        test_kernel_consistency,
        test_sin_half_kernel_closed_form,
        test_angle_checks,
        test_interval_rule_weights,
    ]
    for test in tests:
        test()
    print("\n✓ ALL ENSEMBLE TESTS PASSED")


if __name__ == "__main__":
    main()
