#!/usr/bin/env python3
"""
Tests for the eigen-angle sampler and the Haar matrix sampler.
"""
import math
import os
import sys

import numpy as np
import pytest
from scipy import integrate, stats

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from dpp_sampler import (
    AngleSample,
    SamplingError,
    UnsupportedGroupError,
    angle_power_sums,
    angles_to_spectral_measure,
    sample_angles,
    sample_haar_matrix,
    traces,
)
from ensembles import GroupId, ensemble_spec, kernel_diagonal
from pi_oracle import PiArgs, pi_closed
from rng_streams import replicate_rng


def _rotation_blocks(angles, extra=()):
    """Block-diagonal real matrix with 2x2 rotations by each angle, then the extra diagonal entries."""
    dim = 2 * len(angles) + len(extra)
    m = np.zeros((dim, dim))
    for i, t in enumerate(angles):
        c, s = math.cos(t), math.sin(t)
        m[2 * i:2 * i + 2, 2 * i:2 * i + 2] = [[c, -s], [s, c]]
    for j, v in enumerate(extra):
        m[2 * len(angles) + j, 2 * len(angles) + j] = v
    return m


def test_sample_shape_and_determinism():
    """N sorted angles in the interval; the same rng seed gives the same sample."""
    print("\n" + "=" * 70)
    print("Test: sample_angles shape and determinism")
    print("=" * 70)

    for group in GroupId:
        spec = ensemble_spec(group, 7)
        s1 = sample_angles(spec, replicate_rng(3, 11), seed_path=(3, 11))
        s2 = sample_angles(spec, replicate_rng(3, 11), seed_path=(3, 11))
        a, b = spec.interval
        assert s1.angles.shape == (7,)
        assert np.all(np.diff(s1.angles) >= 0.0), "angles should be sorted"
        assert np.all((s1.angles >= a) & (s1.angles <= b))
        assert np.array_equal(s1.angles, s2.angles), f"{group}: not deterministic"
        assert s1.to_json()["replicate"] == 11 and len(s1.to_json()["angles"]) == 7
    print("✓ shapes, interval and determinism")


def test_unitary_single_point_is_uniform():
    """For U with N = 1 the single angle is uniform on [0, 2pi)."""
    spec = ensemble_spec("u", 1)
    draws = np.array([sample_angles(spec, replicate_rng(0, r)).angles[0] for r in range(2000)])
    ks = stats.kstest(draws, stats.uniform(loc=0.0, scale=2 * math.pi).cdf).statistic
    assert ks < 0.05, f"KS {ks:.4f} too large for a uniform angle"
    print(f"✓ U(1) angle uniform (KS {ks:.4f})")


def test_symplectic_single_point_density():
    """USP with N = 1 has density 2 sin^2 x, so E cos(2 theta) = -1/2."""
    spec = ensemble_spec("usp", 1)
    draws = np.array([sample_angles(spec, replicate_rng(1, r)).angles[0] for r in range(4000)])
    mean = float(np.mean(np.cos(2 * draws)))
    assert abs(mean + 0.5) < 0.04, f"E cos(2 theta) = {mean:.4f}, expected -0.5"
    print(f"✓ USP(1) one-point density (E cos 2θ = {mean:.4f})")


def test_odd_orthogonal_single_point_density():
    """SO_ODD with N = 1: density (1 - cos x)/pi on [0, pi], CDF (x - sin x)/pi."""
    spec = ensemble_spec("so-odd", 1)
    draws = np.array([sample_angles(spec, replicate_rng(8, r)).angles[0] for r in range(4000)])
    ks = stats.kstest(draws, lambda x: (x - np.sin(x)) / math.pi).statistic
    assert ks < 0.03, f"KS {ks:.4f} against (1 - cos x)/pi"
    below = float(np.mean(draws < math.pi / 2))
    expected = (math.pi / 2 - 1.0) / math.pi
    assert abs(below - expected) < 4 * math.sqrt(expected * (1 - expected) / draws.size)
    print(f"✓ SO_ODD(1) density (KS {ks:.4f}, P(x < pi/2) = {below:.4f})")


def _arc_counts(spec, lo, hi, reps, seed):
    return np.array([
        np.count_nonzero((s.angles >= lo) & (s.angles <= hi))
        for s in (sample_angles(spec, replicate_rng(seed, r)) for r in range(reps))
    ])


def _expected_count(spec, lo, hi):
    a, b = spec.interval
    value, _ = integrate.quad(lambda x: float(kernel_diagonal(spec, np.array([x]))[0]), lo, hi, epsabs=1e-12)
    return value / (b - a)


def test_one_point_intensity():
    """Mean count in a subinterval equals the integral of K(x, x) over it, within 4 standard errors."""
    cases = [("u", 8, 0.0, math.pi / 2), ("so-even", 3, 0.0, math.pi / 3),
             ("so-odd", 4, 1.0, 2.5), ("usp", 5, 0.2, 1.1)]
    for group, n, lo, hi in cases:
        spec = ensemble_spec(group, n)
        counts = _arc_counts(spec, lo, hi, 3000, seed=21)
        expected = _expected_count(spec, lo, hi)
        se = counts.std(ddof=1) / math.sqrt(counts.size)
        assert abs(counts.mean() - expected) < 4 * se, f"{group} n={n}: {counts.mean():.4f} vs {expected:.4f}"
    assert math.isclose(_expected_count(ensemble_spec("u", 8), 0.0, math.pi / 2), 2.0, rel_tol=1e-10)
    print("✓ one-point intensity")


@pytest.mark.slow
def test_one_point_intensity_full_size():
    """U, N = 8, 10^5 replicates: mean count in [0, pi/2] is 2 within 3 standard errors."""
    counts = _arc_counts(ensemble_spec("u", 8), 0.0, math.pi / 2, 100_000, seed=22)
    se = counts.std(ddof=1) / math.sqrt(counts.size)
    assert abs(counts.mean() - 2.0) < 3 * se, f"mean count {counts.mean():.4f}"
    print(f"✓ U(8) arc count {counts.mean():.4f}")


def test_exchangeable_after_relabeling():
    """Randomly relabeled points: the first and last labels share one law and ranks are uniform."""
    spec = ensemble_spec("so-even", 4)
    relabel = np.random.default_rng(30)
    first, last, ranks = [], [], []
    for r in range(3000):
        angles = relabel.permutation(sample_angles(spec, replicate_rng(30, r)).angles)
        first.append(angles[0])
        last.append(angles[-1])
        ranks.append(int(np.sum(angles < angles[0])))
    assert stats.ks_2samp(first, last).pvalue > 1e-3
    observed = np.bincount(ranks, minlength=spec.n)
    assert stats.chisquare(observed).pvalue > 1e-3, f"rank counts {observed}"
    print("✓ exchangeable after relabeling")


def test_cosine_sums_match_pi_closed():
    """Mean of sum_n cos(k theta_n) equals Pi(k), within 4 standard errors."""
    for group, n in (("so-odd", 3), ("so-even", 3), ("usp", 2), ("o-minus", 3)):
        spec = ensemble_spec(group, n)
        samples = [sample_angles(spec, replicate_rng(40, r)).angles for r in range(3000)]
        for k in range(1, 2 * n + 2):
            values = np.array([np.sum(np.cos(k * a)) for a in samples])
            expected = float(pi_closed(PiArgs.of(spec, k)))
            se = values.std(ddof=1) / math.sqrt(values.size)
            assert abs(values.mean() - expected) < 4 * se + 1e-12, \
                f"{group} n={n} k={k}: {values.mean():.4f} vs {expected}"
    print("✓ cosine sums match Pi(k)")


def test_unitary_pair_moment():
    """U with N = 2: E|e^{i t1} + e^{i t2}|^2 = min(1, 2) = 1 (independent angles would give 2)."""
    spec = ensemble_spec("u", 2)
    vals = [abs(np.sum(np.exp(1j * sample_angles(spec, replicate_rng(2, r)).angles))) ** 2 for r in range(4000)]
    mean = float(np.mean(vals))
    assert abs(mean - 1.0) < 0.08, f"E|Tr A|^2 = {mean:.4f}, expected 1"
    print(f"✓ U(2) repulsion visible in E|Tr A|^2 = {mean:.4f}")


def test_rejection_cap():
    """A zero proposal cap raises SamplingError with diagnostics."""
    spec = ensemble_spec("so-even", 3)
    with pytest.raises(SamplingError) as info:
        sample_angles(spec, replicate_rng(0, 5), seed_path=(0, 5), max_iterations=0)
    diag = info.value.diagnostics
    assert diag["group"] == "so-even" and diag["step"] == 0 and diag["replicate"] == 5
    print("✓ SamplingError carries diagnostics")


def test_spectral_measure_reflection():
    """Real families reflect every angle: 2N atoms, symmetric under theta -> 2pi - theta."""
    spec = ensemble_spec("so-odd", 4)
    sample = sample_angles(spec, replicate_rng(9, 0))
    measure = angles_to_spectral_measure(sample)
    assert measure.n0 == 8
    atoms = np.sort(measure.atoms)
    assert np.allclose(np.sort(np.mod(2 * math.pi - atoms, 2 * math.pi)), atoms, atol=1e-12)
    u = ensemble_spec("u", 4)
    assert angles_to_spectral_measure(sample_angles(u, replicate_rng(9, 0))).n0 == 4
    print("✓ spectral measure")


def test_power_sums_match_explicit_matrices():
    """angle_power_sums equals Tr A^k of the block matrix with the same angles, signs included."""
    angles = np.array([0.4, 1.3, 2.9])
    cases = {
        GroupId.SO_EVEN: _rotation_blocks(angles),
        GroupId.SO_ODD: _rotation_blocks(angles, extra=(1.0,)),
        GroupId.O_ODD: -_rotation_blocks(angles, extra=(1.0,)),
        GroupId.O_MINUS: _rotation_blocks(angles, extra=(1.0, -1.0)),
        GroupId.USP: _rotation_blocks(angles),
    }
    for group, matrix in cases.items():
        sample = AngleSample(spec=ensemble_spec(group, 3), angles=angles)
        ours = angle_power_sums(sample, 5)
        expected = np.array(traces(matrix, 5))
        assert np.allclose(ours, expected, atol=1e-12), f"{group}: {ours} vs {expected}"

    u_angles = np.array([0.2, 4.0])
    sample = AngleSample(spec=ensemble_spec("u", 2), angles=u_angles)
    assert np.allclose(angle_power_sums(sample, 3), traces(np.diag(np.exp(1j * u_angles)), 3))
    with pytest.raises(ValueError):
        angle_power_sums(sample, 0)
    print("✓ power sums match explicit matrices")


def test_haar_matrices():
    """Dimensions, orthogonality/unitarity and determinant of each supported group."""
    rng = np.random.default_rng(12)
    expected = {
        GroupId.U: (3, None),
        GroupId.SO_ODD: (7, 1.0),
        GroupId.O_ODD: (7, -1.0),
        GroupId.SO_EVEN: (6, 1.0),
        GroupId.O_MINUS: (8, -1.0),
    }
    for group, (dim, det) in expected.items():
        m = sample_haar_matrix(group, 3, rng)
        assert m.dim == dim and m.entries.shape == (dim, dim)
        assert np.allclose(m.entries.conj().T @ m.entries, np.eye(dim), atol=1e-12)
        if det is not None:
            assert math.isclose(np.linalg.det(m.entries), det, abs_tol=1e-10), f"{group}: det"
    for group in (GroupId.USP, GroupId.SU):
        with pytest.raises(UnsupportedGroupError):
            sample_haar_matrix(group, 3, rng)
    print("✓ Haar matrices")


def test_haar_unitary_trace_moment():
    """E|Tr U|^2 = 1 for Haar U(3)."""
    rng = np.random.default_rng(4)
    vals = [abs(traces(sample_haar_matrix("u", 3, rng), 1)[0]) ** 2 for _ in range(4000)]
    mean = float(np.mean(vals))
    assert abs(mean - 1.0) < 0.08, f"E|Tr U|^2 = {mean:.4f}"
    print(f"✓ Haar U(3) trace moment {mean:.4f}")


def test_traces_identity():
    """Tr I^k = dim."""
    assert traces(np.eye(4), 3) == [4.0, 4.0, 4.0]
    with pytest.raises(ValueError):
        traces(np.eye(2), 0)
    print("✓ traces")


def main():
    tests = [
        test_sample_shape_and_determinism,
        test_unitary_single_point_is_uniform,
        test_symplectic_single_point_density,
        test_odd_orthogonal_single_point_density,
        test_one_point_intensity,
        test_one_point_intensity_full_size,
        test_exchangeable_after_relabeling,
        test_cosine_sums_match_pi_closed,
        test_unitary_pair_moment,
        test_rejection_cap,
        test_spectral_measure_reflection,
        test_power_sums_match_explicit_matrices,
        test_haar_matrices,
        test_haar_unitary_trace_moment,
        test_traces_identity,
    ]
    for test in tests:
        test()
    print("\n✓ ALL SAMPLER TESTS PASSED")


if __name__ == "__main__":
    main()
