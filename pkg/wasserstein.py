"""
Quadratic Wasserstein distance between an empirical measure on the circle and
the uniform measure, plus the statistics equivalent to it (diaphony and the
L2 norm of the normalized log characteristic polynomial F_A).

The default path is the pairwise closed form
    W2^2 = (1/N0^2) sum_{n,m} b((theta_n - theta_m) mod 2pi),
    b(x) = x^2/2 - pi x + pi^2/3,
which is the Fourier series 2 sum_k |mu_hat(k)|^2 / k^2 summed in closed form.
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from ensembles import TWO_PI, DomainError, EnsembleSpec, check_angles

# Rows of the pairwise difference matrix handled per block
PAIR_BLOCK = 512
# Fourier frequencies handled per block
FOURIER_BLOCK = 4096
# Evaluation points handled per block for F_A
FA_BLOCK = 65536


@dataclass(frozen=True, eq=False)
class SpectralMeasure:
    """Equal-weight atoms on [0, 2pi)."""
    atoms: np.ndarray
    n0: int

    @classmethod
    def from_atoms(cls, atoms: Sequence[float]) -> "SpectralMeasure":
        arr = np.mod(np.array(atoms, dtype=float), TWO_PI)
        # mod can round up to exactly 2pi for tiny negative inputs
        arr[arr >= TWO_PI] = 0.0
        if arr.ndim != 1 or arr.size == 0:
            raise DomainError("a spectral measure needs at least one atom")
        arr.setflags(write=False)
        return cls(atoms=arr, n0=int(arr.size))


class W2Method(str, Enum):
    CLOSED = "closed"
    FOURIER = "fourier"


@dataclass(frozen=True)
class W2Result:
    value: float
    method: W2Method
    tail_bound: float


def _bernoulli_kernel(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * x - math.pi * x + math.pi ** 2 / 3.0


def _require_atoms(measure: SpectralMeasure) -> np.ndarray:
    if measure.n0 < 1 or measure.atoms.size != measure.n0:
        raise DomainError("empty or inconsistent spectral measure")
    return measure.atoms


def fourier_coeff(measure: SpectralMeasure, k: int) -> complex:
    """mu_hat(k) = (1/N0) sum_atoms e^{ik theta}; k = 0 is rejected."""
    if int(k) != k or k == 0:
        raise DomainError(f"fourier_coeff needs a nonzero integer k, got {k}")
    atoms = _require_atoms(measure)
    return complex(np.mean(np.exp(1j * int(k) * atoms)))


def w2sq_closed(measure: SpectralMeasure) -> W2Result:
    """Exact W2^2 by the O(N0^2) pairwise Bernoulli-kernel sum."""
    atoms = _require_atoms(measure)
    row_sums = []
    for start in range(0, atoms.size, PAIR_BLOCK):
        block = atoms[start:start + PAIR_BLOCK]
        diffs = np.mod(block[:, None] - atoms[None, :], TWO_PI)
        row_sums.extend(np.sum(_bernoulli_kernel(diffs), axis=1).tolist())
    value = math.fsum(row_sums) / float(measure.n0) ** 2
    return W2Result(value=max(value, 0.0), method=W2Method.CLOSED, tail_bound=0.0)


def w2sq_fourier(measure: SpectralMeasure, k_max: int) -> W2Result:
    """
    Truncated Fourier series 2 sum_{k<=k_max} |mu_hat(k)|^2 / k^2.

    Since |mu_hat(k)| <= 1 the omitted tail is at most 2 / k_max, and the
    returned value never exceeds the exact one.
    """
    if int(k_max) != k_max or k_max < 1:
        raise DomainError(f"k_max must be a positive integer, got {k_max}")
    atoms = _require_atoms(measure)
    partial = []
    for start in range(1, int(k_max) + 1, FOURIER_BLOCK):
        k = np.arange(start, min(start + FOURIER_BLOCK, int(k_max) + 1), dtype=float)
        coeffs = np.mean(np.exp(1j * np.outer(k, atoms)), axis=1)
        partial.extend((np.abs(coeffs) ** 2 / (k * k)).tolist())
    return W2Result(value=2.0 * math.fsum(partial), method=W2Method.FOURIER, tail_bound=2.0 / k_max)


def diaphony(measure: SpectralMeasure) -> float:
    """Periodic L2 discrepancy: W2 / (sqrt(2) pi)."""
    return math.sqrt(w2sq_closed(measure).value) / (math.sqrt(2.0) * math.pi)


def fa_l2norm(measure: SpectralMeasure) -> float:
    """||F_A||_{L2} = N0 * W2."""
    return measure.n0 * math.sqrt(w2sq_closed(measure).value)


def fa_eval(measure: SpectralMeasure, x) -> np.ndarray:
    """F_A(e^{ix}) = sum_atoms log(1 - e^{i(theta - x)}), principal branch."""
    atoms = _require_atoms(measure)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(xs.shape, dtype=complex)
    flat_x = xs.reshape(-1)
    flat_out = out.reshape(-1)
    for start in range(0, flat_x.size, FA_BLOCK):
        chunk = flat_x[start:start + FA_BLOCK]
        phases = np.exp(1j * (atoms[None, :] - chunk[:, None]))
        flat_out[start:start + FA_BLOCK] = np.sum(np.log(1.0 - phases), axis=1)
    return out if np.ndim(x) else complex(out[0])


def fa_l2norm_quadrature(measure: SpectralMeasure, nodes: int) -> float:
    """
    Midpoint-rule estimate of the norm reported by fa_l2norm.

    F_A only has negative frequencies, so the plain L2 norm of F_A is
    N0 W2 / sqrt(2); the estimate is scaled by sqrt(2) to the two-sided
    norm N0 W2. The log singularities are integrable.
    """
    if nodes < 1:
        raise DomainError(f"nodes must be positive, got {nodes}")
    grid = TWO_PI * (np.arange(nodes) + 0.5) / nodes
    values = fa_eval(measure, grid)
    return math.sqrt(2.0 * float(np.mean(np.abs(values) ** 2)))


def fa_fourier_coeff(measure: SpectralMeasure, k: int) -> complex:
    """(1/2pi) int F_A(e^{ix}) e^{-ikx} dx: N0 mu_hat(-k) / k for k < 0, zero for k > 0."""
    if int(k) != k or k == 0:
        raise DomainError(f"fa_fourier_coeff needs a nonzero integer k, got {k}")
    if k > 0:
        return 0j
    return measure.n0 * fourier_coeff(measure, -k) / k


def w2sq_from_angles(spec: EnsembleSpec, angles) -> float:
    """W2^2 of the spectral measure built from raw eigen-angles of a group in `spec`."""
    arr = check_angles(spec, angles)
    if arr.ndim != 1 or arr.size != spec.n:
        raise DomainError(f"expected {spec.n} angles, got shape {arr.shape}")
    atoms = arr if spec.is_unitary else np.concatenate([arr, TWO_PI - arr])
    return w2sq_closed(SpectralMeasure.from_atoms(atoms)).value
