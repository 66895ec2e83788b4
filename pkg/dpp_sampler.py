"""
Samplers for the nontrivial eigen-angles.

sample_angles draws the rank-N projection determinantal process exactly by
sequential conditional sampling: at step i the next angle has density
(K(x,x) - |projection of phi(x) onto the chosen span|^2) / (N - i) with
respect to the normalized Lebesgue measure, drawn by rejection from a uniform
envelope, after which its feature vector is orthonormalized into the span.

sample_haar_matrix is an independent matrix-level sampler (QR of a Gaussian
matrix with phase correction) used for trace cross-checks.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from decouple import config
from scipy.linalg import qr

from ensembles import EnsembleSpec, GroupId, TWO_PI, feature_map, kernel_sup
from wasserstein import SpectralMeasure

logger = logging.getLogger(__name__)

REJECTION_CAP = config("REJECTION_CAP", default=1_000_000, cast=int)
REJECTION_BATCH = config("REJECTION_BATCH", default=32, cast=int)


class SamplingError(RuntimeError):
    """Raised when the rejection loop exceeds its proposal cap."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class UnsupportedGroupError(ValueError):
    """Raised when an operation has no implementation for the requested group."""
    pass


@dataclass(frozen=True, eq=False)
class AngleSample:
    spec: EnsembleSpec
    angles: np.ndarray
    seed_path: Tuple[Optional[int], Optional[int]] = (None, None)

    def to_json(self) -> Dict[str, Any]:
        return {
            "group": self.spec.group.value,
            "n": self.spec.n,
            "seed": self.seed_path[0],
            "replicate": self.seed_path[1],
            "angles": [float(a) for a in self.angles],
        }


@dataclass(frozen=True, eq=False)
class HaarMatrix:
    group: GroupId
    dim: int
    entries: np.ndarray = field(repr=False)


def sample_angles(
    spec: EnsembleSpec,
    rng: np.random.Generator,
    *,
    seed_path: Tuple[Optional[int], Optional[int]] = (None, None),
    max_iterations: Optional[int] = None,
    sort: bool = True,
) -> AngleSample:
    """
    Draw one configuration of the N nontrivial eigen-angles.

    Args:
        spec: Ensemble to sample
        rng: numpy Generator (consumed)
        seed_path: (seed, replicate) recorded on the sample
        max_iterations: Proposal cap per point (default REJECTION_CAP)
        sort: Return angles ascending (False keeps generation order)

    Returns:
        AngleSample with spec.n angles in the group interval

    Raises:
        SamplingError: if a point needs more than max_iterations proposals
    """
    n = spec.n
    a, b = spec.interval
    cap = REJECTION_CAP if max_iterations is None else int(max_iterations)
    sup = kernel_sup(spec)
    basis = np.zeros((n, n), dtype=complex if spec.is_unitary else float)
    angles = np.empty(n)

    for i in range(n):
        used = basis[:i]
        proposals = 0
        pick = -1
        while pick < 0:
            if proposals >= cap:
                raise SamplingError(
                    f"rejection cap of {cap} proposals exceeded at point {i} "
                    f"for {spec.group.value} n={n}",
                    {
                        "group": spec.group.value,
                        "n": n,
                        "step": i,
                        "proposals": proposals,
                        "seed": seed_path[0],
                        "replicate": seed_path[1],
                    },
                )
            size = min(REJECTION_BATCH, cap - proposals)
            x = rng.uniform(a, b, size)
            u = rng.uniform(0.0, sup, size)
            phi = feature_map(spec, x)
            weight = np.sum(np.abs(phi) ** 2, axis=1)
            if i:
                coords = phi @ used.conj().T
                weight = weight - np.sum(np.abs(coords) ** 2, axis=1)
            hits = np.flatnonzero(u < weight)
            if hits.size:
                pick = int(hits[0])
                proposals += pick + 1
            else:
                proposals += size

        residual = phi[pick]
        # two Gram-Schmidt passes keep the span orthonormal to rounding
        for _ in range(2 if i else 0):
            residual = residual - (residual @ used.conj().T) @ used
        basis[i] = residual / np.linalg.norm(residual)
        angles[i] = x[pick]
        logger.debug("point %d accepted after %d proposals", i, proposals)

    if sort:
        angles = np.sort(angles)
    angles.setflags(write=False)
    return AngleSample(spec=spec, angles=angles, seed_path=seed_path)


def angles_to_spectral_measure(sample: AngleSample) -> SpectralMeasure:
    """U/SU: the angles; other groups: the angles together with their reflections 2pi - theta."""
    if sample.spec.is_unitary:
        return SpectralMeasure.from_atoms(sample.angles)
    return SpectralMeasure.from_atoms(np.concatenate([sample.angles, TWO_PI - sample.angles]))


def angle_power_sums(sample: AngleSample, k_max: int) -> np.ndarray:
    """
    Traces Tr A^k, k = 1..k_max, reconstructed from the eigen-angles.

    The trivial eigenvalues contribute sum t^k; the nontrivial ones
    contribute sum e^{ik theta} (U) or 2 sum cos(k theta) (other groups).
    O_ODD angles come from the SO_ODD process, and the matrix they stand for
    is -A with A in SO(2N+1), so its nontrivial part picks up (-1)^k.
    """
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    k = np.arange(1, k_max + 1)
    trivial = np.array([sum(t ** int(j) for t in sample.spec.trivial) for j in k], dtype=float)
    phases = np.exp(1j * np.outer(k, sample.angles))
    if sample.spec.is_unitary:
        return trivial + np.sum(phases, axis=1)
    sign = np.where(k % 2 == 1, -1.0, 1.0) if sample.spec.group is GroupId.O_ODD else 1.0
    return trivial + sign * 2.0 * np.sum(phases.real, axis=1)


def _haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2.0)
    q, r = qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def _haar_special_orthogonal(dim: int, rng: np.random.Generator) -> np.ndarray:
    q, r = qr(rng.standard_normal((dim, dim)))
    q = q * np.where(np.diag(r) < 0.0, -1.0, 1.0)
    if np.linalg.det(q) < 0.0:
        q[:, 0] = -q[:, 0]
    return q


def sample_haar_matrix(group, n: int, rng: np.random.Generator) -> HaarMatrix:
    """
    Haar-random matrix on the group (or coset) behind each family.

    U: U(n). SO_ODD: SO(2n+1). O_ODD: the det = -1 coset of O(2n+1), realized
    as -A for A in SO(2n+1). SO_EVEN: SO(2n). O_MINUS: the det = -1 coset of
    O(2n+2), a Haar SO(2n+2) matrix times a fixed reflection.

    Raises:
        UnsupportedGroupError: for USP and SU
    """
    gid = GroupId.parse(group)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if gid is GroupId.U:
        dim = n
        entries = _haar_unitary(dim, rng)
    elif gid in (GroupId.SO_ODD, GroupId.O_ODD):
        dim = 2 * n + 1
        entries = _haar_special_orthogonal(dim, rng)
        if gid is GroupId.O_ODD:
            entries = -entries
    elif gid is GroupId.SO_EVEN:
        dim = 2 * n
        entries = _haar_special_orthogonal(dim, rng)
    elif gid is GroupId.O_MINUS:
        dim = 2 * n + 2
        entries = _haar_special_orthogonal(dim, rng)
        entries[:, 0] = -entries[:, 0]
    else:
        raise UnsupportedGroupError(f"no Haar matrix sampler for group {gid.value}")
    return HaarMatrix(group=gid, dim=dim, entries=entries)


def traces(matrix, k_max: int) -> List[complex]:
    """(Tr A, Tr A^2, ..., Tr A^k_max) by repeated multiplication."""
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    entries = matrix.entries if isinstance(matrix, HaarMatrix) else np.asarray(matrix)
    power = entries.copy()
    out = [complex(np.trace(power))]
    for _ in range(1, k_max):
        power = power @ entries
        out.append(complex(np.trace(power)))
    return out
