"""
Registry of the seven compact-group families.

Each family is described by an EnsembleSpec: the count of nontrivial
eigenvalues, the trivial eigenvalues forced by parity, the limit constants
c_G and sigma_G, and the projection kernel (with its orthonormal basis) that
governs the nontrivial eigen-angles on [a, b].

Reduction aliases: SU shares the U kernel, O_ODD shares the SO_ODD kernel
(trivial eigenvalue -1 instead of +1), and O_MINUS shares the USP kernel.
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Tuple

import numpy as np

EULER_GAMMA = 0.5772156649015329
ZETA3 = 1.2020569031595943
TWO_PI = 2.0 * math.pi
SQRT2 = math.sqrt(2.0)

# Rounding slack allowed at the interval endpoints
ANGLE_SLACK = 1e-12

C_UNITARY = 2.0 * EULER_GAMMA + 2.0
C_ODD = 2.0 * EULER_GAMMA + 2.0 + math.pi ** 2 / 4.0
C_EVEN = 2.0 * EULER_GAMMA + 2.0 + math.pi ** 2 / 12.0
SIGMA_UNITARY = 2.0 * math.pi ** 2 / 3.0
SIGMA_ODD = 4.0 * math.pi ** 2 / 3.0 + 14.0 * ZETA3
SIGMA_EVEN = 4.0 * math.pi ** 2 / 3.0 + 2.0 * ZETA3


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""
    pass


class GroupId(str, Enum):
    U = "u"
    SU = "su"
    SO_ODD = "so-odd"
    O_ODD = "o-odd"
    SO_EVEN = "so-even"
    O_MINUS = "o-minus"
    USP = "usp"

    @classmethod
    def parse(cls, text) -> "GroupId":
        """Parse a CLI identifier (case-insensitive, '_' accepted for '-')."""
        if isinstance(text, GroupId):
            return text
        key = str(text).strip().lower().replace("_", "-")
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(g.value for g in cls)
            raise DomainError(f"unknown group '{text}', expected one of: {choices}") from None

    def __str__(self) -> str:
        return self.value


class KernelKind(str, Enum):
    EXP = "exp"
    SIN_HALF = "sin-half"
    COS = "cos"
    SIN = "sin"


@dataclass(frozen=True)
class KernelFamily:
    family: KernelKind
    rank: int


# group -> (sampled_as, kernel kind, trivial eigenvalues, c_G, sigma_G)
_GROUP_TABLE = {
    GroupId.U: (GroupId.U, KernelKind.EXP, (), C_UNITARY, SIGMA_UNITARY),
    GroupId.SU: (GroupId.U, KernelKind.EXP, (), C_UNITARY, SIGMA_UNITARY),
    GroupId.SO_ODD: (GroupId.SO_ODD, KernelKind.SIN_HALF, (1,), C_ODD, SIGMA_ODD),
    GroupId.O_ODD: (GroupId.SO_ODD, KernelKind.SIN_HALF, (-1,), C_ODD, SIGMA_ODD),
    GroupId.SO_EVEN: (GroupId.SO_EVEN, KernelKind.COS, (), C_EVEN, SIGMA_EVEN),
    GroupId.O_MINUS: (GroupId.USP, KernelKind.SIN, (1, -1), C_EVEN, SIGMA_EVEN),
    GroupId.USP: (GroupId.USP, KernelKind.SIN, (), C_EVEN, SIGMA_EVEN),
}


@dataclass(frozen=True)
class EnsembleSpec:
    group: GroupId
    n: int
    n0: int
    trivial: Tuple[int, ...]
    c_g: float
    sigma_g: float
    kernel: KernelFamily
    interval: Tuple[float, float]
    sampled_as: GroupId

    @property
    def is_unitary(self) -> bool:
        return self.kernel.family is KernelKind.EXP

    @property
    def width(self) -> float:
        return self.interval[1] - self.interval[0]

    def to_json(self) -> Dict[str, Any]:
        return {
            "group": self.group.value,
            "n": self.n,
            "n0": self.n0,
            "trivial": list(self.trivial),
            "c_g": self.c_g,
            "sigma_g": self.sigma_g,
            "interval": list(self.interval),
            "kernel": self.kernel.family.value,
            "sampled_as": self.sampled_as.value,
        }


def ensemble_spec(group, n: int) -> EnsembleSpec:
    """
    Build the ensemble description of one group instance.

    Args:
        group: GroupId or CLI identifier
        n: The size parameter N (>= 1)

    Returns:
        Fully populated EnsembleSpec; aliases keep the requested group while
        recording the family actually sampled in `sampled_as`.
    """
    gid = GroupId.parse(group)
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    n = int(n)
    sampled_as, kind, trivial, c_g, sigma_g = _GROUP_TABLE[gid]
    unitary = kind is KernelKind.EXP
    return EnsembleSpec(
        group=gid,
        n=n,
        n0=n if unitary else 2 * n,
        trivial=trivial,
        c_g=c_g,
        sigma_g=sigma_g,
        kernel=KernelFamily(kind, n),
        interval=(0.0, TWO_PI if unitary else math.pi),
        sampled_as=sampled_as,
    )


def check_angles(spec: EnsembleSpec, x) -> np.ndarray:
    """Return x as a float array, raising DomainError if any angle leaves the interval."""
    arr = np.asarray(x, dtype=float)
    a, b = spec.interval
    if np.any(arr < a - ANGLE_SLACK) or np.any(arr > b + ANGLE_SLACK) or np.any(np.isnan(arr)):
        raise DomainError(f"angle outside [{a}, {b}] for group {spec.group.value}")
    return arr


def _feature_columns(kind: KernelKind, j: np.ndarray, x: np.ndarray) -> np.ndarray:
    xj = x[..., None]
    if kind is KernelKind.EXP:
        return np.exp(1j * xj * j)
    if kind is KernelKind.SIN_HALF:
        return SQRT2 * np.sin(xj * (2 * j + 1) / 2.0)
    if kind is KernelKind.COS:
        return np.where(j == 0, 1.0, SQRT2) * np.cos(xj * j)
    return SQRT2 * np.sin(xj * (j + 1))


def feature_map(spec: EnsembleSpec, x) -> np.ndarray:
    """All basis functions at x; shape x.shape + (rank,)."""
    arr = check_angles(spec, x)
    j = np.arange(spec.kernel.rank)
    return _feature_columns(spec.kernel.family, j, arr)


def basis_eval(spec: EnsembleSpec, j: int, x):
    """
    The j-th orthonormal basis function at x.

    Normalized so that the mean of |phi_j|^2 over the interval is 1 and
    kernel_eval(x, y) = sum_j phi_j(x) conj(phi_j(y)).
    """
    if int(j) != j or not 0 <= j < spec.kernel.rank:
        raise DomainError(f"basis index {j} out of range [0, {spec.kernel.rank})")
    arr = check_angles(spec, x)
    out = _feature_columns(spec.kernel.family, np.array([int(j)]), arr)[..., 0]
    if out.ndim == 0:
        return complex(out) if spec.is_unitary else float(out)
    return out


def kernel_eval(spec: EnsembleSpec, x, y):
    """K(x, y); complex for the U family, real otherwise. Broadcasts over arrays."""
    fx = feature_map(spec, x)
    fy = feature_map(spec, y)
    out = np.sum(fx * np.conj(fy), axis=-1)
    if out.ndim == 0:
        return complex(out) if spec.is_unitary else float(out)
    return out


def kernel_diagonal(spec: EnsembleSpec, x) -> np.ndarray:
    """K(x, x) = sum_j |phi_j(x)|^2."""
    f = feature_map(spec, x)
    return np.sum(np.abs(f) ** 2, axis=-1)


def kernel_sup(spec: EnsembleSpec) -> float:
    """Upper bound of K(x, x) used as the rejection envelope."""
    return float(spec.n) if spec.is_unitary else 2.0 * spec.n


def interval_rule(spec: EnsembleSpec, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Equispaced rule for the normalized measure on the interval.

    U: periodic rectangle rule with m nodes on [0, 2pi), exact for
    trigonometric polynomials of degree < m. Real families: trapezoid rule
    with m + 1 nodes on [0, pi], exact for even cosine polynomials of degree
    < 2m.
    """
    if m < 1:
        raise DomainError(f"node count must be positive, got {m}")
    if spec.is_unitary:
        nodes = TWO_PI * np.arange(m) / m
        weights = np.full(m, 1.0 / m)
    else:
        nodes = math.pi * np.arange(m + 1) / m
        weights = np.full(m + 1, 1.0 / m)
        weights[0] = weights[-1] = 0.5 / m
    return nodes, weights
