"""
Correlation integrals Pi(a_1, ..., a_m) of the eigen-angle process.

    Pi(a_1..a_m) = mean over the interval^m of
                   K(x_1,x_2) K(x_2,x_3) ... K(x_m,x_1) prod_j w(a_j x_j)

with w = cos for the real families and w = exp(i .) for the unitary family.
pi_closed returns the closed forms as exact fractions; pi_quadrature evaluates
the integral with an equispaced product rule that is exact for these
band-limited integrands, so the two must agree to rounding.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ensembles import DomainError, EnsembleSpec, KernelKind, GroupId, ensemble_spec, feature_map, interval_rule
from exact_moments import alpha, epsilon

logger = logging.getLogger(__name__)

MAX_ARITY = 4


class PatternError(ValueError):
    """Raised when pi_closed has no closed form for an argument pattern."""
    pass


@dataclass(frozen=True)
class PiArgs:
    """
    Arguments of one correlation integral.

    Negative arguments are accepted for every family. The real families weight
    by cos(a x), so pi_quadrature sees the sign and pi_closed folds it away.
    """
    spec: EnsembleSpec
    args: Tuple[int, ...]

    def __post_init__(self):
        if not 1 <= len(self.args) <= MAX_ARITY:
            raise DomainError(f"Pi takes 1 to {MAX_ARITY} arguments, got {len(self.args)}")
        for a in self.args:
            if int(a) != a:
                raise DomainError(f"Pi arguments must be integers, got {a}")
        object.__setattr__(self, "args", tuple(int(a) for a in self.args))

    @classmethod
    def of(cls, spec: EnsembleSpec, *args: int) -> "PiArgs":
        return cls(spec=spec, args=tuple(args))


@dataclass(frozen=True)
class PiCheckRow:
    pattern: str
    args: Tuple[int, ...]
    closed: Fraction
    quadrature: float
    abs_diff: float

    def to_json(self) -> Dict[str, Any]:
        return {
            "pattern": self.pattern,
            "args": list(self.args),
            "closed": str(self.closed),
            "quadrature": self.quadrature,
            "abs_diff": self.abs_diff,
        }


@dataclass(frozen=True)
class LinearStatisticMoments:
    """Moments of Tr A^k reconstructed from the eigen-angles (complex for U)."""
    k: int
    mean: float
    variance: float
    limit_mean: float
    limit_variance: float

    def to_json(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "mean": self.mean,
            "variance": self.variance,
            "limit_mean": self.limit_mean,
            "limit_variance": self.limit_variance,
        }


# ========== Quadrature ==========

def _node_count(spec: EnsembleSpec, args: Sequence[int]) -> int:
    # per-variable frequency is at most 2N + |a_j|
    return 2 * spec.n + max(abs(a) for a in args) + 2


def pi_quadrature(pa: PiArgs) -> float:
    """
    Evaluate Pi by the equispaced product rule.

    With nodes x_i, weights w_i and the node kernel matrix K_ij = K(x_i, x_j),
    the tensor rule collapses to trace(D_1 K D_2 K ... D_m K) where
    D_j = diag(w_i weight(a_j x_i)).
    """
    spec = pa.spec
    m = _node_count(spec, pa.args)
    nodes, weights = interval_rule(spec, m)
    features = feature_map(spec, nodes)
    kmat = features @ features.conj().T

    product = None
    for a in pa.args:
        if spec.is_unitary:
            diag = weights * np.exp(1j * a * nodes)
        else:
            diag = weights * np.cos(a * nodes)
        factor = diag[:, None] * kmat
        product = factor if product is None else product @ factor
    value = np.trace(product)
    if spec.is_unitary:
        return float(np.real(value))
    return float(value)


# ========== Closed forms ==========

def _pos(x: int) -> int:
    return max(x, 0)


def _ind(cond: bool) -> int:
    return 1 if cond else 0


def _pi_unitary(n: int, args: Sequence[int]) -> Fraction:
    if sum(args) != 0:
        return Fraction(0)
    offsets, running = [], 0
    for a in args:
        running -= a
        offsets.append(running)
    return Fraction(_pos(n - (max(offsets) - min(offsets))))


def _match_pattern(args: Tuple[int, ...]) -> Tuple[str, int, int]:
    """Name of the closed-form pattern and its (k, l); raises PatternError."""
    if args in ((0,), (0, 0)):
        return "0", 0, 0
    if len(args) == 2 and args[0] == 0 and args[1] >= 1:
        return "0,k", args[1], 0
    if len(args) == 3 and args[0] == 0 and args[1] == args[2] >= 1:
        return "0,k,k", args[1], 0
    if min(args) < 1:
        raise PatternError(f"no closed form for Pi{args}")
    if len(args) == 1:
        return "k", args[0], 0
    if len(args) == 2:
        return "k,l", args[0], args[1]
    if len(args) == 3:
        k, l, c = args
        if l == c:
            return "k,l,l", k, l
        if c == k + l:
            return "k,l,k+l", k, l
    if len(args) == 4:
        a, b, c, d = args
        if a == b == c == d:
            return "k,k,k,k", a, a
        if a == b and c == d:
            return "k,k,l,l", a, c
        if a == c and b == d:
            return "k,l,k,l", a, b
    raise PatternError(f"no closed form for Pi{args}")


def _pi_odd(spec: EnsembleSpec, pattern: str, k: int, l: int) -> Fraction:
    n = spec.n

    def eps(a):
        return epsilon(spec, a)

    def alp(a, b, c):
        return alpha(spec, a, b, c)

    F = Fraction
    lo, hi = min(k, l), max(k, l)
    if pattern in ("k", "0,k"):
        return F(-eps(k), 2)
    if pattern in ("k,l", "0,k,k"):
        if pattern == "0,k,k" or k == l:
            return F(_pos(2 * n - k), 4)
        return F(-eps(k + l), 2)
    if pattern == "k,l,l":
        if k == 2 * l:
            return F(_pos(2 * n - k), 8)
        return F(-(3 * eps(k + 2 * l) + eps(k) * eps(abs(2 * l - k))), 8)
    if pattern == "k,l,k+l":
        return F(_pos(n - k - l), 4) + F(alp(k + l, l, k + l) + alp(k + l, k, k + l), 8)
    if pattern == "k,k,k,k":
        return F(_pos(n - k), 4) + F(_pos(2 * n - k), 16)
    if pattern == "k,k,l,l":
        return (
            F(_pos(n - hi) + _pos(n - k - l), 8)
            + F(alp(lo, hi, hi), 16)
            + F(alp(k + l, l, k + l) + alp(k + l, k, k + l) + alp(l, l - k, l) + alp(k, k - l, k), 16)
        )
    return (
        F(_pos(n - k - l), 4)
        + F(alp(k + l, lo, k + l), 4)
        + F(alp(k, k, k + l) + alp(l, l, k + l), 8)
    )


def _pi_even(spec: EnsembleSpec, pattern: str, k: int, l: int) -> Fraction:
    n = spec.n

    def eps(a):
        return epsilon(spec, a)

    def alp(a, b, c):
        return alpha(spec, a, b, c)

    F = Fraction
    lo, hi = min(k, l), max(k, l)
    if pattern in ("k", "0,k"):
        return F(eps(k), 2)
    if pattern in ("k,l", "0,k,k"):
        if pattern == "0,k,k" or k == l:
            return F(_pos(2 * n - k - 1), 4) + F(_ind(k <= n - 1), 2)
        return F(eps(k + l), 2)
    if pattern == "k,l,l":
        if k == 2 * l:
            return F(_pos(2 * n - k), 8) + F(3 * _ind(k <= n - 1), 8)
        return F(3 * eps(2 * l + k) + eps(k) * eps(abs(2 * l - k)), 8)
    if pattern == "k,l,k+l":
        return (
            F(_pos(n - k - l - 1), 4)
            + F(alp(k + l, l, k + l) + alp(k + l, k, k + l), 8)
            + F(5 * _ind(k + l <= n - 1), 8)
            + F(_ind(hi <= n - 1), 4)
        )
    if pattern == "k,k,k,k":
        return (
            F(_pos(2 * n - k - 1), 16)
            + F(_pos(n - k), 4)
            + F(_ind(k <= n - 1), 8)
            + F(_ind(2 * k <= n - 1), 4)
        )
    if pattern == "k,k,l,l":
        near = _ind(abs(k - l) <= n - 1)
        return (
            F(_pos(n - hi - 1) + _pos(n - k - l - 1), 8)
            + F(alp(lo, hi, hi), 16)
            + F(alp(k + l, l, k + l) + alp(k + l, k, k + l) + alp(l, l - k, l) + alp(k, k - l, k), 16)
            + F(3 * _ind(k + l <= n - 1), 8)
            + F(_ind(hi <= n - 1), 4)
            + F(_ind(k <= n - 1) * near, 8)
            + F(_ind(l <= n - 1) * near, 8)
        )
    return (
        F(_pos(n - k - l - 1), 4)
        + F(alp(k + l, lo, k + l), 4)
        + F(alp(k, k, k + l) + alp(l, l, k + l), 8)
        + F(_ind(k + l <= n - 1), 2)
        + F(_ind(hi <= n - 1), 2)
    )


def _pi_symplectic(spec: EnsembleSpec, pattern: str, k: int, l: int) -> Fraction:
    n = spec.n

    def eps(a):
        return epsilon(spec, a)

    def alp(a, b, c):
        return alpha(spec, a, b, c)

    F = Fraction
    lo, hi = min(k, l), max(k, l)
    if pattern in ("k", "0,k"):
        return F(-eps(k), 2)
    if pattern in ("k,l", "0,k,k"):
        if pattern == "0,k,k" or k == l:
            return F(_pos(2 * n - k + 1), 4) - F(_ind(k <= n), 2)
        return F(-eps(k + l), 2)
    if pattern == "k,l,l":
        if k == 2 * l:
            return F(_pos(2 * n - k), 8) - F(3 * _ind(k <= n), 8)
        return F(-(3 * eps(2 * l + k) + eps(k) * eps(abs(2 * l - k))), 8)
    if pattern == "k,l,k+l":
        return (
            F(_pos(n - k - l), 4)
            + F(alp(k + l, l, k + l) + alp(k + l, k, k + l), 8)
            - F(_ind(k + l <= n), 8)
        )
    if pattern == "k,k,k,k":
        return (
            F(_pos(2 * n - k + 1), 16)
            + F(_pos(n - k), 4)
            - F(_ind(k <= n), 8)
            - F(_ind(2 * k <= n), 4)
        )
    if pattern == "k,k,l,l":
        return (
            F(_pos(n - hi) + _pos(n - k - l), 8)
            + F(alp(lo, hi, hi), 16)
            + F(alp(k + l, l, k + l) + alp(k + l, k, k + l) + alp(l, l - k, l) + alp(k, k - l, k), 16)
            - F(_ind(k + l <= n), 8)
        )
    return (
        F(_pos(n - k - l), 4)
        + F(alp(k + l, lo, k + l), 4)
        + F(alp(k, k, k + l) + alp(l, l, k + l), 8)
    )


_REAL_CLOSED_FORMS: Dict[KernelKind, Callable[[EnsembleSpec, str, int, int], Fraction]] = {
    KernelKind.SIN_HALF: _pi_odd,
    KernelKind.COS: _pi_even,
    KernelKind.SIN: _pi_symplectic,
}


def pi_closed(pa: PiArgs) -> Fraction:
    """
    Closed form of Pi as an exact fraction.

    Unitary family: any integer arguments. Real families: the patterns
    (0), (0,0), (k), (0,k), (k,l), (k,l,l), (k,l,k+l), (0,k,k), (k,k,k,k),
    (k,k,l,l) and (k,l,k,l) with k, l >= 1 (k != l for the last two).

    Raises:
        PatternError: for any other argument pattern
    """
    spec = pa.spec
    if spec.is_unitary:
        return _pi_unitary(spec.n, pa.args)
    pattern, k, l = _match_pattern(tuple(abs(a) for a in pa.args))
    if pattern == "0":
        return Fraction(spec.n)
    return _REAL_CLOSED_FORMS[spec.kernel.family](spec, pattern, k, l)


# ========== Pattern table and check ==========

def pi_patterns(unitary: bool = False) -> List[Tuple[str, Callable[[int, int], Optional[Tuple[int, ...]]]]]:
    """
    Supported patterns with a builder (k, l) -> args, or None when (k, l)
    does not satisfy the pattern's constraints.
    """
    if unitary:
        return [
            ("k", lambda k, l: (k,)),
            ("k,-k", lambda k, l: (k, -k)),
            ("k,l,-k-l", lambda k, l: (k, l, -k - l)),
            ("k,-k,l,-l", lambda k, l: (k, -k, l, -l)),
            ("k,l,-k,-l", lambda k, l: (k, l, -k, -l)),
            ("k,-l,l,-k", lambda k, l: (k, -l, l, -k)),
        ]
    return [
        ("0", lambda k, l: (0,)),
        ("0,0", lambda k, l: (0, 0)),
        ("k", lambda k, l: (k,)),
        ("0,k", lambda k, l: (0, k)),
        ("k,l", lambda k, l: (k, l)),
        ("k,l,l", lambda k, l: (k, l, l)),
        ("k,l,k+l", lambda k, l: (k, l, k + l)),
        ("0,k,k", lambda k, l: (0, k, k)),
        ("k,k,k,k", lambda k, l: (k, k, k, k) if k == l else None),
        ("k,k,l,l", lambda k, l: (k, k, l, l) if k != l else None),
        ("k,l,k,l", lambda k, l: (k, l, k, l) if k != l else None),
    ]


def pi_check(group, n: int, k_max: int) -> List[PiCheckRow]:
    """Closed form against quadrature for every pattern and all 1 <= k, l <= k_max."""
    if k_max < 1:
        raise DomainError(f"k_max must be >= 1, got {k_max}")
    spec = ensemble_spec(group, n)
    rows: List[PiCheckRow] = []
    seen = set()
    for name, build in pi_patterns(spec.is_unitary):
        for k in range(1, k_max + 1):
            for l in range(1, k_max + 1):
                args = build(k, l)
                if args is None or (name, args) in seen:
                    continue
                seen.add((name, args))
                pa = PiArgs(spec=spec, args=args)
                closed = pi_closed(pa)
                quad = pi_quadrature(pa)
                rows.append(PiCheckRow(
                    pattern=name,
                    args=args,
                    closed=closed,
                    quadrature=quad,
                    abs_diff=abs(quad - float(closed)),
                ))
    logger.info("pi_check %s n=%d: %d rows, max diff %.3e", spec.group.value, n, len(rows), max(r.abs_diff for r in rows))
    return rows


# ========== Linear statistics ==========

def linear_statistic_moments(spec: EnsembleSpec, k: int) -> LinearStatisticMoments:
    """
    Exact mean and variance of Tr A^k at finite N, with the large-N limits.

    U: E Tr A^k = Pi(k) = 0 and E|Tr A^k|^2 = N - Pi(k, -k) = min(k, N).
    Real families: Tr A^k = sum t^k + s_k * 2 sum cos(k theta) with s_k = (-1)^k
    for O_ODD and 1 otherwise, so E = sum t^k + 2 s_k Pi(k) and
    Var = 2N + 2 Pi(2k) - 4 Pi(k, k).
    """
    if int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")
    k = int(k)
    n = spec.n
    if spec.is_unitary:
        first = pi_closed(PiArgs.of(spec, k))
        second = n + first * first - pi_closed(PiArgs.of(spec, k, -k))
        return LinearStatisticMoments(
            k=k,
            mean=float(first),
            variance=float(second - first * first),
            limit_mean=0.0,
            limit_variance=float(k),
        )
    sign = -1 if spec.group is GroupId.O_ODD and k % 2 else 1
    trivial = sum(t ** k for t in spec.trivial)
    mean = trivial + 2 * sign * pi_closed(PiArgs.of(spec, k))
    variance = 2 * n + 2 * pi_closed(PiArgs.of(spec, 2 * k)) - 4 * pi_closed(PiArgs.of(spec, k, k))
    even = 1.0 if k % 2 == 0 else 0.0
    limit_mean = -even if spec.group is GroupId.USP else even
    return LinearStatisticMoments(
        k=k,
        mean=float(mean),
        variance=float(variance),
        limit_mean=limit_mean,
        limit_variance=float(k),
    )
