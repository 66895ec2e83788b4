"""
Special functions used by the exact-moment series and the limit-law formulas.

Real side: Hurwitz zeta by Euler-Maclaurin with a certified remainder, and the
series tails built from it (trigamma/tetragamma tails, shifted pair tails,
parity-restricted power sums).

Complex side: log-gamma and digamma on the right half-plane, evaluated by
shifting the argument to Re z >= 15 and applying the Stirling / asymptotic
series. Both accept scalars or numpy arrays.
"""
import math
from typing import Optional, Tuple

import numpy as np

# B_2, B_4, ..., B_24
BERNOULLI_EVEN = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
]

ZETA_TERMS = 10
ZETA_SHIFT = 16.0
COMPLEX_SHIFT = 15.0
_EPS = np.finfo(float).eps

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
# B_2j / (2j (2j - 1)) for the log-gamma Stirling series
_STIRLING = [BERNOULLI_EVEN[j - 1] / ((2 * j) * (2 * j - 1)) for j in range(1, 11)]
# B_2j / (2j) for the digamma asymptotic series
_DIGAMMA = [BERNOULLI_EVEN[j - 1] / (2 * j) for j in range(1, 11)]


def hurwitz_zeta(s: float, a: float, terms: int = ZETA_TERMS) -> Tuple[float, float]:
    """
    Hurwitz zeta function zeta(s, a) = sum_{k>=0} (k + a)^(-s) for real s > 1, a > 0.

    Args:
        s: Exponent, must exceed 1
        a: Offset, must be positive
        terms: Number of Bernoulli corrections (at most 11)

    Returns:
        Tuple of (value, err_bound). The bound is the first omitted
        Euler-Maclaurin correction plus a rounding allowance; x^(-s) is
        completely monotone so the remainder never exceeds that correction.
    """
    if s <= 1.0:
        raise ValueError(f"hurwitz_zeta needs s > 1, got {s}")
    if a <= 0.0:
        raise ValueError(f"hurwitz_zeta needs a > 0, got {a}")
    if not 1 <= terms < len(BERNOULLI_EVEN):
        raise ValueError(f"terms must be in [1, {len(BERNOULLI_EVEN) - 1}], got {terms}")

    shift = max(0, math.ceil(ZETA_SHIFT - a))
    parts = [(a + j) ** -s for j in range(shift)]
    b = a + shift

    parts.append(b ** (1.0 - s) / (s - 1.0))
    parts.append(0.5 * b ** -s)
    rising = s
    power = b ** (-s - 1.0)
    for j in range(1, terms + 1):
        parts.append(BERNOULLI_EVEN[j - 1] / math.factorial(2 * j) * rising * power)
        rising *= (s + 2 * j - 1) * (s + 2 * j)
        power /= b * b
    omitted = abs(BERNOULLI_EVEN[terms] / math.factorial(2 * terms + 2) * rising * power)

    value = math.fsum(parts)
    return value, omitted + 4 * _EPS * abs(value)


def zeta_tail(s: float, k: int) -> Tuple[float, float]:
    """sum_{j>k} j^(-s) with its error bound."""
    return hurwitz_zeta(s, k + 1.0)


def trigamma_tail(k: int) -> Tuple[float, float]:
    """sum_{j>k} 1/j^2, i.e. psi'(k+1)."""
    return zeta_tail(2.0, k)


def quartic_tail(k: int) -> Tuple[float, float]:
    """sum_{j>k} 1/j^4, i.e. psi'''(k+1)/6."""
    return zeta_tail(4.0, k)


def shifted_pair_tail(k: int, d: int) -> Tuple[float, float]:
    """
    sum_{j>k} 1 / (j^2 (j+d)^2) for d >= 1, via partial fractions:
    (1/d^2)[psi'(k+1) + psi'(k+d+1)] - (2/d^3) sum_{i=k+1}^{k+d} 1/i.
    """
    if d < 1:
        raise ValueError(f"shifted_pair_tail needs d >= 1, got {d}")
    t1, e1 = zeta_tail(2.0, k)
    t2, e2 = zeta_tail(2.0, k + d)
    harmonic = math.fsum(1.0 / i for i in range(k + 1, k + d + 1))
    a = t1 / (d * d)
    b = t2 / (d * d)
    c = 2.0 * harmonic / d ** 3
    value = math.fsum([a, b, -c])
    # cancellation between the three pieces dominates the rounding error
    bound = (e1 + e2) / (d * d) + 8 * _EPS * (a + b + c)
    return max(value, 0.0), bound


def parity_power_sum(s: float, lo: int, hi: Optional[int], parity: int) -> Tuple[float, float]:
    """
    Sum of k^(-s) over integers lo < k <= hi with k % 2 == parity.

    Args:
        s: Exponent (> 1)
        lo: Exclusive lower limit (>= 0)
        hi: Inclusive upper limit, or None for infinity
        parity: 1 for odd k, 0 for even k

    Returns:
        Tuple of (value, err_bound)
    """
    if lo < 0:
        raise ValueError(f"lo must be >= 0, got {lo}")
    if hi is not None and hi <= lo:
        return 0.0, 0.0
    scale = 2.0 ** -s
    if parity % 2 == 1:
        start = (lo + 1) // 2 + 0.5
        stop = None if hi is None else (hi + 1) // 2 + 0.5
    else:
        start = lo // 2 + 1.0
        stop = None if hi is None else hi // 2 + 1.0
    if stop is not None and stop <= start:
        return 0.0, 0.0
    head, head_err = hurwitz_zeta(s, start)
    tail, tail_err = (0.0, 0.0) if stop is None else hurwitz_zeta(s, stop)
    return scale * (head - tail), scale * (head_err + tail_err)


def _shift_count(z: np.ndarray, target: float) -> int:
    if z.size == 0:
        return 0
    return max(0, math.ceil(target - float(z.real.min())))


def loggamma(z):
    """
    Complex log-gamma for Re z > 0.

    The branch is the one continuous on the right half-plane and real on the
    positive axis, so exp(loggamma(z) / 2) is a continuous square root of Gamma.
    """
    arr = np.asarray(z, dtype=complex)
    if np.any(arr.real <= 0.0):
        raise ValueError("loggamma is only implemented for Re z > 0")

    w = arr.copy()
    shifted = np.zeros_like(arr)
    for _ in range(_shift_count(arr, COMPLEX_SHIFT)):
        shifted += np.log(w)
        w = w + 1.0

    inv = 1.0 / w
    inv2 = inv * inv
    series = (w - 0.5) * np.log(w) - w + _LOG_SQRT_2PI
    term = inv
    for coeff in _STIRLING:
        series = series + coeff * term
        term = term * inv2

    out = series - shifted
    return complex(out) if out.ndim == 0 else out


def digamma(z):
    """Complex digamma psi(z) for Re z > 0."""
    arr = np.asarray(z, dtype=complex)
    if np.any(arr.real <= 0.0):
        raise ValueError("digamma is only implemented for Re z > 0")

    w = arr.copy()
    shifted = np.zeros_like(arr)
    for _ in range(_shift_count(arr, COMPLEX_SHIFT)):
        shifted += 1.0 / w
        w = w + 1.0

    inv2 = 1.0 / (w * w)
    series = np.log(w) - 0.5 / w
    term = inv2
    for coeff in _DIGAMMA:
        series = series - coeff * term
        term = term * inv2

    out = series - shifted
    return complex(out) if out.ndim == 0 else out
