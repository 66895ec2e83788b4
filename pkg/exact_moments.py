"""
Exact mean and variance of W2^2(mu_A, uniform) for Haar-random matrices.

    E W2^2   = (2/N0^2) sum_k (min(k, N0) + eta(k)) / k^2
    Var W2^2 = (4/N0^4) [ sum_k T(k)/k^4 + sum_{k != l} (V(k,l) + delta(k,l)) / (k^2 l^2) ]

eta, T, V, delta are integer tables that depend on the kernel family (unitary,
odd orthogonal, even orthogonal, symplectic / O^-). The tables below accept
numpy integer arrays, so whole diagonals are evaluated at once; the public
scalar wrappers return Python ints.

Summation: eta has finite support, T is constant for k > 2 N0 + 2, V + delta
vanishes on diagonals |k - l| > 2 N0 + 2 and is constant along each diagonal
for k > 2 N0 + d + 4. Every tail is therefore a constant times an exactly
summable series (psi', psi''' or the shifted pair tail), and the only
truncation error left is the certified Euler-Maclaurin remainder.
"""
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
from decouple import config

from ensembles import DomainError, EnsembleSpec, KernelKind, ensemble_spec
from special_functions import quartic_tail, shifted_pair_tail, trigamma_tail

logger = logging.getLogger(__name__)

MOMENT_TOL = config("MOMENT_TOL", default=1e-10, cast=float)
MOMENT_K_CAP = config("MOMENT_K_CAP", default=5_000_000, cast=int)
_EPS = np.finfo(float).eps


class TruncationError(RuntimeError):
    """Raised when a series cannot be summed to the requested tolerance."""

    def __init__(self, message: str, achieved_bound: float):
        super().__init__(message)
        self.achieved_bound = achieved_bound


@dataclass(frozen=True)
class MomentReport:
    spec: EnsembleSpec
    mean_exact: float
    mean_err: float
    var_exact: float
    var_err: float
    mean_asymptotic: float
    var_asymptotic: float

    def to_json(self) -> Dict[str, Any]:
        return {
            "group": self.spec.group.value,
            "n": self.spec.n,
            "n0": self.spec.n0,
            "mean_exact": self.mean_exact,
            "mean_err": self.mean_err,
            "var_exact": self.var_exact,
            "var_err": self.var_err,
            "mean_asymptotic": self.mean_asymptotic,
            "var_asymptotic": self.var_asymptotic,
        }


@dataclass(frozen=True)
class AsymptoticFit:
    group: str
    ns: List[int]
    mean_residuals: List[float]
    var_residuals: List[float]
    mean_slope: float
    var_slope: float

    def to_json(self) -> Dict[str, Any]:
        return {
            "group": self.group,
            "ns": self.ns,
            "mean_residuals": self.mean_residuals,
            "var_residuals": self.var_residuals,
            "mean_slope": self.mean_slope,
            "var_slope": self.var_slope,
        }


# ========== Integer tables ==========

def _pos(x):
    return np.maximum(x, 0)


def _ind(cond):
    return np.asarray(cond, dtype=np.int64)


def _epsilon(kind: KernelKind, n: int, a):
    a = np.asarray(a, dtype=np.int64)
    if kind is KernelKind.SIN_HALF:
        return _ind((a >= 1) & (a <= 2 * n - 1) & (a % 2 == 1))
    if kind is KernelKind.COS:
        return _ind((a >= 1) & (a <= 2 * n - 2) & (a % 2 == 0))
    if kind is KernelKind.SIN:
        return _ind((a >= 1) & (a <= 2 * n) & (a % 2 == 0))
    raise DomainError("epsilon is not defined for the unitary family")


def _alpha(kind: KernelKind, n: int, a, b, c):
    a, b, c = (np.asarray(v, dtype=np.int64) for v in (a, b, c))
    if kind is KernelKind.SIN_HALF:
        return _pos(np.minimum(a, n) + np.minimum(b, n) - c)
    if kind is KernelKind.COS:
        return _pos(np.minimum(a, n) + np.minimum(b, n) - c - 1)
    if kind is KernelKind.SIN:
        return _pos(np.minimum(a - 1, n) + np.minimum(b - 1, n) - c + 1)
    raise DomainError("alpha is not defined for the unitary family")


def eta_table(spec: EnsembleSpec, k):
    kind, n = spec.kernel.family, spec.n
    k = np.asarray(k, dtype=np.int64)
    if kind is KernelKind.EXP:
        return np.zeros_like(k)
    eps = _epsilon(kind, n, k)
    if kind is KernelKind.SIN_HALF:
        return eps
    if kind is KernelKind.COS:
        return eps + _ind(k <= 2 * n - 1) - _ind(k <= n - 1)
    return eps + _ind(k <= n) - _ind(k <= 2 * n)


def bigT_table(spec: EnsembleSpec, k):
    kind, n = spec.kernel.family, spec.n
    k = np.asarray(k, dtype=np.int64)
    if kind is KernelKind.EXP:
        return np.minimum(k * k, n * n) + np.minimum(2 * k, n) - 2 * np.minimum(k, n)

    def eps(a):
        return _epsilon(kind, n, a)

    triple = 4 * (eps(3 * k) - eps(k))
    if kind is KernelKind.SIN_HALF:
        return (
            2 * np.minimum(k * k, 4 * n * n)
            + 4 * eps(k) * np.minimum(k, 2 * n)
            + 6 * (np.minimum(k, n) - np.minimum(k, 2 * n))
            + triple
        )
    if kind is KernelKind.COS:
        small = _ind(k <= n - 1)
        return (
            2 * np.minimum((k + 1) ** 2, 4 * n * n)
            + (6 + 2 * small) * _pos(2 * n - k - 1)
            - 6 * n * (1 + small)
            - 4 * _pos(n - k)
            + 6 * small
            + 4 * eps(k) * (np.minimum(k + 1, 2 * n) - small)
            + triple
        )
    small = _ind(k <= n)
    return (
        2 * np.minimum((k - 1) ** 2, 4 * n * n)
        + (6 - 2 * small) * _pos(2 * n - k + 1)
        - 8 * _pos(n - k)
        - 8 * small
        + 2 * _ind(2 * k <= n)
        + 4 * eps(k) * (np.minimum(k - 1, 2 * n) + small)
        - 6 * n * (1 - small)
        + triple
    )


def _alpha_block(kind: KernelKind, n: int, k, l):
    def alpha(a, b, c):
        return _alpha(kind, n, a, b, c)

    lo, hi, s = np.minimum(k, l), np.maximum(k, l), k + l
    return (
        4 * alpha(lo, hi, hi)
        + 4 * alpha(l, l - k, l)
        + 4 * alpha(k, k - l, k)
        + 4 * alpha(s, l, s)
        + 4 * alpha(s, k, s)
        - 8 * alpha(s, lo, s)
        - 4 * alpha(k, k, s)
        - 4 * alpha(l, l, s)
    )


def bigV_table(spec: EnsembleSpec, k, l):
    kind, n = spec.kernel.family, spec.n
    k = np.asarray(k, dtype=np.int64)
    l = np.asarray(l, dtype=np.int64)
    hi, lo, s, d = np.maximum(k, l), np.minimum(k, l), k + l, np.abs(k - l)
    if kind is KernelKind.EXP:
        return 2 * _pos(n - hi) - _pos(n - s) - _pos(n - d)
    block = _alpha_block(kind, n, k, l)
    if kind is KernelKind.SIN_HALF:
        return 8 * _pos(n - hi) - 2 * _pos(2 * n - d) - 2 * _pos(2 * n - s) + block
    if kind is KernelKind.COS:
        return (
            8 * _pos(n - hi - 1) - 2 * _pos(2 * n - d - 1) - 2 * _pos(2 * n - s - 1)
            + block
            - _ind(s <= n - 1)
            + 16 * _ind(hi <= n - 1)
            + _ind(d <= n - 1) * (-3 + 16 * _ind(lo <= n - 1) - 6 * _ind(k <= n - 1) - 6 * _ind(l <= n - 1))
            - 4 * _ind(np.abs(2 * k - l) + l <= 2 * n - 2)
            - 4 * _ind(np.abs(2 * l - k) + k <= 2 * n - 2)
        )
    return (
        8 * _pos(n - hi) - 2 * _pos(2 * n - d + 1) - 2 * _pos(2 * n - s + 1)
        + block
        + _ind(s <= n)
        + 3 * _ind(d <= n)
        + 4 * _ind(np.abs(2 * k - l) + l <= 2 * n)
        + 4 * _ind(np.abs(2 * l - k) + k <= 2 * n)
        - 2 * _ind(d <= n) * (_ind(k <= n) + _ind(l <= n))
    )


def delta_table(spec: EnsembleSpec, k, l):
    kind, n = spec.kernel.family, spec.n
    k = np.asarray(k, dtype=np.int64)
    l = np.asarray(l, dtype=np.int64)
    if kind is KernelKind.EXP:
        return np.zeros(np.broadcast(k, l).shape, dtype=np.int64)

    def eps(a):
        return _epsilon(kind, n, a)

    hi, lo, s, d = np.maximum(k, l), np.minimum(k, l), k + l, np.abs(k - l)
    if kind is KernelKind.SIN_HALF:
        return (
            2 * (eps(l) * eps(np.abs(2 * k - l)) - eps(2 * k + l))
            + 2 * (eps(k) * eps(np.abs(2 * l - k)) - eps(2 * l + k))
            + 2 * (eps(d) - eps(s))
            + 4 * eps(l) * eps(np.abs(2 * k - l))
            + 4 * eps(2 * k + l)
            + 4 * eps(k) * eps(np.abs(2 * l - k))
            + 4 * eps(2 * l + k)
            - 8 * eps(2 * hi - lo)
            - 8 * eps(hi)
        )
    if kind is KernelKind.COS:
        pair = 4 * eps(k) * eps(l) * (1 - eps(s))
    else:
        pair = 4 * eps(k) * eps(l) * (eps(s) - 1)
    return (
        pair
        + 2 * (eps(d) - eps(s))
        + _ind(l != 2 * k) * (6 * eps(l) * eps(np.abs(2 * k - l)) + 2 * eps(2 * k + l) - 8 * eps(d + k))
        + _ind(k != 2 * l) * (6 * eps(k) * eps(np.abs(2 * l - k)) + 2 * eps(2 * l + k) - 8 * eps(d + l))
    )


def _check_index(name: str, value) -> int:
    if int(value) != value or value < 1:
        raise DomainError(f"{name} must be a positive integer, got {value}")
    return int(value)


def epsilon(spec: EnsembleSpec, a: int) -> int:
    """The family's parity indicator (odd up to 2N-1, even up to 2N-2, even up to 2N)."""
    return int(_epsilon(spec.kernel.family, spec.n, int(a)))


def alpha(spec: EnsembleSpec, a: int, b: int, c: int) -> int:
    return int(_alpha(spec.kernel.family, spec.n, int(a), int(b), int(c)))


def eta(spec: EnsembleSpec, k: int) -> int:
    return int(eta_table(spec, _check_index("k", k)))


def bigT(spec: EnsembleSpec, k: int) -> int:
    return int(bigT_table(spec, _check_index("k", k)))


def bigV(spec: EnsembleSpec, k: int, l: int) -> int:
    k, l = _check_index("k", k), _check_index("l", l)
    if k == l:
        raise DomainError(f"bigV needs k != l, got k = l = {k}")
    return int(bigV_table(spec, k, l))


def delta(spec: EnsembleSpec, k: int, l: int) -> int:
    k, l = _check_index("k", k), _check_index("l", l)
    if k == l:
        raise DomainError(f"delta needs k != l, got k = l = {k}")
    return int(delta_table(spec, k, l))


# ========== Series ==========

def _check_cap(spec: EnsembleSpec, cutoff: int) -> None:
    if cutoff > MOMENT_K_CAP:
        raise TruncationError(
            f"summation cut-off {cutoff} for {spec.group.value} n={spec.n} exceeds MOMENT_K_CAP={MOMENT_K_CAP}",
            achieved_bound=math.inf,
        )


def exact_mean(spec: EnsembleSpec, tol: float = MOMENT_TOL) -> Tuple[float, float]:
    """
    Exact E W2^2 with a certified error bound.

    Returns:
        Tuple of (value, err_bound)

    Raises:
        TruncationError: if err_bound would exceed tol
    """
    if tol <= 0:
        raise DomainError(f"tol must be positive, got {tol}")
    n0 = spec.n0
    cutoff = 2 * n0 + 2
    _check_cap(spec, cutoff)

    k = np.arange(1, cutoff + 1, dtype=np.int64)
    terms = (np.minimum(k, n0) + eta_table(spec, k)) / k.astype(float) ** 2
    tail, tail_err = trigamma_tail(cutoff)
    parts = terms.tolist() + [n0 * tail]

    scale = 2.0 / n0 ** 2
    value = scale * math.fsum(parts)
    err = scale * (n0 * tail_err + 4 * _EPS * math.fsum(abs(p) for p in parts))
    if err > tol:
        raise TruncationError(f"mean error bound {err:.3e} exceeds tol {tol:.3e}", achieved_bound=err)
    logger.debug("exact_mean %s n=%d cutoff=%d value=%.17g err=%.3e", spec.group.value, spec.n, cutoff, value, err)
    return value, err


def exact_variance(spec: EnsembleSpec, tol: float = MOMENT_TOL) -> Tuple[float, float]:
    """
    Exact Var W2^2 with a certified error bound.

    The single sum over T(k) is summed to 2 N0 + 2 with a psi''' tail. The
    double sum is folded onto diagonals d = |k - l| = 1..2 N0 + 2 (the table
    is symmetric), each summed directly and closed with the exact tail of
    1 / (k^2 (k+d)^2) times the diagonal's limiting value.

    Returns:
        Tuple of (value, err_bound)

    Raises:
        TruncationError: if err_bound would exceed tol
    """
    if tol <= 0:
        raise DomainError(f"tol must be positive, got {tol}")
    n0 = spec.n0
    cutoff = 2 * n0 + 2
    max_diag = 2 * n0 + 2
    _check_cap(spec, 2 * n0 + max_diag + 4)

    k = np.arange(1, cutoff + 1, dtype=np.int64)
    t_terms = bigT_table(spec, k) / k.astype(float) ** 4
    t_limit = int(bigT_table(spec, cutoff + 1))
    q_tail, q_err = quartic_tail(cutoff)
    single_parts = t_terms.tolist() + [t_limit * q_tail]
    err_sum = abs(t_limit) * q_err

    diag_parts = []
    for d in range(1, max_diag + 1):
        diag_cut = 2 * n0 + d + 4
        k = np.arange(1, diag_cut + 1, dtype=np.int64)
        l = k + d
        w = bigV_table(spec, k, l) + delta_table(spec, k, l)
        kf = k.astype(float)
        lf = l.astype(float)
        diag_parts.extend((w / (kf * kf * lf * lf)).tolist())
        w_limit = int(bigV_table(spec, diag_cut + 1, diag_cut + 1 + d) + delta_table(spec, diag_cut + 1, diag_cut + 1 + d))
        if w_limit:
            p_tail, p_err = shifted_pair_tail(diag_cut, d)
            diag_parts.append(w_limit * p_tail)
            err_sum += 2 * abs(w_limit) * p_err

    single = math.fsum(single_parts)
    double = 2.0 * math.fsum(diag_parts)
    scale = 4.0 / n0 ** 4
    value = scale * (single + double)
    rounding = 4 * _EPS * (math.fsum(abs(p) for p in single_parts) + 2.0 * math.fsum(abs(p) for p in diag_parts))
    err = scale * (err_sum + rounding)
    if err > tol:
        raise TruncationError(f"variance error bound {err:.3e} exceeds tol {tol:.3e}", achieved_bound=err)
    logger.debug("exact_variance %s n=%d value=%.17g err=%.3e", spec.group.value, spec.n, value, err)
    return value, err


def asymptotic_moments(spec: EnsembleSpec) -> Tuple[float, float]:
    """Leading-order moments: ((2 log N0 + c_G) / N0^2, sigma_G / N0^4)."""
    n0 = spec.n0
    return (2.0 * math.log(n0) + spec.c_g) / n0 ** 2, spec.sigma_g / n0 ** 4


def moment_report(spec: EnsembleSpec, tol: float = MOMENT_TOL) -> MomentReport:
    mean, mean_err = exact_mean(spec, tol)
    var, var_err = exact_variance(spec, tol)
    mean_asym, var_asym = asymptotic_moments(spec)
    return MomentReport(
        spec=spec,
        mean_exact=mean,
        mean_err=mean_err,
        var_exact=var,
        var_err=var_err,
        mean_asymptotic=mean_asym,
        var_asymptotic=var_asym,
    )


def _loglog_slope(ns: Sequence[int], residuals: Sequence[float]) -> float:
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.abs(np.asarray(residuals, dtype=float)))
    return float(np.polyfit(x, y, 1)[0])


def asymptotic_decay(group, ns: Sequence[int], tol: float = MOMENT_TOL) -> AsymptoticFit:
    """
    How fast the exact moments approach their leading-order forms.

    For each N the residuals N0^2 mean - 2 log N0 - c_G and N0^4 var - sigma_G
    are computed; the slopes of log|residual| against log N are fitted by
    least squares.
    """
    if len(ns) < 2:
        raise DomainError("asymptotic_decay needs at least two sizes")
    mean_res, var_res = [], []
    for n in ns:
        spec = ensemble_spec(group, n)
        mean, _ = exact_mean(spec, tol)
        var, _ = exact_variance(spec, tol)
        mean_res.append(spec.n0 ** 2 * mean - 2.0 * math.log(spec.n0) - spec.c_g)
        var_res.append(spec.n0 ** 4 * var - spec.sigma_g)
    spec = ensemble_spec(group, ns[0])
    return AsymptoticFit(
        group=spec.group.value,
        ns=[int(n) for n in ns],
        mean_residuals=mean_res,
        var_residuals=var_res,
        mean_slope=_loglog_slope(ns, mean_res),
        var_slope=_loglog_slope(ns, var_res),
    )
