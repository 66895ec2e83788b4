"""
The limiting random variables xi_G of N0^2 W2^2 - 2 log N0 - c_G.

xi_G is a series in i.i.d. standard Gaussians X_k (and Y_k for U):

    U / SU:                 sum_k (X_k^2 + Y_k^2 - 2) / k
    odd orthogonal:        2 sum_k (X_k^2 - 1{k odd} (2/sqrt k) X_k - 1) / k
    SO_EVEN / O_MINUS / USP: 2 sum_k (X_k^2 - 1{k even} (2/sqrt k) X_k - 1) / k

Its characteristic function has a closed form through Gamma and digamma at
1 - 2it and 1 - 4it; the truncated product over k is kept as an independent
check of that form.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from decouple import config

from ensembles import EULER_GAMMA, DomainError, EnsembleSpec, GroupId, KernelKind, ensemble_spec
from special_functions import digamma, hurwitz_zeta, loggamma, parity_power_sum

logger = logging.getLogger(__name__)

XI_TRUNCATION = config("XI_TRUNCATION", default=100_000, cast=int)
XI_EXACT_TERMS = config("XI_EXACT_TERMS", default=2_000, cast=int)
XI_REFERENCE_SIZE = config("XI_REFERENCE_SIZE", default=1_000_000, cast=int)

# |t| beyond which xi_cf refuses to evaluate
CF_ENVELOPE = 50.0
# Series terms per vectorized block
TERM_BLOCK = 512
# Draws per block in batch sampling
ROW_BLOCK = 8192
PRODUCT_BLOCK = 1 << 20
CF_SAMPLE_BLOCK = 65536


def _parity(group) -> Optional[int]:
    """None for the unitary family, else the parity of k carrying the linear term."""
    kind = ensemble_spec(group, 1).kernel.family
    if kind is KernelKind.EXP:
        return None
    return 1 if kind is KernelKind.SIN_HALF else 0


@dataclass(frozen=True)
class XiSampleConfig:
    group: GroupId
    k_max: int = XI_TRUNCATION
    replicates: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "group", GroupId.parse(self.group))
        if self.k_max < 1:
            raise DomainError(f"k_max must be >= 1, got {self.k_max}")
        if self.replicates < 1:
            raise DomainError(f"replicates must be >= 1, got {self.replicates}")

    @property
    def tail_std(self) -> float:
        """Standard deviation of the terms k > k_max dropped by the truncation."""
        return math.sqrt(xi_tail_variance(self.group, self.k_max + 1))

    @property
    def tail_bound(self) -> float:
        return (2.0 if _parity(self.group) is None else 4.0) / math.sqrt(self.k_max)

    @property
    def gaussian_tail_std(self) -> float:
        """Standard deviation of the terms sample_xi_batch replaces by one Gaussian (0 when none are)."""
        if self.k_max <= XI_EXACT_TERMS:
            return 0.0
        return math.sqrt(xi_tail_variance(self.group, XI_EXACT_TERMS + 1, self.k_max))


@dataclass(frozen=True)
class CfPoint:
    t: float
    value: complex


# ========== Sampling ==========

def _term_block(parity: Optional[int], k: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
    """Partial sums over the frequencies in k for `size` independent draws."""
    shape = (size, k.size)
    if parity is None:
        x = rng.standard_normal(shape)
        y = rng.standard_normal(shape)
        return np.sum((x * x + y * y - 2.0) / k, axis=1)
    x = rng.standard_normal(shape)
    shift = np.where(k % 2 == parity, 2.0 / np.sqrt(k), 0.0)
    return 2.0 * np.sum((x * x - shift * x - 1.0) / k, axis=1)


def sample_xi(config: XiSampleConfig, rng: np.random.Generator) -> float:
    """One draw of the series truncated at config.k_max, every term drawn exactly."""
    parity = _parity(config.group)
    total = 0.0
    for start in range(1, config.k_max + 1, TERM_BLOCK):
        k = np.arange(start, min(start + TERM_BLOCK, config.k_max + 1), dtype=float)
        total += float(_term_block(parity, k, rng, 1)[0])
    return total


def sample_xi_batch(config: XiSampleConfig, rng: np.random.Generator, size: int) -> np.ndarray:
    """
    `size` draws of the truncated series.

    The first XI_EXACT_TERMS terms are drawn exactly. The terms
    XI_EXACT_TERMS < k <= k_max are replaced by one centered Gaussian with
    their exact variance, so above XI_EXACT_TERMS the draws match the
    truncated series in mean and variance but not in distribution; the
    replaced part has standard deviation config.gaussian_tail_std.
    Use sample_xi for draws of the truncated series itself.
    """
    if size < 1:
        raise DomainError(f"size must be >= 1, got {size}")
    parity = _parity(config.group)
    head = min(config.k_max, XI_EXACT_TERMS)
    if config.k_max > head:
        logger.debug("xi %s: terms %d..%d replaced by a Gaussian of std %.3g",
                     config.group.value, head + 1, config.k_max, config.gaussian_tail_std)
    out = np.zeros(size)
    for row in range(0, size, ROW_BLOCK):
        rows = min(ROW_BLOCK, size - row)
        for start in range(1, head + 1, TERM_BLOCK):
            k = np.arange(start, min(start + TERM_BLOCK, head + 1), dtype=float)
            out[row:row + rows] += _term_block(parity, k, rng, rows)
    if config.k_max > head:
        var = xi_tail_variance(config.group, head + 1, config.k_max)
        out += rng.normal(0.0, math.sqrt(var), size)
    return out


# ========== Moments ==========

def _power_sum(s: float, k_start: int, k_end: Optional[int]) -> float:
    head, _ = hurwitz_zeta(s, float(k_start))
    if k_end is None:
        return head
    tail, _ = hurwitz_zeta(s, float(k_end + 1))
    return head - tail


def xi_tail_variance(group, k_start: int, k_end: Optional[int] = None) -> float:
    """
    Variance carried by the terms k_start <= k <= k_end (k_end None: infinity).

    Per term: 4/k^2 (U); 8/k^2 + 16/k^3 on the shifted parity and 8/k^2
    otherwise (other families).
    """
    if k_start < 1:
        raise DomainError(f"k_start must be >= 1, got {k_start}")
    if k_end is not None and k_end < k_start:
        return 0.0
    parity = _parity(group)
    if parity is None:
        return 4.0 * _power_sum(2.0, k_start, k_end)
    cubic, _ = parity_power_sum(3.0, k_start - 1, k_end, parity)
    return 8.0 * _power_sum(2.0, k_start, k_end) + 16.0 * cubic


def xi_series_variance(group, k_max: int) -> float:
    return xi_tail_variance(group, 1, k_max)


def xi_moments(group) -> Tuple[float, float]:
    """(E xi_G, Var xi_G) = (0, sigma_G)."""
    return 0.0, ensemble_spec(group, 1).sigma_g


# ========== Characteristic functions ==========

def _check_envelope(t: np.ndarray) -> None:
    if np.any(np.abs(t) > CF_ENVELOPE) or np.any(np.isnan(t)):
        raise DomainError(f"|t| must be <= {CF_ENVELOPE} for xi_cf")


def xi_cf(group, t):
    """
    Closed-form characteristic function E exp(it xi_G).

    U:     Gamma(1-2it) e^{-2 gamma it}
    odd:   Gamma(1-4it)^{1/2} exp(-(2 gamma + pi^2/4) it - (2 psi(1-4it) - psi(1-2it) + gamma)/4)
    even:  Gamma(1-4it)^{1/2} exp(-(2 gamma + pi^2/12) it - (psi(1-2it) + gamma)/4)

    The square root is exp(loggamma / 2) on the branch continuous from t = 0.
    Accepts scalars or arrays.
    """
    arr = np.asarray(t, dtype=float)
    _check_envelope(arr)
    parity = _parity(group)
    it = 1j * arr
    if parity is None:
        log_cf = loggamma(1.0 - 2.0 * it) - 2.0 * EULER_GAMMA * it
    elif parity == 1:
        log_cf = (
            0.5 * loggamma(1.0 - 4.0 * it)
            - (2.0 * EULER_GAMMA + math.pi ** 2 / 4.0) * it
            - (2.0 * digamma(1.0 - 4.0 * it) - digamma(1.0 - 2.0 * it) + EULER_GAMMA) / 4.0
        )
    else:
        log_cf = (
            0.5 * loggamma(1.0 - 4.0 * it)
            - (2.0 * EULER_GAMMA + math.pi ** 2 / 12.0) * it
            - (digamma(1.0 - 2.0 * it) + EULER_GAMMA) / 4.0
        )
    out = np.exp(log_cf)
    return complex(out) if np.ndim(out) == 0 else out


def xi_cf_product(group, t: float, k_max: int) -> complex:
    """
    Characteristic function of the series truncated at k_max, term by term.

    U factors: (1 - 2it/k)^{-1} e^{-2it/k}. Other families: the noncentral
    chi-squared factor (1 - 4it/k)^{-1/2} e^{-2it/k}, times
    exp(-8 t^2 / (k^2 (k - 4it))) on the shifted parity.
    """
    _check_envelope(np.asarray(t, dtype=float))
    if k_max < 1:
        raise DomainError(f"k_max must be >= 1, got {k_max}")
    parity = _parity(group)
    log_parts = []
    for start in range(1, k_max + 1, PRODUCT_BLOCK):
        k = np.arange(start, min(start + PRODUCT_BLOCK, k_max + 1), dtype=float)
        if parity is None:
            terms = -np.log1p(-2j * t / k) - 2j * t / k
        else:
            terms = -0.5 * np.log1p(-4j * t / k) - 2j * t / k
            shifted = k % 2 == parity
            terms = terms + np.where(shifted, -8.0 * t * t / (k * k * (k - 4j * t)), 0.0)
        log_parts.append(complex(np.sum(terms)))
    return complex(np.exp(sum(log_parts)))


def empirical_cf(samples, t):
    """Mean of exp(itX) over the samples; t may be a scalar or an array."""
    x = np.asarray(samples, dtype=float)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if x.size == 0:
        raise DomainError("empirical_cf needs at least one sample")
    acc = np.zeros(ts.size, dtype=complex)
    for start in range(0, x.size, CF_SAMPLE_BLOCK):
        block = x[start:start + CF_SAMPLE_BLOCK]
        acc += np.sum(np.exp(1j * np.outer(ts, block)), axis=1)
    out = acc / x.size
    return out if np.ndim(t) else complex(out[0])


def xi_density_from_cf(group, x, t_max: float = CF_ENVELOPE, step: float = 0.01):
    """Density of xi_G by trapezoidal Fourier inversion of xi_cf over [-t_max, t_max]."""
    if not 0.0 < t_max <= CF_ENVELOPE or step <= 0.0:
        raise DomainError(f"need 0 < t_max <= {CF_ENVELOPE} and step > 0")
    ts = np.linspace(-t_max, t_max, int(round(2.0 * t_max / step)) + 1)
    cf = xi_cf(group, ts)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    integrand = cf[None, :] * np.exp(-1j * np.outer(xs, ts))
    out = np.real(np.trapezoid(integrand, ts, axis=1)) / (2.0 * math.pi)
    return out if np.ndim(x) else float(out[0])


# ========== xi_U in closed form ==========

def xi_u_density(x):
    """f(x) = (1/2) exp(-(x + 2 gamma)/2 - exp(-(x + 2 gamma)/2))."""
    u = -(np.asarray(x, dtype=float) + 2.0 * EULER_GAMMA) / 2.0
    out = 0.5 * np.exp(u - np.exp(u))
    return out if np.ndim(out) else float(out)


def xi_u_cdf(x):
    """F(x) = exp(-exp(-(x + 2 gamma)/2))."""
    u = -(np.asarray(x, dtype=float) + 2.0 * EULER_GAMMA) / 2.0
    out = np.exp(-np.exp(u))
    return out if np.ndim(out) else float(out)


# ========== Distances ==========

def levy_distance(samples, reference_cdf: Callable, iterations: int = 60) -> float:
    """
    Levy distance between the empirical CDF of samples and reference_cdf.

    Bisection on eps; a candidate is accepted when at every jump x_i
    i/n <= G(x_i + eps) + eps and G(x_i - eps) - eps <= (i-1)/n.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise DomainError("levy_distance needs at least one sample")
    upper = np.arange(1, n + 1) / n
    lower = np.arange(0, n) / n

    def feasible(eps: float) -> bool:
        if np.any(upper > np.asarray(reference_cdf(x + eps)) + eps):
            return False
        return not np.any(np.asarray(reference_cdf(x - eps)) - eps > lower)

    lo, hi = 0.0, 1.0
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def centered_statistic(spec: EnsembleSpec, w2sq: float) -> float:
    """N0^2 W2^2 - 2 log N0 - c_G, the quantity converging to xi_G."""
    n0 = spec.n0
    return n0 * n0 * w2sq - 2.0 * math.log(n0) - spec.c_g
