"""
Monte Carlo experiments checking the samplers against the exact results.

Every experiment splits its replicates into fixed chunks of CHUNK_SIZE, runs
the chunks (inline or on a process pool) and combines per-chunk results in
chunk order. Replicate r always draws from replicate_rng(seed, r, stream), so
a report depends only on its ExperimentConfig and never on `jobs`.
"""
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from decouple import config
from scipy import stats

from diagnostics import maybe_trace
from dpp_sampler import (
    UnsupportedGroupError,
    angle_power_sums,
    angles_to_spectral_measure,
    sample_angles,
    sample_haar_matrix,
    traces,
)
from ensembles import DomainError, GroupId, ensemble_spec
from exact_moments import MOMENT_TOL, asymptotic_moments, exact_mean, exact_variance
from limit_laws import (
    XI_REFERENCE_SIZE,
    XI_TRUNCATION,
    XiSampleConfig,
    centered_statistic,
    empirical_cf,
    levy_distance,
    sample_xi_batch,
    xi_cf,
    xi_u_cdf,
)
from pi_oracle import linear_statistic_moments
from rng_streams import STREAM_ALIAS, STREAM_DPP, STREAM_MATRIX, STREAM_REFERENCE, STREAM_XI, chunk_bounds, replicate_rng
from run_logging import print_gate_table, print_run_header, save_run_artifact, warn
from wasserstein import w2sq_closed

logger = logging.getLogger(__name__)

CHUNK_SIZE = config("CHUNK_SIZE", default=1_000, cast=int)
Z_GATE = config("Z_GATE", default=4.0, cast=float)
KS_GATE = config("KS_GATE", default=0.03, cast=float)
KS_U_GATE = config("KS_U_GATE", default=0.02, cast=float)
CF_GATE = config("CF_GATE", default=0.01, cast=float)
PI_GATE = config("PI_GATE", default=1e-9, cast=float)

# Differences below this count as exact when a standard error is zero
DEGENERATE_ATOL = 1e-9

# group -> the alias sharing its eigen-angle process
ALIASES = {
    GroupId.U: GroupId.SU,
    GroupId.SU: GroupId.U,
    GroupId.SO_ODD: GroupId.O_ODD,
    GroupId.O_ODD: GroupId.SO_ODD,
    GroupId.USP: GroupId.O_MINUS,
    GroupId.O_MINUS: GroupId.USP,
}

TRACE_SOURCES = ("matrix", "dpp", "both")


@dataclass(frozen=True)
class GateThresholds:
    z: float = Z_GATE
    ks: float = KS_GATE
    ks_u: float = KS_U_GATE
    cf: float = CF_GATE
    pi: float = PI_GATE

    def to_json(self) -> Dict[str, float]:
        return {"z": self.z, "ks": self.ks, "ks_u": self.ks_u, "cf": self.cf, "pi": self.pi}


@dataclass(frozen=True)
class GateResult:
    name: str
    value: float
    threshold: float
    passed: bool

    @classmethod
    def below(cls, name: str, value: float, threshold: float) -> "GateResult":
        """Passes when |value| < threshold; NaN never passes."""
        value = float(value)
        return cls(name=name, value=value, threshold=float(threshold), passed=bool(abs(value) < threshold))

    def to_json(self) -> Dict[str, Any]:
        return {"name": self.name, "value": self.value, "threshold": self.threshold, "passed": self.passed}


@dataclass(frozen=True)
class ExperimentConfig:
    group: GroupId
    n: int
    replicates: int = 1000
    seed: int = 0
    jobs: int = 1
    tol: float = MOMENT_TOL
    output: Optional[str] = None
    fmt: str = "json"
    gates: GateThresholds = field(default_factory=GateThresholds)
    chunk_size: int = CHUNK_SIZE

    def __post_init__(self):
        object.__setattr__(self, "group", GroupId.parse(self.group))
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n}")
        if self.replicates < 1:
            raise DomainError(f"replicates must be >= 1, got {self.replicates}")
        if self.seed < 0:
            raise DomainError(f"seed must be >= 0, got {self.seed}")
        if self.jobs < 1:
            raise DomainError(f"jobs must be >= 1, got {self.jobs}")
        if self.tol <= 0:
            raise DomainError(f"tol must be positive, got {self.tol}")
        if self.fmt not in ("json", "csv", "jsonl"):
            raise DomainError(f"unknown output format '{self.fmt}'")
        if self.chunk_size < 1:
            raise DomainError(f"chunk_size must be >= 1, got {self.chunk_size}")

    def to_json(self) -> Dict[str, Any]:
        # jobs is left out so reports do not depend on it
        return {
            "group": self.group.value,
            "n": self.n,
            "replicates": self.replicates,
            "seed": self.seed,
            "tol": self.tol,
            "chunk_size": self.chunk_size,
            "gates": self.gates.to_json(),
        }


class RunningMoments:
    """
    One-pass count, mean and central moment sums M2, M3, M4.

    push() is the streaming update; combine() merges two accumulators exactly
    as if their samples had been pushed into one.
    """

    def __init__(self):
        self.n = 0
        self.mean = 0.0
        self.m2 = 0.0
        self.m3 = 0.0
        self.m4 = 0.0

    @classmethod
    def from_values(cls, values) -> "RunningMoments":
        """Accumulator for a whole array at once; matches pushing its values up to rounding."""
        arr = np.asarray(values, dtype=float).ravel()
        acc = cls()
        if arr.size == 0:
            return acc
        dev = arr - arr.mean()
        dev2 = dev * dev
        acc.n = int(arr.size)
        acc.mean = float(arr.mean())
        acc.m2 = float(np.sum(dev2))
        acc.m3 = float(np.sum(dev2 * dev))
        acc.m4 = float(np.sum(dev2 * dev2))
        return acc

    def push(self, x: float) -> None:
        n1 = self.n
        self.n += 1
        n = self.n
        delta = x - self.mean
        dn = delta / n
        dn2 = dn * dn
        term1 = delta * dn * n1
        self.mean += dn
        self.m4 += term1 * dn2 * (n * n - 3 * n + 3) + 6.0 * dn2 * self.m2 - 4.0 * dn * self.m3
        self.m3 += term1 * dn * (n - 2) - 3.0 * dn * self.m2
        self.m2 += term1

    def combine(self, other: "RunningMoments") -> "RunningMoments":
        out = RunningMoments()
        na, nb = self.n, other.n
        if na == 0 or nb == 0:
            src = other if na == 0 else self
            out.n, out.mean, out.m2, out.m3, out.m4 = src.n, src.mean, src.m2, src.m3, src.m4
            return out
        n = na + nb
        d = other.mean - self.mean
        d2 = d * d
        out.n = n
        out.mean = self.mean + d * nb / n
        out.m2 = self.m2 + other.m2 + d2 * na * nb / n
        out.m3 = (
            self.m3 + other.m3
            + d2 * d * na * nb * (na - nb) / (n * n)
            + 3.0 * d * (na * other.m2 - nb * self.m2) / n
        )
        out.m4 = (
            self.m4 + other.m4
            + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n ** 3)
            + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * d * (na * other.m3 - nb * self.m3) / n
        )
        return out

    @property
    def variance(self) -> float:
        """Unbiased sample variance (0 below two samples)."""
        return self.m2 / (self.n - 1) if self.n > 1 else 0.0

    @property
    def se_mean(self) -> float:
        return math.sqrt(self.variance / self.n) if self.n else math.nan

    @property
    def se_var(self) -> float:
        """sqrt((m4 - s^4) / n) with m4 the fourth central moment."""
        if self.n < 2:
            return 0.0
        s2 = self.variance
        return math.sqrt(max(self.m4 / self.n - s2 * s2, 0.0) / self.n)


def combine_all(parts: Sequence[RunningMoments]) -> RunningMoments:
    total = RunningMoments()
    for part in parts:
        total = total.combine(part)
    return total


@dataclass
class McReport:
    experiment: str
    config: ExperimentConfig
    sample_mean: Optional[float] = None
    sample_variance: Optional[float] = None
    standard_errors: Dict[str, float] = field(default_factory=dict)
    exact_mean: Optional[float] = None
    exact_variance: Optional[float] = None
    z_scores: Dict[str, float] = field(default_factory=dict)
    ks_statistics: Dict[str, float] = field(default_factory=dict)
    gates: List[GateResult] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)
    runtime: float = 0.0
    jobs: int = 1

    @property
    def passed(self) -> bool:
        return all(g.passed for g in self.gates)

    def to_json(self) -> Dict[str, Any]:
        return {
            "experiment": self.experiment,
            "config": self.config.to_json(),
            "sample_mean": self.sample_mean,
            "sample_variance": self.sample_variance,
            "standard_errors": dict(self.standard_errors),
            "exact_mean": self.exact_mean,
            "exact_variance": self.exact_variance,
            "z_scores": dict(self.z_scores),
            "ks_statistics": dict(self.ks_statistics),
            "gates": [g.to_json() for g in self.gates],
            "details": self.details,
            "passed": self.passed,
        }


# ========== Chunk workers (module level so the process pool can pickle them) ==========

def _w2_chunk(task: Tuple[str, int, int, int, int, int]) -> np.ndarray:
    group, n, seed, stream, start, stop = task
    spec = ensemble_spec(group, n)
    out = np.empty(stop - start)
    for i, rep in enumerate(range(start, stop)):
        rng = replicate_rng(seed, rep, stream)
        sample = sample_angles(spec, rng, seed_path=(seed, rep))
        out[i] = w2sq_closed(angles_to_spectral_measure(sample)).value
    logger.debug("w2 chunk %s n=%d [%d, %d) done", group, n, start, stop)
    return out


def _trace_chunk(task: Tuple[str, int, int, str, int, int, int]) -> np.ndarray:
    group, n, seed, source, k_max, start, stop = task
    spec = ensemble_spec(group, n)
    out = np.empty((stop - start, k_max), dtype=complex)
    for i, rep in enumerate(range(start, stop)):
        if source == "matrix":
            rng = replicate_rng(seed, rep, STREAM_MATRIX)
            out[i] = traces(sample_haar_matrix(group, n, rng), k_max)
        else:
            rng = replicate_rng(seed, rep, STREAM_DPP)
            out[i] = angle_power_sums(sample_angles(spec, rng, seed_path=(seed, rep)), k_max)
    logger.debug("trace chunk %s n=%d source=%s [%d, %d) done", group, n, source, start, stop)
    return out


def _run_chunks(worker: Callable, tasks: List[tuple], jobs: int) -> List[Any]:
    """Results in task order; jobs > 1 maps the tasks over a process pool."""
    if jobs == 1 or len(tasks) == 1:
        return [worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, tasks))


def _w2_values(cfg: ExperimentConfig, group: GroupId, n: int, stream: int) -> Tuple[np.ndarray, RunningMoments]:
    tasks = [
        (group.value, n, cfg.seed, stream, start, stop)
        for start, stop in chunk_bounds(cfg.replicates, cfg.chunk_size)
    ]
    chunks = _run_chunks(_w2_chunk, tasks, cfg.jobs)
    moments = combine_all([RunningMoments.from_values(c) for c in chunks])
    return np.concatenate(chunks), moments


def _z_score(diff: float, se: float) -> float:
    if se > 0.0:
        return diff / se
    return 0.0 if abs(diff) <= DEGENERATE_ATOL else math.inf


def _finish(report: McReport, tag: str, started: float) -> McReport:
    report.runtime = time.perf_counter() - started
    report.jobs = report.config.jobs
    print_gate_table(tag, report.gates)
    save_run_artifact(tag, {**report.to_json(), "runtime": report.runtime, "jobs": report.jobs})
    trace = maybe_trace(report.experiment)
    if trace is not None:
        trace.save("config", report.config)
        trace.save("report", report)
    for gate in report.gates:
        if not gate.passed:
            warn(f"{report.experiment} {report.config.group.value} n={report.config.n}: gate {gate.name} "
                 f"failed with {gate.value:.6g} (threshold {gate.threshold:.6g})")
    logger.info("%s %s n=%d finished in %.2fs, passed=%s", report.experiment, report.config.group.value,
                report.config.n, report.runtime, report.passed)
    return report


# ========== Experiments ==========

def mc_experiment(cfg: ExperimentConfig) -> McReport:
    """Sample mean and variance of W2^2 against the exact finite-N moments."""
    started = time.perf_counter()
    spec = ensemble_spec(cfg.group, cfg.n)
    print_run_header("MC", settings={**cfg.to_json(), "jobs": cfg.jobs})
    logger.info("mc_experiment %s n=%d replicates=%d", spec.group.value, cfg.n, cfg.replicates)

    mean, mean_err = exact_mean(spec, cfg.tol)
    var, var_err = exact_variance(spec, cfg.tol)
    _, moments = _w2_values(cfg, spec.group, cfg.n, STREAM_DPP)
    if cfg.replicates > 1 and moments.variance == 0.0 and var > DEGENERATE_ATOL:
        logger.warning("zero sample variance for %s n=%d", spec.group.value, cfg.n)

    z_mean = _z_score(moments.mean - mean, moments.se_mean)
    z_var = _z_score(moments.variance - var, moments.se_var)
    mean_asym, var_asym = asymptotic_moments(spec)
    report = McReport(
        experiment="mc",
        config=cfg,
        sample_mean=moments.mean,
        sample_variance=moments.variance,
        standard_errors={"mean": moments.se_mean, "variance": moments.se_var},
        exact_mean=mean,
        exact_variance=var,
        z_scores={"mean": z_mean, "variance": z_var},
        gates=[
            GateResult.below("z_mean", z_mean, cfg.gates.z),
            GateResult.below("z_variance", z_var, cfg.gates.z),
        ],
        details={
            "exact_mean_err": mean_err,
            "exact_variance_err": var_err,
            "asymptotic_mean": mean_asym,
            "asymptotic_variance": var_asym,
            "sampled_as": spec.sampled_as.value,
        },
    )
    return _finish(report, "MC", started)


def xi_reference_sample(group, k_max: int, size: int, seed: int) -> np.ndarray:
    """Sorted reference draws of xi_G for two-sample comparisons."""
    xcfg = XiSampleConfig(group=group, k_max=k_max, replicates=size, seed=seed)
    return np.sort(sample_xi_batch(xcfg, replicate_rng(seed, 0, STREAM_REFERENCE), size))


def limit_law_experiment(
    cfg: ExperimentConfig,
    ladder: Optional[Sequence[int]] = None,
    k_max: int = XI_TRUNCATION,
    reference_size: int = XI_REFERENCE_SIZE,
) -> McReport:
    """
    Distance between the centered statistic N0^2 W2^2 - 2 log N0 - c_G and xi_G.

    U / SU compare against the closed CDF of xi_U, other groups against a
    sorted reference sample of the truncated series. With a ladder of sizes
    the KS distances must decrease strictly and end below the KS gate.
    """
    started = time.perf_counter()
    sizes = [int(n) for n in (ladder or [cfg.n])]
    spec0 = ensemble_spec(cfg.group, sizes[0])
    print_run_header("LIMIT", settings={**cfg.to_json(), "ladder": sizes, "k_max": k_max})

    xcfg = XiSampleConfig(group=cfg.group, k_max=k_max)
    if spec0.is_unitary:
        reference_cdf = xi_u_cdf
        reference = None
    else:
        reference = xi_reference_sample(cfg.group, k_max, reference_size, cfg.seed)

        def reference_cdf(x):
            return np.searchsorted(reference, x, side="right") / reference.size

    ks, levy, rows = {}, {}, []
    for n in sizes:
        spec = ensemble_spec(cfg.group, n)
        values, moments = _w2_values(cfg, spec.group, n, STREAM_DPP)
        centered = np.array([centered_statistic(spec, v) for v in values])
        if reference is None:
            stat = float(stats.kstest(centered, xi_u_cdf).statistic)
        else:
            stat = float(stats.ks_2samp(centered, reference).statistic)
        ks[str(n)] = stat
        levy[str(n)] = levy_distance(centered, reference_cdf)
        rows.append({"n": n, "ks": stat, "levy": levy[str(n)], "centered_mean": float(np.mean(centered)),
                     "centered_variance": float(np.var(centered, ddof=1)) if centered.size > 1 else 0.0})
        logger.info("limit law %s n=%d: KS %.4f", spec.group.value, n, stat)

    last = ks[str(sizes[-1])]
    if len(sizes) > 1:
        stats_seq = [ks[str(n)] for n in sizes]
        drops = [b - a for a, b in zip(stats_seq, stats_seq[1:])]
        gates = [
            GateResult.below("ks_last", last, cfg.gates.ks),
            GateResult(name="ks_decreasing", value=max(drops), threshold=0.0, passed=all(d < 0.0 for d in drops)),
        ]
    else:
        threshold = cfg.gates.ks_u if spec0.is_unitary else cfg.gates.ks
        gates = [GateResult.below("ks", last, threshold)]

    report = McReport(
        experiment="limitlaw",
        config=cfg,
        sample_mean=rows[-1]["centered_mean"],
        sample_variance=rows[-1]["centered_variance"],
        exact_mean=0.0,
        exact_variance=spec0.sigma_g,
        ks_statistics=ks,
        gates=gates,
        details={"ladder": rows, "levy": levy, "k_max": k_max,
                 "reference_size": 0 if reference is None else int(reference.size),
                 "tail_bound": xcfg.tail_bound,
                 "gaussian_tail_std": 0.0 if reference is None else xcfg.gaussian_tail_std},
    )
    return _finish(report, "LIMIT", started)


def xi_cf_experiment(cfg: ExperimentConfig, grid: Sequence[float], k_max: int = XI_TRUNCATION) -> McReport:
    """
    Empirical characteristic function of sampled xi_G against the closed form.

    The allowed deviation is the CF gate plus max|t| times the standard
    deviation of the truncated tail. For U the samples are also KS-tested
    against the closed CDF.
    """
    started = time.perf_counter()
    xcfg = XiSampleConfig(group=cfg.group, k_max=k_max, replicates=cfg.replicates, seed=cfg.seed)
    print_run_header("LIMIT", settings={**cfg.to_json(), "k_max": k_max, "grid_points": len(grid)})

    parts = []
    for start, stop in chunk_bounds(cfg.replicates, cfg.chunk_size):
        rng = replicate_rng(cfg.seed, start // cfg.chunk_size, STREAM_XI)
        parts.append(sample_xi_batch(xcfg, rng, stop - start))
    samples = np.concatenate(parts)
    moments = combine_all([RunningMoments.from_values(p) for p in parts])

    ts = np.asarray(grid, dtype=float)
    exact = np.atleast_1d(xi_cf(cfg.group, ts))
    empirical = np.atleast_1d(empirical_cf(samples, ts))
    deviation = float(np.max(np.abs(exact - empirical)))
    tail_std = xcfg.tail_std
    if tail_std > xcfg.tail_bound:
        logger.warning("tail std %.3g above its nominal bound %.3g", tail_std, xcfg.tail_bound)
    allowance = cfg.gates.cf + float(np.max(np.abs(ts))) * tail_std

    rows = [
        {"t": float(t), "re_cf_exact": float(e.real), "im_cf_exact": float(e.imag),
         "re_cf_empirical": float(m.real), "im_cf_empirical": float(m.imag)}
        for t, e, m in zip(ts, exact, empirical)
    ]
    gates = [GateResult.below("cf_max_deviation", deviation, allowance)]
    ks = {}
    if ensemble_spec(cfg.group, 1).is_unitary:
        ks["xi_u"] = float(stats.kstest(samples, xi_u_cdf).statistic)
        gates.append(GateResult.below("ks_xi_u", ks["xi_u"], cfg.gates.ks_u))

    report = McReport(
        experiment="xi-cf",
        config=cfg,
        sample_mean=moments.mean,
        sample_variance=moments.variance,
        standard_errors={"mean": moments.se_mean, "variance": moments.se_var},
        exact_mean=0.0,
        exact_variance=ensemble_spec(cfg.group, 1).sigma_g,
        ks_statistics=ks,
        gates=gates,
        details={"cf_rows": rows, "cf_max_deviation": deviation, "tail_std": tail_std,
                 "tail_bound": xcfg.tail_bound, "gaussian_tail_std": xcfg.gaussian_tail_std, "k_max": k_max},
    )
    return _finish(report, "LIMIT", started)


def reduction_test(cfg: ExperimentConfig) -> McReport:
    """Two-sample KS between W2^2 under the group and under its alias."""
    started = time.perf_counter()
    if cfg.group not in ALIASES:
        raise UnsupportedGroupError(f"group {cfg.group.value} has no alias to compare against")
    alias = ALIASES[cfg.group]
    print_run_header("REDUCE", settings={**cfg.to_json(), "alias": alias.value})

    own, own_moments = _w2_values(cfg, cfg.group, cfg.n, STREAM_DPP)
    other, _ = _w2_values(cfg, alias, cfg.n, STREAM_ALIAS)
    result = stats.ks_2samp(own, other)
    ks = float(result.statistic)
    report = McReport(
        experiment="reduce",
        config=cfg,
        sample_mean=own_moments.mean,
        sample_variance=own_moments.variance,
        standard_errors={"mean": own_moments.se_mean, "variance": own_moments.se_var},
        ks_statistics={alias.value: ks},
        gates=[GateResult.below("ks_alias", ks, cfg.gates.ks)],
        details={"alias": alias.value, "p_value": float(result.pvalue),
                 "alias_mean": float(np.mean(other))},
    )
    return _finish(report, "REDUCE", started)


def _trace_sources(group: GroupId, source: Optional[str]) -> List[str]:
    matrix_ok = group not in (GroupId.USP, GroupId.SU)
    if source is None:
        return ["matrix"] if matrix_ok else ["dpp"]
    if source not in TRACE_SOURCES:
        raise DomainError(f"unknown trace source '{source}', expected one of {TRACE_SOURCES}")
    wanted = ["matrix", "dpp"] if source == "both" else [source]
    if "matrix" in wanted and not matrix_ok:
        raise UnsupportedGroupError(f"no matrix path for group {group.value}; use source 'dpp'")
    return wanted


def trace_experiment(cfg: ExperimentConfig, k_max: int = 4, source: Optional[str] = None) -> McReport:
    """
    Moments of Tr A^k, k <= k_max, against the exact finite-N values.

    U / SU: the real and imaginary parts of the mean are gated against 0 and
    the mean of |Tr A^k|^2 against min(k, N). Real families: sample mean and
    variance against the exact linear-statistic moments. The large-N limits
    are reported alongside.
    """
    started = time.perf_counter()
    if k_max < 1:
        raise DomainError(f"k_max must be >= 1, got {k_max}")
    spec = ensemble_spec(cfg.group, cfg.n)
    sources = _trace_sources(spec.group, source)
    print_run_header("TRACE", settings={**cfg.to_json(), "k_max": k_max, "sources": sources})

    gates, z_scores, rows = [], {}, []
    for src in sources:
        tasks = [
            (spec.group.value, cfg.n, cfg.seed, src, k_max, start, stop)
            for start, stop in chunk_bounds(cfg.replicates, cfg.chunk_size)
        ]
        chunks = _run_chunks(_trace_chunk, tasks, cfg.jobs)
        for k in range(1, k_max + 1):
            exact = linear_statistic_moments(spec, k)
            column = [c[:, k - 1] for c in chunks]
            if spec.is_unitary:
                checks = {
                    "re_mean": (combine_all([RunningMoments.from_values(c.real) for c in column]), 0.0, "mean"),
                    "im_mean": (combine_all([RunningMoments.from_values(c.imag) for c in column]), 0.0, "mean"),
                    "abs2_mean": (combine_all([RunningMoments.from_values(np.abs(c) ** 2) for c in column]),
                                  exact.variance, "mean"),
                }
            else:
                real = combine_all([RunningMoments.from_values(c.real) for c in column])
                checks = {"mean": (real, exact.mean, "mean"), "variance": (real, exact.variance, "variance")}
            row = {"source": src, "k": k, "exact": exact.to_json()}
            for name, (acc, target, kind) in checks.items():
                if kind == "mean":
                    observed, z = acc.mean, _z_score(acc.mean - target, acc.se_mean)
                else:
                    observed, z = acc.variance, _z_score(acc.variance - target, acc.se_var)
                key = f"{src}_k{k}_{name}"
                z_scores[key] = z
                row[name] = observed
                gates.append(GateResult.below(f"z_{key}", z, cfg.gates.z))
            rows.append(row)

    report = McReport(
        experiment="trace",
        config=cfg,
        z_scores=z_scores,
        gates=gates,
        details={"k_max": k_max, "sources": sources, "rows": rows},
    )
    return _finish(report, "TRACE", started)
