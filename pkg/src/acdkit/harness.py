"""Batch Monte Carlo experiments for the counting and estimator limit laws.

Each experiment simulates M independent fixed-span paths per span, computes
a normalized statistic, and compares it against its theoretical reference
law. References with no closed-form CDF (the stable counting limits and the
mixed-Gaussian estimator limit) are sampled, and the comparison is a
two-sample Kolmogorov-Smirnov distance with the reference drawn about ten
times larger than M so reference noise stays subdominant.

Replications use disjoint sub-streams keyed by (seed, span index,
replication index), so reports are identical for any worker count and any
execution order. All experiments run with unit-exponential innovations.
"""

from __future__ import annotations

import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.stats import kstest, ks_2samp, norm

from .errors import (EmptyInputError, ExcessiveFailuresError,
                     RegimeMismatchError, TooFewSamplesError)
from .mle import FitOptions, fit, t_ratio
from .model import (AcdParams, LimitLawSpec, MonteCarloBudget,
                    alpha_for_kappa, estimate_limit_constants,
                    stationary_mean, tail_index)
from .rng import (RandomStream, make_stream, sample_positive_stable,
                  sample_skewed_stable, unit_exponential)
from .sim import calibrate_omega_unit_median, simulate_fixed_span

COUNTING_NORMALIZATIONS = ("lln", "clt_k_gt_2", "stable_1_2", "count_k_lt_1")
QMLE_NORMALIZATIONS = ("qmle_sqrt_t", "qmle_t_k2", "t_ratio")

_SPAN_STRIDE = 1 << 24
_CALIBRATION_STREAM = 1 << 50
_CONSTANTS_STREAM = (1 << 50) + 16
_REFERENCE_STREAM = 1 << 51


@dataclass(frozen=True)
class ExperimentConfig:
    """Design plus execution plan for one experiment.

    The design is either a tail index ``kappa`` (alpha is then solved from
    the exponential tail relation, and omega set so E[x] = 1 for kappa > 1
    or so the median duration is 1 for kappa < 1) or an explicit
    (omega, alpha) pair.
    """

    normalization: str
    spans: tuple
    replications: int = 2000
    seed: int = 0
    kappa: float | None = None
    omega: float | None = None
    alpha: float | None = None
    remainder_mode: str = "exclude"
    null_alpha: float | None = None
    burn_in: int = 10**4
    min_fit_events: int = 10
    reference_factor: int = 10
    max_failure_fraction: float = 0.05
    workers: int = 1
    constants_budget: MonteCarloBudget = field(default_factory=MonteCarloBudget)

    def __post_init__(self):
        if self.replications < 100:
            raise ValueError("need at least 100 replications")
        spans = tuple(float(s) for s in self.spans)
        if not spans or any(s <= 0.0 for s in spans) or list(spans) != sorted(spans):
            raise ValueError("spans must be positive and increasing")
        object.__setattr__(self, "spans", spans)
        if self.remainder_mode not in ("exclude", "include", "both"):
            raise ValueError(f"unknown remainder mode {self.remainder_mode!r}")
        if (self.kappa is None) == (self.alpha is None):
            raise ValueError("give exactly one of kappa or (omega, alpha)")


def resolve_design(config: ExperimentConfig) -> tuple[AcdParams, float]:
    """Parameters and tail index implied by the config."""
    spec = unit_exponential()
    if config.kappa is not None:
        kappa = config.kappa
        if kappa == 1.0:
            raise RegimeMismatchError("the boundary tail index 1 is not "
                                      "covered; choose kappa above or below 1")
        alpha = alpha_for_kappa(kappa)
        if kappa > 1.0:
            omega = 1.0 - alpha          # unit-mean design
        else:
            omega = calibrate_omega_unit_median(
                alpha, spec, make_stream(config.seed, _CALIBRATION_STREAM))
        return AcdParams(omega=omega, alpha=alpha), kappa
    params = AcdParams(omega=config.omega, alpha=config.alpha)
    kappa = math.inf if config.alpha == 0.0 else tail_index(config.alpha, spec)
    return params, kappa


def _guard_regime(normalization: str, kappa: float) -> None:
    ok = {
        "lln": kappa > 1.0,
        "clt_k_gt_2": kappa > 2.0,
        "stable_1_2": 1.0 < kappa < 2.0,
        "count_k_lt_1": kappa < 1.0,
        "qmle_sqrt_t": kappa > 1.0,
        "qmle_t_k2": kappa < 1.0,
        "t_ratio": kappa != 1.0,
    }.get(normalization)
    if ok is None:
        raise ValueError(f"unknown normalization {normalization!r}")
    if not ok:
        raise RegimeMismatchError(
            f"normalization {normalization!r} is outside its regime at "
            f"kappa = {kappa:.3f}")


# ---------------------------------------------------------------------------
# Small statistical utilities


@dataclass
class QQResult:
    pairs: np.ndarray
    degenerate: bool


def qq_against_normal(samples) -> QQResult:
    """Paired (empirical, standard normal) quantiles at positions (i-1/2)/m."""
    s = np.sort(np.asarray(samples, dtype=float))
    if s.size < 10:
        raise TooFewSamplesError(f"need at least 10 samples, got {s.size}")
    theo = norm.ppf((np.arange(s.size) + 0.5) / s.size)
    return QQResult(pairs=np.column_stack([s, theo]),
                    degenerate=bool(s[0] == s[-1]))


def qq_correlation(samples) -> float:
    qq = qq_against_normal(samples)
    if qq.degenerate:
        return 0.0
    return float(np.corrcoef(qq.pairs[:, 0], qq.pairs[:, 1])[0, 1])


def ks_statistic(samples, reference) -> float:
    """One-sample KS against a CDF callable, or two-sample against a
    reference sample."""
    s = np.asarray(samples, dtype=float)
    if s.size == 0:
        raise EmptyInputError("empty sample")
    if callable(reference):
        return float(kstest(s, reference).statistic)
    ref = np.asarray(reference, dtype=float)
    if ref.size == 0:
        raise EmptyInputError("empty reference sample")
    return float(ks_2samp(s, ref).statistic)


def reference_limit_sample(spec: LimitLawSpec, case: str,
                           stream: RandomStream, m: int) -> np.ndarray:
    """Draws from the limit law attached to a normalization case.

    stable_1_2 returns the right-skewed stable counting limit; count_k_lt_1
    the positive limit of N_T/T^kappa; qmle_t_k2 the alpha marginal of the
    mixed Gaussian; clt_k_gt_2, qmle_sqrt_t and t_ratio the matching
    Gaussian laws.
    """
    kappa = spec.kappa
    if case == "stable_1_2":
        if spec.gamma_scale is None:
            raise RegimeMismatchError("gamma scale undefined for this design")
        return spec.gamma_scale * sample_skewed_stable(stream, kappa, size=m)
    if case == "count_k_lt_1":
        if spec.lambda_scale is None:
            raise RegimeMismatchError("lambda scale undefined for this design")
        eta = sample_positive_stable(stream, kappa, size=m)
        return spec.lambda_scale * eta ** (-kappa)
    if case == "qmle_t_k2":
        if spec.lambda_scale is None:
            raise RegimeMismatchError("lambda scale undefined for this design")
        eta = sample_positive_stable(stream, kappa, size=m)
        lam = spec.lambda_scale * eta ** (-kappa)
        marginal_var = np.linalg.inv(spec.omega_matrix)[1, 1] / lam
        return np.sqrt(marginal_var) * stream.generator.standard_normal(m)
    if case == "clt_k_gt_2":
        if spec.sigma2 is None:
            raise RegimeMismatchError("sigma2 undefined for this design")
        sd = math.sqrt(spec.sigma2 / spec.mu**3)
        return sd * stream.generator.standard_normal(m)
    if case in ("qmle_sqrt_t", "t_ratio"):
        return stream.generator.standard_normal(m)
    raise RegimeMismatchError(f"no reference law for case {case!r}")


# ---------------------------------------------------------------------------
# Replication workers (module level so process pools can pickle them)


def _counting_rep(args) -> int:
    seed, stream_id, omega, alpha, span, burn_in = args
    series = simulate_fixed_span(AcdParams(omega, alpha), unit_exponential(),
                                 span, make_stream(seed, stream_id),
                                 burn_in=burn_in)
    return series.count


def _qmle_rep(args):
    (seed, stream_id, omega, alpha, span, burn_in, min_events,
     include_remainder, null_alpha) = args
    series = simulate_fixed_span(AcdParams(omega, alpha), unit_exponential(),
                                 span, make_stream(seed, stream_id),
                                 burn_in=burn_in)
    if series.count < min_events:
        return ("short", math.nan, math.nan, False)
    options = FitOptions(include_remainder=include_remainder,
                         min_events=min_events)
    try:
        # per-fit advisory warnings (estimates beyond the stationarity
        # bound on short heavy-tail samples) are routine here
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            result = fit(series, options)
    except Exception:
        return ("failed", math.nan, math.nan, False)
    if not result.converged:
        return ("failed", math.nan, math.nan, False)
    tstat = math.nan
    if not result.boundary_flag:
        try:
            tstat = t_ratio(result, null_alpha)
        except Exception:
            tstat = math.nan
    return ("ok", result.theta_hat.alpha, tstat, result.boundary_flag)


def _run_tasks(worker, tasks, workers: int):
    if workers <= 1:
        return [worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, len(tasks) // (workers * 4))
        return list(pool.map(worker, tasks, chunksize=chunk))


# ---------------------------------------------------------------------------
# Reports


@dataclass
class SpanResult:
    span: float
    statistic: np.ndarray
    reference: np.ndarray | None
    ks: float | None
    qq_pairs: np.ndarray | None
    n_used: int
    n_failed: int = 0
    n_skipped_short: int = 0
    n_boundary: int = 0
    summary: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "span": self.span,
            "statistic": [float(v) for v in self.statistic],
            "reference": (None if self.reference is None
                          else [float(v) for v in self.reference]),
            "ks": self.ks,
            "qq_pairs": (None if self.qq_pairs is None
                         else np.asarray(self.qq_pairs).tolist()),
            "n_used": self.n_used,
            "n_failed": self.n_failed,
            "n_skipped_short": self.n_skipped_short,
            "n_boundary": self.n_boundary,
            "summary": self.summary,
        }


@dataclass
class ExperimentReport:
    kind: str
    normalization: str
    design: dict
    config: dict
    constants: dict
    results: dict              # remainder mode -> list of SpanResult
    runtime_seconds: float = 0.0

    def to_json(self, include_runtime: bool = False) -> str:
        d = {
            "schema_version": 1,
            "kind": self.kind,
            "normalization": self.normalization,
            "design": self.design,
            "config": self.config,
            "constants": self.constants,
            "results": {mode: [r.to_dict() for r in spans]
                        for mode, spans in self.results.items()},
        }
        if include_runtime:
            d["runtime_seconds"] = self.runtime_seconds
        return json.dumps(d, indent=2)

    def write_csv(self, prefix: str) -> list:
        """Q-Q pairs and statistic samples as CSV files for plotting."""
        written = []
        for mode, spans in self.results.items():
            tag = f"_{mode}" if len(self.results) > 1 else ""
            for r in spans:
                stem = f"{prefix}{tag}_T{r.span:g}"
                path = f"{stem}_stat.csv"
                with open(path, "w") as fh:
                    fh.write("statistic\n")
                    for v in r.statistic:
                        fh.write(f"{float(v)!r}\n")
                written.append(path)
                if r.qq_pairs is not None:
                    path = f"{stem}_qq.csv"
                    with open(path, "w") as fh:
                        fh.write("empirical,theoretical\n")
                        for a, b in r.qq_pairs:
                            fh.write(f"{float(a)!r},{float(b)!r}\n")
                    written.append(path)
        return written


def _config_dict(config: ExperimentConfig) -> dict:
    d = asdict(config)
    d["constants_budget"] = asdict(config.constants_budget)
    d["spans"] = list(config.spans)
    # execution detail, not experiment identity: reports must be identical
    # for any worker count
    d.pop("workers")
    return d


def _design_dict(params: AcdParams, kappa: float) -> dict:
    mu = stationary_mean(params)
    return {"omega": params.omega, "alpha": params.alpha,
            "kappa": None if math.isinf(kappa) else kappa,
            "mu": None if math.isinf(mu) else mu}


def _constants_dict(limits: LimitLawSpec) -> dict:
    return json.loads(limits.to_json())


# ---------------------------------------------------------------------------
# Experiments


def run_counting_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Distributional checks for the event-count limits.

    lln: N_T/T samples. clt_k_gt_2: root-T deviations studentized by
    sqrt(sigma2/mu^3), compared with N(0,1). stable_1_2: T^{(k-1)/k}
    deviations compared with the reflected, mu-scaled stable reference
    -gamma/mu (inverting the partial-sum limit flips the sign and adds a
    1/mu factor relative to the gamma variable itself). count_k_lt_1:
    N_T/T^k compared with the positive limit law.
    """
    t0 = time.perf_counter()
    if config.normalization not in COUNTING_NORMALIZATIONS:
        raise ValueError(f"{config.normalization!r} is not a counting "
                         "normalization")
    params, kappa = resolve_design(config)
    _guard_regime(config.normalization, kappa)
    spec = unit_exponential()
    limits = estimate_limit_constants(
        params, spec, make_stream(config.seed, _CONSTANTS_STREAM),
        mc=config.constants_budget)
    mu = stationary_mean(params)
    m_ref = config.reference_factor * config.replications

    spans_out = []
    for si, span in enumerate(config.spans):
        tasks = [(config.seed, si * _SPAN_STRIDE + r, params.omega,
                  params.alpha, span, config.burn_in)
                 for r in range(config.replications)]
        counts = np.array(_run_tasks(_counting_rep, tasks, config.workers),
                          dtype=float)
        reference = None
        qq = None
        if config.normalization == "lln":
            stat = counts / span
            ks = None
        elif config.normalization == "clt_k_gt_2":
            sd = math.sqrt(limits.sigma2 / mu**3)
            stat = math.sqrt(span) * (counts / span - 1.0 / mu) / sd
            ks = ks_statistic(stat, norm.cdf)
            qq = qq_against_normal(stat).pairs
        elif config.normalization == "stable_1_2":
            stat = span ** ((kappa - 1.0) / kappa) * (counts / span - 1.0 / mu)
            ref_stream = make_stream(config.seed, _REFERENCE_STREAM + si)
            gamma = reference_limit_sample(limits, "stable_1_2", ref_stream,
                                           m_ref)
            reference = -gamma / mu
            ks = ks_statistic(stat, reference)
        else:  # count_k_lt_1
            stat = counts / span**kappa
            ref_stream = make_stream(config.seed, _REFERENCE_STREAM + si)
            reference = reference_limit_sample(limits, "count_k_lt_1",
                                               ref_stream, m_ref)
            ks = ks_statistic(stat, reference)
        summary = {"mean": float(stat.mean()), "sd": float(stat.std(ddof=1))}
        spans_out.append(SpanResult(span=span, statistic=stat,
                                    reference=reference, ks=ks, qq_pairs=qq,
                                    n_used=len(stat), summary=summary))

    return ExperimentReport(
        kind="counting", normalization=config.normalization,
        design=_design_dict(params, kappa), config=_config_dict(config),
        constants=_constants_dict(limits),
        results={"exclude": spans_out},
        runtime_seconds=time.perf_counter() - t0)


def _excess_kurtosis(values: np.ndarray) -> float:
    z = (values - values.mean()) / values.std(ddof=0)
    return float((z**4).mean() - 3.0)


def _bootstrap_se(values: np.ndarray, statistic, stream: RandomStream,
                  n_boot: int = 200) -> float:
    n = len(values)
    idx = stream.generator.integers(0, n, size=(n_boot, n))
    reps = np.array([statistic(values[i]) for i in idx])
    return float(reps.std(ddof=1))


def run_qmle_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Distributional checks for the estimator and its t-ratio.

    qmle_sqrt_t: root-T alpha deviations over the asymptotic scale, against
    N(0,1). qmle_t_k2: T^{k/2} deviations against the sampled mixed-Gaussian
    marginal (Q-Q pairs are produced after standardizing by the empirical
    deviation, which is the usual presentation in this regime). t_ratio:
    studentized deviations against N(0,1), with the empirical size at the
    1.96 cutoff reported.

    Replications whose window holds fewer than ``min_fit_events`` events
    are counted as skipped (an unavoidable feature of infinite-mean
    designs); failed or non-converged fits are counted separately and abort
    the experiment when their fraction exceeds ``max_failure_fraction``.
    """
    t0 = time.perf_counter()
    if config.normalization not in QMLE_NORMALIZATIONS:
        raise ValueError(f"{config.normalization!r} is not an estimator "
                         "normalization")
    params, kappa = resolve_design(config)
    _guard_regime(config.normalization, kappa)
    spec = unit_exponential()
    limits = estimate_limit_constants(
        params, spec, make_stream(config.seed, _CONSTANTS_STREAM),
        mc=config.constants_budget)
    alpha0 = params.alpha
    null_alpha = config.null_alpha if config.null_alpha is not None else alpha0
    m_ref = config.reference_factor * config.replications

    modes = (("exclude", "include") if config.remainder_mode == "both"
             else (config.remainder_mode,))
    results = {}
    for mode in modes:
        include_remainder = mode == "include"
        spans_out = []
        for si, span in enumerate(config.spans):
            tasks = [(config.seed, si * _SPAN_STRIDE + r, params.omega,
                      params.alpha, span, config.burn_in,
                      config.min_fit_events, include_remainder, null_alpha)
                     for r in range(config.replications)]
            rows = _run_tasks(_qmle_rep, tasks, config.workers)
            status = np.array([r[0] for r in rows])
            alphas = np.array([r[1] for r in rows])
            tstats = np.array([r[2] for r in rows])
            n_short = int(np.count_nonzero(status == "short"))
            n_failed = int(np.count_nonzero(status == "failed"))
            n_boundary = int(np.count_nonzero([r[3] for r in rows]))
            attempted = config.replications - n_short
            if attempted and n_failed / attempted > config.max_failure_fraction:
                raise ExcessiveFailuresError(
                    f"{n_failed}/{attempted} fits failed at span {span:g}")
            ok = status == "ok"

            qq = None
            reference = None
            summary = {}
            if config.normalization == "qmle_sqrt_t":
                stat = (math.sqrt(span) * (alphas[ok] - alpha0)
                        / limits.sigma_alpha)
                ks = ks_statistic(stat, norm.cdf)
                qq = qq_against_normal(stat).pairs
                summary["qq_correlation"] = float(
                    np.corrcoef(qq[:, 0], qq[:, 1])[0, 1])
            elif config.normalization == "qmle_t_k2":
                stat = span ** (kappa / 2.0) * (alphas[ok] - alpha0)
                ref_stream = make_stream(config.seed, _REFERENCE_STREAM + si)
                reference = reference_limit_sample(limits, "qmle_t_k2",
                                                   ref_stream, m_ref)
                ks = ks_statistic(stat, reference)
                qq = qq_against_normal(stat / stat.std(ddof=1)).pairs
                kurt = _excess_kurtosis(stat)
                summary["excess_kurtosis"] = kurt
                summary["excess_kurtosis_se"] = _bootstrap_se(
                    stat, _excess_kurtosis,
                    make_stream(config.seed, _REFERENCE_STREAM + 4096 + si))
            else:  # t_ratio
                stat = tstats[ok & np.isfinite(tstats)]
                ks = ks_statistic(stat, norm.cdf)
                qq = qq_against_normal(stat).pairs
                summary["size_at_1.96"] = float(np.mean(np.abs(stat) > 1.96))
            summary["mean"] = float(stat.mean())
            summary["sd"] = float(stat.std(ddof=1))
            summary["median_abs_dev_alpha"] = float(
                np.median(np.abs(alphas[ok] - alpha0)))
            spans_out.append(SpanResult(
                span=span, statistic=stat, reference=reference, ks=ks,
                qq_pairs=qq, n_used=len(stat), n_failed=n_failed,
                n_skipped_short=n_short, n_boundary=n_boundary,
                summary=summary))
        results[mode] = spans_out

    return ExperimentReport(
        kind="qmle", normalization=config.normalization,
        design=_design_dict(params, kappa), config=_config_dict(config),
        constants=_constants_dict(limits), results=results,
        runtime_seconds=time.perf_counter() - t0)
