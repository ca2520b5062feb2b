"""Parameter calculus for the order-1 conditional duration recursion.

The model is ``x_i = psi_i * eps_i`` with ``psi_i = omega + alpha * x_{i-1}``
and i.i.d. positive unit-mean innovations. This module maps parameters to
the quantities the asymptotics run on: the stationarity bound, the tail
index ``kappa`` solving ``E[(alpha*eps)^kappa] = 1``, stationary moments,
and Monte Carlo estimates of the limit-law constants (tail constant,
perpetuity moments, counting variance, score outer-product matrix).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln, logsumexp

from . import _kernels
from .errors import (DenominatorNearZeroError, InfiniteVarianceError,
                     NoSolutionError, NonFiniteMomentError)
from .rng import InnovationSpec, RandomStream, unit_exponential

_KAPPA_LO = 1e-6
_KAPPA_HI = 50.0


@dataclass(frozen=True)
class AcdParams:
    """Parameter pair (omega, alpha) of the duration recursion."""

    omega: float
    alpha: float

    def __post_init__(self):
        if not self.omega > 0.0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if self.alpha < 0.0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")

    def is_stationary(self, spec: InnovationSpec) -> bool:
        return self.alpha < stationarity_bound(spec)


def psi_next(params: AcdParams, prev_duration: float) -> float:
    """Conditional duration rate given the previous duration."""
    if prev_duration < 0.0:
        raise ValueError("previous duration must be non-negative")
    return params.omega + params.alpha * prev_duration


def stationarity_bound(spec: InnovationSpec) -> float:
    """Upper stationarity bound a_u = exp(-E[ln eps]).

    The recursion has a stationary, geometrically ergodic solution exactly
    for alpha < a_u. Exponential innovations give a_u = exp(Euler gamma).
    """
    if spec.mean_log == 0.0:
        raise ValueError("degenerate innovations (E[ln eps] = 0) are excluded")
    return math.exp(-spec.mean_log)


def alpha_for_kappa(kappa: float) -> float:
    """Invert the tail-index relation for exponential innovations:
    alpha = Gamma(kappa + 1)^(-1/kappa)."""
    if not kappa > 0.0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    return math.exp(-gammaln(kappa + 1.0) / kappa)


def tail_index(alpha: float, spec: InnovationSpec | None = None,
               stream: RandomStream | None = None,
               mc_draws: int = 2 * 10**5) -> float:
    """Tail index kappa solving E[(alpha*eps)^kappa] = 1.

    Exponential innovations reduce the moment equation to
    alpha^kappa * Gamma(kappa+1) = 1, solved in log form by bracketed
    root-finding to residual below 1e-10. Custom innovations solve the
    Monte Carlo version of the same equation on ``mc_draws`` samples.
    """
    spec = spec if spec is not None else unit_exponential()
    a_u = stationarity_bound(spec)
    if alpha <= 0.0 or alpha >= a_u:
        raise NoSolutionError(
            f"tail index defined for 0 < alpha < a_u = {a_u:.6f}, got {alpha}")

    if spec.is_exponential:
        log_alpha = math.log(alpha)

        def f(k):
            return k * log_alpha + gammaln(k + 1.0)
    else:
        if stream is None:
            raise ValueError("custom innovations need a stream for the "
                             "moment equation")
        draws = spec.draw(stream, mc_draws)
        if np.any(draws <= 0.0) or not np.all(np.isfinite(draws)):
            raise NonFiniteMomentError("innovation sampler produced "
                                       "non-positive or non-finite draws")
        log_ae = np.log(alpha * draws)

        def f(k):
            m = logsumexp(k * log_ae) - math.log(len(log_ae))
            if not np.isfinite(m):
                raise NonFiniteMomentError(
                    f"moment estimate not finite at kappa={k}")
            return m

    # f(0) = 0 and f is strictly convex with f'(0) < 0 inside the
    # stationarity region, so the positive root is unique.
    hi = 1.0
    while f(hi) < 0.0:
        hi *= 2.0
        if hi > _KAPPA_HI:
            raise NoSolutionError(
                f"no root of the moment equation below kappa={_KAPPA_HI}")
    kappa = brentq(f, _KAPPA_LO, hi, xtol=1e-14, rtol=8.9e-16)
    if abs(f(kappa)) > 1e-10:
        raise NoSolutionError(f"root residual {f(kappa):.2e} exceeds 1e-10")
    return kappa


def stationary_mean(params: AcdParams) -> float:
    """E[x] = omega / (1 - alpha) for alpha < 1, +inf otherwise."""
    if params.alpha < 1.0:
        return params.omega / (1.0 - params.alpha)
    return math.inf


# ---------------------------------------------------------------------------
# Perpetuity series T_inf = sum_i alpha^i prod_{j<=i} eps_j


@dataclass(frozen=True)
class TruncationRule:
    """Adaptive stop once the running term drops below ``tol``; ``max_terms``
    is a hard cap, and hits are counted rather than silently absorbed."""

    tol: float = 1e-12
    max_terms: int = 10**4


@dataclass
class TInfinitySample:
    values: np.ndarray
    cap_hits: int

    @property
    def cap_hit_fraction(self) -> float:
        return self.cap_hits / len(self.values)


def sample_t_infinity(stream: RandomStream, alpha: float,
                      spec: InnovationSpec | None = None,
                      size: int | None = None,
                      truncation: TruncationRule = TruncationRule()):
    """Truncated draws of the perpetuity series.

    Returns a float for scalar calls, or a :class:`TInfinitySample` when
    ``size`` is given. Convergence needs alpha < a_u (log drift negative).
    """
    spec = spec if spec is not None else unit_exponential()
    if alpha < 0.0:
        raise ValueError("alpha must be non-negative")
    if alpha >= stationarity_bound(spec):
        raise ValueError("series diverges for alpha >= stationarity bound")
    n = 1 if size is None else size
    if alpha == 0.0:
        out = TInfinitySample(values=np.zeros(n), cap_hits=0)
        return 0.0 if size is None else out

    total = np.zeros(n)
    term = np.ones(n)
    active = np.ones(n, dtype=bool)
    cap_hits = 0
    for _ in range(truncation.max_terms):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        term[idx] *= alpha * spec.draw(stream, idx.size)
        total[idx] += term[idx]
        active[idx] = term[idx] >= truncation.tol
    else:
        cap_hits = int(np.count_nonzero(active))
    sample = TInfinitySample(values=total, cap_hits=cap_hits)
    return float(total[0]) if size is None else sample


# ---------------------------------------------------------------------------
# Monte Carlo machinery for the limit constants


@dataclass(frozen=True)
class MonteCarloBudget:
    pairs: int = 10**6           # (eps, x) pairs for the tail-constant numerator
    eps_draws: int = 10**6       # denominator draws
    path_length: int = 10**6     # stationary path for the score outer product
    burn_in: int = 10**4
    thin: int = 50
    t_inf_draws: int = 10**5
    batches: int = 20


def _initial_state(params: AcdParams) -> float:
    return stationary_mean(params) if params.alpha < 1.0 else params.omega


def _stationary_draws(params: AcdParams, spec: InnovationSpec,
                      stream: RandomStream, n: int, burn_in: int,
                      thin: int) -> np.ndarray:
    """n approximately independent draws from the stationary duration law,
    taken every ``thin`` steps of a burned-in path."""
    prev = _kernels.recursion_tail(spec.draw(stream, burn_in), params.omega,
                                   params.alpha, _initial_state(params))
    out = np.empty(n)
    filled = 0
    chunk = max(thin, min(n * thin, 1 << 21))
    offset = thin - 1
    while filled < n:
        xs = _kernels.recursion_path(spec.draw(stream, chunk), params.omega,
                                     params.alpha, prev)
        take = xs[offset::thin]
        k = min(len(take), n - filled)
        out[filled:filled + k] = take[:k]
        filled += k
        prev = xs[-1]
    return out


def estimate_c_kappa(params: AcdParams, spec: InnovationSpec,
                     stream: RandomStream, kappa: float | None = None,
                     mc: MonteCarloBudget = MonteCarloBudget()):
    """Monte Carlo estimate of the tail constant c with standard error.

    P(x > z) ~ c z^{-kappa}; by the renewal theorem for the recursion
    written as x_i = A_i x_{i-1} + B_i with (A_i, B_i) = (alpha, omega)*eps_i,

        c = E[((omega + alpha x) eps)^k - ((alpha eps) x)^k]
            / (k E[(alpha eps)^k ln(alpha eps)]),

    with x stationary and independent of eps. The numerator averages over
    x from a burned-in path thinned to reduce serial correlation (the
    independent eps factor integrates out); the denominator is Monte Carlo
    over eps alone. Standard errors combine by the delta method.
    """
    if kappa is None:
        kappa = tail_index(params.alpha, spec, stream=stream)
    alpha, omega = params.alpha, params.omega

    # The pair expectation factors exactly over the independent coordinates:
    # E[eps^k g(x)] = E[eps^k] E[g(x)], and E[eps^k] = Gamma(k+1) for
    # exponential innovations, which removes the innovation noise entirely.
    xs = _stationary_draws(params, spec, stream, mc.pairs, mc.burn_in, mc.thin)
    gvals = (omega + alpha * xs)**kappa - (alpha * xs)**kappa
    g_mean = float(gvals.mean())
    g_se = float(gvals.std(ddof=1) / math.sqrt(len(gvals)))
    if spec.is_exponential:
        ek, ek_se = math.exp(gammaln(kappa + 1.0)), 0.0
    else:
        ekv = spec.draw(stream, mc.pairs) ** kappa
        ek = float(ekv.mean())
        ek_se = float(ekv.std(ddof=1) / math.sqrt(len(ekv)))
    num = ek * g_mean
    num_se = abs(num) * math.sqrt((g_se / g_mean) ** 2
                                  + ((ek_se / ek) ** 2 if ek else 0.0))

    e2 = spec.draw(stream, mc.eps_draws)
    ae = alpha * e2
    dvals = kappa * ae**kappa * np.log(ae)
    den = float(dvals.mean())
    den_se = float(dvals.std(ddof=1) / math.sqrt(len(dvals)))
    if abs(den) < 3.0 * den_se:
        raise DenominatorNearZeroError(
            f"denominator {den:.3e} within 3 standard errors ({den_se:.3e}) of 0")

    c = num / den
    se = abs(c) * math.sqrt((num_se / num) ** 2 + (den_se / den) ** 2)
    return c, se


@dataclass
class TailProfile:
    """Tail behaviour of a stationary parameterization."""

    kappa: float
    a_u: float
    mu: float
    c_kappa: float
    c_kappa_se: float

    def to_json(self) -> str:
        d = {"schema_version": 1, **asdict(self)}
        d["mu"] = None if math.isinf(self.mu) else self.mu
        return json.dumps(d, indent=2)


def tail_profile(params: AcdParams, spec: InnovationSpec,
                 stream: RandomStream,
                 mc: MonteCarloBudget = MonteCarloBudget()) -> TailProfile:
    kappa = tail_index(params.alpha, spec, stream=stream)
    c, c_se = estimate_c_kappa(params, spec, stream, kappa=kappa, mc=mc)
    return TailProfile(kappa=kappa, a_u=stationarity_bound(spec),
                       mu=stationary_mean(params), c_kappa=c, c_kappa_se=c_se)


def _batch_se(batch_means: np.ndarray) -> float:
    return float(batch_means.std(ddof=1) / math.sqrt(len(batch_means)))


@dataclass
class LimitLawSpec:
    """Constants and sampler configuration for the limit variables.

    ``Omega`` is E[v v'] with v_i = (1, x_{i-1})'/psi_i. ``m_kappa`` is
    E[(1+T_inf)^kappa - T_inf^kappa]. ``sigma2`` (kappa > 2 only) scales the
    counting CLT; ``lambda_scale`` = 1/(c*m) (kappa < 1) and ``gamma_scale``
    = (c*m/mu)^(1/kappa) (1 < kappa < 2) scale the stable counting limits.
    Fields outside their regime are None. Every estimate carries a standard
    error.
    """

    kappa: float
    mu: float
    tau: float
    omega_matrix: np.ndarray
    omega_matrix_se: np.ndarray
    m_kappa: float
    m_kappa_se: float
    c_kappa: float | None = None
    c_kappa_se: float | None = None
    var_x: float | None = None
    var_x_se: float | None = None
    sigma2: float | None = None
    sigma2_se: float | None = None
    lambda_scale: float | None = None
    lambda_scale_se: float | None = None
    gamma_scale: float | None = None
    gamma_scale_se: float | None = None
    cap_hit_fraction: float = 0.0
    seed: int | None = None
    stream_id: int | None = None
    budget: MonteCarloBudget = field(default_factory=MonteCarloBudget)

    def __post_init__(self):
        om = np.asarray(self.omega_matrix, dtype=float)
        if om.shape != (2, 2) or not np.allclose(om, om.T):
            raise ValueError("omega_matrix must be symmetric 2x2")
        if np.linalg.eigvalsh(om).min() <= 0.0:
            raise ValueError("omega_matrix must be positive definite")
        self.omega_matrix = om

    @property
    def sigma_alpha(self) -> float:
        """Asymptotic scale of the alpha estimator in the root-T regime:
        sqrt(tau * mu * (Omega^{-1})_{alpha,alpha})."""
        if not self.kappa > 1.0:
            raise InfiniteVarianceError("sigma_alpha needs kappa > 1")
        return math.sqrt(self.tau * self.mu
                         * np.linalg.inv(self.omega_matrix)[1, 1])

    def to_json(self) -> str:
        d = asdict(self)
        d["omega_matrix"] = self.omega_matrix.tolist()
        d["omega_matrix_se"] = np.asarray(self.omega_matrix_se).tolist()
        d["budget"] = asdict(self.budget)
        d["mu"] = None if math.isinf(self.mu) else self.mu
        d["kappa"] = None if math.isinf(self.kappa) else self.kappa
        return json.dumps({"schema_version": 1, **d}, indent=2)


def estimate_limit_constants(params: AcdParams, spec: InnovationSpec,
                             stream: RandomStream,
                             mc: MonteCarloBudget = MonteCarloBudget(),
                             want_sigma2: bool | None = None) -> LimitLawSpec:
    """Monte Carlo estimates of all limit constants valid for the design.

    Work is split across streams spawned from ``stream`` so the pieces are
    independent and the whole call is reproducible from (seed, stream_id).
    """
    if params.alpha == 0.0:
        kappa = math.inf
    else:
        kappa = tail_index(params.alpha, spec,
                           stream=stream.spawn(stream.stream_id + 1))
    if want_sigma2 is True and kappa <= 2.0:
        raise InfiniteVarianceError(
            f"sigma2 requires kappa > 2, design has kappa = {kappa:.3f}")
    compute_sigma2 = kappa > 2.0 if want_sigma2 is None else want_sigma2
    mu = stationary_mean(params)

    # Score outer product and duration moments from one long stationary path.
    path_stream = stream.spawn(stream.stream_id + 2)
    prev = _kernels.recursion_tail(spec.draw(path_stream, mc.burn_in),
                                   params.omega, params.alpha,
                                   _initial_state(params))
    batches = mc.batches
    per_batch = max(1, mc.path_length // batches)
    bm = np.zeros((batches, 3))   # v1^2, v1 v2, v2^2
    bx = np.zeros((batches, 2))   # x, x^2
    for b in range(batches):
        e = spec.draw(path_stream, per_batch)
        xs = _kernels.recursion_path(e, params.omega, params.alpha, prev)
        xlag = np.concatenate(([prev], xs[:-1]))
        prev = xs[-1]
        psi = params.omega + params.alpha * xlag
        v1 = 1.0 / psi
        v2 = xlag / psi
        bm[b] = [(v1 * v1).mean(), (v1 * v2).mean(), (v2 * v2).mean()]
        bx[b] = [xs.mean(), (xs * xs).mean()]
    means = bm.mean(axis=0)
    omega_matrix = np.array([[means[0], means[1]], [means[1], means[2]]])
    ses = bm.std(axis=0, ddof=1) / math.sqrt(batches)
    omega_matrix_se = np.array([[ses[0], ses[1]], [ses[1], ses[2]]])

    var_x = var_x_se = None
    if compute_sigma2:
        mx, mx2 = bx.mean(axis=0)
        var_x = float(mx2 - mx * mx)
        batch_vars = bx[:, 1] - bx[:, 0] ** 2
        var_x_se = _batch_se(batch_vars)

    # Perpetuity moments.
    tinf_stream = stream.spawn(stream.stream_id + 3)
    if params.alpha == 0.0:
        m_kappa, m_kappa_se, cap_fraction = 1.0, 0.0, 0.0
        ti_mean = ti_mean_se = 0.0
    else:
        ti = sample_t_infinity(tinf_stream, params.alpha, spec,
                               size=mc.t_inf_draws)
        cap_fraction = ti.cap_hit_fraction
        if math.isinf(kappa):
            m_kappa, m_kappa_se = 1.0, 0.0
        else:
            mv = (1.0 + ti.values) ** kappa - ti.values ** kappa
            m_kappa = float(mv.mean())
            m_kappa_se = float(mv.std(ddof=1) / math.sqrt(len(mv)))
        ti_mean = float(ti.values.mean())
        ti_mean_se = float(ti.values.std(ddof=1) / math.sqrt(len(ti.values)))

    sigma2 = sigma2_se = None
    if compute_sigma2:
        # E[(1+T)^2 - T^2] = 1 + 2 E[T]
        factor = 1.0 + 2.0 * ti_mean
        sigma2 = factor * var_x
        sigma2_se = abs(sigma2) * math.sqrt(
            (2.0 * ti_mean_se / factor) ** 2 + (var_x_se / var_x) ** 2)

    c_kappa = c_kappa_se = None
    lambda_scale = lambda_scale_se = None
    gamma_scale = gamma_scale_se = None
    if kappa < 2.0:
        c_stream = stream.spawn(stream.stream_id + 4)
        c_kappa, c_kappa_se = estimate_c_kappa(params, spec, c_stream,
                                               kappa=kappa, mc=mc)
        rel = math.sqrt((c_kappa_se / c_kappa) ** 2
                        + (m_kappa_se / m_kappa) ** 2)
        if kappa < 1.0:
            lambda_scale = 1.0 / (c_kappa * m_kappa)
            lambda_scale_se = lambda_scale * rel
        elif kappa > 1.0:
            gamma_scale = (c_kappa * m_kappa / mu) ** (1.0 / kappa)
            gamma_scale_se = gamma_scale * rel / kappa

    return LimitLawSpec(kappa=kappa, mu=mu, tau=spec.variance,
                        omega_matrix=omega_matrix,
                        omega_matrix_se=omega_matrix_se,
                        m_kappa=m_kappa, m_kappa_se=m_kappa_se,
                        c_kappa=c_kappa, c_kappa_se=c_kappa_se,
                        var_x=var_x, var_x_se=var_x_se,
                        sigma2=sigma2, sigma2_se=sigma2_se,
                        lambda_scale=lambda_scale,
                        lambda_scale_se=lambda_scale_se,
                        gamma_scale=gamma_scale, gamma_scale_se=gamma_scale_se,
                        cap_hit_fraction=cap_fraction,
                        seed=stream.seed, stream_id=stream.stream_id,
                        budget=mc)
