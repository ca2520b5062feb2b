"""Quasi-likelihood evaluation and maximization for the duration recursion.

The criterion is L(theta) = -sum_i [log psi_i + x_i / psi_i] over the
observed events, with psi_i = omega + alpha * x_{i-1} and the pre-sample
duration fixed by an initialization policy. Score and observed information
are exact analytic derivatives, valid at any theta (not just the truth):

    dL/dtheta     = sum_i (x_i/psi_i - 1) * dpsi_i / psi_i
    -d2L/dtheta2  = sum_i (2 x_i/psi_i - 1) * v_i v_i'   (constant dpsi_i)

with v_i = (1, x_{i-1})'/psi_i. The optional end-interval term
R(theta) = -(T - t_n)/psi_{n+1} accounts for no events after the last one.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (DegenerateSeriesError, NonPositivePsiError,
                     SingularInformationError, AcdKitError)
from .model import AcdParams, stationarity_bound
from .rng import unit_exponential
from .sim import DurationSeries

_STEP_CLAMP = 5.0
_RIDGE_GROWTH = 10.0


@dataclass(frozen=True)
class FitOptions:
    """Controls for likelihood evaluation and the Newton solver.

    ``x0_policy`` is one of 'sample-mean', 'model-mean' (omega/(1-alpha) at
    the current theta, omega when alpha >= 1) or a float value.
    """

    x0_policy: str | float = "sample-mean"
    include_remainder: bool = False
    max_iter: int = 100
    grad_tol: float = 1e-8
    step_tol: float = 1e-10
    alpha_starts: tuple = (0.5, 0.1, 1.2)
    min_events: int = 10


@dataclass
class LikelihoodWorkspace:
    """Series bound to an initialization policy and remainder choice."""

    series: DurationSeries
    x0_policy: str | float = "sample-mean"
    include_remainder: bool = False

    def __post_init__(self):
        x = np.asarray(self.series.durations, dtype=float)
        if x.size == 0:
            raise ValueError("series must be non-empty")
        self.x = x
        if self.include_remainder:
            if self.series.span is None:
                raise ValueError("the end-interval term needs a fixed-span "
                                 "series")
            self.gap = self.series.end_gap
        else:
            self.gap = 0.0
        if isinstance(self.x0_policy, str):
            if self.x0_policy == "sample-mean":
                self.x0_fixed = float(x.mean())
            elif self.x0_policy == "model-mean":
                self.x0_fixed = None
            else:
                raise ValueError(f"unknown x0 policy {self.x0_policy!r}")
        else:
            self.x0_fixed = float(self.x0_policy)


def _first_psi(omega: float, alpha: float, ws: LikelihoodWorkspace):
    """psi_1, its gradient and (when the policy ties x0 to theta) its
    second-derivative matrix."""
    if ws.x0_fixed is not None:
        psi1 = omega + alpha * ws.x0_fixed
        return psi1, np.array([1.0, ws.x0_fixed]), None
    if alpha < 1.0:
        s = 1.0 / (1.0 - alpha)
        psi1 = omega * s
        grad = np.array([s, omega * s * s])
        hess = np.array([[0.0, s * s], [s * s, 2.0 * omega * s ** 3]])
    else:
        psi1 = omega * (1.0 + alpha)
        grad = np.array([1.0 + alpha, omega])
        hess = np.array([[0.0, 1.0], [1.0, 0.0]])
    return psi1, grad, hess


def _parts(omega: float, alpha: float, ws: LikelihoodWorkspace):
    """Log-likelihood, score and observed information at (omega, alpha)."""
    x = ws.x
    psi1, dpsi1, hpsi1 = _first_psi(omega, alpha, ws)
    xlag = np.concatenate(([0.0], x[:-1]))
    psi = omega + alpha * xlag
    psi[0] = psi1
    if psi1 <= 0.0 or not np.isfinite(psi1):
        raise NonPositivePsiError(f"psi_1 = {psi1} is not positive")

    r = x / psi
    loglik = -(np.log(psi).sum() + r.sum())
    w = (r - 1.0) / psi
    q = (2.0 * r - 1.0) / (psi * psi)

    # i >= 2 terms have dpsi_i = (1, x_{i-1}); the first term is corrected
    # below for its policy-dependent dpsi_1.
    score = np.array([w.sum(), (w * xlag).sum()])
    info = np.array([[q.sum(), (q * xlag).sum()],
                     [(q * xlag).sum(), (q * xlag * xlag).sum()]])
    base = np.array([1.0, 0.0])        # dpsi_1 assumed by the bulk formula
    score += w[0] * (dpsi1 - base)
    info += q[0] * (np.outer(dpsi1, dpsi1) - np.outer(base, base))
    if hpsi1 is not None:
        info -= w[0] * hpsi1

    if ws.include_remainder and ws.gap != 0.0:
        xn = x[-1]
        psin = omega + alpha * xn
        u = np.array([1.0, xn])
        loglik += -ws.gap / psin
        score += ws.gap / psin**2 * u
        info += 2.0 * ws.gap / psin**3 * np.outer(u, u)
    return loglik, score, info


def log_likelihood(params: AcdParams, ws: LikelihoodWorkspace) -> float:
    return _parts(params.omega, params.alpha, ws)[0]


def score(params: AcdParams, ws: LikelihoodWorkspace) -> np.ndarray:
    return _parts(params.omega, params.alpha, ws)[1]


def information(params: AcdParams, ws: LikelihoodWorkspace) -> np.ndarray:
    return _parts(params.omega, params.alpha, ws)[2]


@dataclass
class EstimationResult:
    theta_hat: AcdParams
    loglik: float
    score_at_opt: np.ndarray
    observed_info: np.ndarray
    std_errors: np.ndarray | None
    n_events: int
    span: float | None
    converged: bool
    iterations: int
    boundary_flag: bool
    included_remainder: bool
    x0_policy: str | float
    t_ratios: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    trace: list = field(default_factory=list, repr=False)

    def to_json(self) -> str:
        return json.dumps({
            "schema_version": 1,
            "omega": float(self.theta_hat.omega),
            "alpha": float(self.theta_hat.alpha),
            "loglik": float(self.loglik),
            "score_at_opt": [float(v) for v in self.score_at_opt],
            "observed_info": np.asarray(self.observed_info).tolist(),
            "std_errors": (None if self.std_errors is None
                           else [float(v) for v in self.std_errors]),
            "t_ratios": {k: float(v) for k, v in self.t_ratios.items()},
            "n_events": int(self.n_events),
            "span": None if self.span is None else float(self.span),
            "converged": bool(self.converged),
            "iterations": self.iterations,
            "boundary_flag": bool(self.boundary_flag),
            "included_remainder": self.included_remainder,
            "x0_policy": self.x0_policy,
            "warnings": self.warnings,
        }, indent=2)


def _newton(ws: LikelihoodWorkspace, alpha0: float, omega0: float,
            options: FitOptions):
    """Safeguarded ascent in (log omega, alpha) with projection at alpha=0."""
    omega, alpha = omega0, alpha0
    loglik, grad, info = _parts(omega, alpha, ws)
    trace = [loglik]
    converged = False
    iterations = 0
    for iterations in range(1, options.max_iter + 1):
        fixed_alpha = alpha == 0.0 and grad[1] <= 0.0
        gz = np.array([grad[0] * omega, grad[1]])
        iz = np.array([[info[0, 0] * omega**2 - grad[0] * omega,
                        info[0, 1] * omega],
                       [info[0, 1] * omega, info[1, 1]]])
        if fixed_alpha:
            # alpha pinned at the boundary: one-dimensional step in log omega
            step = np.array([gz[0] / max(iz[0, 0], 1e-300), 0.0])
        else:
            ridge = 0.0
            for _ in range(16):
                try:
                    np.linalg.cholesky(iz + ridge * np.eye(2))
                    break
                except np.linalg.LinAlgError:
                    base = 1e-8 * max(1.0, abs(iz[0, 0]), abs(iz[1, 1]))
                    ridge = base if ridge == 0.0 else ridge * _RIDGE_GROWTH
            step = np.linalg.solve(iz + ridge * np.eye(2), gz)
        norm = np.max(np.abs(step))
        if norm > _STEP_CLAMP:
            step *= _STEP_CLAMP / norm

        new = (omega, alpha, loglik, grad, info)
        t = 1.0
        for _ in range(50):
            z0 = math.log(omega) + t * step[0]
            om2 = math.exp(min(z0, 700.0))
            al2 = max(0.0, alpha + t * step[1])
            try:
                l2, g2, i2 = _parts(om2, al2, ws)
            except (FloatingPointError, NonPositivePsiError):
                t *= 0.5
                continue
            if np.isfinite(l2) and l2 > loglik - 1e-12:
                new = (om2, al2, l2, g2, i2)
                break
            t *= 0.5
        step_norm = max(abs(math.log(new[0] / omega)), abs(new[1] - alpha))
        omega, alpha, loglik, grad, info = new
        trace.append(loglik)
        scaled_grad = max(abs(grad[0] * omega),
                          abs(grad[1]) if alpha > 0.0 or grad[1] > 0.0 else 0.0)
        scaled_grad /= max(1.0, abs(loglik))
        if scaled_grad < options.grad_tol and step_norm < options.step_tol:
            converged = True
            break
    return omega, alpha, loglik, grad, info, converged, iterations, trace


def fit(series: DurationSeries, options: FitOptions = FitOptions()
        ) -> EstimationResult:
    """Maximize the likelihood over omega > 0, alpha >= 0.

    Newton steps with analytic score and Hessian, log-reparameterized
    omega, projection with active-set handling at alpha = 0, backtracking
    to force ascent, and up to three starts on non-convergence. Convergence
    means the scaled gradient norm is below ``grad_tol`` and the last step
    below ``step_tol``.
    """
    x = np.asarray(series.durations, dtype=float)
    if x.size < options.min_events:
        raise ValueError(f"need at least {options.min_events} durations, "
                         f"got {x.size}")
    if np.ptp(x) == 0.0:
        raise DegenerateSeriesError("all durations are equal; the "
                                    "information matrix is singular")
    ws = LikelihoodWorkspace(series, x0_policy=options.x0_policy,
                             include_remainder=options.include_remainder)

    xbar = float(x.mean())
    best = None
    for alpha0 in options.alpha_starts:
        omega0 = xbar * max(1.0 - alpha0, 0.1)
        out = _newton(ws, alpha0, omega0, options)
        if best is None or out[2] > best[2] + 1e-9 or (out[5] and not best[5]):
            best = out
        if best[5]:
            break
    omega, alpha, loglik, grad, info, converged, iterations, trace = best

    boundary = alpha == 0.0
    std_errors = None
    try:
        inv = np.linalg.inv(info)
        diag = np.diag(inv)
        if np.all(diag > 0.0):
            std_errors = np.sqrt(diag)
    except np.linalg.LinAlgError:
        pass

    notes = []
    a_u = stationarity_bound(unit_exponential())
    if alpha >= a_u:
        notes.append(f"alpha_hat = {alpha:.4f} is at or above the "
                     f"stationarity bound {a_u:.4f}")
        warnings.warn(notes[-1], stacklevel=2)

    return EstimationResult(
        theta_hat=AcdParams(omega=omega, alpha=alpha), loglik=loglik,
        score_at_opt=grad, observed_info=info, std_errors=std_errors,
        n_events=int(x.size), span=series.span, converged=converged,
        iterations=iterations, boundary_flag=boundary,
        included_remainder=options.include_remainder,
        x0_policy=options.x0_policy, warnings=notes, trace=trace)


def t_ratio(result: EstimationResult, null_alpha: float) -> float:
    """(alpha_hat - null) / se with se^2 the alpha entry of the inverse
    observed information at the optimum."""
    if result.boundary_flag:
        raise AcdKitError("t-ratio is suppressed at the alpha = 0 boundary")
    try:
        inv = np.linalg.inv(result.observed_info)
    except np.linalg.LinAlgError:
        raise SingularInformationError("observed information is singular")
    var = inv[1, 1]
    if not var > 0.0 or np.linalg.eigvalsh(result.observed_info).min() <= 0.0:
        raise SingularInformationError("observed information is not "
                                       "positive definite")
    return (result.theta_hat.alpha - null_alpha) / math.sqrt(var)
