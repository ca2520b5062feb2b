"""Tail-index estimation from data and tail diagnostics."""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidKError, NonPositiveDataError


@dataclass
class TailEstimate:
    kappa_hat: float
    k: int
    n: int
    hill_path: list | None = None
    degenerate: bool = False

    def to_json(self) -> str:
        return json.dumps({
            "schema_version": 1,
            "kappa_hat": self.kappa_hat if math.isfinite(self.kappa_hat) else None,
            "k": self.k,
            "n": self.n,
            "degenerate": self.degenerate,
            "hill_path": self.hill_path,
        }, indent=2)

    def path_to_csv(self, path) -> None:
        buf = io.StringIO()
        buf.write("k,kappa_hat\n")
        for k, kap in (self.hill_path or []):
            buf.write(f"{k},{float(kap)!r}\n")
        if hasattr(path, "write"):
            path.write(buf.getvalue())
        else:
            with open(path, "w") as fh:
                fh.write(buf.getvalue())


def default_k(n: int) -> int:
    """Default number of upper order statistics, floor(n^0.6)."""
    return max(1, min(n - 1, int(n ** 0.6)))


def _check_data(data) -> np.ndarray:
    x = np.asarray(data, dtype=float)
    if x.size == 0 or np.any(x <= 0.0) or not np.all(np.isfinite(x)):
        raise NonPositiveDataError("data must be strictly positive and finite")
    return x


def _hill_from_sorted(xs: np.ndarray, k: int) -> float:
    # kappa_hat^{-1} = mean of log(X_(n-i+1) / X_(n-k)) over the top k;
    # the ratio form makes the estimate scale-free.
    logs = np.log(xs[-k:] / xs[-k - 1])
    h = logs.mean()
    return 1.0 / h if h > 0.0 else math.inf


def hill_estimator(data, k: int | None = None) -> TailEstimate:
    """Hill estimate of the tail index over the top k order statistics.

    Constant tails (all selected log-ratios zero) are reported as
    kappa_hat = inf with the degenerate flag set rather than raising.
    """
    xs = np.sort(_check_data(data), kind="stable")
    n = xs.size
    if k is None:
        k = default_k(n)
    if not 1 <= k < n:
        raise InvalidKError(f"k must satisfy 1 <= k < n = {n}, got {k}")
    kappa = _hill_from_sorted(xs, k)
    return TailEstimate(kappa_hat=kappa, k=k, n=n,
                        degenerate=not math.isfinite(kappa))


def hill_path(data, k_grid) -> TailEstimate:
    """Hill estimates along a grid of k, for diagnostic plots.

    The headline estimate is the one at the largest k in the grid.
    """
    xs = np.sort(_check_data(data), kind="stable")
    n = xs.size
    grid = sorted(int(k) for k in k_grid)
    if not grid:
        raise InvalidKError("k grid is empty")
    path = []
    for k in grid:
        if not 1 <= k < n:
            raise InvalidKError(f"k must satisfy 1 <= k < n = {n}, got {k}")
        path.append((k, _hill_from_sorted(xs, k)))
    kappa = path[-1][1]
    return TailEstimate(kappa_hat=kappa, k=grid[-1], n=n, hill_path=path,
                        degenerate=not math.isfinite(kappa))


def survival_slope(data, tail_points: int = 100, grid_size: int = 25) -> float:
    """Log-log slope of the empirical survival function over the top decade.

    The decade ends where ``tail_points`` observations remain above it, so
    the regression never runs on a handful of extremes. Power-law data of
    index kappa gives a slope near -kappa.
    """
    xs = np.sort(_check_data(data))
    n = xs.size
    if n <= 2 * tail_points:
        raise InvalidKError(f"need more than {2 * tail_points} observations")
    z_hi = xs[n - tail_points]
    z_lo = z_hi / 10.0
    grid = np.exp(np.linspace(math.log(z_lo), math.log(z_hi), grid_size))
    surv = 1.0 - np.searchsorted(xs, grid, side="right") / n
    if np.any(surv <= 0.0):
        raise InvalidKError("survival function vanished inside the decade")
    a = np.vstack([np.log(grid), np.ones(grid_size)]).T
    slope = np.linalg.lstsq(a, np.log(surv), rcond=None)[0][0]
    return float(slope)
