"""Seeded random streams and samplers for innovations and stable limit laws.

Streams are numpy PCG64 generators keyed by ``(seed, stream_id)`` through
``SeedSequence`` spawn keys, so distinct stream ids give statistically
independent sequences and equal ids reproduce bit-for-bit.

The two stable samplers target the laws with Levy measure density
``kappa * y**(-kappa-1)`` on (0, inf):

* ``sample_positive_stable`` (0 < kappa < 1): no centering, Laplace
  transform ``E[exp(-u X)] = exp(-Gamma(1-kappa) * u**kappa)``.
* ``sample_skewed_stable`` (1 < kappa < 2): compensated (mean zero),
  totally skewed to the right, right tail ``P(X > y) ~ y**(-kappa)``.

Both are built from the uniform-angle/exponential transformation with the
scale factor solved so the Levy measure above is matched exactly (the
standard parameterization has a different, non-unit scale).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gamma as _gamma


@dataclass
class RandomStream:
    """Single-owner random stream; do not share across threads."""

    seed: int
    stream_id: int
    generator: np.random.Generator = field(repr=False)

    def spawn(self, stream_id: int) -> "RandomStream":
        """Independent stream under the same seed."""
        return make_stream(self.seed, stream_id)


def make_stream(seed: int, stream_id: int = 0) -> RandomStream:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream_id,))
    return RandomStream(seed=seed, stream_id=stream_id,
                        generator=np.random.Generator(np.random.PCG64(ss)))


# ---------------------------------------------------------------------------
# Innovations


@dataclass(frozen=True)
class InnovationSpec:
    """Distribution of the positive, unit-mean innovation.

    ``second_moment``, ``variance`` and ``mean_log`` are the moments the
    parameter calculus needs (E[eps^2], V[eps], E[ln eps]). For the unit
    exponential they are 2, 1 and minus Euler's constant; for custom
    innovations they are declared by the caller and only spot-checked.
    """

    kind: str
    second_moment: float
    variance: float
    mean_log: float
    sampler: Callable[[RandomStream, int], np.ndarray] | None = None

    def draw(self, stream: RandomStream, size: int) -> np.ndarray:
        if self.kind == "unit_exponential":
            return stream.generator.standard_exponential(size)
        return np.asarray(self.sampler(stream, size), dtype=float)

    @property
    def is_exponential(self) -> bool:
        return self.kind == "unit_exponential"


def unit_exponential() -> InnovationSpec:
    return InnovationSpec(kind="unit_exponential", second_moment=2.0,
                          variance=1.0, mean_log=-np.euler_gamma)


def custom_innovations(sampler: Callable[[RandomStream, int], np.ndarray],
                       second_moment: float, variance: float, mean_log: float,
                       check_stream: RandomStream | None = None,
                       check_draws: int = 10**5) -> InnovationSpec:
    """Wrap a user sampler, spot-checking unit mean and positivity.

    The mean check uses ``check_draws`` samples and warns when the sample
    mean deviates from 1 by more than 1%.
    """
    stream = check_stream if check_stream is not None else make_stream(0, 0)
    probe = np.asarray(sampler(stream, check_draws), dtype=float)
    if probe.size != check_draws:
        raise ValueError("sampler returned wrong number of draws")
    if np.any(probe <= 0.0) or not np.all(np.isfinite(probe)):
        raise ValueError("innovations must be strictly positive and finite")
    m = probe.mean()
    if abs(m - 1.0) > 0.01:
        warnings.warn(f"custom innovation sample mean {m:.4f} deviates from 1 "
                      "by more than 1%", stacklevel=2)
    return InnovationSpec(kind="custom", second_moment=second_moment,
                          variance=variance, mean_log=mean_log, sampler=sampler)


def sample_unit_exponential(stream: RandomStream, size: int | None = None):
    """Exp(1) draws: mean 1, second moment 2."""
    out = stream.generator.standard_exponential(1 if size is None else size)
    return float(out[0]) if size is None else out


# ---------------------------------------------------------------------------
# Stable laws

_TINY = 1e-12


def positive_stable_scale(kappa: float) -> float:
    """Scale mapping the unit sampler (E e^{-uX} = e^{-u^k}) onto the
    Levy measure k*y^{-k-1}: E e^{-uX} = exp(-Gamma(1-k) u^k)."""
    return _gamma(1.0 - kappa) ** (1.0 / kappa)


def skewed_stable_scale(kappa: float) -> float:
    """Scale sigma with sigma^k = Gamma(2-k)|cos(pi k/2)|/(k-1), matching the
    compensated Levy measure k*y^{-k-1} for 1 < k < 2."""
    return (_gamma(2.0 - kappa) * abs(math.cos(math.pi * kappa / 2.0))
            / (kappa - 1.0)) ** (1.0 / kappa)


def sample_positive_stable(stream: RandomStream, kappa: float,
                           size: int | None = None):
    """One-sided stable draws for 0 < kappa < 1 (no centering).

    Kanter's representation: with theta ~ U(0, pi) and W ~ Exp(1),

        S = (a(theta) / W)^{(1-k)/k},
        a(theta) = sin(k theta)^k sin((1-k) theta)^{1-k} / sin(theta)^{...}

    gives E[exp(-u S)] = exp(-u^k); the output is the scaled draw
    ``positive_stable_scale(kappa) * S``.
    """
    if not 0.0 < kappa < 1.0:
        raise ValueError(f"kappa must lie in (0, 1), got {kappa}")
    n = 1 if size is None else size
    g = stream.generator
    u = np.clip(g.uniform(0.0, 1.0, n), _TINY, 1.0 - _TINY)
    theta = np.pi * u
    w = np.maximum(g.standard_exponential(n), _TINY)
    a = (np.sin(kappa * theta) ** kappa
         * np.sin((1.0 - kappa) * theta) ** (1.0 - kappa)
         / np.sin(theta)) ** (1.0 / (1.0 - kappa))
    out = positive_stable_scale(kappa) * (a / w) ** ((1.0 - kappa) / kappa)
    return float(out[0]) if size is None else out


def sample_skewed_stable(stream: RandomStream, kappa: float,
                         size: int | None = None):
    """Mean-zero, totally right-skewed stable draws for 1 < kappa < 2.

    Chambers-Mallows-Stuck with skew 1: with V ~ U(-pi/2, pi/2), W ~ Exp(1),
    zeta = tan(pi k/2), b = atan(zeta)/k,

        X = (1+zeta^2)^{1/(2k)} sin(k(V+b)) / cos(V)^{1/k}
            * (cos(V - k(V+b)) / W)^{(1-k)/k}

    samples the unit-scale law; the output is scaled by
    ``skewed_stable_scale(kappa)``. Right tail: P(X > y) ~ y^{-kappa}.
    """
    if not 1.0 < kappa < 2.0:
        raise ValueError(f"kappa must lie in (1, 2), got {kappa}")
    n = 1 if size is None else size
    g = stream.generator
    u = np.clip(g.uniform(0.0, 1.0, n), _TINY, 1.0 - _TINY)
    v = np.pi * (u - 0.5)
    w = np.maximum(g.standard_exponential(n), _TINY)
    zeta = math.tan(math.pi * kappa / 2.0)
    b = math.atan(zeta) / kappa
    x = ((1.0 + zeta * zeta) ** (1.0 / (2.0 * kappa))
         * np.sin(kappa * (v + b)) / np.cos(v) ** (1.0 / kappa)
         * (np.cos(v - kappa * (v + b)) / w) ** ((1.0 - kappa) / kappa))
    out = skewed_stable_scale(kappa) * x
    return float(out[0]) if size is None else out
