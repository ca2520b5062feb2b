import math

import numpy as np
import pytest
from scipy.special import gamma

from helpers import levy_exponent_quadrature
from scipy.stats import levy

from acdkit import (make_stream, sample_positive_stable, sample_skewed_stable,
                    sample_unit_exponential, unit_exponential,
                    custom_innovations)
from acdkit.tail import hill_estimator


def test_make_stream_deterministic():
    a = make_stream(42, 0).generator.random(100)
    b = make_stream(42, 0).generator.random(100)
    np.testing.assert_array_equal(a, b)


def test_make_stream_independent_streams():
    u0 = make_stream(42, 0).generator.random(10**5)
    u1 = make_stream(42, 1).generator.random(10**5)
    corr = np.corrcoef(u0, u1)[0, 1]
    assert abs(corr) < 0.01


def test_make_stream_uniform_support():
    u = make_stream(7, 3).generator.random()
    assert 0.0 < u < 1.0


def test_unit_exponential_moments():
    e = sample_unit_exponential(make_stream(1, 0), size=10**6)
    assert np.all(e > 0.0)
    assert abs(e.mean() - 1.0) < 0.005      # 3 sigma / sqrt(n) = 0.003
    assert abs((e**2).mean() - 2.0) < 0.02


def test_unit_exponential_scalar():
    x = sample_unit_exponential(make_stream(3, 1))
    assert isinstance(x, float) and x > 0.0


def test_custom_innovations_mean_check_warns():
    def biased(stream, n):
        return 1.05 * stream.generator.standard_exponential(n)

    with pytest.warns(UserWarning, match="deviates"):
        custom_innovations(biased, second_moment=2.2, variance=1.1,
                           mean_log=-0.53)


def test_custom_innovations_rejects_negative():
    def signed(stream, n):
        return stream.generator.standard_normal(n)

    with pytest.raises(ValueError, match="positive"):
        custom_innovations(signed, 1.0, 1.0, 0.0)


# ---------------------------------------------------------------------------
# Positive stable (0 < kappa < 1)


def test_positive_stable_rejects_bad_kappa():
    s = make_stream(0, 0)
    for bad in (0.0, 1.0, 1.5, -0.2):
        with pytest.raises(ValueError):
            sample_positive_stable(s, bad)


def test_positive_stable_support():
    for kappa in (0.3, 0.5, 0.8):
        draws = sample_positive_stable(make_stream(5, 2), kappa, size=10**4)
        assert np.all(draws > 0.0)


def test_positive_stable_reproducible():
    a = sample_positive_stable(make_stream(9, 4), 0.5, size=1000)
    b = sample_positive_stable(make_stream(9, 4), 0.5, size=1000)
    np.testing.assert_array_equal(a, b)


def test_positive_stable_half_laplace_point():
    # E[exp(-eta)] = exp(-Gamma(1/2)) = exp(-sqrt(pi)) for kappa = 1/2
    eta = sample_positive_stable(make_stream(11, 0), 0.5, size=10**6)
    target = math.exp(-math.sqrt(math.pi))
    assert abs(np.exp(-eta).mean() - target) < 0.003


@pytest.mark.parametrize("kappa", [0.3, 0.5, 0.8])
@pytest.mark.parametrize("u", [0.5, 1.0, 2.0])
def test_positive_stable_laplace_transform(kappa, u):
    eta = sample_positive_stable(make_stream(23, int(10 * kappa)), kappa,
                                 size=2 * 10**5)
    vals = np.exp(-u * eta)
    target = math.exp(-gamma(1.0 - kappa) * u**kappa)
    se = vals.std(ddof=1) / math.sqrt(len(vals))
    assert abs(vals.mean() - target) < 3.0 * se


def test_positive_stable_half_is_levy_with_scale_half_pi():
    # Matching Laplace transforms: exp(-sqrt(pi u)) = exp(-sqrt(2 c u))
    # forces c = pi/2; the oracle median comes from the Levy CDF.
    eta = sample_positive_stable(make_stream(31, 7), 0.5, size=10**6)
    oracle_median = levy.ppf(0.5, scale=math.pi / 2.0)
    assert abs(np.mean(eta <= oracle_median) - 0.5) < 0.01


# ---------------------------------------------------------------------------
# Skewed stable (1 < kappa < 2)


def test_skewed_stable_rejects_bad_kappa():
    s = make_stream(0, 0)
    for bad in (0.5, 1.0, 2.0, 2.5):
        with pytest.raises(ValueError):
            sample_skewed_stable(s, bad)


def test_skewed_stable_mean_zero():
    x = sample_skewed_stable(make_stream(13, 0), 1.5, size=10**6)
    assert abs(x.mean()) < 0.05


def test_skewed_stable_right_tail_index():
    x = sample_skewed_stable(make_stream(17, 0), 1.5, size=10**6)
    pos = x[x > 0.0]
    est = hill_estimator(pos, k=len(pos) // 100)
    assert abs(est.kappa_hat - 1.5) < 0.15


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75, 1.0, 1.5])
def test_skewed_stable_characteristic_function(s):
    kappa = 1.5
    x = sample_skewed_stable(make_stream(19, 0), kappa, size=10**6)
    ecf = np.exp(1j * s * x).mean()
    target = np.exp(levy_exponent_quadrature(s, kappa))
    assert abs(abs(ecf) - abs(target)) < 0.01
    assert abs(ecf - target) < 0.015


@pytest.mark.parametrize("kappa", [1.2, 1.5, 1.8])
def test_skewed_stable_cf_real_imag_parts(kappa):
    x = sample_skewed_stable(make_stream(29, int(10 * kappa)), kappa,
                             size=4 * 10**5)
    for s in (0.3, 0.8):
        ecf = np.exp(1j * s * x).mean()
        target = np.exp(levy_exponent_quadrature(s, kappa))
        assert abs(ecf.real - target.real) < 0.02
        assert abs(ecf.imag - target.imag) < 0.02


def test_skewed_stable_reproducible():
    a = sample_skewed_stable(make_stream(3, 3), 1.4, size=500)
    b = sample_skewed_stable(make_stream(3, 3), 1.4, size=500)
    np.testing.assert_array_equal(a, b)


def test_unit_exponential_spec_moments():
    spec = unit_exponential()
    assert spec.second_moment == 2.0
    assert spec.variance == 1.0
    assert spec.mean_log == -np.euler_gamma
