import json
import math

import numpy as np
import pytest
from scipy.stats import norm

from acdkit import (ExperimentConfig, MonteCarloBudget,
                    estimate_limit_constants, hill_estimator, ks_statistic,
                    make_stream, qq_against_normal, qq_correlation,
                    reference_limit_sample, run_counting_experiment,
                    run_qmle_experiment, unit_exponential)
from acdkit.errors import (EmptyInputError, RegimeMismatchError,
                           TooFewSamplesError)
from acdkit.harness import resolve_design

EXP = unit_exponential()
SMALL_MC = MonteCarloBudget(pairs=10**5, eps_draws=10**5, path_length=10**5,
                            t_inf_draws=2 * 10**4)


# ---------------------------------------------------------------------------
# Q-Q and KS utilities


def test_qq_self_consistency():
    z = make_stream(1, 0).generator.standard_normal(10**4)
    assert qq_correlation(z) > 0.999


def test_qq_too_few():
    with pytest.raises(TooFewSamplesError):
        qq_against_normal([1.0] * 5)


def test_qq_degenerate_flag():
    out = qq_against_normal(np.ones(50))
    assert out.degenerate
    assert out.pairs.shape == (50, 2)


def test_qq_antisymmetric_for_symmetric_sample():
    half = make_stream(2, 0).generator.standard_normal(500)
    sample = np.concatenate([half, -half])
    pairs = qq_against_normal(sample).pairs
    emp = pairs[:, 0]
    np.testing.assert_allclose(emp + emp[::-1], 0.0, atol=1e-12)


def test_ks_identical_samples():
    x = make_stream(3, 0).generator.random(1000)
    assert ks_statistic(x, x.copy()) == 0.0


def test_ks_disjoint_supports():
    assert ks_statistic(np.arange(1, 100.0), -np.arange(1, 100.0)) == 1.0


def test_ks_uniform_null_quantile():
    u = make_stream(4, 0).generator.random(10**4)
    d = ks_statistic(u, lambda x: np.clip(x, 0.0, 1.0))
    assert d < 1.36 / math.sqrt(10**4)


def test_ks_empty_inputs():
    with pytest.raises(EmptyInputError):
        ks_statistic([], norm.cdf)
    with pytest.raises(EmptyInputError):
        ks_statistic([1.0], [])


# ---------------------------------------------------------------------------
# Reference limit laws


@pytest.fixture(scope="module")
def limits_low():
    params, kappa = resolve_design(ExperimentConfig(
        normalization="count_k_lt_1", spans=(100.0,), replications=100,
        seed=77, kappa=0.5))
    return estimate_limit_constants(params, EXP, make_stream(77, 16),
                                    mc=SMALL_MC)


@pytest.fixture(scope="module")
def limits_mid():
    params, kappa = resolve_design(ExperimentConfig(
        normalization="stable_1_2", spans=(100.0,), replications=100,
        seed=78, kappa=1.4))
    return estimate_limit_constants(params, EXP, make_stream(78, 16),
                                    mc=SMALL_MC)


def test_lambda_reference_positive(limits_low):
    lam = reference_limit_sample(limits_low, "count_k_lt_1",
                                 make_stream(5, 0), 10**5)
    assert np.all(lam > 0.0)


def test_lambda_reference_moments_stable(limits_low):
    # Light tails of the positive limit: the fourth moment is stable
    # across sample sizes.
    a = reference_limit_sample(limits_low, "count_k_lt_1",
                               make_stream(6, 0), 10**5)
    b = reference_limit_sample(limits_low, "count_k_lt_1",
                               make_stream(6, 1), 10**6)
    m4a, m4b = (a**4).mean(), (b**4).mean()
    assert abs(m4a - m4b) / m4b < 0.1


def test_gamma_reference_right_tail(limits_mid):
    g = reference_limit_sample(limits_mid, "stable_1_2",
                               make_stream(7, 0), 10**6)
    pos = g[g > 0.0]
    est = hill_estimator(pos, k=len(pos) // 100)
    assert abs(est.kappa_hat - 1.4) < 0.2


def test_mixed_gaussian_reference(limits_low):
    draws = reference_limit_sample(limits_low, "qmle_t_k2",
                                   make_stream(8, 0), 10**5)
    assert abs(np.median(draws)) < 0.05
    assert abs(np.mean(draws < 0.0) - 0.5) < 0.01


def test_reference_regime_mismatch(limits_low, limits_mid):
    with pytest.raises(RegimeMismatchError):
        reference_limit_sample(limits_low, "stable_1_2", make_stream(9, 0), 10)
    with pytest.raises(RegimeMismatchError):
        reference_limit_sample(limits_mid, "count_k_lt_1", make_stream(9, 0), 10)
    with pytest.raises(RegimeMismatchError):
        reference_limit_sample(limits_mid, "clt_k_gt_2", make_stream(9, 0), 10)


def test_gaussian_references(limits_mid):
    z = reference_limit_sample(limits_mid, "t_ratio", make_stream(10, 0),
                               5 * 10**4)
    assert abs(z.mean()) < 0.02 and abs(z.std() - 1.0) < 0.02


# ---------------------------------------------------------------------------
# Experiment configs and guards


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(normalization="lln", spans=(100.0,),
                         replications=50, kappa=2.0)
    with pytest.raises(ValueError):
        ExperimentConfig(normalization="lln", spans=(), kappa=2.0)
    with pytest.raises(ValueError):
        ExperimentConfig(normalization="lln", spans=(100.0, 50.0), kappa=2.0)
    with pytest.raises(ValueError):
        ExperimentConfig(normalization="lln", spans=(100.0,), kappa=2.0,
                         alpha=0.5)
    with pytest.raises(ValueError):
        ExperimentConfig(normalization="lln", spans=(100.0,), kappa=2.0,
                         remainder_mode="sometimes")


def test_regime_guard_counting():
    cfg = ExperimentConfig(normalization="clt_k_gt_2", spans=(100.0,),
                           replications=100, seed=1, kappa=1.4)
    with pytest.raises(RegimeMismatchError):
        run_counting_experiment(cfg)
    cfg = ExperimentConfig(normalization="count_k_lt_1", spans=(100.0,),
                           replications=100, seed=1, kappa=2.5)
    with pytest.raises(RegimeMismatchError):
        run_counting_experiment(cfg)


def test_regime_guard_qmle():
    cfg = ExperimentConfig(normalization="qmle_t_k2", spans=(100.0,),
                           replications=100, seed=1, kappa=3.0)
    with pytest.raises(RegimeMismatchError):
        run_qmle_experiment(cfg)


def test_boundary_kappa_rejected():
    cfg = ExperimentConfig(normalization="lln", spans=(100.0,),
                           replications=100, seed=1, kappa=1.0)
    with pytest.raises(RegimeMismatchError):
        resolve_design(cfg)


def test_design_resolution_unit_mean():
    cfg = ExperimentConfig(normalization="lln", spans=(100.0,),
                           replications=100, seed=1, kappa=2.0)
    params, kappa = resolve_design(cfg)
    assert kappa == 2.0
    assert params.omega + params.alpha == pytest.approx(1.0)


def test_design_resolution_explicit_poisson():
    cfg = ExperimentConfig(normalization="clt_k_gt_2", spans=(100.0,),
                           replications=100, seed=1, omega=1.0, alpha=0.0)
    params, kappa = resolve_design(cfg)
    assert math.isinf(kappa)


# ---------------------------------------------------------------------------
# Experiments (small scale)


CB = MonteCarloBudget(pairs=10**5, eps_draws=10**5, path_length=2 * 10**5,
                      t_inf_draws=2 * 10**4)


def test_counting_lln_experiment():
    cfg = ExperimentConfig(normalization="lln", spans=(2000.0,),
                           replications=150, seed=11, kappa=3.0,
                           burn_in=2000, constants_budget=CB)
    report = run_counting_experiment(cfg)
    stat = report.results["exclude"][0].statistic
    assert len(stat) == 150
    assert abs(stat.mean() - 1.0) < 0.05


def test_counting_clt_experiment_runs():
    cfg = ExperimentConfig(normalization="clt_k_gt_2", spans=(2000.0,),
                           replications=200, seed=12, omega=1.0, alpha=0.0,
                           burn_in=500, constants_budget=CB)
    report = run_counting_experiment(cfg)
    r = report.results["exclude"][0]
    assert r.ks < 0.1
    assert r.qq_pairs is not None


def test_counting_stable_experiment_matches_reference():
    cfg = ExperimentConfig(normalization="stable_1_2", spans=(10**4,),
                           replications=400, seed=13, kappa=1.4,
                           burn_in=2000, constants_budget=CB)
    report = run_counting_experiment(cfg)
    r = report.results["exclude"][0]
    assert r.reference is not None
    assert r.ks < 0.1


def test_counting_infinite_mean_experiment():
    cfg = ExperimentConfig(normalization="count_k_lt_1", spans=(10**4,),
                           replications=300, seed=14, kappa=0.5,
                           burn_in=2000, constants_budget=CB)
    report = run_counting_experiment(cfg)
    r = report.results["exclude"][0]
    assert np.all(r.statistic >= 0.0)
    assert r.ks < 0.12


def test_qmle_experiment_and_worker_determinism():
    cfg1 = ExperimentConfig(normalization="qmle_sqrt_t", spans=(2000.0,),
                            replications=120, seed=15, kappa=3.0,
                            burn_in=2000, workers=1, constants_budget=CB)
    cfg2 = ExperimentConfig(normalization="qmle_sqrt_t", spans=(2000.0,),
                            replications=120, seed=15, kappa=3.0,
                            burn_in=2000, workers=2, constants_budget=CB)
    rep1 = run_qmle_experiment(cfg1)
    rep2 = run_qmle_experiment(cfg2)
    assert rep1.to_json() == rep2.to_json()
    r = rep1.results["exclude"][0]
    assert r.summary["qq_correlation"] > 0.97


def test_counting_rerun_byte_identical():
    cfg = ExperimentConfig(normalization="lln", spans=(1000.0,),
                           replications=100, seed=16, kappa=2.0,
                           burn_in=1000, constants_budget=CB)
    a = run_counting_experiment(cfg).to_json()
    b = run_counting_experiment(cfg).to_json()
    assert a == b


def test_qmle_remainder_both_mode():
    cfg = ExperimentConfig(normalization="t_ratio", spans=(10**4,),
                           replications=200, seed=17, kappa=2.1,
                           remainder_mode="both", burn_in=2000,
                           constants_budget=CB)
    report = run_qmle_experiment(cfg)
    assert set(report.results) == {"exclude", "include"}
    a = report.results["exclude"][0]
    b = report.results["include"][0]
    # the end-interval term shifts the Q-Q point cloud by less than the
    # Monte Carlo quantile error (two-sample KS below its 95% null band)
    assert ks_statistic(a.statistic, b.statistic) \
        < 1.36 * math.sqrt(2.0 / 200)
    assert abs(a.summary["median_abs_dev_alpha"]
               - b.summary["median_abs_dev_alpha"]) < 0.05


def test_report_csv(tmp_path):
    cfg = ExperimentConfig(normalization="lln", spans=(1000.0,),
                           replications=100, seed=18, kappa=2.0,
                           burn_in=1000, constants_budget=CB)
    report = run_counting_experiment(cfg)
    files = report.write_csv(str(tmp_path / "out"))
    assert any(f.endswith("_stat.csv") for f in files)
    text = open(files[0]).read().splitlines()
    assert text[0] == "statistic"
    assert len(text) == 101


def test_report_runtime_excluded_by_default():
    cfg = ExperimentConfig(normalization="lln", spans=(1000.0,),
                           replications=100, seed=19, kappa=2.0,
                           burn_in=1000, constants_budget=CB)
    report = run_counting_experiment(cfg)
    assert report.runtime_seconds > 0.0
    assert "runtime" not in report.to_json()
    assert "runtime_seconds" in report.to_json(include_runtime=True)
