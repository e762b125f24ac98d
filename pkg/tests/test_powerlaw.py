import math

import numpy as np
import pytest

from gapflow.errors import DegenerateTail, InsufficientSample, InsufficientTail
from gapflow.powerlaw import bootstrap_p_value, fit_power_law, ks_statistic, tail_exponent_mle
from gapflow.synth import gen_pareto, pareto_quantile


def test_mle_closed_form_three_points():
    m = 0.004
    sample = np.array([math.e * m, math.e**2 * m, math.e**3 * m])
    exponent, sigma = tail_exponent_mle(sample, m)
    assert exponent == pytest.approx(0.5, rel=1e-12)  # 3 / (1 + 2 + 3)
    assert sigma == pytest.approx(0.5 / math.sqrt(3), rel=1e-12)


def test_mle_sigma_arithmetic():
    # 10^4 points drawn so the estimate sits near 3.2: sigma must be exponent/100
    sample = gen_pareto(3.2, 0.001, 10_000, seed=5)
    exponent, sigma = tail_exponent_mle(sample, 0.001)
    assert sigma == exponent / math.sqrt(10_000)


def test_mle_errors():
    with pytest.raises(InsufficientTail):
        tail_exponent_mle(np.array([1.0]), 0.5)
    with pytest.raises(DegenerateTail):
        tail_exponent_mle(np.array([1.0, 1.0, 1.0]), 1.0)


def test_ks_on_exact_quantiles_is_half_step():
    n, exponent, m = 200, 2.5, 0.01
    u = (np.arange(1, n + 1) - 0.5) / n
    tail = pareto_quantile(1.0 - u, exponent, m)  # CDF(tail_i) = u_i exactly
    ks = ks_statistic(tail, m, exponent)
    assert ks <= 0.5 / n + 1e-12


def test_ks_single_point_at_threshold_is_one():
    # fitted CDF at x_min is 0; the empirical step there spans [0, 1]
    assert ks_statistic(np.array([0.01]), 0.01, 3.0) == 1.0


def test_ks_separates_lognormal_from_power_law():
    n, exponent, m = 2000, 2.5, 1.0
    worse = 0
    for trial in range(100):
        rng = np.random.default_rng([41, trial])
        pl = pareto_quantile(1.0 - rng.random(n), exponent, m)
        ln = m * rng.lognormal(mean=0.5, sigma=0.35, size=n)
        ln = ln[ln >= m]
        ks_pl = ks_statistic(pl, m, tail_exponent_mle(pl, m)[0])
        ks_ln = ks_statistic(ln, m, tail_exponent_mle(ln, m)[0])
        if ks_ln > ks_pl:
            worse += 1
    assert worse >= 95  # mismatched family fits systematically worse


def test_fit_pure_pareto_picks_low_threshold():
    x = gen_pareto(3.0, 0.002, 20_000, seed=2)
    fit = fit_power_law(x)
    assert fit.x_min <= np.quantile(x, 0.05)
    assert abs(fit.exponent - 3.0) <= 3 * fit.sigma
    assert fit.ks == ks_statistic(x, fit.x_min, fit.exponent)
    assert fit.p_value is None


def test_fit_mixture_finds_body_tail_boundary():
    m = 0.002
    rng = np.random.default_rng(23)
    x = np.concatenate([rng.uniform(0, m, 50_000), gen_pareto(3.0, m, 50_000, seed=24)])
    fit = fit_power_law(x)
    assert 0.8 * m <= fit.x_min <= 1.25 * m
    assert abs(fit.exponent - 3.0) <= 3 * fit.sigma


def test_fit_errors():
    with pytest.raises(InsufficientSample):
        fit_power_law(np.arange(1, 30, dtype=float))  # too few distinct
    with pytest.raises(InsufficientSample):
        fit_power_law(np.linspace(1, 2, 80), tail_floor=100)  # no tail keeps the floor
    with pytest.raises(InsufficientSample):
        fit_power_law(-np.ones(100))


def test_sigma_times_sqrt_n_recovers_exponent():
    fit = fit_power_law(gen_pareto(2.5, 0.01, 5_000, seed=11))
    assert fit.sigma * math.sqrt(fit.n_tail) == pytest.approx(fit.exponent, rel=1e-12)


def test_scale_equivariance_under_exact_scaling():
    x = gen_pareto(2.8, 0.005, 5_000, seed=13)
    base = fit_power_law(x)
    for c in (2.0, 0.5, 8.0):
        scaled = fit_power_law(c * x)
        assert scaled.x_min == c * base.x_min  # candidates scale with the data
        assert scaled.n_tail == base.n_tail
        assert scaled.exponent == pytest.approx(base.exponent, rel=1e-12)
        assert scaled.ks == pytest.approx(base.ks, rel=1e-9, abs=1e-12)


def test_larger_samples_estimate_more_tightly():
    # fixed threshold: quartiles of |error| shrink when the sample doubles
    errors = {n: [] for n in (2_000, 8_000)}
    for n in errors:
        for trial in range(60):
            x = gen_pareto(3.0, 0.001, n, seed=[59, n, trial])
            exponent, _ = tail_exponent_mle(x, 0.001)
            errors[n].append(abs(exponent - 3.0))
    q25, q50, q75 = np.percentile(errors[2_000], [25, 50, 75])
    p25, p50, p75 = np.percentile(errors[8_000], [25, 50, 75])
    assert p25 < q25 and p50 < q50 and p75 < q75


def test_bootstrap_p_value_calibration_quick():
    # under the null the p-value is ~uniform; at threshold 0.1 the
    # rejection count over 30 seeded trials stays in the 3-sigma band
    rejects = 0
    for trial in range(30):
        x = gen_pareto(2.5, 0.01, 800, seed=[61, trial])
        fit = fit_power_law(x)
        p = bootstrap_p_value(x, fit, n_replicas=60, seed=trial)
        if p <= 0.1:
            rejects += 1
    assert rejects <= 9


def test_bootstrap_p_value_rejects_non_power_law():
    rng = np.random.default_rng(3)
    x = rng.lognormal(mean=-6.0, sigma=0.3, size=4_000)
    fit = fit_power_law(x)
    assert bootstrap_p_value(x, fit, n_replicas=60, seed=1) <= 0.05


def test_bootstrap_deterministic_and_parallel_safe_seeding():
    x = gen_pareto(3.0, 0.01, 1_000, seed=77)
    fit = fit_power_law(x)
    p1 = bootstrap_p_value(x, fit, n_replicas=20, seed=9)
    p2 = bootstrap_p_value(x, fit, n_replicas=20, seed=9)
    assert p1 == p2
