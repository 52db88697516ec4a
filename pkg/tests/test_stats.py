"""Estimators against synthetic laws with known answers."""

import math

import numpy as np
import pytest

from grdf import stats as S
from grdf.environment import EnvConfig
from grdf.errors import InsufficientData


class TestSurvivalCurve:
    def test_monotone_and_bounded(self):
        rng = np.random.default_rng(0)
        vals = rng.exponential(50.0, size=5000)
        curve = S.survival_curve(vals, np.arange(1, 200, 5))
        assert np.all(np.diff(curve.probs) <= 1e-12)
        assert np.all((curve.probs >= 0) & (curve.probs <= 1))

    def test_censoring_exact_below_censor_level(self):
        vals = np.array([5.0, 20.0, 100.0, 100.0])
        cens = np.array([False, False, True, True])
        curve = S.survival_curve(vals, np.array([10.0, 50.0]), censored=cens)
        # at k=10: 3 of 4 exceed; at k=50: censored-at-100 still certify > 50
        assert curve.probs[0] == 0.75
        assert curve.probs[1] == 0.5
        # unknown region: censor level below threshold drops the trial
        curve2 = S.survival_curve(vals, np.array([200.0]), censored=cens)
        assert curve2.ns[0] == 2 and curve2.probs[0] == 0.0


class TestPowerTailFit:
    def test_exact_half_slope_recovered(self):
        ks = np.logspace(2, 4, 15)
        curve = S.SurvivalCurve(ks=ks, probs=3.0 / np.sqrt(ks),
                                stderrs=np.zeros(15), ns=np.full(15, 10**6),
                                censored_count=0)
        fit = S.fit_power_tail(curve, 100, 10**4)
        assert abs(fit.slope - (-0.5)) < 1e-9
        assert abs(math.exp(fit.intercept) - 3.0) < 1e-6
        assert fit.r_squared > 1 - 1e-12

    def test_exponential_curve_flagged_by_r2(self):
        ks = np.logspace(1, 3, 15)
        curve = S.SurvivalCurve(ks=ks, probs=np.exp(-ks / 50.0),
                                stderrs=np.zeros(15), ns=np.full(15, 10**6),
                                censored_count=0)
        fit = S.fit_power_tail(curve, 10, 1000)
        assert fit.r_squared < 0.9

    def test_insufficient_points(self):
        ks = np.array([10.0, 20.0, 30.0, 40.0])
        curve = S.SurvivalCurve(ks=ks, probs=1.0 / ks, stderrs=np.zeros(4),
                                ns=np.full(4, 100), censored_count=0)
        with pytest.raises(InsufficientData):
            S.fit_power_tail(curve, 10, 40)


class TestGeometricFit:
    def test_known_geometric_law(self):
        rng = np.random.default_rng(7)
        counts = rng.geometric(0.5, size=20000) - 1  # P(X >= k) = 0.5^k
        fit = S.fit_geometric_tail(counts)
        assert not fit.degenerate
        assert abs(fit.ratio - 0.5) < 0.05
        assert fit.ratio_lo <= 0.5 <= fit.ratio_hi

    def test_all_zero_degenerate(self):
        fit = S.fit_geometric_tail(np.zeros(5000, dtype=int))
        assert fit.degenerate and fit.ratio == 0.0

    def test_needs_min_samples(self):
        with pytest.raises(InsufficientData):
            S.fit_geometric_tail(np.zeros(10, dtype=int))


class TestKS:
    def test_synthetic_normal_accepts(self):
        rng = np.random.default_rng(3)
        d, p = S.ks_normal(rng.standard_normal(10**4))
        assert d < 0.02
        assert p > 0.01

    def test_constant_sample_rejects(self):
        d = S.ks_statistic_normal(np.full(2000, 1.7))
        assert d == pytest.approx(0.5, abs=1e-12)

    def test_p_values_roughly_uniform_under_null(self):
        rng = np.random.default_rng(11)
        ps = []
        for _ in range(40):
            _, p = S.ks_normal(rng.standard_normal(2000))
            ps.append(p)
        ps = np.array(ps)
        assert ps.min() > 1e-4 and (ps > 0.5).mean() > 0.2

    def test_two_sample_distance(self):
        x = np.array([1.0, 2.0, 3.0])
        assert S.ks_distance_two_sample(x, x) == 0.0
        d = S.ks_distance_two_sample(np.zeros(100), np.ones(100))
        assert d == 1.0

    def test_kolmogorov_sf_reference_values(self):
        # classical table values of the Kolmogorov distribution
        assert S.kolmogorov_sf(1.36) == pytest.approx(0.0505, abs=2e-3)
        assert S.kolmogorov_sf(1.63) == pytest.approx(0.0100, abs=1e-3)


class TestMoments:
    def test_heavy_tail_flagged(self):
        rng = np.random.default_rng(4)
        pareto = (1.0 / rng.uniform(0, 1, size=40000)) ** (1 / 1.5)
        rows = S.moment_stability(pareto, orders=(1, 2, 3))
        assert not rows[1]["stable"]
        assert not rows[2]["stable"]

    def test_light_tail_stable(self):
        rng = np.random.default_rng(6)
        geo = rng.geometric(0.4, size=40000).astype(float)
        rows = S.moment_stability(geo, orders=(1, 2, 3, 4))
        assert all(r["stable"] for r in rows)


class TestIntervals:
    def test_wilson_contains_truth(self):
        lo, hi = S.wilson_interval(50, 100)
        assert lo < 0.5 < hi
        lo, hi = S.wilson_interval(0, 50)
        assert lo == pytest.approx(0.0, abs=1e-12) or lo >= 0.0
        assert hi > 0.0

    def test_mean_se(self):
        mean, se = S.mean_se([1.0, 2.0, 3.0, 4.0])
        assert mean == 2.5
        assert se == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2, abs=1e-12)


class TestConstants:
    def test_near_one_degenerate(self):
        cfg = EnvConfig(p=1 - 1e-15, w_pmf=(1.0,), seed=20)
        est = S.estimate_constants(cfg, 200, horizon=100)
        assert est.gamma_hat == 1.0
        assert est.sigma_hat == 0.0
        assert est.horizon_failures == 0

    def test_consistency_under_sample_growth(self):
        cfg = EnvConfig(p=0.5, w_pmf=(0.5, 0.5), seed=21)
        small = S.estimate_constants(cfg, 2000)
        big = S.estimate_constants(cfg, 8000)
        tol = 3 * math.hypot(small.gamma_se, big.gamma_se)
        assert abs(small.gamma_hat - big.gamma_hat) <= tol
        tol_s = 3 * math.hypot(small.sigma_se, big.sigma_se)
        assert abs(small.sigma_hat - big.sigma_hat) <= tol_s

    def test_requires_min_trials(self):
        cfg = EnvConfig(p=0.5, w_pmf=(1.0,), seed=22)
        with pytest.raises(InsufficientData):
            S.estimate_constants(cfg, 50)

    def test_symmetric_first_increment(self):
        cfg = EnvConfig(p=0.5, w_pmf=(0.5, 0.5), seed=23)
        from grdf import forest as F
        res = F.renewal_trials(cfg, 5000, 1, 10**5)
        y1 = res["positions"][:, 0].astype(float)
        mean, se = S.mean_se(y1)
        assert abs(mean) <= 3 * se


class TestEtaBound:
    def test_bound_formula(self):
        assert S.eta_expectation_bound(1.0, 1.0) == pytest.approx(
            1 + 1 / math.sqrt(math.pi), abs=1e-12)
        # width to zero: bound tends to 1
        assert S.eta_expectation_bound(1e-9, 2.0) == pytest.approx(1.0, abs=1e-9)

    def test_single_path_regime(self):
        # interval so small only one path crosses: eta = 1 <= bound
        cfg = EnvConfig(p=0.7, w_pmf=(1.0,), seed=30)
        out = S.condition_E_check(cfg, n=10, t=1.0, a=0.0, b=0.2, trials=40,
                                  gamma=1.4, sigma=0.5)
        assert out["mean_eta"] >= 1.0
        assert out["bound"] > 1.0


class TestConditionT:
    def test_near_one_all_zero(self):
        cfg = EnvConfig(p=1 - 1e-12, w_pmf=(1.0,), seed=31)
        rows = S.condition_T_curve(cfg, n=5, rho=1.0, t_grid=[0.4, 0.2],
                                   trials=10, gamma=1.0, sigma=1.0)
        assert all(r["p_hat"] == 0.0 for r in rows)


class TestConditionBRescaled:
    def test_monotone_in_interval_width(self):
        cfg = EnvConfig(p=0.7, w_pmf=(1.0,), seed=50)
        rows = S.condition_B_curve(cfg, n=15, t_grid=[1.0], eps_grid=[0.2, 0.5],
                                   trials=120, gamma=1.34, sigma=0.31)
        narrow = next(r for r in rows if r["eps"] == 0.2)
        wide = next(r for r in rows if r["eps"] == 0.5)
        # nested intervals on the same trials: the indicator is monotone
        assert narrow["p_hat"] <= wide["p_hat"]
        assert "low_sample" in narrow

    def test_shrinking_interval_long_time_near_zero(self):
        cfg = EnvConfig(p=0.7, w_pmf=(1.0,), seed=51)
        rows = S.condition_B_curve(cfg, n=10, t_grid=[4.0], eps_grid=[0.05],
                                   trials=100, gamma=1.34, sigma=0.31)
        assert rows[0]["p_hat"] <= 0.1


class TestOvershootCensoring:
    def test_parallel_walks_reported_censored(self):
        cfg = EnvConfig(p=1 - 1e-15, w_pmf=(1.0,), seed=52)
        report = S.overshoot_report(cfg, [1], trials=30, horizon=50)
        row = report["rows"][0]
        assert row["n"] == 0 and row["censored"] == 30
