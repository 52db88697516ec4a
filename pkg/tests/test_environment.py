"""Environment contract: determinism, marginal laws, stream separation."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grdf.environment import (
    DEFAULT_P_GRID,
    DEFAULT_W_LAWS,
    EnvConfig,
    Environment,
    OverrideEnvironment,
    Site,
    planted_environment,
)
from grdf.errors import ConfigError

coords = st.integers(min_value=-10**6, max_value=10**6)


def make_env(p=0.5, w_pmf=(0.5, 0.5), seed=12345):
    return Environment(EnvConfig(p=p, w_pmf=w_pmf, seed=seed))


class TestConfig:
    def test_valid_defaults_grid(self):
        for p in DEFAULT_P_GRID:
            for law in DEFAULT_W_LAWS:
                cfg = EnvConfig(p=p, w_pmf=law, seed=1)
                assert cfg.k_max == len(law)

    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.2, 1.5])
    def test_p_range(self, bad):
        with pytest.raises(ConfigError):
            EnvConfig(p=bad, w_pmf=(1.0,), seed=1)

    def test_pmf_must_sum_to_one(self):
        with pytest.raises(ConfigError):
            EnvConfig(p=0.5, w_pmf=(0.5, 0.4), seed=1)

    def test_pmf_first_entry_positive(self):
        with pytest.raises(ConfigError):
            EnvConfig(p=0.5, w_pmf=(0.0, 1.0), seed=1)

    def test_seed_is_u64(self):
        with pytest.raises(ConfigError):
            EnvConfig(p=0.5, w_pmf=(1.0,), seed=-1)
        with pytest.raises(ConfigError):
            EnvConfig(p=0.5, w_pmf=(1.0,), seed=1 << 64)

    def test_json_round_trip(self):
        cfg = EnvConfig(p=0.3, w_pmf=(0.5, 0.25, 0.25), seed=987654321)
        blob = json.dumps(cfg.to_json_dict())
        back = EnvConfig.from_json_dict(json.loads(blob))
        assert back == cfg
        assert back.k_max == 3


class TestDeterminism:
    @given(x=coords, t=coords)
    @settings(max_examples=60, deadline=None)
    def test_repeat_queries_identical(self, x, t):
        env = make_env()
        v = Site(x, t)
        assert env.site_uniform(v) == env.site_uniform(v)
        assert env.site_w(v) == env.site_w(v)
        assert env.is_open(v) == (env.site_uniform(v) < env.p)

    def test_distinct_sites_not_forced_equal(self):
        env = make_env()
        assert env.site_uniform(Site(0, 0)) != env.site_uniform(Site(0, 1))

    def test_query_order_irrelevant(self):
        env1 = make_env(seed=777)
        env2 = make_env(seed=777)
        sites = [Site(i, -i * 3 + 1) for i in range(50)]
        forward = [env1.site_uniform(v) for v in sites]
        backward = [env2.site_uniform(v) for v in reversed(sites)]
        assert forward == backward[::-1]

    def test_scalar_matches_batch(self):
        env = make_env(seed=31337)
        rng = np.random.default_rng(0)
        xs = rng.integers(-10**6, 10**6, size=300)
        ts = rng.integers(-10**6, 10**6, size=300)
        batch_u = env.uniforms(xs, ts)
        batch_w = env.ws(xs, ts)
        for i in range(xs.size):
            v = Site(int(xs[i]), int(ts[i]))
            assert env.site_uniform(v) == batch_u[i]
            assert env.site_w(v) == batch_w[i]


class TestMarginals:
    def test_uniform_mean_at_1e6_sites(self):
        env = make_env(seed=2024)
        xs = np.arange(10**6, dtype=np.int64)
        u = env.uniforms(xs, np.zeros_like(xs))
        assert abs(u.mean() - 0.5) < 0.002

    def test_uniform_ks_at_1e6_sites(self):
        env = make_env(seed=2025)
        xs = np.arange(10**6, dtype=np.int64)
        u = np.sort(env.uniforms(xs, xs * 7 + 1))
        n = u.size
        grid = np.arange(1, n + 1) / n
        ks = max(np.max(grid - u), np.max(u - (grid - 1.0 / n)))
        assert ks < 0.002

    def test_open_fraction_matches_p(self):
        env = make_env(p=0.5, seed=555)
        xs = np.arange(10**6, dtype=np.int64)
        frac = env.opens(xs, np.full_like(xs, 3)).mean()
        assert abs(frac - 0.5) < 0.002

    def test_open_consistent_with_uniform(self):
        env = make_env(p=0.3, seed=99)
        rng = np.random.default_rng(1)
        for _ in range(10**4):
            v = Site(int(rng.integers(-10**5, 10**5)), int(rng.integers(-10**5, 10**5)))
            assert env.is_open(v) == (env.site_uniform(v) < 0.3)

    def test_p_near_one_everything_open(self):
        env = make_env(p=1 - 1e-15, w_pmf=(1.0,), seed=4)
        assert all(env.is_open(Site(i, -2 * i)) for i in range(200))

    def test_w_degenerate_law(self):
        env = make_env(w_pmf=(1.0,), seed=8)
        assert all(env.site_w(Site(i, i + 1)) == 1 for i in range(200))

    def test_w_half_half_frequency(self):
        env = make_env(w_pmf=(0.5, 0.5), seed=9)
        xs = np.arange(10**6, dtype=np.int64)
        ws = env.ws(xs, np.zeros_like(xs))
        assert set(np.unique(ws)) <= {1, 2}
        assert abs((ws == 1).mean() - 0.5) < 0.002

    def test_stream_independence_correlation(self):
        env = make_env(w_pmf=(0.5, 0.5), seed=10)
        xs = np.arange(10**6, dtype=np.int64)
        ts = np.zeros_like(xs)
        u = env.uniforms(xs, ts)
        w = env.ws(xs, ts).astype(np.float64)
        r = np.corrcoef(u, w)[0, 1]
        assert abs(r) < 0.005


class TestOverride:
    def test_forced_sites_and_passthrough(self):
        base = make_env(p=0.5, seed=6)
        env = OverrideEnvironment(base, force_open={(0, 1): True, (2, 1): False},
                                  force_w={(0, 0): 2})
        assert env.is_open((0, 1))
        assert not env.is_open((2, 1))
        assert env.site_w((0, 0)) == 2
        v = (17, -4)
        assert env.site_uniform(v) == base.site_uniform(v)
        assert env.site_w(v) == base.site_w(v)

    def test_override_keeps_uniform_consistency(self):
        base = make_env(p=0.5, seed=6)
        env = OverrideEnvironment(base, force_open={(0, 1): True, (2, 1): False})
        for v in [(0, 1), (2, 1), (5, 5)]:
            assert env.is_open(v) == (env.site_uniform(v) < env.p)
            assert 0.0 < env.site_uniform(v) < 1.0

    def test_planted_environment_closes_everything_else(self):
        env = planted_environment({(0, 1), (3, 2)}, p=0.5, w_default=1, seed=3)
        assert env.is_open((0, 1)) and env.is_open((3, 2))
        assert not any(env.is_open((x, t)) for x in range(-5, 6)
                       for t in range(-3, 6) if (x, t) not in {(0, 1), (3, 2)})
        assert env.site_w((9, 9)) == 1
