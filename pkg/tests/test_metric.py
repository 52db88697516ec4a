"""Compactified metric, path distance and Hausdorff distance."""

import json
import math

import numpy as np
import pytest

from grdf import metric as M
from grdf import walker as W
from grdf.environment import EnvConfig, Environment, Site
from grdf.errors import EmptySetError

TANH1 = math.tanh(1.0)


def random_metric_paths(n, seed, horizon=60):
    out = []
    for i in range(n):
        env = Environment(EnvConfig(p=0.5, w_pmf=(0.5, 0.5), seed=seed + i))
        path, _ = W.evolve_with_renewals(env, (i % 5 - 2, 0), horizon=horizon)
        out.append(M.rescale(path, M.RescaleParams(n=4, gamma=2.0, sigma=1.5)))
    return out


class TestPointMetric:
    def test_identical_points_zero(self):
        assert M.rho((1.5, -2.0), (1.5, -2.0)) == 0.0

    def test_equal_space_reduces_to_time_term(self):
        for t1, t2 in [(0.0, 1.0), (-3.0, 2.0), (5.0, 5.5)]:
            assert M.rho((0.0, t1), (0.0, t2)) == pytest.approx(
                abs(math.tanh(t1) - math.tanh(t2)), abs=1e-15)

    def test_unit_point_value(self):
        assert abs(M.rho((1.0, 0.0), (0.0, 0.0)) - TANH1) < 1e-12

    def test_phi_psi_values(self):
        assert M.phi(0.0, 123.0) == 0.0
        assert M.psi(math.inf) == 1.0
        assert M.psi(-math.inf) == -1.0
        assert M.phi(1.0, 1.0) == pytest.approx(TANH1 / 2, abs=1e-15)
        assert M.phi(math.inf, 0.0) == 1.0
        assert M.phi(3.0, math.inf) == 0.0

    def test_rho_bounded_by_two(self):
        rng = np.random.default_rng(0)
        for _ in range(500):
            p1 = (float(rng.normal() * 50), float(rng.normal() * 50))
            p2 = (float(rng.normal() * 50), float(rng.normal() * 50))
            assert M.rho(p1, p2) <= 2.0

    def test_rho_symmetry_and_triangle(self):
        rng = np.random.default_rng(1)
        for _ in range(300):
            pts = [(float(rng.normal() * 3), float(rng.normal() * 3)) for _ in range(3)]
            a, b, c = pts
            assert M.rho(a, b) == M.rho(b, a)
            assert M.rho(a, c) <= M.rho(a, b) + M.rho(b, c) + 1e-15


class TestMetricPath:
    def test_eval_and_extensions(self):
        mp = M.MetricPath(0.0, [(0.0, 0.0), (2.0, 2.0)])
        assert mp.eval(-5.0) == 0.0      # hat extension below start
        assert mp.eval(1.0) == 1.0
        assert mp.eval(10.0) == 2.0      # constant after last vertex

    def test_json_round_trip(self):
        mp = M.MetricPath(0.5, [(0.0, 0.5), (1.0, 2.0)])
        back = M.MetricPath.from_json_dict(json.loads(json.dumps(mp.to_json_dict())))
        assert back.t0 == mp.t0 and back.xs == mp.xs and back.ts == mp.ts


class TestPathDistance:
    def test_self_distance_zero(self):
        mp = M.MetricPath(0.0, [(0.0, 0.0), (3.0, 1.0), (1.0, 4.0)])
        assert M.path_distance(mp, mp) == 0.0

    def test_constant_paths_start_gap(self):
        a = M.MetricPath(0.0, [(0.0, 0.0)])
        b = M.MetricPath(1.0, [(0.0, 1.0)])
        assert M.path_distance(a, b) == pytest.approx(TANH1, abs=1e-12)

    def test_symmetry_within_tolerance(self):
        paths = random_metric_paths(12, seed=100)
        tol = 1e-6
        for i in range(len(paths)):
            for j in range(i + 1, len(paths)):
                d1 = M.path_distance(paths[i], paths[j], tol)
                d2 = M.path_distance(paths[j], paths[i], tol)
                assert abs(d1 - d2) <= 2 * tol

    def test_triangle_inequality_within_tolerance(self):
        paths = random_metric_paths(9, seed=200)
        tol = 1e-6
        for a in paths[:3]:
            for b in paths[3:6]:
                for c in paths[6:9]:
                    dab = M.path_distance(a, b, tol)
                    dbc = M.path_distance(b, c, tol)
                    dac = M.path_distance(a, c, tol)
                    assert dac <= dab + dbc + 3 * tol

    def test_sup_found_against_dense_grid(self):
        # oracle: brute-force dense time grid for the sup term; the grid
        # itself misses peaks by at most (slope bound) * spacing / 2
        a, b = random_metric_paths(2, seed=321)
        tol = 1e-6
        got = M.path_distance(a, b, tol)
        t_lo = min(a.t0, b.t0)
        t_hi = max(a.t_last, b.t_last)
        grid = np.linspace(t_lo, t_hi, 400001)
        spacing = (t_hi - t_lo) / 400000
        sup = max(abs(M.phi(a.eval(t), t) - M.phi(b.eval(t), t)) for t in grid)
        want = max(sup, abs(M.psi(a.t0) - M.psi(b.t0)))
        slopes_a = max(abs(s) for s in np.diff(a.xs) / np.diff(a.ts))
        slopes_b = max(abs(s) for s in np.diff(b.xs) / np.diff(b.ts))
        grid_err = (slopes_a + slopes_b + 2.0) * spacing / 2
        assert got >= want - 1e-9
        assert got <= want + grid_err + tol


class TestHausdorff:
    def test_self_distance_small(self):
        paths = random_metric_paths(5, seed=400)
        assert M.hausdorff(paths, paths, 1e-6) <= 2e-6

    def test_singletons_collapse_to_path_distance(self):
        a, b = random_metric_paths(2, seed=500)
        assert M.hausdorff([a], [b], 1e-6) == pytest.approx(
            M.path_distance(a, b, 1e-6), abs=1e-12)

    def test_matches_independent_double_loop(self):
        paths = random_metric_paths(8, seed=600)
        fam_a, fam_b = paths[:4], paths[4:]
        tol = 1e-6
        got = M.hausdorff(fam_a, fam_b, tol)
        # independent oracle with its own loops
        dmat = [[M.path_distance(g1, g2, tol) for g2 in fam_b] for g1 in fam_a]
        d_ab = max(min(row) for row in dmat)
        d_ba = max(min(dmat[i][j] for i in range(4)) for j in range(4))
        assert got == pytest.approx(max(d_ab, d_ba), abs=2 * tol)

    def test_empty_raises(self):
        paths = random_metric_paths(2, seed=700)
        with pytest.raises(EmptySetError):
            M.hausdorff([], paths)


class TestRescale:
    def test_identity_scaling(self):
        path = W.PathRecord(Site(0, 0), [Site(0, 0), Site(2, 3), Site(-1, 7)])
        mp = M.rescale(path, M.RescaleParams(n=1, gamma=1.0, sigma=1.0))
        assert mp.xs == [0.0, 2.0, -1.0]
        assert mp.ts == [0.0, 3.0, 7.0]

    def test_vertex_mapping(self):
        path = W.PathRecord(Site(4, 2), [Site(4, 2), Site(6, 5)])
        params = M.RescaleParams(n=10, gamma=2.0, sigma=0.5)
        mp = M.rescale(path, params)
        assert mp.xs[0] == 4 / (10 * 0.5) and mp.ts[0] == 2 / (100 * 2.0)
        assert mp.t0 == 2 / 200

    def test_straight_up_path_constant_zero(self):
        path = W.PathRecord(Site(0, 0), [Site(0, k) for k in range(6)])
        mp = M.rescale(path, M.RescaleParams(n=3, gamma=1.5, sigma=2.0))
        assert all(x == 0.0 for x in mp.xs)

    def test_commutes_with_interpolation(self):
        env = Environment(EnvConfig(p=0.5, w_pmf=(0.5, 0.5), seed=31))
        path, _ = W.evolve_with_renewals(env, (0, 0), horizon=100)
        params = M.RescaleParams(n=7, gamma=1.7, sigma=0.9)
        mp = M.rescale(path, params)
        rng = np.random.default_rng(2)
        t_max = path.last().t
        for _ in range(200):
            t = float(rng.uniform(0, t_max))
            want = W.interpolate(path, t) / params.space_scale
            got = mp.eval(t / params.time_scale)
            assert abs(got - want) < 1e-12

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            M.RescaleParams(n=0, gamma=1.0, sigma=1.0)
        with pytest.raises(ValueError):
            M.RescaleParams(n=1, gamma=0.0, sigma=1.0)
