"""Command-line front end: every experiment as a seeded, reproducible run.

Usage: ``grdf <experiment> [--config file.json] [overrides]``. The config
is a JSON object; flags win over file values. Each run writes
``<out_prefix>.csv`` (raw trial rows, LF line endings) and
``<out_prefix>.summary.json`` (stable key order). All randomness flows
from the single master seed through a counter-based per-trial derivation,
so outputs are byte-identical for any worker count.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import forest, kernels, metric, stats, walker
from .environment import EnvConfig, Environment
from .errors import ConfigError, GrdfError, InsufficientData

EXPERIMENTS = (
    "probe-env", "simulate-path", "renewals", "coalescence-tail", "crossings",
    "constants", "distance-preserved", "condition-b", "condition-e",
    "condition-t", "eta", "metric-distance", "moment-stability", "overshoot",
)

_DEFAULT_ENV = {"p": 0.5, "w_pmf": [0.5, 0.5], "seed": 20210607}


def derive_trial_seed(master_seed: int, trial_index: int) -> int:
    """Injective counter-based per-trial seed derivation."""
    return int(kernels.derive_seed(np.uint64(master_seed), trial_index))


@dataclass
class ExperimentConfig:
    env: EnvConfig
    experiment: str
    trials: int = 100
    horizon: int = 10**5
    n: int = 100
    geometry: dict = field(default_factory=dict)
    workers: int = 1
    out_prefix: str = ""

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if not (isinstance(self.trials, int) and self.trials >= 1):
            raise ConfigError(f"trials must be a positive integer, got {self.trials!r}")
        if not (isinstance(self.horizon, int) and self.horizon >= 1):
            raise ConfigError(f"horizon must be a positive integer, got {self.horizon!r}")
        if not (isinstance(self.n, int) and self.n >= 1):
            raise ConfigError(f"n must be a positive integer, got {self.n!r}")
        if not (isinstance(self.workers, int) and self.workers >= 1):
            raise ConfigError(f"workers must be a positive integer, got {self.workers!r}")
        if not isinstance(self.geometry, dict):
            raise ConfigError("geometry must be an object")
        if not self.out_prefix:
            self.out_prefix = f"grdf-{self.experiment}"

    def to_json_dict(self) -> dict:
        return {
            "env": self.env.to_json_dict(),
            "experiment": self.experiment,
            "trials": self.trials,
            "horizon": self.horizon,
            "n": self.n,
            "geometry": self.geometry,
            "workers": self.workers,
            "out_prefix": self.out_prefix,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ExperimentConfig":
        if "experiment" not in obj:
            raise ConfigError("config is missing field 'experiment'")
        env = EnvConfig.from_json_dict(obj.get("env", _DEFAULT_ENV))
        return cls(
            env=env,
            experiment=obj["experiment"],
            trials=int(obj.get("trials", 100)),
            horizon=int(obj.get("horizon", 10**5)),
            n=int(obj.get("n", 100)),
            geometry=dict(obj.get("geometry", {})),
            workers=int(obj.get("workers", 1)),
            out_prefix=str(obj.get("out_prefix", "")),
        )


# -- worker plumbing ----------------------------------------------------------


def _chunk_worker(payload):
    cfg = ExperimentConfig.from_json_dict(payload["config"])
    spec = _REGISTRY[cfg.experiment]
    return spec["chunk"](cfg, payload["start"], payload["count"], payload["params"])


def _run_chunks(cfg: ExperimentConfig, total: int, params: dict) -> list[tuple]:
    """Compute rows for flattened trial indices [0, total) in fixed-size
    chunks; worker count affects scheduling only, never the rows."""
    chunk = max(1, math.ceil(total / (cfg.workers * 4))) if cfg.workers > 1 else total
    payloads = [
        {"config": cfg.to_json_dict(), "start": s,
         "count": min(chunk, total - s), "params": params}
        for s in range(0, total, chunk)
    ]
    if cfg.workers == 1:
        parts = [_chunk_worker(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(_chunk_worker, payloads))
    rows: list[tuple] = []
    for part in parts:
        rows.extend(part)
    return rows


def _geom(cfg: ExperimentConfig, key: str, default):
    return cfg.geometry.get(key, default)


# -- experiment implementations -----------------------------------------------


def _probe_env_chunk(cfg, start, count, params):
    env = Environment(cfg.env)
    sites = _geom(cfg, "sites", [[i, 0] for i in range(10)])
    rows = []
    for x, t in sites:
        v = (int(x), int(t))
        rows.append((v[0], v[1], env.site_uniform(v), int(env.is_open(v)), env.site_w(v)))
    return rows


def _probe_env_summary(cfg, rows, params):
    opens = [r[3] for r in rows]
    return {"estimates": {"open_fraction": sum(opens) / len(opens), "sites": len(rows)},
            "stderrs": {}, "pass": {}}


def _simulate_path_chunk(cfg, start, count, params):
    p, cum = cfg.env.p, cfg.env.w_cumulative()
    cap = walker.DEFAULT_LEVEL_CAP
    rows = []
    for i in range(start, start + count):
        seed = np.uint64(derive_trial_seed(cfg.env.seed, i))
        x, t, step = 0, 0, 0
        rows.append((i, step, x, t))
        while t <= cfg.horizon:
            nx, nt = kernels.jump_target(seed, x, t, p, cum, cap)
            if nx == kernels.CAP_SENTINEL:
                break
            x, t = int(nx), int(nt)
            step += 1
            rows.append((i, step, x, t))
    return rows


def _simulate_path_summary(cfg, rows, params):
    steps = {}
    for trial, step, _, _ in rows:
        steps[trial] = max(steps.get(trial, 0), step)
    vals = list(steps.values())
    return {"estimates": {"mean_steps": sum(vals) / len(vals)}, "stderrs": {}, "pass": {}}


def _renewals_chunk(cfg, start, count, params):
    n_ren = int(_geom(cfg, "n_renewals", 10))
    res = forest.renewal_trials(cfg.env, count, n_ren, cfg.horizon, offset=start)
    rows = []
    for i in range(count):
        trial = start + i
        t_prev = 0
        for j in range(int(res["counts"][i])):
            t_j = int(res["times"][i, j])
            rows.append((trial, j + 1, t_j, int(res["positions"][i, j]),
                         t_j - t_prev, int(res["displacements"][i, j])))
            t_prev = t_j
    return rows


def _renewals_summary(cfg, rows, params):
    n_ren = int(_geom(cfg, "n_renewals", 10))
    complete = {}
    gaps = []
    for trial, j, t, pos, gap, disp in rows:
        complete[trial] = max(complete.get(trial, 0), j)
        gaps.append(gap)
    n_complete = sum(1 for v in complete.values() if v >= n_ren)
    mean_gap, se_gap = stats.mean_se(gaps)
    return {"estimates": {"complete_fraction": n_complete / cfg.trials,
                          "mean_gap": mean_gap},
            "stderrs": {"mean_gap": se_gap},
            "pass": {"all_complete": n_complete == cfg.trials}}


def _coalescence_chunk(cfg, start, count, params):
    m = int(_geom(cfg, "m", 1))
    res = forest.pair_trials(cfg.env, m, count, cfg.horizon,
                             max_records=8, stop_on_zero=True, offset=start)
    rows = []
    for i in range(count):
        rows.append((int(res["seeds"][i]), m, int(res["theta"][i]),
                     int(res["nu"][i]), int(res["t_nu"][i]),
                     int(res["crossings"][i]), int(res["censored"][i])))
    return rows


def _tail_fit_summary(cfg, rows, params):
    k_min = float(_geom(cfg, "k_min", 100.0))
    k_max = float(_geom(cfg, "k_max", 10000.0))
    n_k = int(_geom(cfg, "n_k", 13))
    ks = np.unique(np.round(np.logspace(math.log10(k_min), math.log10(k_max), n_k)))
    theta = np.array([r[2] for r in rows], dtype=np.float64)
    nu = np.array([r[3] for r in rows], dtype=np.float64)
    t_nu = np.array([r[4] for r in rows], dtype=np.float64)
    cens = np.array([r[6] for r in rows], dtype=bool)
    estimates, stderrs, passes = {}, {}, {}
    horizon = cfg.horizon
    # censored trials certify theta and t_nu beyond the horizon; their
    # renewal count is not in the row schema, so the nu curve drops them
    # (value -1 fails every threshold while flagged censored)
    for name, vals, censor_level in (
        ("theta", np.where(theta >= 0, theta, horizon), theta < 0),
        ("nu", nu, nu < 0),
        ("t_nu", np.where(t_nu >= 0, t_nu, horizon), t_nu < 0),
    ):
        censored = cens | censor_level
        curve = stats.survival_curve(vals, ks, censored=censored)
        try:
            fit = stats.fit_power_tail(curve, k_min, k_max)
            estimates[f"slope_{name}"] = fit.slope
            estimates[f"intercept_{name}"] = fit.intercept
            estimates[f"r2_{name}"] = fit.r_squared
            stderrs[f"slope_{name}"] = fit.slope_stderr
            passes[f"slope_window_{name}"] = bool(-0.65 <= fit.slope <= -0.40)
        except InsufficientData:
            estimates[f"slope_{name}"] = None
            passes[f"slope_window_{name}"] = False
    estimates["censored"] = int(cens.sum())
    return {"estimates": estimates, "stderrs": stderrs, "pass": passes}


def _crossings_chunk(cfg, start, count, params):
    m = int(_geom(cfg, "m", 1))
    res = forest.pair_trials(cfg.env, m, count, cfg.horizon,
                             max_records=4, stop_on_zero=True, offset=start)
    return [(start + i, int(res["seeds"][i]), m, int(res["crossings"][i]),
             int(res["censored"][i])) for i in range(count)]


def _crossings_summary(cfg, rows, params):
    counts = np.array([r[3] for r in rows])
    fit = stats.fit_geometric_tail(counts)
    return {"estimates": {"ratio": fit.ratio, "ratio_lo": fit.ratio_lo,
                          "ratio_hi": fit.ratio_hi, "n_points": fit.n_points,
                          "degenerate": fit.degenerate},
            "stderrs": {},
            "pass": {"ratio_below_one": bool(fit.degenerate or fit.ratio_hi < 1.0)}}


def _constants_chunk(cfg, start, count, params):
    res = forest.renewal_trials(cfg.env, count, 1, cfg.horizon, offset=start)
    return [(start + i, int(res["times"][i, 0]), int(res["positions"][i, 0]),
             int(res["counts"][i] >= 1)) for i in range(count)]


def _constants_summary(cfg, rows, params):
    ok = [r for r in rows if r[3] == 1]
    t1 = np.array([r[1] for r in ok], dtype=np.float64)
    y1 = np.array([r[2] for r in ok], dtype=np.float64)
    if t1.size < 100:
        raise InsufficientData("need >= 100 completed trials for constants")
    gamma_hat, gamma_se = stats.mean_se(t1)
    sigma_hat = float(y1.std(ddof=1))
    sigma_se = sigma_hat / math.sqrt(2.0 * (y1.size - 1))
    return {"estimates": {"gamma_hat": gamma_hat, "sigma_hat": sigma_hat,
                          "failures": cfg.trials - len(ok)},
            "stderrs": {"gamma_hat": gamma_se, "sigma_hat": sigma_se},
            "pass": {"sigma_positive": sigma_hat > 0}}


def _distance_preserved_chunk(cfg, start, count, params):
    m_grid = [int(m) for m in _geom(cfg, "m_grid", [1, 2, 5])]
    rows = []
    for g in range(start, start + count):
        m_idx, trial = divmod(g, cfg.trials)
        m = m_grid[m_idx]
        res = forest.pair_trials(cfg.env, m, 1, cfg.horizon, max_records=1,
                                 stop_on_zero=False, offset=m_idx * cfg.trials + trial)
        valid = int(res["n_rec"][0] >= 1)
        y1 = int(res["rec_y"][0, 0]) if valid else 0
        rows.append((m, trial, y1, int(valid and y1 == m), valid))
    return rows


def _distance_preserved_summary(cfg, rows, params):
    m_grid = [int(m) for m in _geom(cfg, "m_grid", [1, 2, 5])]
    p = cfg.env.p
    pw1 = cfg.env.w_pmf[0]
    lower = (p * pw1) ** 2
    upper = 1.0 - (1.0 - p / 2.0) * p**3 * (1.0 - p) ** 3 * pw1**3
    estimates, stderrs, passes = {}, {}, {}
    for m in m_grid:
        sub = [r for r in rows if r[0] == m and r[4] == 1]
        hits = sum(r[3] for r in sub)
        n = len(sub)
        phat = hits / n if n else math.nan
        se = stats.binomial_se(hits, n) if n else math.nan
        estimates[f"p_hat_m{m}"] = phat
        stderrs[f"p_hat_m{m}"] = se
        passes[f"bounds_m{m}"] = bool(n and (phat >= lower - 3 * se)
                                      and (phat <= upper + 3 * se))
    estimates["lower_bound"] = lower
    estimates["upper_bound"] = upper
    return {"estimates": estimates, "stderrs": stderrs, "pass": passes}


def _resolve_scaling(cfg, params):
    gamma = _geom(cfg, "gamma", None)
    sigma = _geom(cfg, "sigma", None)
    if gamma is None or sigma is None:
        est = stats.estimate_constants(cfg.env, int(_geom(cfg, "constants_trials", 2000)),
                                       horizon=cfg.horizon, offset=10**6)
        gamma = est.gamma_hat if gamma is None else gamma
        sigma = est.sigma_hat if sigma is None else sigma
    return float(gamma), float(sigma)


def _condition_e_chunk(cfg, start, count, params):
    gamma, sigma = params["gamma"], params["sigma"]
    a = float(_geom(cfg, "a", 0.0))
    b = float(_geom(cfg, "b", 1.0))
    t = float(_geom(cfg, "t", 1.0))
    t_lat = int(round(t * cfg.n * cfg.n * gamma))
    lo, hi = a * cfg.n * sigma, b * cfg.n * sigma
    counts = forest.eta_trials(cfg.env, count, t_lat, [(lo, hi)], offset=start)
    return [(start + i, int(counts[i, 0])) for i in range(count)]


def _condition_e_summary(cfg, rows, params):
    gamma, sigma = params["gamma"], params["sigma"]
    a = float(_geom(cfg, "a", 0.0))
    b = float(_geom(cfg, "b", 1.0))
    t = float(_geom(cfg, "t", 1.0))
    t_lat = int(round(t * cfg.n * cfg.n * gamma))
    t_eff = t_lat / (cfg.n * cfg.n * gamma)
    etas = np.array([r[1] for r in rows], dtype=np.float64)
    mean, se = stats.mean_se(etas)
    bound = stats.eta_expectation_bound(b - a, t_eff)
    return {"estimates": {"mean_eta": mean, "bound": bound, "gamma": gamma,
                          "sigma": sigma, "t_lattice": t_lat},
            "stderrs": {"mean_eta": se},
            "pass": {"within_bound": bool(mean <= bound + 3 * se)}}


def _condition_b_chunk(cfg, start, count, params):
    if "k_grid" in cfg.geometry:
        k_grid = [int(k) for k in cfg.geometry["k_grid"]]
        m_grid = [int(m) for m in _geom(cfg, "m_grid", [1, 2, 4])]
        trials_per_k = [int(x) for x in _geom(cfg, "trials_per_k",
                                              [cfg.trials] * len(k_grid))]
        rows = []
        table = stats.condition_b_scaling(cfg.env, k_grid, m_grid, trials_per_k)
        for r in table:
            rows.append((r["k"], r["m"], r["trials"], r["hits"], r["p_hat"],
                         r["se"], r["scaled"]))
        return rows
    gamma, sigma = params["gamma"], params["sigma"]
    t_grid = [float(t) for t in _geom(cfg, "t_grid", [1.0])]
    eps_grid = [float(e) for e in _geom(cfg, "eps_grid", [0.5, 0.25])]
    table = stats.condition_B_curve(cfg.env, cfg.n, t_grid, eps_grid, cfg.trials,
                                    gamma, sigma)
    return [(r["t"], r["eps"], r["trials"], int(r["p_hat"] * r["trials"] + 0.5),
             r["p_hat"], r["se"], math.nan) for r in table]


def _condition_b_summary(cfg, rows, params):
    estimates = {"cells": len(rows)}
    passes = {}
    if "k_grid" in cfg.geometry:
        scaled = [r[6] for r in rows if r[4] > 0]
        if scaled:
            estimates["scaled_max"] = max(scaled)
            estimates["scaled_min"] = min(scaled)
            passes["scaled_bounded"] = bool(max(scaled) / min(scaled) <= 4.0)
    return {"estimates": estimates, "stderrs": {}, "pass": passes}


def _condition_t_chunk(cfg, start, count, params):
    gamma, sigma = params["gamma"], params["sigma"]
    rho = float(_geom(cfg, "rho", 0.5))
    t_grid = [float(t) for t in _geom(cfg, "t_grid", [0.4, 0.2, 0.1])]
    table = stats.condition_T_curve(cfg.env, cfg.n, rho, t_grid, cfg.trials,
                                    gamma, sigma)
    return [(r["t"], r["rho_lattice"], r["t_lattice"], r["trials"], r["hits"],
             r["p_hat"], r["se"], r["p_over_t"]) for r in table]


def _condition_t_summary(cfg, rows, params):
    ordered = sorted(rows, key=lambda r: -r[0])
    ratios = [r[7] for r in ordered]
    ses = [r[6] / r[0] for r in ordered]
    ok = all(ratios[i + 1] <= ratios[i] + 3 * math.hypot(ses[i], ses[i + 1])
             for i in range(len(ratios) - 1))
    return {"estimates": {"p_over_t": ratios},
            "stderrs": {"p_over_t": ses},
            "pass": {"nonincreasing": bool(ok)}}


def _eta_chunk(cfg, start, count, params):
    a = int(_geom(cfg, "a", 0))
    b = int(_geom(cfg, "b", 3))
    t = int(_geom(cfg, "t", 100))
    counts = forest.eta_trials(cfg.env, count, t, [(float(a), float(b))], offset=start)
    return [(start + i, 0, t, a, b, int(counts[i, 0])) for i in range(count)]


def _eta_summary(cfg, rows, params):
    etas = np.array([r[5] for r in rows], dtype=np.float64)
    mean, se = stats.mean_se(etas)
    return {"estimates": {"mean_eta": mean, "min_eta": float(etas.min()),
                          "max_eta": float(etas.max())},
            "stderrs": {"mean_eta": se},
            "pass": {"all_positive": bool((etas >= 1).all())}}


def _metric_distance_chunk(cfg, start, count, params):
    starts = [tuple(s) for s in _geom(cfg, "starts", [[0, 0], [2, 0], [5, 0]])]
    horizon = int(_geom(cfg, "path_horizon", 50))
    env = Environment(cfg.env)
    paths = []
    for s in starts:
        path, _ = walker.evolve_with_renewals(env, s, horizon=horizon)
        paths.append(path)
    gamma = float(_geom(cfg, "gamma", 1.0))
    sigma = float(_geom(cfg, "sigma", 1.0))
    mps = [metric.rescale(p, metric.RescaleParams(n=cfg.n, gamma=gamma, sigma=sigma))
           for p in paths]
    rows = []
    for i in range(len(mps)):
        for j in range(len(mps)):
            rows.append((i, j, metric.path_distance(mps[i], mps[j])))
    return rows


def _metric_distance_summary(cfg, rows, params):
    starts = [tuple(s) for s in _geom(cfg, "starts", [[0, 0], [2, 0], [5, 0]])]
    n = len(starts)
    dmat = {(r[0], r[1]): r[2] for r in rows}
    asym = max(abs(dmat[(i, j)] - dmat[(j, i)]) for i in range(n) for j in range(n))
    return {"estimates": {"max_distance": max(dmat.values()),
                          "max_asymmetry": asym},
            "stderrs": {},
            "pass": {"symmetric": bool(asym <= 2e-6)}}


def _moment_stability_chunk(cfg, start, count, params):
    res = forest.renewal_trials(cfg.env, count, 1, cfg.horizon, offset=start)
    return [(start + i, int(res["times"][i, 0]), int(res["displacements"][i, 0]),
             int(res["counts"][i] >= 1)) for i in range(count)]


def _moment_stability_summary(cfg, rows, params):
    t1 = np.array([r[1] for r in rows if r[3] == 1], dtype=np.float64)
    disp = np.array([r[2] for r in rows if r[3] == 1], dtype=np.float64)
    estimates, passes = {}, {}
    for name, samples in (("gap", t1), ("displacement", disp)):
        for rec in stats.moment_stability(samples):
            estimates[f"{name}_ratio_{rec['order']}"] = rec["ratio"]
            passes[f"{name}_stable_{rec['order']}"] = rec["stable"]
    return {"estimates": estimates, "stderrs": {}, "pass": passes}


def _overshoot_chunk(cfg, start, count, params):
    m_grid = [int(m) for m in _geom(cfg, "m_grid", list(range(1, 21)))]
    rows = []
    for g in range(start, start + count):
        m_idx, trial = divmod(g, cfg.trials)
        m = m_grid[m_idx]
        res = forest.pair_trials(cfg.env, m, 1, cfg.horizon, max_records=4,
                                 stop_on_zero=True, offset=m_idx * cfg.trials + trial)
        rows.append((m, trial, int(res["over_val"][0]), int(res["over_seen"][0])))
    return rows


def _overshoot_summary(cfg, rows, params):
    m_grid = [int(m) for m in _geom(cfg, "m_grid", list(range(1, 21)))]
    estimates, stderrs = {}, {}
    means = []
    for m in m_grid:
        vals = np.array([r[2] for r in rows if r[0] == m and r[3] == 1],
                        dtype=np.float64)
        if vals.size:
            mean, se = stats.mean_se(vals)
            estimates[f"mean_m{m}"] = mean
            stderrs[f"mean_m{m}"] = se
            means.append((m, mean))
    passes = {}
    if len(means) >= 3:
        x = np.array([m for m, _ in means], dtype=np.float64)
        y = np.array([v for _, v in means], dtype=np.float64)
        slope, _, slope_se, _ = stats._ols(x, y)
        estimates["slope"] = slope
        stderrs["slope"] = slope_se
        passes["no_divergence"] = bool(abs(slope) <= 3 * slope_se or slope > 0)
    return {"estimates": estimates, "stderrs": stderrs, "pass": passes}


_REGISTRY = {
    "probe-env": {
        "columns": ("x", "t", "u", "open", "w"),
        "chunk": _probe_env_chunk, "summary": _probe_env_summary, "flat_total": lambda cfg: 1},
    "simulate-path": {
        "columns": ("trial", "step", "x", "t"),
        "chunk": _simulate_path_chunk, "summary": _simulate_path_summary,
        "flat_total": lambda cfg: cfg.trials},
    "renewals": {
        "columns": ("trial", "j", "time", "position", "gap", "max_displacement"),
        "chunk": _renewals_chunk, "summary": _renewals_summary,
        "flat_total": lambda cfg: cfg.trials},
    "coalescence-tail": {
        "columns": ("seed", "m", "theta", "nu", "t_nu", "sign_changes", "censored"),
        "chunk": _coalescence_chunk, "summary": _tail_fit_summary,
        "flat_total": lambda cfg: cfg.trials},
    "crossings": {
        "columns": ("trial", "seed", "m", "sign_changes", "censored"),
        "chunk": _crossings_chunk, "summary": _crossings_summary,
        "flat_total": lambda cfg: cfg.trials},
    "constants": {
        "columns": ("trial", "t1", "y1", "ok"),
        "chunk": _constants_chunk, "summary": _constants_summary,
        "flat_total": lambda cfg: cfg.trials},
    "distance-preserved": {
        "columns": ("m", "trial", "y1", "preserved", "valid"),
        "chunk": _distance_preserved_chunk, "summary": _distance_preserved_summary,
        "flat_total": lambda cfg: cfg.trials * len(_geom(cfg, "m_grid", [1, 2, 5]))},
    "condition-b": {
        "columns": ("k_or_t", "m_or_eps", "trials", "hits", "p_hat", "se", "scaled"),
        "chunk": _condition_b_chunk, "summary": _condition_b_summary,
        "flat_total": lambda cfg: 1, "needs_scaling": True},
    "condition-e": {
        "columns": ("trial", "eta"),
        "chunk": _condition_e_chunk, "summary": _condition_e_summary,
        "flat_total": lambda cfg: cfg.trials, "needs_scaling": True},
    "condition-t": {
        "columns": ("t", "rho_lattice", "t_lattice", "trials", "hits", "p_hat",
                    "se", "p_over_t"),
        "chunk": _condition_t_chunk, "summary": _condition_t_summary,
        "flat_total": lambda cfg: 1, "needs_scaling": True},
    "eta": {
        "columns": ("trial", "t0", "t", "a", "b", "eta"),
        "chunk": _eta_chunk, "summary": _eta_summary,
        "flat_total": lambda cfg: cfg.trials},
    "metric-distance": {
        "columns": ("i", "j", "distance"),
        "chunk": _metric_distance_chunk, "summary": _metric_distance_summary,
        "flat_total": lambda cfg: 1},
    "moment-stability": {
        "columns": ("trial", "t1", "max_displacement", "ok"),
        "chunk": _moment_stability_chunk, "summary": _moment_stability_summary,
        "flat_total": lambda cfg: cfg.trials},
    "overshoot": {
        "columns": ("m", "trial", "over_val", "seen"),
        "chunk": _overshoot_chunk, "summary": _overshoot_summary,
        "flat_total": lambda cfg: cfg.trials * len(_geom(cfg, "m_grid", list(range(1, 21))))},
}


def load_summary_schema() -> dict:
    with resources.files("grdf.schemas").joinpath("summary.schema.json").open() as fh:
        return json.load(fh)


def validate_summary(obj: dict, schema: dict | None = None) -> None:
    """Structural check of a summary object against the shipped schema
    (subset validator: required fields plus basic types)."""
    schema = schema or load_summary_schema()
    for key in schema.get("required", ()):
        if key not in obj:
            raise ConfigError(f"summary is missing required field {key!r}")
    type_map = {"object": dict, "string": str}
    for key, sub in schema.get("properties", {}).items():
        if key in obj and sub.get("type") in type_map:
            if not isinstance(obj[key], type_map[sub["type"]]):
                raise ConfigError(f"summary field {key!r} must be {sub['type']}")


def run(cfg: ExperimentConfig) -> dict:
    """Execute one experiment: write CSV and summary JSON, return summary."""
    spec = _REGISTRY[cfg.experiment]
    params = {}
    if spec.get("needs_scaling"):
        gamma, sigma = _resolve_scaling(cfg, params)
        params = {"gamma": gamma, "sigma": sigma}
    total = spec["flat_total"](cfg)
    rows = _run_chunks(cfg, total, params)
    summary_body = spec["summary"](cfg, rows, params)
    summary = {
        "experiment": cfg.experiment,
        "config": cfg.to_json_dict(),
        "estimates": summary_body["estimates"],
        "stderrs": summary_body["stderrs"],
        "pass": summary_body["pass"],
        "meta": summary_body.get("meta", {}),
    }
    validate_summary(summary)
    csv_path = f"{cfg.out_prefix}.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(spec["columns"])
        writer.writerows(rows)
    json_path = f"{cfg.out_prefix}.summary.json"
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return summary


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grdf",
                                     description="Coalescing lattice-walk experiments")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="JSON config file")
        sp.add_argument("--p", type=float, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--w-pmf", default=None,
                        help="comma-separated probabilities for W = 1, 2, ...")
        sp.add_argument("--trials", type=int, default=None)
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--horizon", type=int, default=None)
        sp.add_argument("--n", type=int, default=None)
        sp.add_argument("--out-prefix", default=None)
        sp.add_argument("--geom", action="append", default=[],
                        help="geometry override key=json-value (repeatable)")
    return parser


def config_from_args(args) -> ExperimentConfig:
    obj = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            obj = json.load(fh)
    obj["experiment"] = args.experiment
    env_obj = dict(obj.get("env", _DEFAULT_ENV))
    if args.p is not None:
        env_obj["p"] = args.p
    if args.seed is not None:
        env_obj["seed"] = args.seed
    if args.w_pmf is not None:
        env_obj["w_pmf"] = [float(x) for x in args.w_pmf.split(",")]
    obj["env"] = env_obj
    for flag in ("trials", "workers", "horizon", "n"):
        val = getattr(args, flag)
        if val is not None:
            obj[flag] = val
    if args.out_prefix is not None:
        obj["out_prefix"] = args.out_prefix
    geometry = dict(obj.get("geometry", {}))
    for item in args.geom:
        if "=" not in item:
            raise ConfigError(f"geometry override {item!r} is not key=value")
        key, _, raw = item.partition("=")
        try:
            geometry[key] = json.loads(raw)
        except json.JSONDecodeError:
            geometry[key] = raw
    obj["geometry"] = geometry
    return ExperimentConfig.from_json_dict(obj)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (ConfigError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        summary = run(cfg)
    except InsufficientData as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return 3
    except GrdfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps({"experiment": cfg.experiment,
                      "out_prefix": cfg.out_prefix,
                      "pass": summary["pass"]}, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
