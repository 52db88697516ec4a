"""Statistical reductions over trial streams.

Everything here is a deterministic function of (config, seed): estimators
consume arrays produced by the forest drivers, and re-running any
experiment reproduces each number bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import forest
from .environment import EnvConfig
from .errors import InsufficientData

Z95 = 1.959963984540054  # two-sided 95% normal quantile


def mean_se(samples) -> tuple[float, float]:
    arr = np.asarray(samples, dtype=np.float64)
    if arr.size == 0:
        raise InsufficientData("no samples")
    se = arr.std(ddof=1) / math.sqrt(arr.size) if arr.size > 1 else 0.0
    return float(arr.mean()), float(se)


def wilson_interval(successes: int, n: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise InsufficientData("no trials")
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return center - half, center + half


def binomial_se(successes: int, n: int) -> float:
    phat = successes / n
    return math.sqrt(phat * (1.0 - phat) / n)


# -- survival curves and tail fits -------------------------------------------


@dataclass
class SurvivalCurve:
    """P(X > k) over a threshold grid, with right-censoring support.

    A trial censored at level c certifies X > k for every k <= c and says
    nothing for k > c; such trials leave the denominator there.
    """

    ks: np.ndarray
    probs: np.ndarray
    stderrs: np.ndarray
    ns: np.ndarray
    censored_count: int


def survival_curve(values, ks, censored=None) -> SurvivalCurve:
    values = np.asarray(values, dtype=np.float64)
    ks = np.asarray(ks, dtype=np.float64)
    if censored is None:
        censored = np.zeros(values.shape, dtype=bool)
    else:
        censored = np.asarray(censored, dtype=bool)
    probs = np.empty(ks.size)
    ses = np.empty(ks.size)
    ns = np.empty(ks.size, dtype=np.int64)
    for i, k in enumerate(ks):
        over = (~censored & (values > k)) | (censored & (values >= k))
        known = ~censored | (values >= k)
        n = int(known.sum())
        cnt = int(over.sum())
        ns[i] = n
        probs[i] = cnt / n if n else np.nan
        ses[i] = binomial_se(cnt, n) if n else np.nan
    return SurvivalCurve(ks=ks, probs=probs, stderrs=ses, ns=ns,
                         censored_count=int(censored.sum()))


@dataclass
class PowerLawFit:
    slope: float
    intercept: float
    slope_stderr: float
    r_squared: float
    fit_range: tuple[float, float]
    n_points: int


def _ols(x: np.ndarray, y: np.ndarray):
    n = x.size
    xbar = x.mean()
    ybar = y.mean()
    sxx = float(((x - xbar) ** 2).sum())
    slope = float(((x - xbar) * (y - ybar)).sum() / sxx)
    intercept = float(ybar - slope * xbar)
    resid = y - (intercept + slope * x)
    rss = float((resid ** 2).sum())
    tss = float(((y - ybar) ** 2).sum())
    se = math.sqrt(rss / (n - 2) / sxx) if n > 2 else float("inf")
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    return slope, intercept, se, r2


def fit_power_tail(curve: SurvivalCurve, k_min: float, k_max: float) -> PowerLawFit:
    """Least-squares fit of log P(X > k) against log k over [k_min, k_max]."""
    sel = (curve.ks >= k_min) & (curve.ks <= k_max) & (curve.probs > 0)
    if sel.sum() < 5:
        raise InsufficientData(
            f"need >= 5 positive curve points in [{k_min}, {k_max}], have {int(sel.sum())}")
    x = np.log(curve.ks[sel])
    y = np.log(curve.probs[sel])
    slope, intercept, se, r2 = _ols(x, y)
    return PowerLawFit(slope=slope, intercept=intercept, slope_stderr=se,
                       r_squared=r2, fit_range=(k_min, k_max), n_points=int(sel.sum()))


@dataclass
class GeometricFit:
    ratio: float
    ratio_lo: float
    ratio_hi: float
    n_points: int
    degenerate: bool


def fit_geometric_tail(counts, min_cell: int = 30) -> GeometricFit:
    """Decay ratio of P(count >= k) fitted on log-linear scale.

    Uses thresholds k >= 1 while at least ``min_cell`` samples remain at or
    above k. All-zero inputs return the degenerate ratio 0.
    """
    arr = np.asarray(counts, dtype=np.int64)
    if arr.size < 1000:
        raise InsufficientData("need >= 1000 samples for a geometric fit")
    n = arr.size
    ks = []
    ps = []
    k = 1
    while True:
        tail = int((arr >= k).sum())
        if tail < min_cell:
            break
        ks.append(float(k))
        ps.append(tail / n)
        k += 1
    if len(ks) == 0:
        return GeometricFit(ratio=0.0, ratio_lo=0.0, ratio_hi=0.0,
                            n_points=0, degenerate=True)
    if len(ks) < 2:
        # one usable point: P(count >= 1) itself bounds the ratio
        p1 = ps[0]
        return GeometricFit(ratio=p1, ratio_lo=0.0, ratio_hi=min(1.0, 3 * p1),
                            n_points=1, degenerate=False)
    x = np.array(ks)
    y = np.log(np.array(ps))
    if len(ks) == 2:
        # two points fix the slope exactly; the CI comes from the binomial
        # variance of each log tail probability (delta method)
        slope = y[1] - y[0]
        se = math.sqrt(sum((1.0 - pk) / (n * pk) for pk in ps))
    else:
        slope, _, se, _ = _ols(x, y)
    ratio = math.exp(slope)
    return GeometricFit(ratio=ratio,
                        ratio_lo=math.exp(slope - Z95 * se),
                        ratio_hi=math.exp(slope + Z95 * se),
                        n_points=len(ks), degenerate=False)


# -- normality ----------------------------------------------------------------


def normal_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def kolmogorov_sf(x: float) -> float:
    """Asymptotic survival function of the Kolmogorov statistic."""
    if x < 1.1e-8:
        return 1.0
    total = 0.0
    for j in range(1, 101):
        term = 2.0 * (-1.0) ** (j - 1) * math.exp(-2.0 * j * j * x * x)
        total += term
        if abs(term) < 1e-16:
            break
    return min(max(total, 0.0), 1.0)


def ks_statistic_normal(samples) -> float:
    """Exact one-sample KS distance of samples / sample-std to the standard
    normal law."""
    arr = np.sort(np.asarray(samples, dtype=np.float64))
    if arr.size < 2:
        raise InsufficientData("need >= 2 samples")
    if np.all(arr == arr[0]):
        # degenerate sample: a single atom sits half a unit of CDF away
        # from any continuous law's median
        return 0.5
    sd = arr.std(ddof=1)
    z = arr / sd
    n = z.size
    cdf = np.array([normal_cdf(v) for v in z])
    hi = np.max(np.arange(1, n + 1) / n - cdf)
    lo = np.max(cdf - np.arange(0, n) / n)
    return float(max(hi, lo))


def ks_normal(samples) -> tuple[float, float]:
    """(KS distance, asymptotic p-value) against the standard normal."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.size < 1000:
        raise InsufficientData("need >= 1000 samples for the normality check")
    d = ks_statistic_normal(arr)
    return d, kolmogorov_sf(math.sqrt(arr.size) * d)


def ks_distance_two_sample(xs, ys) -> float:
    """Exact two-sample KS distance between empirical laws."""
    xs = np.sort(np.asarray(xs, dtype=np.float64))
    ys = np.sort(np.asarray(ys, dtype=np.float64))
    allv = np.concatenate([xs, ys])
    cdf_x = np.searchsorted(xs, allv, side="right") / xs.size
    cdf_y = np.searchsorted(ys, allv, side="right") / ys.size
    return float(np.max(np.abs(cdf_x - cdf_y)))


# -- model constants -----------------------------------------------------------


@dataclass
class ConstantsEstimate:
    gamma_hat: float
    gamma_se: float
    sigma_hat: float
    sigma_se: float
    trials: int
    horizon_failures: int


def estimate_constants(cfg: EnvConfig, trials: int, horizon: int = 10**5,
                       offset: int = 0) -> ConstantsEstimate:
    """Mean first-renewal gap (time constant) and standard deviation of the
    first-renewal spatial increment (space constant)."""
    if trials < 100:
        raise InsufficientData("need >= 100 trials to estimate constants")
    res = forest.renewal_trials(cfg, trials, 1, horizon, offset=offset)
    ok = res["counts"] >= 1
    failures = int((~ok).sum())
    t1 = res["times"][ok, 0].astype(np.float64)
    y1 = res["positions"][ok, 0].astype(np.float64)
    gamma_hat, gamma_se = mean_se(t1)
    sigma_hat = float(y1.std(ddof=1))
    sigma_se = sigma_hat / math.sqrt(2.0 * (y1.size - 1))
    return ConstantsEstimate(gamma_hat=gamma_hat, gamma_se=gamma_se,
                             sigma_hat=sigma_hat, sigma_se=sigma_se,
                             trials=trials, horizon_failures=failures)


# -- convergence-condition checks ----------------------------------------------


def eta_expectation_bound(interval_width: float, t: float) -> float:
    return 1.0 + interval_width / math.sqrt(math.pi * t)


def condition_E_check(cfg: EnvConfig, n: int, t: float, a: float, b: float,
                      trials: int, gamma: float, sigma: float,
                      offset: int = 0) -> dict:
    """Mean crossing-count at rescaled coordinates against the analytic
    expectation bound 1 + (b-a)/sqrt(pi t)."""
    if a >= b:
        raise ValueError("need a < b")
    lo = a * n * sigma
    hi = b * n * sigma
    if hi - lo < 1.0:
        raise ValueError("rescaled interval narrower than one lattice step")
    t_lat = int(round(t * n * n * gamma))
    t_eff = t_lat / (n * n * gamma)
    counts = forest.eta_trials(cfg, trials, t_lat, [(lo, hi)], offset=offset)[:, 0]
    mean, se = mean_se(counts.astype(np.float64))
    bound = eta_expectation_bound(b - a, t_eff)
    margin = (bound - mean) / se if se > 0 else math.inf
    return {"n": n, "t": t, "t_lattice": t_lat, "interval": (a, b),
            "lattice_interval": (lo, hi), "trials": trials,
            "mean_eta": mean, "se": se, "bound": bound, "margin_se": margin}


def condition_B_curve(cfg: EnvConfig, n: int, t_grid, eps_grid, trials: int,
                      gamma: float, sigma: float, offset: int = 0) -> list[dict]:
    """P(crossing count > 1) over a (t, epsilon) grid at rescaled scale."""
    rows = []
    block = 0
    for t in t_grid:
        t_lat = max(1, int(round(t * n * n * gamma)))
        intervals = [(-eps * n * sigma, eps * n * sigma) for eps in eps_grid]
        counts = forest.eta_trials(cfg, trials, t_lat, intervals,
                                   offset=offset + block)
        block += trials
        for j, eps in enumerate(eps_grid):
            hits = int((counts[:, j] > 1).sum())
            rows.append({"t": t, "eps": eps, "t_lattice": t_lat,
                         "trials": trials, "p_hat": hits / trials,
                         "se": binomial_se(hits, trials),
                         "low_sample": hits < 30})
    return rows


def condition_b_scaling(cfg: EnvConfig, k_grid, m_grid, trials_per_k,
                        offset: int = 0) -> list[dict]:
    """Lattice-scale table of P(eta(0, k, 0, m) > 1) with the sqrt(k)/m
    normalization that the multiplicity bound predicts to be stable."""
    rows = []
    block = 0
    for k, trials in zip(k_grid, trials_per_k):
        intervals = [(0.0, float(m)) for m in m_grid]
        counts = forest.eta_trials(cfg, trials, int(k), intervals,
                                   offset=offset + block)
        block += trials
        for j, m in enumerate(m_grid):
            hits = int((counts[:, j] > 1).sum())
            p_hat = hits / trials
            rows.append({"k": int(k), "m": int(m), "trials": trials,
                         "hits": hits, "p_hat": p_hat,
                         "se": binomial_se(hits, trials),
                         "scaled": p_hat * math.sqrt(k) / m,
                         "low_sample": hits < 30})
    return rows


def condition_T_curve(cfg: EnvConfig, n: int, rho: float, t_grid, trials: int,
                      gamma: float, sigma: float, offset: int = 0) -> list[dict]:
    """P(touch-then-far-boundary event) / t over a shrinking t grid."""
    rows = []
    block = 0
    for t in t_grid:
        rho_lat = max(1, int(round(rho * n * sigma)))
        t_lat = max(1, int(round(t * n * n * gamma)))
        flags = forest.boundary_event_trials(cfg, trials, rho_lat, t_lat,
                                             offset=offset + block)
        block += trials
        hits = int(flags.sum())
        p_hat = hits / trials
        lo, hi = wilson_interval(hits, trials)
        rows.append({"t": t, "rho": rho, "rho_lattice": rho_lat,
                     "t_lattice": t_lat, "trials": trials, "hits": hits,
                     "p_hat": p_hat, "se": binomial_se(hits, trials),
                     "wilson": (lo, hi), "p_over_t": p_hat / t,
                     "low_sample": hits < 30})
    return rows


# -- moment stability and overshoot --------------------------------------------


def moment_stability(samples, orders=(1, 2, 3, 4)) -> list[dict]:
    """Compare empirical moments on the first half against the full sample;
    a ratio outside [0.5, 2] flags heavy-tail instability."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.size < 1000:
        raise InsufficientData("need >= 1000 samples for moment stability")
    half = arr[: arr.size // 2]
    rows = []
    for k in orders:
        m_half = float(np.mean(half ** k))
        m_full = float(np.mean(arr ** k))
        ratio = m_full / m_half if m_half != 0 else math.inf
        rows.append({"order": k, "moment_half": m_half, "moment_full": m_full,
                     "ratio": ratio, "stable": bool(0.5 <= ratio <= 2.0)})
    return rows


def overshoot_report(cfg: EnvConfig, m_grid, trials: int, horizon: int,
                     offset: int = 0) -> dict:
    """Mean gap value at its first nonpositive record, per initial gap m.

    The boundedness claim is that these means stay above a common floor;
    the report includes the fitted slope of mean against m.
    """
    rows = []
    block = 0
    for m in m_grid:
        res = forest.pair_trials(cfg, int(m), trials, horizon,
                                 max_records=4, stop_on_zero=True,
                                 offset=offset + block)
        block += trials
        seen = res["over_seen"] == 1
        vals = res["over_val"][seen].astype(np.float64)
        if vals.size == 0:
            rows.append({"m": int(m), "n": 0, "mean": math.nan, "se": math.nan,
                         "censored": int((~seen).sum())})
            continue
        mean, se = mean_se(vals)
        rows.append({"m": int(m), "n": int(vals.size), "mean": mean, "se": se,
                     "censored": int((~seen).sum())})
    usable = [r for r in rows if r["n"] > 0]
    slope = slope_se = math.nan
    if len(usable) >= 3:
        x = np.array([r["m"] for r in usable], dtype=np.float64)
        y = np.array([r["mean"] for r in usable], dtype=np.float64)
        slope, _, slope_se, _ = _ols(x, y)
    return {"rows": rows, "slope": slope, "slope_se": slope_se,
            "min_mean": min((r["mean"] for r in usable), default=math.nan)}
