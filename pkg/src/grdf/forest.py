"""Systems of coalescing walks on one shared environment.

Scalar reference implementations of the multi-path operations (lock-step
evolution, joint renewals, the gap process between two walks, crossing
counts, region enumeration) plus kernel-backed batch drivers for the Monte
Carlo experiments. Coalescence is a shared lattice vertex: the jump rule is
a deterministic function of (environment, vertex), so walks that meet once
are identical afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .environment import EnvConfig, Environment, Site
from .errors import HorizonExhausted, SearchCapExceeded
from .walker import (
    DEFAULT_LEVEL_CAP,
    HistoryRegion,
    PathRecord,
    interpolate_exact,
    select_target,
)


def _jumper(env, cap):
    """One-jump closure; plain environments go through the compiled kernel."""
    if isinstance(env, Environment):
        seed, p, cum = np.uint64(env.seed), env.p, env._cum

        def jump(v):
            nx, nt = kernels.jump_target(seed, v[0], v[1], p, cum, cap)
            if nx == kernels.CAP_SENTINEL:
                raise SearchCapExceeded(f"level scan cap {cap} exceeded at {tuple(v)}")
            return Site(int(nx), int(nt))

        return jump

    def jump(v):
        return select_target(env, v, cap=cap)

    return jump


# -- lock-step multi-walker evolution ---------------------------------------


@dataclass
class _PathClass:
    vertex: Site
    paths: dict[int, PathRecord]
    histories: dict[int, HistoryRegion]
    members: list[int]

    def path_of(self, walker_id: int) -> PathRecord:
        return self.paths[walker_id]


@dataclass
class MergeEvent:
    time: int
    vertex: Site
    members_a: tuple[int, ...]
    members_b: tuple[int, ...]


class ForestState:
    """Walkers on one environment with a coalescence partition.

    Walker classes share one live trajectory; per-member history regions
    keep evolving along the shared jumps so joint renewals stay exact.
    """

    def __init__(self, env, starts, cap: int = DEFAULT_LEVEL_CAP):
        sites = [Site(*s) for s in starts]
        if len(set(sites)) != len(sites):
            raise ValueError("start sites must be distinct")
        self.env = env
        self.cap = cap
        self.starts = sites
        self.classes: list[_PathClass] = [
            _PathClass(vertex=s, paths={i: PathRecord(s)},
                       histories={i: HistoryRegion()}, members=[i])
            for i, s in enumerate(sites)
        ]
        self.merges: list[MergeEvent] = []
        self._jump = _jumper(env, cap)

    def min_time(self) -> int:
        return min(c.vertex.t for c in self.classes)

    def class_of(self, walker_id: int) -> _PathClass:
        for c in self.classes:
            if walker_id in c.members:
                return c
        raise KeyError(walker_id)

    def positions(self) -> dict[int, int]:
        return {i: c.vertex.x for c in self.classes for i in c.members}

    def aligned_time(self):
        """Common current time of all classes, or None."""
        t = self.classes[0].vertex.t
        return t if all(c.vertex.t == t for c in self.classes) else None

    def histories_empty(self) -> bool:
        return all(h.is_empty() for c in self.classes for h in c.histories.values())

    def joint_history(self) -> HistoryRegion:
        out = HistoryRegion()
        for c in self.classes:
            for h in c.histories.values():
                for row, ivs in h.rows.items():
                    for lo, hi in ivs:
                        out._insert(row, lo, hi)
        return out

    def step_once(self) -> _PathClass:
        """Step one class of minimal current time (lowest class index on
        ties), merging classes that land on an occupied vertex."""
        ci = min(range(len(self.classes)), key=lambda i: (self.classes[i].vertex.t, i))
        cls = self.classes[ci]
        target = self._jump(cls.vertex)
        for h in cls.histories.values():
            h.update(cls.vertex, target)
        for path in cls.paths.values():
            path.vertices.append(target)
        cls.vertex = target
        for oj, other in enumerate(self.classes):
            if oj != ci and other.vertex == target:
                self.merges.append(MergeEvent(
                    time=target.t, vertex=target,
                    members_a=tuple(other.members), members_b=tuple(cls.members)))
                other.members.extend(cls.members)
                other.histories.update(cls.histories)
                other.paths.update(cls.paths)
                del self.classes[ci]
                return other
        return cls


def evolve_joint(env, starts, horizon: int, cap: int = DEFAULT_LEVEL_CAP) -> ForestState:
    """Lock-step evolution of walks from ``starts`` until every class has
    advanced past ``horizon``."""
    state = ForestState(env, starts, cap=cap)
    while state.min_time() <= horizon:
        state.step_once()
    return state


def joint_renewal_times(env, starts, count: int, horizon: int,
                        cap: int = DEFAULT_LEVEL_CAP):
    """First ``count`` joint renewal times of the walks from ``starts``.

    A joint renewal is a post-jump state with every class at one common
    time and every walker's history region empty. Returns a list of
    (time, positions-tuple ordered by start index).
    """
    state = ForestState(env, starts, cap=cap)
    out = []
    while len(out) < count:
        if state.min_time() > horizon:
            raise HorizonExhausted(
                f"only {len(out)} joint renewals within horizon {horizon}",
                partial=out)
        state.step_once()
        t = state.aligned_time()
        if t is not None and state.histories_empty():
            pos = state.positions()
            out.append((t, tuple(pos[i] for i in range(len(state.starts)))))
    return out


@dataclass
class DifferenceSeries:
    """Gap between two walks sampled at their joint renewal times."""

    m: int
    values: list[int]
    renewal_times: list[int]

    def __post_init__(self):
        if not self.values or self.values[0] != self.m:
            raise ValueError("values[0] must equal the initial gap m")
        if len(self.values) != len(self.renewal_times):
            raise ValueError("values and renewal_times must have equal length")


def difference_process(env, m: int, count: int, horizon: int,
                       cap: int = DEFAULT_LEVEL_CAP) -> DifferenceSeries:
    """Gap series of the pair started at (0,0) and (m,0).

    values[n] is the gap at the n-th joint renewal; once the walks
    coalesce, every later value is 0.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    rens = joint_renewal_times(env, [(0, 0), (m, 0)], count, horizon, cap=cap)
    values = [m] + [pos[1] - pos[0] for _, pos in rens]
    times = [0] + [t for t, _ in rens]
    return DifferenceSeries(m=m, values=values, renewal_times=times)


def hitting_time(series: DifferenceSeries, region):
    """Smallest n >= 1 with values[n] in the region, else None.

    Region is "zero", "nonpositive", or ("ge", threshold).
    """
    if region == "zero":
        test = lambda y: y == 0
    elif region == "nonpositive":
        test = lambda y: y <= 0
    elif isinstance(region, tuple) and len(region) == 2 and region[0] == "ge":
        thr = region[1]
        test = lambda y: y >= thr
    else:
        raise ValueError(f"unknown region spec {region!r}")
    for n in range(1, len(series.values)):
        if test(series.values[n]):
            return n
    return None


def sign_change_times(series: DifferenceSeries) -> list[int]:
    """Alternating first-passage indices of the gap series.

    First entry is the first n with a nonpositive value, then alternating
    nonnegative / nonpositive passages; the scan stops at (and includes)
    the first index with value 0.
    """
    y = series.values
    if y[0] <= 0:
        raise ValueError("series must start positive")
    out = []
    seek_low = True
    for i in range(1, len(y)):
        hit = (y[i] <= 0) if seek_low else (y[i] >= 0)
        if hit:
            out.append(i)
            if y[i] == 0:
                return out
            seek_low = not seek_low
    return out


def crossings_before_coalescence(series: DifferenceSeries) -> int:
    return sum(1 for i in sign_change_times(series) if series.values[i] != 0)


@dataclass
class CoalescenceResult:
    """Outcome of one pair trial."""

    theta: int | None
    nu: int | None
    t_nu: int | None
    sign_changes: int
    censored: bool
    series: DifferenceSeries | None = None


def coalescence_experiment(env, m: int, horizon: int,
                           cap: int = DEFAULT_LEVEL_CAP) -> CoalescenceResult:
    """Evolve the pair at initial gap m until it coalesces on a joint
    renewal, or until the horizon censors the trial."""
    if m < 1:
        raise ValueError("m must be >= 1")
    state = ForestState(env, [(0, 0), (m, 0)], cap=cap)
    values = [m]
    times = [0]
    theta = None
    nu = None
    t_nu = None
    censored = False
    while True:
        if state.min_time() > horizon:
            censored = True
            break
        state.step_once()
        if theta is None and len(state.classes) == 1:
            theta = state.merges[0].time
        t = state.aligned_time()
        if t is not None and state.histories_empty():
            pos = state.positions()
            y = pos[1] - pos[0]
            values.append(y)
            times.append(t)
            if y == 0:
                nu = len(values) - 1
                t_nu = t
                break
    series = DifferenceSeries(m=m, values=values, renewal_times=times)
    return CoalescenceResult(
        theta=theta, nu=nu, t_nu=t_nu,
        sign_changes=crossings_before_coalescence(series),
        censored=censored, series=series)


# -- region scans and path enumeration --------------------------------------


def distance_preserved_probability(cfg: EnvConfig, m: int, trials: int,
                                   horizon: int = 10**4,
                                   offset: int = 0) -> tuple[float, float]:
    """Fraction of pair trials whose gap at the first common renewal still
    equals m, with binomial standard error. Trials that reach no common
    renewal within the horizon are excluded from the denominator."""
    if m < 1:
        raise ValueError("m must be >= 1")
    res = pair_trials(cfg, m, trials, horizon, max_records=1,
                      stop_on_zero=False, offset=offset)
    valid = res["n_rec"] >= 1
    n = int(valid.sum())
    if n == 0:
        raise HorizonExhausted("no trial reached a common renewal", partial=res)
    hits = int((res["rec_y"][valid, 0] == m).sum())
    phat = hits / n
    return phat, float(np.sqrt(phat * (1.0 - phat) / n))


def H_depth(env, v, cap: int = DEFAULT_LEVEL_CAP) -> int:
    """Rows needed straight above v to collect K open sites."""
    k_target = env.k_max
    seen = 0
    for j in range(1, cap + 1):
        if env.is_open((v[0], v[1] + j)):
            seen += 1
            if seen == k_target:
                return j
    raise SearchCapExceeded(f"no {k_target} open sites above {tuple(v)} within {cap} rows")


def zeta_depth(env, x: int, t: int, cap: int = DEFAULT_LEVEL_CAP) -> int:
    """Inclusive depth below (x, t) holding K open sites (0 = row t itself)."""
    k_target = env.k_max
    seen = 0
    for i in range(0, cap + 1):
        if env.is_open((x, t - i)):
            seen += 1
            if seen == k_target:
                return i
    raise SearchCapExceeded(f"no {k_target} open sites below ({x}, {t}) within {cap} rows")


def good_box(env, u) -> bool:
    """Whether the K x K block at columns [u.x, u.x+K-1], rows
    [u.t-K+1, u.t] is entirely open with W = 1."""
    k = env.k_max
    for cx in range(u[0], u[0] + k):
        for rt in range(u[1] - k + 1, u[1] + 1):
            if not env.is_open((cx, rt)) or env.site_w((cx, rt)) != 1:
                return False
    return True


def g_plus(env, u, cap: int = DEFAULT_LEVEL_CAP) -> int:
    k = env.k_max
    for n in range(1, cap + 1):
        if good_box(env, (u[0] + (n - 1) * k, u[1])):
            return n
    raise SearchCapExceeded(f"no good block right of {tuple(u)} within {cap} translates")


def g_minus(env, u, cap: int = DEFAULT_LEVEL_CAP) -> int:
    k = env.k_max
    for n in range(1, cap + 1):
        if good_box(env, (u[0] - (n * k - 1), u[1])):
            return n
    raise SearchCapExceeded(f"no good block left of {tuple(u)} within {cap} translates")


def crossing_region_sites(env, a: int, b: int, t0: int,
                          cap: int = DEFAULT_LEVEL_CAP) -> list[Site]:
    """Sites of the finite region guaranteed to hold a vertex of every path
    crossing [a, b] x {t0}.

    Built per unit piece [a+i, a+i+1] with good-block scans anchored at the
    piece's right end; column depths hold K open sites below t0 inclusive.
    Includes closed sites: a path may straddle t0 directly from its (closed)
    start, and that start is the only vertex of it at or below t0.
    """
    k = env.k_max
    col_lo, col_hi = a, b
    for i in range(max(1, b - a)):
        anchor = (a + i + 1, t0)
        gm = g_minus(env, anchor, cap=cap)
        gp = g_plus(env, anchor, cap=cap)
        col_lo = min(col_lo, a + i - k * gm)
        col_hi = max(col_hi, a + i + 1 + k * gp)
    sites = []
    for x in range(col_lo, col_hi + 1):
        depth = zeta_depth(env, x, t0, cap=cap)
        for t in range(t0 - depth, t0 + 1):
            sites.append(Site(x, t))
    sites.sort(key=lambda s: (s.t, s.x))
    return sites


def crossing_edge(path: PathRecord, t):
    """Straddling vertex pair of the path at time t (equal pair on a vertex)."""
    return path.segment_at(t)


def path_crosses(path: PathRecord, t, lo, hi) -> bool:
    v = interpolate_exact(path, t)
    return Fraction(lo) <= v <= Fraction(hi)


def paths_through_interval(env, a: int, b: int, t: int,
                           cap: int = DEFAULT_LEVEL_CAP,
                           lo=None, hi=None) -> list[PathRecord]:
    """All paths started at or before time t whose interpolation at t lies
    in [lo, hi] (defaults [a, b]); a, b bound the integer region build.

    Walks are launched from every site of the crossing region and evolved
    one vertex past t; the returned records are exactly the crossers.
    """
    if a > b:
        raise ValueError("need a <= b")
    lo = a if lo is None else lo
    hi = b if hi is None else hi
    jump = _jumper(env, cap)
    out = []
    for site in crossing_region_sites(env, a, b, t, cap=cap):
        path = PathRecord(site)
        v = site
        while v.t <= t:
            v = jump(v)
            path.vertices.append(v)
        if path_crosses(path, t, lo, hi):
            out.append(path)
    return out


def extend_path(env, path: PathRecord, until: int, cap: int = DEFAULT_LEVEL_CAP) -> PathRecord:
    """Evolve a path in place until its last vertex time is >= until."""
    jump = _jumper(env, cap)
    v = path.last()
    while v.t < until:
        v = jump(v)
        path.vertices.append(v)
    return path


def eta_count(env, t0: int, t: int, a, b, cap: int = DEFAULT_LEVEL_CAP) -> int:
    """Number of distinct positions at time t0+t among paths that touch
    [a, b] x {t0}; coalesced paths coincide and count once."""
    if t < 1:
        raise ValueError("t must be >= 1")
    a_int = int(np.floor(a))
    b_int = int(np.ceil(b))
    crossers = paths_through_interval(env, a_int, b_int, t0, cap=cap, lo=a, hi=b)
    positions = set()
    for path in crossers:
        extend_path(env, path, t0 + t, cap=cap)
        positions.add(interpolate_exact(path, t0 + t))
    return len(positions)


def _segment_window_range(x, t, nx, nt, w1, w2):
    xa = x + (nx - x) * (Fraction(w1) - t) / (nt - t)
    xb = x + (nx - x) * (Fraction(w2) - t) / (nt - t)
    return min(xa, xb), max(xa, xb)


def event_A_plus(env, x0: int, t0: int, rho: int, t: int,
                 cap: int = DEFAULT_LEVEL_CAP) -> bool:
    """Whether some path touches [x0-rho, x0+rho] x [t0, t0+t] and
    afterwards reaches x0+20*rho by time t0+4*t.

    Candidate paths come from the crossing region of the doubled base
    segment plus every open site inside the doubled rectangle; sources
    farther out are outside the enumeration (recorded by callers).
    """
    return touch_then_boundary(env, x0, t0, rho, t, x0 + 20 * rho, cap=cap)


def touch_then_boundary(env, x0: int, t0: int, rho: int, t: int,
                        boundary: int, cap: int = DEFAULT_LEVEL_CAP) -> bool:
    """Core of event_A_plus with an explicit right boundary."""
    if rho < 1 or t < 1:
        raise ValueError("rho and t must be >= 1")
    r_xlo, r_xhi, r_thi = x0 - rho, x0 + rho, t0 + t
    t_hi = t0 + 4 * t
    launches = list(crossing_region_sites(env, x0 - 2 * rho, x0 + 2 * rho, t0, cap=cap))
    for row in range(t0, t0 + 2 * t + 1):
        for x in range(x0 - 2 * rho, x0 + 2 * rho + 1):
            if env.is_open((x, row)):
                launches.append(Site(x, row))
    launches = sorted(set(launches), key=lambda s: (s.t, s.x))
    jump = _jumper(env, cap)
    for start in launches:
        v = start
        touched = (t0 <= v.t <= r_thi) and (r_xlo <= v.x <= r_xhi)
        touch_time = Fraction(v.t) if touched else None
        while v.t < t_hi:
            nv = jump(v)
            if not touched:
                w1, w2 = max(v.t, t0), min(nv.t, r_thi)
                if w1 <= w2:
                    slo, shi = _segment_window_range(v.x, v.t, nv.x, nv.t, w1, w2)
                    if shi >= r_xlo and slo <= r_xhi:
                        touched = True
                        touch_time = _first_entry_time(v, nv, w1, r_xlo, r_xhi)
            if touched:
                b1 = max(touch_time, Fraction(v.t))
                b2 = Fraction(min(nv.t, t_hi))
                if b1 <= b2:
                    xa = v.x + Fraction(nv.x - v.x) * (b1 - v.t) / (nv.t - v.t)
                    xb = v.x + Fraction(nv.x - v.x) * (b2 - v.t) / (nv.t - v.t)
                    if max(xa, xb) >= boundary:
                        return True
            v = nv
            if not touched and v.t > r_thi:
                break
    return False


def _first_entry_time(v, nv, w1, xlo, xhi) -> Fraction:
    """Earliest time >= w1 at which the segment v -> nv has x in [xlo, xhi];
    the caller has established that such a time exists."""
    x1 = v.x + Fraction(nv.x - v.x) * (Fraction(w1) - v.t) / (nv.t - v.t)
    if xlo <= x1 <= xhi:
        return Fraction(w1)
    slope = Fraction(nv.x - v.x, nv.t - v.t)
    bound = xlo if x1 < xlo else xhi
    return Fraction(v.t) + (Fraction(bound) - v.x) / slope


# -- kernel-backed batch drivers ---------------------------------------------


def trial_seeds(cfg: EnvConfig, trials: int, offset: int = 0) -> np.ndarray:
    master = np.uint64(cfg.seed)
    return np.array([kernels.derive_seed(master, offset + i) for i in range(trials)],
                    dtype=np.uint64)


def _cfg_params(cfg: EnvConfig):
    return cfg.p, cfg.w_cumulative()


def pair_trials(cfg: EnvConfig, m: int, trials: int, horizon: int,
                max_records: int = 8, stop_on_zero: bool = True,
                cap: int = DEFAULT_LEVEL_CAP, offset: int = 0) -> dict:
    """Batch pair experiments; see kernels.run_pair for the field meanings."""
    p, cum = _cfg_params(cfg)
    seeds = trial_seeds(cfg, trials, offset)
    (theta, n_rec, nu, t_nu, crossings, over_val, over_seen, censored,
     status, rec_t, rec_y) = kernels.batch_pair(
        seeds, m, horizon, max_records, stop_on_zero, p, cum, cap)
    if np.any(status == 2):
        raise SearchCapExceeded("level cap exceeded in pair batch")
    return {
        "seeds": seeds, "m": m, "theta": theta, "n_rec": n_rec, "nu": nu,
        "t_nu": t_nu, "crossings": crossings, "over_val": over_val,
        "over_seen": over_seen, "censored": censored,
        "rec_t": rec_t, "rec_y": rec_y,
    }


def renewal_trials(cfg: EnvConfig, trials: int, n_renewals: int, horizon: int,
                   cap: int = DEFAULT_LEVEL_CAP, offset: int = 0) -> dict:
    p, cum = _cfg_params(cfg)
    seeds = trial_seeds(cfg, trials, offset)
    counts, status, out_t, out_x, out_d = kernels.batch_renewals(
        seeds, n_renewals, horizon, p, cum, cap)
    if np.any(status == 2):
        raise SearchCapExceeded("level cap exceeded in renewal batch")
    return {"seeds": seeds, "counts": counts, "status": status,
            "times": out_t, "positions": out_x, "displacements": out_d}


def endpoint_trials(cfg: EnvConfig, trials: int, target: float,
                    cap: int = DEFAULT_LEVEL_CAP, offset: int = 0) -> np.ndarray:
    p, cum = _cfg_params(cfg)
    seeds = trial_seeds(cfg, trials, offset)
    vals, status = kernels.batch_endpoint(seeds, float(target), p, cum, cap)
    if np.any(status == 2):
        raise SearchCapExceeded("level cap exceeded in endpoint batch")
    return vals


def _region_launch_arrays(seed: int, a: int, b: int, t0: int, p, cum, k, cap):
    col_lo, col_hi, depths = kernels.crossing_region(seed, a, b, t0, p, cum, k, cap)
    if col_hi < col_lo:
        raise SearchCapExceeded("region scan cap exceeded")
    if np.any(depths < 0):
        raise SearchCapExceeded("column depth scan cap exceeded")
    cols = np.arange(col_lo, col_hi + 1, dtype=np.int64)
    xs = np.repeat(cols, depths + 1)
    ts = np.concatenate([np.arange(t0 - d, t0 + 1, dtype=np.int64) for d in depths])
    order = np.lexsort((xs, ts))
    return xs[order], ts[order]


def eta_trials(cfg: EnvConfig, trials: int, t_final: int, intervals,
               cap: int = DEFAULT_LEVEL_CAP, offset: int = 0) -> np.ndarray:
    """Counts of distinct positions at time t_final among paths touching
    [lo, hi] x {0}, one column per interval. Fresh environment per trial."""
    p, cum = _cfg_params(cfg)
    k = cfg.k_max
    lo_arr = np.array([float(lo) for lo, _ in intervals])
    hi_arr = np.array([float(hi) for _, hi in intervals])
    a = int(np.floor(lo_arr.min()))
    b = int(np.ceil(hi_arr.max()))
    seeds = trial_seeds(cfg, trials, offset)
    out = np.zeros((trials, len(intervals)), dtype=np.int64)
    for i in range(trials):
        seed = seeds[i]
        xs, ts = _region_launch_arrays(seed, a, b, 0, p, cum, k, cap)
        counts, status = kernels.run_crossing_count(
            seed, xs, ts, 0, t_final, lo_arr, hi_arr, p, cum, cap)
        if status != 0:
            raise SearchCapExceeded("level cap exceeded in crossing count")
        out[i] = counts
    return out


def boundary_event_trials(cfg: EnvConfig, trials: int, rho_lat: int, t_lat: int,
                          cap: int = DEFAULT_LEVEL_CAP, offset: int = 0) -> np.ndarray:
    """Indicator samples of the touch-then-boundary event at lattice scale:
    touch [-rho_lat, rho_lat] x [0, t_lat], then reach 20*rho_lat by 4*t_lat."""
    p, cum = _cfg_params(cfg)
    k = cfg.k_max
    seeds = trial_seeds(cfg, trials, offset)
    out = np.zeros(trials, dtype=np.int64)
    for i in range(trials):
        seed = seeds[i]
        xs, ts = _region_launch_arrays(seed, -2 * rho_lat, 2 * rho_lat, 0, p, cum, k, cap)
        flag, status = kernels.run_boundary_event(
            seed, xs, ts,
            -2 * rho_lat, 2 * rho_lat, 2 * t_lat,
            -rho_lat, rho_lat, t_lat, 20 * rho_lat, 4 * t_lat,
            p, cum, cap)
        if status != 0:
            raise SearchCapExceeded("level cap exceeded in boundary event")
        out[i] = flag
    return out
