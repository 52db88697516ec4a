"""Single-path dynamics: level sets, the upmost-open-site jump rule,
history-region bookkeeping and renewal detection.

This module is the readable reference implementation; the compiled engines
in ``kernels`` reproduce it exactly (the test suite pins the agreement).
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction

from .environment import Site
from .errors import HorizonExhausted, OutOfRange, SearchCapExceeded

DEFAULT_LEVEL_CAP = 10**6


def level_set(u, k: int) -> list[Site]:
    """Sites strictly above u at L1 distance exactly k.

    Listed top row first, +x before -x within a row; 2k-1 sites total.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    x, t = u[0], u[1]
    sites = [Site(x, t + k)]
    for dt in range(k - 1, 0, -1):
        d = k - dt
        sites.append(Site(x + d, t + dt))
        sites.append(Site(x - d, t + dt))
    return sites


def level_is_open(env, u, k: int) -> bool:
    return any(env.is_open(v) for v in level_set(u, k))


def open_level_index(env, u, r: int, cap: int = DEFAULT_LEVEL_CAP) -> int:
    """Index of the r-th open level of u (smallest k with r open levels below it)."""
    if r < 1:
        raise ValueError("r must be >= 1")
    seen = 0
    for k in range(1, cap + 1):
        if level_is_open(env, u, k):
            seen += 1
            if seen == r:
                return k
    raise SearchCapExceeded(f"no {r}-th open level within {cap} levels of {tuple(u)}")


def upmost_open_site(env, u, k: int):
    """Upmost open site of level k of u, or None if the level is closed.

    Ties between the symmetric pair at equal height go to the larger site
    uniform; equal uniforms (a measure-zero float event) go to larger x.
    """
    x, t = u[0], u[1]
    apex = Site(x, t + k)
    if env.is_open(apex):
        return apex
    for dt in range(k - 1, 0, -1):
        d = k - dt
        right = Site(x + d, t + dt)
        left = Site(x - d, t + dt)
        open_r = env.is_open(right)
        open_l = env.is_open(left)
        if open_r or open_l:
            if open_r and open_l:
                return right if env.site_uniform(right) >= env.site_uniform(left) else left
            return right if open_r else left
    return None


def select_target(env, u, w: int | None = None, cap: int = DEFAULT_LEVEL_CAP) -> Site:
    """Jump target from u: the upmost open site of its W_u-th open level."""
    if w is None:
        w = env.site_w(u)
    seen = 0
    for k in range(1, cap + 1):
        best = upmost_open_site(env, u, k)
        if best is not None:
            seen += 1
            if seen == w:
                return best
    raise SearchCapExceeded(f"no {w}-th open level within {cap} levels of {tuple(u)}")


class HistoryRegion:
    """Sites above the walker whose configuration is already known.

    Stored as row -> sorted disjoint closed integer intervals. Every row is
    strictly above the walker's current time; the region is empty exactly
    when no row is present.
    """

    __slots__ = ("rows",)

    def __init__(self, rows=None):
        self.rows: dict[int, list[tuple[int, int]]] = rows if rows is not None else {}

    def copy(self) -> "HistoryRegion":
        return HistoryRegion({r: list(iv) for r, iv in self.rows.items()})

    def is_empty(self) -> bool:
        return not self.rows

    def max_row(self):
        return max(self.rows) if self.rows else None

    def site_count(self) -> int:
        return sum(hi - lo + 1 for iv in self.rows.values() for lo, hi in iv)

    def sites(self):
        for row in sorted(self.rows):
            for lo, hi in self.rows[row]:
                for x in range(lo, hi + 1):
                    yield Site(x, row)

    def contains(self, v) -> bool:
        iv = self.rows.get(v[1])
        if not iv:
            return False
        return any(lo <= v[0] <= hi for lo, hi in iv)

    def _insert(self, row: int, lo: int, hi: int):
        iv = self.rows.get(row)
        if iv is None:
            self.rows[row] = [(lo, hi)]
            return
        out = []
        placed = False
        for a, b in iv:
            if b < lo - 1:
                out.append((a, b))
            elif a > hi + 1:
                if not placed:
                    out.append((lo, hi))
                    placed = True
                out.append((a, b))
            else:
                lo = min(lo, a)
                hi = max(hi, b)
        if not placed:
            out.append((lo, hi))
        self.rows[row] = out

    def update(self, x_prev, x_new):
        """Apply one jump: union the L1 ball of the jump radius around the
        departure vertex, then clip to rows strictly above the landing."""
        radius = abs(x_new[0] - x_prev[0]) + (x_new[1] - x_prev[1])
        for row in [r for r in self.rows if r <= x_new[1]]:
            del self.rows[row]
        for row in range(x_new[1] + 1, x_prev[1] + radius + 1):
            half = radius - (row - x_prev[1])
            self._insert(row, x_prev[0] - half, x_prev[0] + half)

    def __eq__(self, other):
        return isinstance(other, HistoryRegion) and self.rows == other.rows

    def __repr__(self):
        return f"HistoryRegion({self.rows!r})"


def history_update(region: HistoryRegion, x_prev, x_new) -> HistoryRegion:
    """Functional form of HistoryRegion.update; returns a new region."""
    if x_new[1] <= x_prev[1]:
        raise ValueError("landing must be strictly above the departure vertex")
    out = region.copy()
    out.update(x_prev, x_new)
    return out


@dataclass
class PathRecord:
    """A walk's start and ordered vertex sequence."""

    start: Site
    vertices: list[Site] = field(default_factory=list)

    def __post_init__(self):
        if not self.vertices:
            self.vertices = [Site(*self.start)]

    @property
    def times(self):
        return [v.t for v in self.vertices]

    def last(self) -> Site:
        return self.vertices[-1]

    def segment_at(self, t):
        """Bracketing vertex pair for time t (equal pair at a vertex time)."""
        times = self.times
        if t < times[0] or t > times[-1]:
            raise OutOfRange(f"t={t} outside covered range [{times[0]}, {times[-1]}]")
        i = bisect_right(times, t)
        if i > 0 and times[i - 1] == t:
            v = self.vertices[i - 1]
            return v, v
        return self.vertices[i - 1], self.vertices[i]


def interpolate(path: PathRecord, t) -> float:
    """Linear interpolation of the path at time t."""
    a, b = path.segment_at(t)
    if a == b:
        return float(a.x)
    return a.x + (b.x - a.x) * (t - a.t) / (b.t - a.t)


def interpolate_exact(path: PathRecord, t) -> Fraction:
    """Interpolation as an exact rational (t integer or Fraction)."""
    a, b = path.segment_at(t)
    if a == b:
        return Fraction(a.x)
    return Fraction(a.x) + Fraction(b.x - a.x) * (Fraction(t) - a.t) / (b.t - a.t)


@dataclass
class RenewalRecord:
    """One renewal: the history region emptied at time T."""

    index: int
    time: int
    position: int
    gap: int
    max_displacement: int


@dataclass
class WalkerState:
    """Mutable single-walker state; the environment is referenced, not copied."""

    env: object
    vertex: Site
    history: HistoryRegion
    path: PathRecord
    cap: int = DEFAULT_LEVEL_CAP


def make_walker(env, start, cap: int = DEFAULT_LEVEL_CAP) -> WalkerState:
    s = Site(*start)
    return WalkerState(env=env, vertex=s, history=HistoryRegion(), path=PathRecord(s), cap=cap)


def step(env, state: WalkerState) -> WalkerState:
    """Advance the walker by one jump, updating its history region."""
    target = select_target(env, state.vertex, cap=state.cap)
    state.history.update(state.vertex, target)
    state.path.vertices.append(target)
    state.vertex = target
    return state


def evolve_with_renewals(env, u, renewals: int | None = None,
                         horizon: int | None = None,
                         cap: int = DEFAULT_LEVEL_CAP):
    """Evolve a walk from u, recording renewal records.

    Stops after ``renewals`` renewals, or once the current time exceeds
    ``horizon``. If a renewal target is set and the horizon arrives first,
    raises HorizonExhausted with the partial (path, records) attached.
    """
    if renewals is None and horizon is None:
        raise ValueError("need a stop criterion: renewals and/or horizon")
    if renewals is not None and renewals < 1:
        raise ValueError("renewals must be >= 1")
    if horizon is not None and horizon < 1:
        raise ValueError("horizon must be >= 1")
    state = make_walker(env, u, cap=cap)
    records: list[RenewalRecord] = []
    t_ref = state.vertex.t
    x_ref = state.vertex.x
    max_disp = 0
    while True:
        if horizon is not None and state.vertex.t > horizon:
            if renewals is not None:
                raise HorizonExhausted(
                    f"only {len(records)} renewals within horizon {horizon}",
                    partial=(state.path, records))
            return state.path, records
        step(env, state)
        max_disp = max(max_disp, abs(state.vertex.x - x_ref))
        if state.history.is_empty():
            records.append(RenewalRecord(
                index=len(records) + 1,
                time=state.vertex.t,
                position=state.vertex.x,
                gap=state.vertex.t - t_ref,
                max_displacement=max_disp,
            ))
            t_ref = state.vertex.t
            x_ref = state.vertex.x
            max_disp = 0
            if renewals is not None and len(records) >= renewals:
                return state.path, records
