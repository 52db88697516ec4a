"""Compactified path space and distances for rescaled walk families.

Points of the compactified plane map through (x, t) -> (tanh(x)/(1+|t|),
tanh(t)); paths are compared by the sup of the first coordinate along time
plus the start-time gap, and path families by the Hausdorff construction
over that distance.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import NamedTuple

from .errors import EmptySetError
from .walker import PathRecord

DEFAULT_TOL = 1e-6


class CompactPoint(NamedTuple):
    x: float
    t: float


def phi(x: float, t: float) -> float:
    """First embedding coordinate tanh(x)/(1+|t|); zero at infinite times."""
    if math.isinf(t):
        return 0.0
    return math.tanh(x) / (1.0 + abs(t))


def psi(t: float) -> float:
    """Second embedding coordinate tanh(t), with tanh(+-inf) = +-1."""
    return math.tanh(t) if not math.isinf(t) else math.copysign(1.0, t)


def rho(p1, p2) -> float:
    """Distance on the compactified plane."""
    x1, t1 = p1
    x2, t2 = p2
    return max(abs(phi(x1, t1) - phi(x2, t2)), abs(psi(t1) - psi(t2)))


@dataclass(frozen=True)
class RescaleParams:
    """Diffusive rescaling: space / (n * sigma), time / (n^2 * gamma)."""

    n: int
    gamma: float
    sigma: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not (self.gamma > 0 and self.sigma > 0):
            raise ValueError("gamma and sigma must be positive")

    @property
    def space_scale(self) -> float:
        return self.n * self.sigma

    @property
    def time_scale(self) -> float:
        return self.n * self.n * self.gamma


class MetricPath:
    """Evaluable path (f, t0), extended by f(t0) below its start and by its
    last value above its final vertex (simulated paths are finite records;
    the embedding kills the far tail anyway)."""

    def __init__(self, t0: float, vertices):
        vs = [(float(x), float(t)) for x, t in vertices]
        if not vs:
            raise ValueError("need at least one vertex")
        if any(vs[i + 1][1] <= vs[i][1] for i in range(len(vs) - 1)):
            raise ValueError("vertex times must be strictly increasing")
        self.t0 = float(t0)
        self.xs = [x for x, _ in vs]
        self.ts = [t for _, t in vs]

    @property
    def t_last(self) -> float:
        return self.ts[-1]

    def eval(self, t: float) -> float:
        if t <= self.ts[0]:
            return self.xs[0]
        if t >= self.ts[-1]:
            return self.xs[-1]
        i = bisect_right(self.ts, t)
        x0, t0 = self.xs[i - 1], self.ts[i - 1]
        x1, t1 = self.xs[i], self.ts[i]
        if t == t0:
            return x0
        return x0 + (x1 - x0) * (t - t0) / (t1 - t0)

    def slope_at(self, t: float) -> float:
        """Segment slope governing f near t (0 outside the vertex range)."""
        if t < self.ts[0] or t >= self.ts[-1]:
            return 0.0
        i = bisect_right(self.ts, t)
        if i >= len(self.ts):
            return 0.0
        x0, t0 = self.xs[i - 1], self.ts[i - 1]
        x1, t1 = self.xs[i], self.ts[i]
        return (x1 - x0) / (t1 - t0)

    def to_json_dict(self) -> dict:
        return {"t0": self.t0, "vertices": [[x, t] for x, t in zip(self.xs, self.ts)]}

    @classmethod
    def from_json_dict(cls, obj: dict) -> "MetricPath":
        return cls(obj["t0"], [(x, t) for x, t in obj["vertices"]])


def rescale(path: PathRecord, params: RescaleParams) -> MetricPath:
    """Diffusively rescaled copy of a simulated path."""
    ss = params.space_scale
    ts = params.time_scale
    verts = [(v.x / ss, v.t / ts) for v in path.vertices]
    return MetricPath(t0=path.vertices[0].t / ts, vertices=verts)


def _phi_along(f: MetricPath, t: float) -> float:
    return phi(f.eval(t), t)


def path_distance(a: MetricPath, b: MetricPath, tol: float = DEFAULT_TOL) -> float:
    """Distance between two paths, within additive tolerance ``tol``.

    The sup of the embedded gap is scanned on the union of both vertex
    grids and bisected adaptively: within one grid cell both paths are
    single segments, so the gap has Lipschitz constant |slope_a| +
    |slope_b| + 2 and every cell's potential is certified. Past the last
    vertex both paths are constant, so the gap is proportional to
    1/(1+|t|) and its tail sup sits at the scan cap (max of 0 and the last
    vertex times), which the grid contains.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    t_lo = min(a.t0, b.t0)
    t_cap = max(0.0, t_lo, a.t_last, b.t_last)
    grid = {t_lo, t_cap, a.t0, b.t0}
    if t_lo <= 0.0 <= t_cap:
        grid.add(0.0)
    grid.update(t for t in a.ts if t_lo <= t <= t_cap)
    grid.update(t for t in b.ts if t_lo <= t <= t_cap)
    pts = sorted(grid)

    def gap(t):
        return abs(_phi_along(a, t) - _phi_along(b, t))

    best = max(gap(t) for t in pts)
    stack = list(zip(pts[:-1], pts[1:]))
    floor = tol * 1e-3
    while stack:
        u, v = stack.pop()
        half = (v - u) * 0.5
        lip = abs(a.slope_at(u)) + abs(b.slope_at(u)) + 2.0
        bound = max(gap(u), gap(v)) + lip * half
        # within a cell f_a - f_b is linear, so |phi_a - phi_b| is at most
        # the endpoint spread of |f_a - f_b| over 1 + min |t|
        spread = max(abs(a.eval(u) - b.eval(u)), abs(a.eval(v) - b.eval(v)))
        t_min = min(abs(u), abs(v)) if u * v > 0 else 0.0
        bound = min(bound, spread / (1.0 + t_min))
        if bound <= best + 0.5 * tol or (v - u) <= floor:
            continue
        mid = u + half
        g = gap(mid)
        if g > best:
            best = g
        stack.append((u, mid))
        stack.append((mid, v))
    return max(best, abs(psi(a.t0) - psi(b.t0)))


def hausdorff(paths_a, paths_b, tol: float = DEFAULT_TOL) -> float:
    """Hausdorff distance between two finite nonempty path families."""
    if not paths_a or not paths_b:
        raise EmptySetError("hausdorff needs nonempty path families")
    d_ab = max(min(path_distance(g1, g2, tol) for g2 in paths_b) for g1 in paths_a)
    d_ba = max(min(path_distance(g2, g1, tol) for g1 in paths_a) for g2 in paths_b)
    return max(d_ab, d_ba)
