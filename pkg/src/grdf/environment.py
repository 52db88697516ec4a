"""Seeded random-access environment over the integer lattice.

Every site v = (x, t) of Z^2 carries an independent pair (U_v, W_v): U_v is
uniform on (0, 1) and decides openness (U_v < p), W_v is an integer drawn
from a finite pmf on {1, ..., K}. Values come from a counter-based hash of
(seed, x, t, stream tag), so an unbounded region can be queried lazily, in
any order, with identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError

_MASK64 = (1 << 64) - 1

# Mixer constants (xor-shift-multiply finalizer) and stream salts.
_MIX_C1 = 0xBF58476D1CE4E5B9
_MIX_C2 = 0x94D049BB133111EB
_X_SALT = 0x9E3779B97F4A7C15
_T_SALT = 0xC2B2AE3D27D4EB4F
U_TAG = 0x243F6A8885A308D3
W_TAG = 0x13198A2E03707344

PMF_TOL = 1e-12

# Documented default sweep: the model fixes neither p nor the W law, so
# experiments run over a small grid unless told otherwise.
DEFAULT_P_GRID = (0.3, 0.5, 0.7)
DEFAULT_W_LAWS = ((1.0,), (0.5, 0.5), (0.5, 0.25, 0.25))


class Site(NamedTuple):
    """Lattice point; x is space, t is time."""

    x: int
    t: int


def mix64(z: int) -> int:
    """Finalize a 64-bit state into a well-scrambled 64-bit value."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX_C1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX_C2) & _MASK64
    return z ^ (z >> 31)


def site_hash(seed: int, x: int, t: int, tag: int) -> int:
    """64-bit hash of one site on one stream."""
    z = (seed ^ tag) + (x & _MASK64) * _X_SALT + (t & _MASK64) * _T_SALT
    return mix64(z)


def hash_to_unit(h: int) -> float:
    """Map a 64-bit hash to the open interval (0, 1).

    Uses 52 bits so the +0.5 offset stays exactly representable; the result
    can never round to 0.0 or 1.0.
    """
    return ((h >> 12) + 0.5) * 2.0**-52


def site_hash_array(seed: int, xs: np.ndarray, ts: np.ndarray, tag: int) -> np.ndarray:
    """Vectorized site_hash; bit-identical to the scalar version."""
    xs = np.asarray(xs, dtype=np.int64).astype(np.uint64)
    ts = np.asarray(ts, dtype=np.int64).astype(np.uint64)
    z = np.uint64((seed ^ tag) & _MASK64) + xs * np.uint64(_X_SALT) + ts * np.uint64(_T_SALT)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX_C1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX_C2)
    return z ^ (z >> np.uint64(31))


def unit_array(h: np.ndarray) -> np.ndarray:
    return ((h >> np.uint64(12)).astype(np.float64) + 0.5) * 2.0**-52


@dataclass(frozen=True)
class EnvConfig:
    """Environment law: site-open probability, W pmf and master seed."""

    p: float
    w_pmf: tuple[float, ...]
    seed: int

    def __post_init__(self):
        if not (isinstance(self.p, (int, float)) and 0.0 < self.p < 1.0):
            raise ConfigError(f"p must lie in (0, 1), got {self.p!r}")
        pmf = tuple(float(w) for w in self.w_pmf)
        object.__setattr__(self, "w_pmf", pmf)
        if len(pmf) < 1:
            raise ConfigError("w_pmf must have at least one entry")
        if any(w < 0.0 for w in pmf):
            raise ConfigError(f"w_pmf entries must be nonnegative, got {pmf}")
        if pmf[0] <= 0.0:
            raise ConfigError("w_pmf[0] must be positive (W = 1 needs positive mass)")
        if abs(math.fsum(pmf) - 1.0) > PMF_TOL:
            raise ConfigError(f"w_pmf must sum to 1 within {PMF_TOL}, got {math.fsum(pmf)!r}")
        if not (isinstance(self.seed, int) and 0 <= self.seed < (1 << 64)):
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")

    @property
    def k_max(self) -> int:
        """Support bound K of the W law."""
        return len(self.w_pmf)

    def w_cumulative(self) -> np.ndarray:
        return np.cumsum(np.asarray(self.w_pmf, dtype=np.float64))

    def to_json_dict(self) -> dict:
        return {"p": self.p, "w_pmf": list(self.w_pmf), "seed": self.seed}

    @classmethod
    def from_json_dict(cls, obj: dict) -> "EnvConfig":
        for field in ("p", "w_pmf", "seed"):
            if field not in obj:
                raise ConfigError(f"env config is missing field {field!r}")
        return cls(p=float(obj["p"]), w_pmf=tuple(obj["w_pmf"]), seed=int(obj["seed"]))


def w_from_unit(u: float, cumulative) -> int:
    """Inverse-CDF lookup of W from one unit draw."""
    k = len(cumulative)
    for i in range(k):
        if u < cumulative[i]:
            return i + 1
    return k


class Environment:
    """Pure random-access view of one seeded environment realization.

    Immutable after construction; queries are deterministic functions of
    (seed, site, stream), so walkers may share an instance freely.
    """

    def __init__(self, config: EnvConfig):
        self.config = config
        self.p = config.p
        self.k_max = config.k_max
        self.seed = config.seed
        self._cum = config.w_cumulative()
        self._cum_list = self._cum.tolist()

    # -- scalar queries ----------------------------------------------------

    def site_uniform(self, v) -> float:
        """U_v: uniform draw in (0, 1) attached to site v."""
        return hash_to_unit(site_hash(self.seed, v[0], v[1], U_TAG))

    def is_open(self, v) -> bool:
        """Whether v is open, i.e. U_v < p (the null event U_v = p is closed)."""
        return self.site_uniform(v) < self.p

    def site_w(self, v) -> int:
        """W_v: level-choice draw in {1, ..., K}, on a stream disjoint from U."""
        u = hash_to_unit(site_hash(self.seed, v[0], v[1], W_TAG))
        return w_from_unit(u, self._cum_list)

    # -- batch queries (bit-identical to the scalar path) -------------------

    def uniforms(self, xs, ts) -> np.ndarray:
        return unit_array(site_hash_array(self.seed, xs, ts, U_TAG))

    def opens(self, xs, ts) -> np.ndarray:
        return self.uniforms(xs, ts) < self.p

    def ws(self, xs, ts) -> np.ndarray:
        u = unit_array(site_hash_array(self.seed, xs, ts, W_TAG))
        w = np.searchsorted(self._cum, u, side="right") + 1
        return np.minimum(w, self.k_max).astype(np.int64)


class OverrideEnvironment:
    """Environment with a finite set of forced sites, for planted scenarios.

    Forced openness remaps the base site uniform into (0, p) or [p, 1) so
    is_open stays an exact re-derivation of site_uniform; unforced sites
    pass through. Scalar interface only.
    """

    def __init__(self, base: Environment, force_open=None, force_w=None):
        self.base = base
        self.config = base.config
        self.p = base.p
        self.k_max = base.k_max
        self.force_open = {(int(s[0]), int(s[1])): bool(b) for s, b in (force_open or {}).items()}
        self.force_w = {(int(s[0]), int(s[1])): int(w) for s, w in (force_w or {}).items()}

    def site_uniform(self, v) -> float:
        key = (v[0], v[1])
        u = self.base.site_uniform(v)
        forced = self.force_open.get(key)
        if forced is None:
            return u
        if forced:
            return u * self.p
        return self.p + u * (1.0 - self.p)

    def is_open(self, v) -> bool:
        return self.site_uniform(v) < self.p

    def site_w(self, v) -> int:
        w = self.force_w.get((v[0], v[1]))
        if w is not None:
            return w
        return self.base.site_w(v)


def planted_environment(open_sites, p=0.5, w_default=1, seed=0, k_max=None,
                        w_sites=None) -> OverrideEnvironment:
    """Environment that is closed everywhere except the given sites.

    Useful for reproducing hand-checkable jump geometries. ``open_sites``
    may reach arbitrarily far, but only queried sites matter; every site
    outside the set is forced closed via a closed-by-default wrapper.
    """
    if k_max is None:
        k_max = max([w_default] + list((w_sites or {}).values()))
    # pmf content is irrelevant once W is forced; it only sets K.
    pmf = tuple([1.0 / k_max] * k_max)
    base = Environment(EnvConfig(p=p, w_pmf=pmf, seed=seed))

    class _ClosedByDefault(OverrideEnvironment):
        def site_uniform(self, v):
            key = (v[0], v[1])
            u = self.base.site_uniform(v)
            if key in self.force_open and self.force_open[key]:
                return u * self.p
            return self.p + u * (1.0 - self.p)

        def site_w(self, v):
            w = self.force_w.get((v[0], v[1]))
            if w is not None:
                return w
            return w_default

    env = _ClosedByDefault(base, force_open={s: True for s in open_sites},
                           force_w=w_sites or {})
    return env
