"""Compiled simulation engines.

Single-jump resolution and the Monte Carlo trial loops live here as numba
kernels. Each engine mirrors a pure-Python reference implementation in
``walker``/``forest``; the test suite pins exact agreement between the two
paths, so these functions are a fast route, never a semantic fork.

Renewal detection uses a scalar shortcut: the history region of Eq-style
ball unions is empty exactly when its maximum row is at or below the
current time, and that maximum only ever comes from ``previous_time +
jump_radius`` clipped at each landing. Engines therefore track one integer
per walker instead of an interval set.
"""

from __future__ import annotations

import numpy as np
from numba import njit
from numba.typed import Dict
from numba.core import types

from .environment import (
    _MIX_C1,
    _MIX_C2,
    _X_SALT,
    _T_SALT,
    U_TAG,
    W_TAG,
)

U64 = np.uint64
I64 = np.int64

_C1 = U64(_MIX_C1)
_C2 = U64(_MIX_C2)
_XS = U64(_X_SALT)
_TS = U64(_T_SALT)
_UTAG = U64(U_TAG)
_WTAG = U64(W_TAG)
_S30 = U64(30)
_S27 = U64(27)
_S31 = U64(31)
_S12 = U64(12)
_GOLDEN = U64(0x9E3779B97F4A7C15)

NO_ROW = I64(-(1 << 62))  # "history region empty" sentinel for max-row tracking
CAP_SENTINEL = I64(-(1 << 61))



@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> _S30)) * _C1
    z = (z ^ (z >> _S27)) * _C2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def _site_u01(seed, x, t, tag):
    z = (seed ^ tag) + U64(x) * _XS + U64(t) * _TS
    h = _mix64(z)
    return (np.float64(h >> _S12) + 0.5) * 2.0**-52


@njit(cache=True)
def site_u01(seed, x, t):
    return _site_u01(U64(seed), I64(x), I64(t), _UTAG)


@njit(cache=True)
def site_w01(seed, x, t):
    return _site_u01(U64(seed), I64(x), I64(t), _WTAG)


@njit(cache=True, inline="always")
def _w_from_unit(u, cum):
    k = len(cum)
    for i in range(k):
        if u < cum[i]:
            return i + 1
    return k


@njit(cache=True)
def derive_seed(master, index):
    return _mix64(U64(master) + U64(index + 1) * _GOLDEN)


@njit(cache=True, inline="always")
def _jump(seed, x, t, p, cum, cap):
    """One jump of the walk from (x, t).

    Scans level sets in increasing radius; within a level, rows from the
    top down, +x before -x. Picks the upmost open site of the W-th open
    level, breaking same-row ties by the larger site uniform (and by +x on
    the measure-zero event of equal uniforms). Returns (x', t'), or
    (CAP_SENTINEL, CAP_SENTINEL) if the scan exceeds ``cap`` levels.
    """
    w = _w_from_unit(_site_u01(seed, x, t, _WTAG), cum)
    opens_seen = 0
    for k in range(1, cap + 1):
        fx = I64(0)
        ft = I64(0)
        found = False
        if _site_u01(seed, x, t + k, _UTAG) < p:
            fx = x
            ft = t + I64(k)
            found = True
        else:
            for dt in range(k - 1, 0, -1):
                d = I64(k - dt)
                xr = x + d
                xl = x - d
                tt = t + I64(dt)
                open_r = _site_u01(seed, xr, tt, _UTAG) < p
                open_l = _site_u01(seed, xl, tt, _UTAG) < p
                if open_r or open_l:
                    if open_r and open_l:
                        ur = _site_u01(seed, xr, tt, _UTAG)
                        ul = _site_u01(seed, xl, tt, _UTAG)
                        fx = xr if ur >= ul else xl
                    elif open_r:
                        fx = xr
                    else:
                        fx = xl
                    ft = tt
                    found = True
                    break
        if found:
            opens_seen += 1
            if opens_seen == w:
                return fx, ft
    return CAP_SENTINEL, CAP_SENTINEL


@njit(cache=True)
def jump_target(seed, x, t, p, cum, cap):
    return _jump(U64(seed), I64(x), I64(t), p, cum, cap)


@njit(cache=True, inline="always")
def _clip_maxrow(maxrow, t_prev, radius, t_new):
    m = t_prev + radius
    if maxrow > m:
        m = maxrow
    if m <= t_new:
        return NO_ROW
    return m


@njit(cache=True)
def run_renewals(seed, x0, t0, n_renewals, horizon, p, cum, cap,
                 out_t, out_x, out_disp):
    """Evolve one walk, recording its first ``n_renewals`` renewal records.

    out_t[j], out_x[j]: renewal time and position; out_disp[j]: maximum
    |position - position at previous renewal| over the renewal interval.
    Returns (count, status): status 0 ok, 1 horizon hit, 2 cap exceeded.
    """
    s = U64(seed)
    x = I64(x0)
    t = I64(t0)
    maxrow = NO_ROW
    x_ref = x
    maxd = I64(0)
    count = 0
    while count < n_renewals:
        if t > horizon:
            return count, 1
        nx, nt = _jump(s, x, t, p, cum, cap)
        if nx == CAP_SENTINEL:
            return count, 2
        dx = nx - x
        if dx < 0:
            dx = -dx
        radius = dx + (nt - t)
        maxrow = _clip_maxrow(maxrow, t, radius, nt)
        x, t = nx, nt
        d = x - x_ref
        if d < 0:
            d = -d
        if d > maxd:
            maxd = d
        if maxrow == NO_ROW:
            out_t[count] = t
            out_x[count] = x
            out_disp[count] = maxd
            count += 1
            x_ref = x
            maxd = I64(0)
    return count, 0


@njit(cache=True)
def batch_renewals(seeds, n_renewals, horizon, p, cum, cap):
    n = len(seeds)
    out_t = np.zeros((n, n_renewals), dtype=np.int64)
    out_x = np.zeros((n, n_renewals), dtype=np.int64)
    out_d = np.zeros((n, n_renewals), dtype=np.int64)
    counts = np.zeros(n, dtype=np.int64)
    status = np.zeros(n, dtype=np.int64)
    for i in range(n):
        c, st = run_renewals(seeds[i], 0, 0, n_renewals, horizon, p, cum, cap,
                             out_t[i], out_x[i], out_d[i])
        counts[i] = c
        status[i] = st
    return counts, status, out_t, out_x, out_d


@njit(cache=True)
def run_endpoint(seed, target, horizon, p, cum, cap):
    """Position of one walk, linearly interpolated, at real time ``target``.

    Returns (value, status): status 0 ok, 2 cap exceeded.
    """
    s = U64(seed)
    x = I64(0)
    t = I64(0)
    if target <= 0.0:
        return 0.0, 0
    while True:
        nx, nt = _jump(s, x, t, p, cum, cap)
        if nx == CAP_SENTINEL:
            return 0.0, 2
        if np.float64(nt) >= target:
            frac = (target - np.float64(t)) / np.float64(nt - t)
            return np.float64(x) + np.float64(nx - x) * frac, 0
        x, t = nx, nt


@njit(cache=True)
def batch_endpoint(seeds, target, p, cum, cap):
    n = len(seeds)
    vals = np.zeros(n, dtype=np.float64)
    status = np.zeros(n, dtype=np.int64)
    for i in range(n):
        v, st = run_endpoint(seeds[i], target, 0, p, cum, cap)
        vals[i] = v
        status[i] = st
    return vals, status


@njit(cache=True)
def run_pair(seed, m, horizon, max_records, stop_on_zero, p, cum, cap,
             rec_t, rec_y):
    """Evolve the pair started at (0,0) and (m,0) through joint renewals.

    Lock-step rule: always step the walker with smaller current time (the
    first walker on ties and after coalescence). A joint renewal is any
    post-step state with both walkers at the same time and both history
    regions empty; rec_t/rec_y receive its time and gap. Coalescence is a
    shared lattice vertex, at which point the pair evolves as one walk and
    every later gap is 0.

    Returns (theta, n_rec, nu, t_nu, crossings, over_val, over_seen,
    censored, status). theta = -1 until a shared vertex occurs; nu = 1-based
    index of the first recorded zero gap (-1 if none) and t_nu its time;
    crossings = number of strict sign alternations before the first zero;
    over_val = gap value at its first nonpositive record (over_seen flags
    it).
    """
    s = U64(seed)
    xa = I64(0)
    ta = I64(0)
    xb = I64(m)
    tb = I64(0)
    mra = NO_ROW
    mrb = NO_ROW
    merged = False
    theta = I64(-1)
    n_rec = 0
    nu = -1
    t_nu = I64(-1)
    crossings = 0
    seek_low = True   # sign-change scan state: seeking <= 0 next
    done_signs = False
    over_val = I64(0)
    over_seen = False
    censored = 0
    while True:
        t_min = ta if ta <= tb else tb
        if t_min > horizon:
            censored = 1
            break
        step_a = merged or (ta <= tb)
        if step_a:
            nx, nt = _jump(s, xa, ta, p, cum, cap)
            if nx == CAP_SENTINEL:
                return theta, n_rec, nu, t_nu, crossings, over_val, over_seen, censored, 2
            dx = nx - xa
            if dx < 0:
                dx = -dx
            radius = dx + (nt - ta)
            mra = _clip_maxrow(mra, ta, radius, nt)
            if merged:
                mrb = _clip_maxrow(mrb, ta, radius, nt)
                xa, ta = nx, nt
                xb, tb = nx, nt
            else:
                if nt == tb and nx == xb:
                    merged = True
                    theta = nt
                xa, ta = nx, nt
        else:
            nx, nt = _jump(s, xb, tb, p, cum, cap)
            if nx == CAP_SENTINEL:
                return theta, n_rec, nu, t_nu, crossings, over_val, over_seen, censored, 2
            dx = nx - xb
            if dx < 0:
                dx = -dx
            radius = dx + (nt - tb)
            mrb = _clip_maxrow(mrb, tb, radius, nt)
            if nt == ta and nx == xa:
                merged = True
                theta = nt
            xb, tb = nx, nt
        if ta == tb and mra == NO_ROW and mrb == NO_ROW:
            y = xb - xa
            if n_rec < max_records:
                rec_t[n_rec] = ta
                rec_y[n_rec] = y
            n_rec += 1
            if not over_seen and y <= 0:
                over_val = y
                over_seen = True
            if not done_signs:
                if seek_low and y <= 0:
                    if y == 0:
                        done_signs = True
                    else:
                        crossings += 1
                        seek_low = False
                elif (not seek_low) and y >= 0:
                    if y == 0:
                        done_signs = True
                    else:
                        crossings += 1
                        seek_low = True
            if y == 0 and nu < 0:
                nu = n_rec
                t_nu = ta
                if stop_on_zero:
                    break
            if n_rec >= max_records and not stop_on_zero:
                break
    return theta, n_rec, nu, t_nu, crossings, over_val, over_seen, censored, 0


@njit(cache=True)
def batch_pair(seeds, m, horizon, max_records, stop_on_zero, p, cum, cap):
    n = len(seeds)
    rec_t = np.zeros((n, max_records), dtype=np.int64)
    rec_y = np.zeros((n, max_records), dtype=np.int64)
    theta = np.zeros(n, dtype=np.int64)
    n_rec = np.zeros(n, dtype=np.int64)
    nu = np.zeros(n, dtype=np.int64)
    t_nu = np.zeros(n, dtype=np.int64)
    crossings = np.zeros(n, dtype=np.int64)
    over_val = np.zeros(n, dtype=np.int64)
    over_seen = np.zeros(n, dtype=np.int64)
    censored = np.zeros(n, dtype=np.int64)
    status = np.zeros(n, dtype=np.int64)
    for i in range(n):
        th, nr, nv, tn, cr, ov, os_, ce, st = run_pair(
            seeds[i], m, horizon, max_records, stop_on_zero, p, cum, cap,
            rec_t[i], rec_y[i])
        theta[i] = th
        n_rec[i] = nr
        nu[i] = nv
        t_nu[i] = tn
        crossings[i] = cr
        over_val[i] = ov
        over_seen[i] = 1 if os_ else 0
        censored[i] = ce
        status[i] = st
    return theta, n_rec, nu, t_nu, crossings, over_val, over_seen, censored, status, rec_t, rec_y


# -- region scans ----------------------------------------------------------


@njit(cache=True)
def h_depth(seed, x, t, p, k_target, cap):
    """Rows needed straight above (x, t) to see k_target open sites."""
    s = U64(seed)
    seen = 0
    for j in range(1, cap + 1):
        if _site_u01(s, I64(x), I64(t + j), _UTAG) < p:
            seen += 1
            if seen == k_target:
                return j
    return -1


@njit(cache=True)
def zeta_depth(seed, x, t, p, k_target, cap):
    """Depth below (x, t), inclusive, holding k_target open sites.

    Scans rows t, t-1, ...; returns the offset i of the row where the
    k_target-th open site sits (0 means row t itself), or -1 past cap.
    """
    s = U64(seed)
    seen = 0
    for i in range(0, cap + 1):
        if _site_u01(s, I64(x), I64(t - i), _UTAG) < p:
            seen += 1
            if seen == k_target:
                return i
    return -1


@njit(cache=True)
def good_box(seed, x, t, p, cum, k):
    """Whether the k x k block with top-right anchor column span

    columns [x, x+k-1] and rows [t-k+1, t] is entirely open with W = 1.
    """
    s = U64(seed)
    for cx in range(x, x + k):
        for rt in range(t - k + 1, t + 1):
            if _site_u01(s, I64(cx), I64(rt), _UTAG) >= p:
                return False
            if _w_from_unit(_site_u01(s, I64(cx), I64(rt), _WTAG), cum) != 1:
                return False
    return True


@njit(cache=True)
def g_plus(seed, x, t, p, cum, k, cap):
    for n in range(1, cap + 1):
        if good_box(seed, x + (n - 1) * k, t, p, cum, k):
            return n
    return -1


@njit(cache=True)
def g_minus(seed, x, t, p, cum, k, cap):
    for n in range(1, cap + 1):
        if good_box(seed, x - (n * k - 1), t, p, cum, k):
            return n
    return -1


@njit(cache=True)
def crossing_region(seed, a, b, t0, p, cum, k, cap):
    """Columns and depths of the region that catches every path crossing
    [a, b] x {t0}.

    Built per unit piece [a+i, a+i+1] with good-box scans anchored at each
    piece's right end, then unioned. Returns (col_lo, col_hi, depths array
    over [col_lo, col_hi]), where depths[j] is the inclusive depth below t0
    of column col_lo + j. Any entry -1 signals a cap overflow.
    """
    col_lo = I64(a)
    col_hi = I64(b)
    width = b - a
    if width < 1:
        width = 1
    for i in range(width):
        anchor = a + i + 1
        gm = g_minus(seed, anchor, t0, p, cum, k, cap)
        gp = g_plus(seed, anchor, t0, p, cum, k, cap)
        if gm < 0 or gp < 0:
            return I64(0), I64(-1), np.empty(0, dtype=np.int64)
        lo = I64(a + i) - I64(k) * I64(gm)
        hi = I64(anchor) + I64(k) * I64(gp)
        if lo < col_lo:
            col_lo = lo
        if hi > col_hi:
            col_hi = hi
    ncols = col_hi - col_lo + 1
    depths = np.empty(ncols, dtype=np.int64)
    for j in range(ncols):
        depths[j] = zeta_depth(seed, col_lo + j, t0, p, k, cap)
    return col_lo, col_hi, depths


# -- merging walker fronts ---------------------------------------------------

_T_OFF = I64(1 << 22)
_X_OFF = I64(1 << 39)
_ENC_MUL = I64(1 << 40)

_I64_PAIR = types.UniTuple(types.int64, 2)


@njit(cache=True, inline="always")
def _enc_vertex(x, t):
    return (t + _T_OFF) * _ENC_MUL + (x + _X_OFF)


@njit(cache=True, inline="always")
def _gcd(a, b):
    if a < 0:
        a = -a
    while b != 0:
        a, b = b, a % b
    return a


@njit(cache=True)
def run_crossing_count(seed, launch_x, launch_t, t0, t_final, lo_bounds, hi_bounds,
                       p, cum, cap):
    """Distinct path positions at ``t_final`` among paths that touch the
    intervals [lo_bounds[j], hi_bounds[j]] x {t0}.

    Launch sites (sorted by time then x) must cover every potential
    crosser; walks merge when they land on a vertex currently occupied by
    another walk, which by the lock-step sweep is exactly a shared lattice
    vertex. Positions at t_final are exact rationals. Returns (counts per
    interval, status).
    """
    n0 = len(launch_x)
    nb = len(lo_bounds)
    wx = np.zeros(n0, dtype=np.int64)
    wt = np.zeros(n0, dtype=np.int64)
    crossed = np.zeros(n0, dtype=np.int64)
    done_num = np.zeros(n0, dtype=np.int64)
    done_den = np.zeros(n0, dtype=np.int64)
    done_mask = np.zeros(n0, dtype=np.int64)
    n_done = 0
    row0 = launch_t[0]
    nrows = t_final - row0 + 1
    head = np.full(nrows, -1, dtype=np.int64)
    nxt = np.full(n0, -1, dtype=np.int64)
    vmap = Dict.empty(key_type=types.int64, value_type=types.int64)
    li = 0
    n_w = 0
    s = U64(seed)
    for s_row in range(row0, t_final):
        while li < n0 and launch_t[li] == s_row:
            x = launch_x[li]
            key = _enc_vertex(x, s_row)
            if key not in vmap:
                idx = n_w
                n_w += 1
                wx[idx] = x
                wt[idx] = s_row
                vmap[key] = idx
                nxt[idx] = head[s_row - row0]
                head[s_row - row0] = idx
            li += 1
        idx = head[s_row - row0]
        head[s_row - row0] = -1
        while idx >= 0:
            nxt_idx = nxt[idx]
            x = wx[idx]
            t = wt[idx]
            if t > t0 and crossed[idx] == 0:
                # past the crossing row without touching any interval:
                # this walk can never contribute a counted position
                del vmap[_enc_vertex(x, t)]
                idx = nxt_idx
                continue
            nx, nt = _jump(s, x, t, p, cum, cap)
            if nx == CAP_SENTINEL:
                return np.zeros(nb, dtype=np.int64), 2
            mask = crossed[idx]
            if t == t0:
                fx = np.float64(x)
                for j in range(nb):
                    if lo_bounds[j] <= fx and fx <= hi_bounds[j]:
                        mask |= I64(1) << j
            elif t < t0 and nt > t0:
                num = x * (nt - t) + (nx - x) * (t0 - t)
                den = nt - t
                v = np.float64(num) / np.float64(den)
                for j in range(nb):
                    if lo_bounds[j] <= v and v <= hi_bounds[j]:
                        mask |= I64(1) << j
            crossed[idx] = mask
            okey = _enc_vertex(x, t)
            del vmap[okey]
            if nt >= t_final:
                if nt == t_final:
                    done_num[n_done] = nx
                    done_den[n_done] = 1
                else:
                    num = x * (nt - t) + (nx - x) * (t_final - t)
                    den = nt - t
                    g = _gcd(num, den)
                    if g > 0:
                        num //= g
                        den //= g
                    done_num[n_done] = num
                    done_den[n_done] = den
                done_mask[n_done] = mask
                n_done += 1
            else:
                nkey = _enc_vertex(nx, nt)
                if nkey in vmap:
                    j = vmap[nkey]
                    crossed[j] |= mask
                else:
                    vmap[nkey] = idx
                    wx[idx] = nx
                    wt[idx] = nt
                    nxt[idx] = head[nt - row0]
                    head[nt - row0] = idx
            idx = nxt_idx
    counts = np.zeros(nb, dtype=np.int64)
    for j in range(nb):
        seen = Dict.empty(key_type=_I64_PAIR, value_type=types.int64)
        for i in range(n_done):
            if (done_mask[i] >> j) & 1:
                seen[(done_num[i], done_den[i])] = 1
        counts[j] = len(seen)
    return counts, 0


@njit(cache=True, inline="always")
def _seg_x_at(x, t, nx, nt, tq):
    return np.float64(x) + np.float64(nx - x) * (tq - np.float64(t)) / np.float64(nt - t)


@njit(cache=True, inline="always")
def _seg_first_in_band(x, t, nx, nt, w1, w2, xlo, xhi):
    """Earliest time in [w1, w2] at which the segment's x lies in
    [xlo, xhi]; returns (found, time)."""
    x1 = _seg_x_at(x, t, nx, nt, w1)
    if xlo <= x1 and x1 <= xhi:
        return True, w1
    x2 = _seg_x_at(x, t, nx, nt, w2)
    if x1 < xlo:
        if x2 < xlo:
            return False, 0.0
        tc = w1 + (w2 - w1) * (xlo - x1) / (x2 - x1)
        return True, tc
    if x2 > xhi:
        return False, 0.0
    tc = w1 + (w2 - w1) * (x1 - xhi) / (x1 - x2)
    return True, tc


@njit(cache=True)
def run_boundary_event(seed, launch_x, launch_t,
                       spawn_xlo, spawn_xhi, spawn_thi,
                       r_xlo, r_xhi, r_thi, boundary_x, t_hi,
                       p, cum, cap):
    """Whether some enumerated path touches [r_xlo, r_xhi] x [0, r_thi] and
    afterwards reaches x >= boundary_x by time t_hi.

    Paths are spawned from the given launch sites (rows <= 0) plus every
    open site of the spawn rectangle, with vertex-sharing merges. Returns
    (flag, status): flag 1 if the event occurs, else 0.
    """
    s = U64(seed)
    n_spawn_cap = 0
    for row in range(0, spawn_thi + 1):
        for x in range(spawn_xlo, spawn_xhi + 1):
            if _site_u01(s, I64(x), I64(row), _UTAG) < p:
                n_spawn_cap += 1
    n_cap = len(launch_x) + n_spawn_cap
    if n_cap == 0:
        return 0, 0
    wx = np.zeros(n_cap, dtype=np.int64)
    wt = np.zeros(n_cap, dtype=np.int64)
    touched = np.zeros(n_cap, dtype=np.uint8)
    row0 = launch_t[0] if len(launch_x) > 0 else I64(0)
    nrows = t_hi - row0 + 1
    head = np.full(nrows, -1, dtype=np.int64)
    nxt = np.full(n_cap, -1, dtype=np.int64)
    vmap = Dict.empty(key_type=types.int64, value_type=types.int64)
    li = 0
    n_w = 0
    fb = np.float64(boundary_x)
    fxlo = np.float64(r_xlo)
    fxhi = np.float64(r_xhi)
    for s_row in range(row0, t_hi):
        # scheduled launches, then in-rectangle spawns at this row
        while li < len(launch_x) and launch_t[li] == s_row:
            x = launch_x[li]
            key = _enc_vertex(x, s_row)
            if key not in vmap:
                idx = n_w
                n_w += 1
                wx[idx] = x
                wt[idx] = s_row
                tch = np.uint8(0)
                if s_row >= 0 and s_row <= r_thi and r_xlo <= x and x <= r_xhi:
                    tch = np.uint8(1)
                touched[idx] = tch
                vmap[key] = idx
                nxt[idx] = head[s_row - row0]
                head[s_row - row0] = idx
            li += 1
        if s_row >= 0 and s_row <= spawn_thi:
            for x in range(spawn_xlo, spawn_xhi + 1):
                if _site_u01(s, I64(x), I64(s_row), _UTAG) < p:
                    key = _enc_vertex(I64(x), I64(s_row))
                    if key not in vmap:
                        idx = n_w
                        n_w += 1
                        wx[idx] = x
                        wt[idx] = s_row
                        tch = np.uint8(0)
                        if s_row <= r_thi and r_xlo <= x and x <= r_xhi:
                            tch = np.uint8(1)
                        touched[idx] = tch
                        vmap[key] = idx
                        nxt[idx] = head[s_row - row0]
                        head[s_row - row0] = idx
        idx = head[s_row - row0]
        head[s_row - row0] = -1
        while idx >= 0:
            nxt_idx = nxt[idx]
            x = wx[idx]
            t = wt[idx]
            nx, nt = _jump(s, x, t, p, cum, cap)
            if nx == CAP_SENTINEL:
                return 0, 2
            tch = touched[idx]
            touch_time = np.float64(t)
            if tch == 0:
                w1 = np.float64(t if t > 0 else 0)
                w2 = np.float64(nt if nt < r_thi else r_thi)
                if w1 <= w2:
                    found, tc = _seg_first_in_band(x, t, nx, nt, w1, w2, fxlo, fxhi)
                    if found:
                        tch = np.uint8(1)
                        touch_time = tc
            if tch == 1:
                b1 = touch_time if touch_time > np.float64(t) else np.float64(t)
                b2 = np.float64(nt if nt < t_hi else t_hi)
                if b1 <= b2:
                    xa = _seg_x_at(x, t, nx, nt, b1)
                    xb_ = _seg_x_at(x, t, nx, nt, b2)
                    hi = xa if xa >= xb_ else xb_
                    if hi >= fb:
                        return 1, 0
            okey = _enc_vertex(x, t)
            del vmap[okey]
            drop = False
            if nt >= t_hi:
                drop = True
            elif tch == 0 and nt > r_thi:
                drop = True
            if not drop:
                nkey = _enc_vertex(nx, nt)
                if nkey in vmap:
                    j = vmap[nkey]
                    if tch > touched[j]:
                        touched[j] = tch
                else:
                    vmap[nkey] = idx
                    wx[idx] = nx
                    wt[idx] = nt
                    touched[idx] = tch
                    nxt[idx] = head[nt - row0]
                    head[nt - row0] = idx
            idx = nxt_idx
    return 0, 0
