"""Hot numeric kernels with numba-jitted and pure-numpy twin implementations.

Three kernels dominate runtime: lockstep forward-Euler world stepping,
batched worst-case two-phase rollout gap minimisation, and the verifier's
box-frontier processing.  Each exists twice: a scalar-loop version compiled
with ``numba.njit`` and a vectorised numpy version.  The jitted path is used
when numba imports successfully and the environment variable
``LANESHIELD_NUMBA`` is not set to ``0``; the numpy path otherwise.  Both
paths implement identical arithmetic and are cross-checked in the tests;
``benchmarks/bench_kernels.py`` compares their throughput.

Tri-valued predicate results are encoded as int8: 0 false, 1 true, 2 unknown.
Frontier verdict codes: 0 safe, 1 split, 2 counterexample candidate,
3 below minimum width, 4 pruned (box cannot satisfy the car-ordering
constraints of the input region).
"""
from __future__ import annotations

import os

import numpy as np


def _have_numba() -> bool:
    try:
        import numba  # noqa: F401
        return True
    except ImportError:
        return False


HAVE_NUMBA = _have_numba()
USE_NUMBA = HAVE_NUMBA and os.environ.get("LANESHIELD_NUMBA", "1") != "0"

if HAVE_NUMBA:
    from numba import njit
else:  # pragma: no cover - exercised only without numba installed
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap

TRI_FALSE, TRI_TRUE, TRI_UNKNOWN = 0, 1, 2
SAFE, SPLIT, CANDIDATE, TOO_SMALL, PRUNED = 0, 1, 2, 3, 4

_INF = 1e300


# ---------------------------------------------------------------------------
# forward-Euler world stepping
# ---------------------------------------------------------------------------

@njit(cache=True)
def _euler_run_jit(x, v, a, h, n, V, L):
    m = x.shape[0]
    min_gap = _INF
    for i in range(m - 1):
        g = x[i + 1] - x[i]
        if g < min_gap:
            min_gap = g
    for step in range(1, n + 1):
        for i in range(m):
            x[i] = x[i] + v[i] * h
            vn = v[i] + a[i] * h
            if vn < 0.0:
                vn = 0.0
            elif vn > V:
                vn = V
            v[i] = vn
        crashed = False
        for i in range(m - 1):
            g = x[i + 1] - x[i]
            if g < min_gap:
                min_gap = g
            if g < L:
                crashed = True
        if crashed:
            return step, min_gap
    return -1, min_gap


def _euler_run_np(x, v, a, h, n, V, L):
    min_gap = float(np.min(x[1:] - x[:-1])) if x.shape[0] > 1 else _INF
    for step in range(1, n + 1):
        x += v * h
        np.clip(v + a * h, 0.0, V, out=v)
        if x.shape[0] > 1:
            g = float(np.min(x[1:] - x[:-1]))
            if g < min_gap:
                min_gap = g
            if g < L:
                return step, min_gap
    return -1, min_gap


def euler_run(x, v, a, h: float, n: int, V: float, L: float):
    """Advance all cars n substeps of size h, clamping v to [0, V].

    x, v are modified in place.  Cars are ordered rear to front; the gap
    between adjacent cars is checked after every substep.  Returns
    (crash_step, min_gap): crash_step is the 1-based substep at which some
    adjacent gap first dropped below L (stepping stops there), or -1.
    """
    if USE_NUMBA:
        return _euler_run_jit(x, v, a, float(h), int(n), float(V), float(L))
    return _euler_run_np(x, v, a, float(h), int(n), float(V), float(L))


# ---------------------------------------------------------------------------
# exact two-phase rollout minimum gap
# ---------------------------------------------------------------------------

@njit(cache=True)
def _hit_time(v, a, V):
    # time until the velocity bound (0 going down, V going up) is reached
    if a > 0.0:
        t = (V - v) / a
    elif a < 0.0:
        t = -v / a
    else:
        return _INF
    return t if t > 0.0 else 0.0


@njit(cache=True)
def _clamped_quad(x, v, a, dt, V):
    if a == 0.0:
        return x + v * dt, v
    if a > 0.0:
        th = (V - v) / a
        vb = V
    else:
        th = -v / a
        vb = 0.0
    if th < 0.0:
        th = 0.0
    if th >= dt:
        return x + v * dt + 0.5 * a * dt * dt, v + a * dt
    return x + v * th + 0.5 * a * th * th + vb * (dt - th), vb


@njit(cache=True)
def _car_at(x0, v0, a1, a2, ts, V, t):
    if t <= ts:
        return _clamped_quad(x0, v0, a1, t, V)
    x, v = _clamped_quad(x0, v0, a1, ts, V)
    return _clamped_quad(x, v, a2, t - ts, V)


@njit(cache=True)
def _two_phase_min_gap_jit(xf, vf, af1, af2, xr, vr, ar1, ar2, ts, V, t_end):
    n = xf.shape[0]
    out = np.empty(n)
    knots = np.empty(7)
    for s in range(n):
        knots[0] = 0.0
        knots[1] = ts if ts < t_end else t_end
        knots[2] = t_end
        th = _hit_time(vf[s], af1[s], V)
        knots[3] = th if th < ts else t_end
        xm, vm = _clamped_quad(xf[s], vf[s], af1[s], ts, V)
        th = ts + _hit_time(vm, af2[s], V)
        knots[4] = th if th < t_end else t_end
        th = _hit_time(vr[s], ar1[s], V)
        knots[5] = th if th < ts else t_end
        xm, vm = _clamped_quad(xr[s], vr[s], ar1[s], ts, V)
        th = ts + _hit_time(vm, ar2[s], V)
        knots[6] = th if th < t_end else t_end
        knots.sort()

        best = _INF
        xa, va = _car_at(xf[s], vf[s], af1[s], af2[s], ts, V, knots[0])
        xb, vb = _car_at(xr[s], vr[s], ar1[s], ar2[s], ts, V, knots[0])
        ga = xa - xb
        dva = va - vb
        if ga < best:
            best = ga
        for j in range(1, 7):
            tb = knots[j]
            ta = knots[j - 1]
            xa, va = _car_at(xf[s], vf[s], af1[s], af2[s], ts, V, tb)
            xb, vb = _car_at(xr[s], vr[s], ar1[s], ar2[s], ts, V, tb)
            gb = xa - xb
            dvb = va - vb
            if gb < best:
                best = gb
            if tb > ta and ((dva < 0.0 and dvb > 0.0) or (dva > 0.0 and dvb < 0.0)):
                tstar = ta + dva * (tb - ta) / (dva - dvb)
                xa, _ = _car_at(xf[s], vf[s], af1[s], af2[s], ts, V, tstar)
                xb, _ = _car_at(xr[s], vr[s], ar1[s], ar2[s], ts, V, tstar)
                gs = xa - xb
                if gs < best:
                    best = gs
            ga = gb
            dva = dvb
        out[s] = best
    return out


def _clamped_quad_np(x, v, a, dt, V):
    th = np.full_like(np.asarray(a, dtype=float), _INF)
    up = a > 0
    dn = a < 0
    with np.errstate(divide="ignore", invalid="ignore"):
        th = np.where(up, (V - v) / np.where(up, a, 1.0), th)
        th = np.where(dn, -v / np.where(dn, a, 1.0), th)
    th = np.maximum(th, 0.0)
    vb = np.where(up, V, 0.0)
    tau = np.minimum(dt, th)
    x1 = x + v * tau + 0.5 * a * tau * tau + vb * np.maximum(dt - th, 0.0)
    v1 = np.where(th >= dt, v + a * dt, vb)
    return x1, v1


def _car_at_np(x0, v0, a1, a2, ts, V, t):
    # t: [N, K]; params: [N, 1]
    tau1 = np.minimum(t, ts)
    x, v = _clamped_quad_np(x0, v0, a1, tau1, V)
    tau2 = np.maximum(t - ts, 0.0)
    return _clamped_quad_np(x, v, a2, tau2, V)


def _two_phase_min_gap_np(xf, vf, af1, af2, xr, vr, ar1, ar2, ts, V, t_end):
    n = xf.shape[0]
    col = lambda z: np.asarray(z, dtype=float).reshape(n, 1)
    xf, vf, af1, af2 = col(xf), col(vf), col(af1), col(af2)
    xr, vr, ar1, ar2 = col(xr), col(vr), col(ar1), col(ar2)

    knots = np.empty((n, 7))
    knots[:, 0] = 0.0
    knots[:, 1] = min(ts, t_end)
    knots[:, 2] = t_end
    thf1 = _hit_np(vf, af1, V)
    knots[:, 3:4] = np.where(thf1 < ts, thf1, t_end)
    xm, vm = _clamped_quad_np(xf, vf, af1, ts, V)
    thf2 = ts + _hit_np(vm, af2, V)
    knots[:, 4:5] = np.where(thf2 < t_end, thf2, t_end)
    thr1 = _hit_np(vr, ar1, V)
    knots[:, 5:6] = np.where(thr1 < ts, thr1, t_end)
    xm, vm = _clamped_quad_np(xr, vr, ar1, ts, V)
    thr2 = ts + _hit_np(vm, ar2, V)
    knots[:, 6:7] = np.where(thr2 < t_end, thr2, t_end)
    knots.sort(axis=1)

    xa, va = _car_at_np(xf, vf, af1, af2, ts, V, knots)
    xb, vb = _car_at_np(xr, vr, ar1, ar2, ts, V, knots)
    g = xa - xb
    dv = va - vb

    ta, tb = knots[:, :-1], knots[:, 1:]
    dva, dvb = dv[:, :-1], dv[:, 1:]
    cross = (tb > ta) & (((dva < 0) & (dvb > 0)) | ((dva > 0) & (dvb < 0)))
    with np.errstate(divide="ignore", invalid="ignore"):
        tstar = np.where(cross, ta + dva * (tb - ta) / (dva - dvb), 0.0)
    xs, _ = _car_at_np(xf, vf, af1, af2, ts, V, tstar)
    ys, _ = _car_at_np(xr, vr, ar1, ar2, ts, V, tstar)
    gs = np.where(cross, xs - ys, _INF)
    return np.minimum(g.min(axis=1), gs.min(axis=1))


def _hit_np(v, a, V):
    th = np.full_like(a, _INF)
    up = a > 0
    dn = a < 0
    with np.errstate(divide="ignore", invalid="ignore"):
        th = np.where(up, (V - v) / np.where(up, a, 1.0), th)
        th = np.where(dn, -v / np.where(dn, a, 1.0), th)
    return np.maximum(th, 0.0)


def two_phase_min_gap(xf, vf, af1, af2, xr, vr, ar1, ar2, ts, V, t_end):
    """Minimum front-rear gap over [0, t_end] under exact kinematics.

    Both cars hold their first acceleration until ts, their second
    afterwards; velocities clamp to [0, V].  All car parameters are arrays
    of equal length; ts, V, t_end are scalars.  Gap extrema are taken from
    the analytic piecewise-quadratic trajectories, so interior minima
    between sampling instants are not missed.
    """
    args = [np.ascontiguousarray(z, dtype=float) for z in (xf, vf, af1, af2, xr, vr, ar1, ar2)]
    if USE_NUMBA:
        return _two_phase_min_gap_jit(*args, float(ts), float(V), float(t_end))
    return _two_phase_min_gap_np(*args, float(ts), float(V), float(t_end))


# ---------------------------------------------------------------------------
# verifier frontier processing
# ---------------------------------------------------------------------------

@njit(cache=True)
def _sq_iv(lo, hi):
    if lo >= 0.0:
        return lo * lo, hi * hi
    if hi <= 0.0:
        return hi * hi, lo * lo
    m = lo * lo if lo * lo > hi * hi else hi * hi
    return 0.0, m


@njit(cache=True)
def _tri_gt0(lo, hi):
    # strict: expr > 0
    if lo > 0.0:
        return TRI_TRUE
    if hi <= 0.0:
        return TRI_FALSE
    return TRI_UNKNOWN


@njit(cache=True)
def _tri_ge0(lo, hi):
    if lo >= 0.0:
        return TRI_TRUE
    if hi < 0.0:
        return TRI_FALSE
    return TRI_UNKNOWN


@njit(cache=True)
def _tri_and(a, b):
    if a == TRI_FALSE or b == TRI_FALSE:
        return TRI_FALSE
    if a == TRI_UNKNOWN or b == TRI_UNKNOWN:
        return TRI_UNKNOWN
    return TRI_TRUE


@njit(cache=True)
def _tri_or(a, b):
    if a == TRI_TRUE or b == TRI_TRUE:
        return TRI_TRUE
    if a == TRI_UNKNOWN or b == TRI_UNKNOWN:
        return TRI_UNKNOWN
    return TRI_FALSE


@njit(cache=True)
def _monitor_tris(ve_lo, ve_hi, gap_lo, gap_hi, vo_lo, vo_hi,
                  T, L, V, Amin, Amax, Bmin, Bmax):
    """Tri values of (invariant, idle allowed, accelerate allowed) over the box."""
    se_lo, se_hi = _sq_iv(ve_lo, ve_hi)
    so_lo, so_hi = _sq_iv(vo_lo, vo_hi)
    # y/(2*Bmin) with Bmin < 0 flips the interval; same for Bmax
    eb_lo, eb_hi = se_hi / (2.0 * Bmin), se_lo / (2.0 * Bmin)
    ob_lo, ob_hi = so_hi / (2.0 * Bmax), so_lo / (2.0 * Bmax)

    ve_in = _tri_and(_tri_ge0(ve_lo, ve_hi), _tri_ge0(V - ve_hi, V - ve_lo))
    vo_in = _tri_and(_tri_ge0(vo_lo, vo_hi), _tri_ge0(V - vo_hi, V - vo_lo))
    sep = _tri_ge0(gap_lo - L, gap_hi - L)
    mb_lo = gap_lo - L + eb_lo - ob_hi
    mb_hi = gap_hi - L + eb_hi - ob_lo
    inv = _tri_and(_tri_and(ve_in, vo_in), _tri_and(sep, _tri_gt0(mb_lo, mb_hi)))

    # idle: Bmin <= 0 <= Amax (valid context: always true) and v >= 0 and margin
    mi_lo = gap_lo - L + eb_lo - T * ve_hi - ob_hi
    mi_hi = gap_hi - L + eb_hi - T * ve_lo - ob_lo
    idle_const = TRI_TRUE if (Bmin <= 0.0 <= Amax) else TRI_FALSE
    idle = _tri_and(idle_const, _tri_and(_tri_ge0(ve_lo, ve_hi), _tri_gt0(mi_lo, mi_hi)))

    # accelerate: three disjuncts at a = Amax, kept as printed
    d1c = TRI_TRUE if (Bmax <= Amax <= Bmin) else TRI_FALSE
    d1 = _tri_and(d1c, _tri_gt0(mb_lo, mb_hi))
    g2_lo = ve_lo + Amax * T
    g2_hi = ve_hi + Amax * T
    m2_lo = gap_lo - L + se_lo / (2.0 * Amax) - ob_hi
    m2_hi = gap_hi - L + se_hi / (2.0 * Amax) - ob_lo
    d2 = _tri_and(_tri_gt0(-g2_hi, -g2_lo), _tri_gt0(m2_lo, m2_hi))
    f = -Amax / Bmin + 1.0
    co_lo = f * (Amax / 2.0 * T * T + T * ve_lo)
    co_hi = f * (Amax / 2.0 * T * T + T * ve_hi)
    m3_lo = gap_lo - L + eb_lo - co_hi - ob_hi
    m3_hi = gap_hi - L + eb_hi - co_lo - ob_lo
    d3 = _tri_and(_tri_ge0(g2_lo, g2_hi), _tri_gt0(m3_lo, m3_hi))
    accel = _tri_or(d1, _tri_or(d2, d3))
    return inv, idle, accel


@njit(cache=True)
def _frontier_jit(lo, hi, Wp, bp, acts, in_dims, out_dims,
                  inp_src, inp_const, active,
                  T, L, V, Amin, Amax, Bmin, Bmax, eps, k,
                  verdict, split_dim, cand_mask):
    n, d = lo.shape
    n_layers = Wp.shape[0]
    in_dim = inp_src.shape[0]
    width = max(in_dim, Wp.shape[1])
    cur_lo = np.empty(width)
    cur_hi = np.empty(width)
    nxt_lo = np.empty(width)
    nxt_hi = np.empty(width)
    rel = L / (5.0 * V)

    for s in range(n):
        verdict[s] = SPLIT
        split_dim[s] = -1
        cand_mask[s] = 0

        # ordering constraints between environment cars 2..k
        pruned = False
        for j in range(3, k + 1):
            px = 2 * (j - 1) - 2
            cx = 2 * j - 2
            if lo[s, px] + rel > hi[s, cx]:
                pruned = True
            if lo[s, px + 1] > hi[s, cx + 1]:
                pruned = True
        if pruned:
            verdict[s] = PRUNED
            continue

        ve_lo, ve_hi = 2.0 * V * lo[s, 1], 2.0 * V * hi[s, 1]
        gap_lo, gap_hi = 5.0 * V * lo[s, 2], 5.0 * V * hi[s, 2]
        vo_lo = ve_lo + 2.0 * V * lo[s, 3]
        vo_hi = ve_hi + 2.0 * V * hi[s, 3]
        inv, idle, accel = _monitor_tris(ve_lo, ve_hi, gap_lo, gap_hi, vo_lo, vo_hi,
                                         T, L, V, Amin, Amax, Bmin, Bmax)
        if inv == TRI_FALSE:
            verdict[s] = SAFE
            continue

        # interval bound propagation through the network
        for i in range(in_dim):
            src = inp_src[i]
            if src < 0:
                cur_lo[i] = inp_const[i]
                cur_hi[i] = inp_const[i]
            else:
                cur_lo[i] = lo[s, src]
                cur_hi[i] = hi[s, src]
        for layer in range(n_layers):
            for o in range(out_dims[layer]):
                cacc = bp[layer, o]
                racc = 0.0
                for i in range(in_dims[layer]):
                    w = Wp[layer, o, i]
                    cacc += w * 0.5 * (cur_lo[i] + cur_hi[i])
                    racc += abs(w) * 0.5 * (cur_hi[i] - cur_lo[i])
                nlo = cacc - racc
                nhi = cacc + racc
                if acts[layer] == 1:
                    nlo = nlo if nlo > 0.0 else 0.0
                    nhi = nhi if nhi > 0.0 else 0.0
                nxt_lo[o] = nlo
                nxt_hi[o] = nhi
            for o in range(out_dims[layer]):
                cur_lo[o] = nxt_lo[o]
                cur_hi[o] = nxt_hi[o]

        p_brake = cur_hi[0] >= cur_lo[1] and cur_hi[0] >= cur_lo[2]
        p_idle = cur_hi[1] > cur_lo[0] and cur_hi[1] >= cur_lo[2]
        p_accel = cur_hi[2] > cur_lo[0] and cur_hi[2] > cur_lo[1]

        all_ok = True
        if p_idle and idle != TRI_TRUE:
            all_ok = False
        if p_accel and accel != TRI_TRUE:
            all_ok = False
        if all_ok:
            verdict[s] = SAFE
            continue

        if inv == TRI_TRUE:
            mask = 0
            if p_idle and idle == TRI_FALSE:
                mask |= 2
            if p_accel and accel == TRI_FALSE:
                mask |= 4
            if mask != 0:
                verdict[s] = CANDIDATE
                cand_mask[s] = mask
                continue

        best = -1.0
        bdim = -1
        for j in range(d):
            if active[j]:
                w = hi[s, j] - lo[s, j]
                if w > best:
                    best = w
                    bdim = j
        if bdim < 0 or best < eps:
            verdict[s] = TOO_SMALL
        else:
            verdict[s] = SPLIT
            split_dim[s] = bdim


def _sq_iv_np(lo, hi):
    s_lo = np.where(lo >= 0, lo * lo, np.where(hi <= 0, hi * hi, 0.0))
    s_hi = np.maximum(lo * lo, hi * hi)
    return s_lo, s_hi


def _tri_gt0_np(lo, hi):
    return np.where(lo > 0, TRI_TRUE, np.where(hi <= 0, TRI_FALSE, TRI_UNKNOWN)).astype(np.int8)


def _tri_ge0_np(lo, hi):
    return np.where(lo >= 0, TRI_TRUE, np.where(hi < 0, TRI_FALSE, TRI_UNKNOWN)).astype(np.int8)


def _tri_and_np(a, b):
    out = np.where((a == TRI_FALSE) | (b == TRI_FALSE), TRI_FALSE,
                   np.where((a == TRI_UNKNOWN) | (b == TRI_UNKNOWN), TRI_UNKNOWN, TRI_TRUE))
    return out.astype(np.int8)


def _tri_or_np(a, b):
    out = np.where((a == TRI_TRUE) | (b == TRI_TRUE), TRI_TRUE,
                   np.where((a == TRI_UNKNOWN) | (b == TRI_UNKNOWN), TRI_UNKNOWN, TRI_FALSE))
    return out.astype(np.int8)


def _const_tri(flag, n):
    return np.full(n, TRI_TRUE if flag else TRI_FALSE, dtype=np.int8)


def _monitor_tris_np(ve_lo, ve_hi, gap_lo, gap_hi, vo_lo, vo_hi, c):
    T, L, V, Amin, Amax, Bmin, Bmax = c
    n = ve_lo.shape[0]
    se_lo, se_hi = _sq_iv_np(ve_lo, ve_hi)
    so_lo, so_hi = _sq_iv_np(vo_lo, vo_hi)
    eb_lo, eb_hi = se_hi / (2.0 * Bmin), se_lo / (2.0 * Bmin)
    ob_lo, ob_hi = so_hi / (2.0 * Bmax), so_lo / (2.0 * Bmax)

    ve_in = _tri_and_np(_tri_ge0_np(ve_lo, ve_hi), _tri_ge0_np(V - ve_hi, V - ve_lo))
    vo_in = _tri_and_np(_tri_ge0_np(vo_lo, vo_hi), _tri_ge0_np(V - vo_hi, V - vo_lo))
    sep = _tri_ge0_np(gap_lo - L, gap_hi - L)
    mb = _tri_gt0_np(gap_lo - L + eb_lo - ob_hi, gap_hi - L + eb_hi - ob_lo)
    inv = _tri_and_np(_tri_and_np(ve_in, vo_in), _tri_and_np(sep, mb))

    mi = _tri_gt0_np(gap_lo - L + eb_lo - T * ve_hi - ob_hi,
                     gap_hi - L + eb_hi - T * ve_lo - ob_lo)
    idle = _tri_and_np(_const_tri(Bmin <= 0.0 <= Amax, n),
                       _tri_and_np(_tri_ge0_np(ve_lo, ve_hi), mi))

    d1 = _tri_and_np(_const_tri(Bmax <= Amax <= Bmin, n), mb)
    g2_lo, g2_hi = ve_lo + Amax * T, ve_hi + Amax * T
    m2 = _tri_gt0_np(gap_lo - L + se_lo / (2.0 * Amax) - ob_hi,
                     gap_hi - L + se_hi / (2.0 * Amax) - ob_lo)
    d2 = _tri_and_np(_tri_gt0_np(-g2_hi, -g2_lo), m2)
    f = -Amax / Bmin + 1.0
    co_lo = f * (Amax / 2.0 * T * T + T * ve_lo)
    co_hi = f * (Amax / 2.0 * T * T + T * ve_hi)
    m3 = _tri_gt0_np(gap_lo - L + eb_lo - co_hi - ob_hi,
                     gap_hi - L + eb_hi - co_lo - ob_lo)
    d3 = _tri_and_np(_tri_ge0_np(g2_lo, g2_hi), m3)
    accel = _tri_or_np(d1, _tri_or_np(d2, d3))
    return inv, idle, accel


def _ibp_np(lo, hi, Wp, bp, acts, in_dims, out_dims, inp_src, inp_const):
    n = lo.shape[0]
    in_dim = inp_src.shape[0]
    x_lo = np.empty((n, in_dim))
    x_hi = np.empty((n, in_dim))
    const = inp_src < 0
    x_lo[:, const] = inp_const[const]
    x_hi[:, const] = inp_const[const]
    box_cols = inp_src[~const]
    x_lo[:, ~const] = lo[:, box_cols]
    x_hi[:, ~const] = hi[:, box_cols]
    for layer in range(Wp.shape[0]):
        W = Wp[layer, : out_dims[layer], : in_dims[layer]]
        b = bp[layer, : out_dims[layer]]
        ctr = 0.5 * (x_lo[:, : in_dims[layer]] + x_hi[:, : in_dims[layer]])
        rad = 0.5 * (x_hi[:, : in_dims[layer]] - x_lo[:, : in_dims[layer]])
        cz = ctr @ W.T + b
        rz = rad @ np.abs(W).T
        x_lo = cz - rz
        x_hi = cz + rz
        if acts[layer] == 1:
            np.maximum(x_lo, 0.0, out=x_lo)
            np.maximum(x_hi, 0.0, out=x_hi)
    return x_lo, x_hi


def _frontier_np(lo, hi, Wp, bp, acts, in_dims, out_dims,
                 inp_src, inp_const, active,
                 T, L, V, Amin, Amax, Bmin, Bmax, eps, k,
                 verdict, split_dim, cand_mask):
    n, d = lo.shape
    verdict[:] = SPLIT
    split_dim[:] = -1
    cand_mask[:] = 0

    pruned = np.zeros(n, dtype=bool)
    rel = L / (5.0 * V)
    for j in range(3, k + 1):
        px = 2 * (j - 1) - 2
        cx = 2 * j - 2
        pruned |= lo[:, px] + rel > hi[:, cx]
        pruned |= lo[:, px + 1] > hi[:, cx + 1]

    ve_lo, ve_hi = 2.0 * V * lo[:, 1], 2.0 * V * hi[:, 1]
    gap_lo, gap_hi = 5.0 * V * lo[:, 2], 5.0 * V * hi[:, 2]
    vo_lo = ve_lo + 2.0 * V * lo[:, 3]
    vo_hi = ve_hi + 2.0 * V * hi[:, 3]
    inv, idle, accel = _monitor_tris_np(ve_lo, ve_hi, gap_lo, gap_hi, vo_lo, vo_hi,
                                        (T, L, V, Amin, Amax, Bmin, Bmax))

    y_lo, y_hi = _ibp_np(lo, hi, Wp, bp, acts, in_dims, out_dims, inp_src, inp_const)
    p_brake = (y_hi[:, 0] >= y_lo[:, 1]) & (y_hi[:, 0] >= y_lo[:, 2])  # noqa: F841
    p_idle = (y_hi[:, 1] > y_lo[:, 0]) & (y_hi[:, 1] >= y_lo[:, 2])
    p_accel = (y_hi[:, 2] > y_lo[:, 0]) & (y_hi[:, 2] > y_lo[:, 1])

    all_ok = ~(p_idle & (idle != TRI_TRUE)) & ~(p_accel & (accel != TRI_TRUE))
    mask = (np.where(p_idle & (idle == TRI_FALSE), 2, 0)
            | np.where(p_accel & (accel == TRI_FALSE), 4, 0)).astype(np.int8)
    is_cand = (inv == TRI_TRUE) & (mask != 0) & ~all_ok

    widths = np.where(active[None, :], hi - lo, -1.0)
    bdim = np.argmax(widths, axis=1)
    bwidth = widths[np.arange(n), bdim]
    too_small = bwidth < eps

    verdict[:] = np.select(
        [pruned, inv == TRI_FALSE, all_ok, is_cand, too_small],
        [PRUNED, SAFE, SAFE, CANDIDATE, TOO_SMALL],
        default=SPLIT,
    ).astype(np.int8)
    split_dim[:] = np.where(verdict == SPLIT, bdim, -1).astype(np.int32)
    cand_mask[:] = np.where(verdict == CANDIDATE, mask, 0).astype(np.int8)


def frontier_step(lo, hi, net_pack, emb_pack, consts, eps: float, active, k: int):
    """Classify a batch of boxes: safe / split / candidate / too small / pruned.

    net_pack = (Wp, bp, acts, in_dims, out_dims) with zero-padded stacked
    layers; emb_pack = (inp_src, inp_const) mapping network inputs to box
    dimensions (src < 0 means the constant from inp_const); consts is the
    (T, L, V, Amin, Amax, Bmin, Bmax) tuple; active marks the box dimensions
    eligible for splitting.  Returns (verdict, split_dim, cand_mask) arrays.
    """
    lo = np.ascontiguousarray(lo, dtype=float)
    hi = np.ascontiguousarray(hi, dtype=float)
    n = lo.shape[0]
    verdict = np.empty(n, dtype=np.int8)
    split_dim = np.empty(n, dtype=np.int32)
    cand_mask = np.empty(n, dtype=np.int8)
    Wp, bp, acts, in_dims, out_dims = net_pack
    inp_src, inp_const = emb_pack
    T, L, V, Amin, Amax, Bmin, Bmax = consts
    fn = _frontier_jit if USE_NUMBA else _frontier_np
    fn(lo, hi, Wp, bp, acts, in_dims, out_dims, inp_src, inp_const,
       np.ascontiguousarray(active, dtype=np.bool_),
       float(T), float(L), float(V), float(Amin), float(Amax), float(Bmin), float(Bmax),
       float(eps), int(k), verdict, split_dim, cand_mask)
    return verdict, split_dim, cand_mask


def backend() -> str:
    """Name of the kernel path in use ("numba" or "numpy")."""
    return "numba" if USE_NUMBA else "numpy"
