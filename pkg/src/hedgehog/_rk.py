"""Compiled DOP853 stepper for the hedgehog ODE with event location.

The Butcher tableau and error weights are taken from scipy's DOP853
implementation; the stepping loop is compiled so that the thousands of
trajectories needed by bisection stay cheap.  Steps are clamped to land
exactly on requested output radii, so no dense interpolant is needed.
"""

from __future__ import annotations

import numpy as np
from numba import njit
from scipy.integrate._ivp import dop853_coefficients as _dc

_NS = _dc.N_STAGES
_A = np.ascontiguousarray(_dc.A[:_NS, :_NS], dtype=np.float64)
_B = np.ascontiguousarray(_dc.B, dtype=np.float64)
_C = np.ascontiguousarray(_dc.C[:_NS], dtype=np.float64)
_E3 = np.ascontiguousarray(_dc.E3, dtype=np.float64)
_E5 = np.ascontiguousarray(_dc.E5, dtype=np.float64)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0

# stop-event bits
EV_STATIONARY = 1
EV_OVERSHOOT = 2
EV_NEGATIVE = 4

# status codes
ST_END = 0
ST_STATIONARY = 1
ST_OVERSHOOT = 2
ST_NEGATIVE = 3
ST_UNDERFLOW = -1
ST_MAXSTEPS = -2


@njit(cache=True)
def _f(r, h, dh, k):
    return -2.0 * dh / r + 6.0 * h / (r * r) - h + h * h * h + k * (h * h * h - h * h)


@njit(cache=True)
def _step(r, h, dh, f0h, f0d, H, k, Kh, Kd):
    """One DOP853 step; returns (h_new, dh_new, err5_h, err5_d, err3_h, err3_d)."""
    Kh[0] = f0h
    Kd[0] = f0d
    for s in range(1, _NS):
        ah = 0.0
        ad = 0.0
        for j in range(s):
            ah += _A[s, j] * Kh[j]
            ad += _A[s, j] * Kd[j]
        hs = h + H * ah
        ds = dh + H * ad
        Kh[s] = ds
        Kd[s] = _f(r + _C[s] * H, hs, ds, k)
    bh = 0.0
    bd = 0.0
    for j in range(_NS):
        bh += _B[j] * Kh[j]
        bd += _B[j] * Kd[j]
    h_new = h + H * bh
    dh_new = dh + H * bd
    Kh[_NS] = dh_new
    Kd[_NS] = _f(r + H, h_new, dh_new, k)
    e5h = 0.0
    e5d = 0.0
    e3h = 0.0
    e3d = 0.0
    for j in range(_NS + 1):
        e5h += _E5[j] * Kh[j]
        e5d += _E5[j] * Kd[j]
        e3h += _E3[j] * Kh[j]
        e3d += _E3[j] * Kd[j]
    return h_new, dh_new, e5h, e5d, e3h, e3d


@njit(cache=True)
def _event_value(which, h, dh, margin):
    if which == ST_STATIONARY:
        return dh
    if which == ST_OVERSHOOT:
        return (1.0 + margin) - h
    return h  # ST_NEGATIVE


@njit(cache=True)
def _locate(which, r, h, dh, f0h, f0d, H, k, margin, Kh, Kd):
    """Bisect the sub-step length at which the event function changes sign."""
    lo = 0.0
    hi = 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        hn, dn, _a, _b, _c, _d = _step(r, h, dh, f0h, f0d, mid * H, k, Kh, Kd)
        if _event_value(which, hn, dn, margin) > 0.0:
            lo = mid
        else:
            hi = mid
    hn, dn, _a, _b, _c, _d = _step(r, h, dh, f0h, f0d, hi * H, k, Kh, Kd)
    return r + hi * H, hn, dn


@njit(cache=True)
def run(r0, h0, dh0, r_end, k, rtol, atol, out_r, stop_mask, margin, max_steps, first_step):
    """Integrate from ``r0`` to ``r_end`` or to the first enabled event.

    Returns ``(status, r_stop, h_stop, dh_stop, h_out, dh_out, n_out, n_steps, n_rejected)``.
    Output radii must be sorted and lie in ``(r0, r_end]``; entries past the
    stopping radius are left as NaN.
    """
    n_out = out_r.shape[0]
    h_out = np.full(n_out, np.nan)
    dh_out = np.full(n_out, np.nan)
    Kh = np.empty(_NS + 1)
    Kd = np.empty(_NS + 1)
    r = r0
    h = h0
    dh = dh0
    fd = _f(r, h, dh, k)
    H_abs = first_step
    i_out = 0
    n_steps = 0
    n_rej = 0
    exponent = -1.0 / 8.0
    while r < r_end:
        if n_steps >= max_steps:
            return ST_MAXSTEPS, r, h, dh, h_out, dh_out, i_out, n_steps, n_rej
        target = r_end
        if i_out < n_out:
            target = out_r[i_out]
        min_step = 10.0 * (np.nextafter(r, np.inf) - r)
        rejected = False
        while True:
            if H_abs < min_step:
                return ST_UNDERFLOW, r, h, dh, h_out, dh_out, i_out, n_steps, n_rej
            H = H_abs
            landing = False
            if r + H >= target:
                H = target - r
                landing = True
            hn, dn, e5h, e5d, e3h, e3d = _step(r, h, dh, dh, fd, H, k, Kh, Kd)
            sh = atol + max(abs(h), abs(hn)) * rtol
            sd = atol + max(abs(dh), abs(dn)) * rtol
            e5 = (e5h / sh) ** 2 + (e5d / sd) ** 2
            e3 = (e3h / sh) ** 2 + (e3d / sd) ** 2
            if e5 == 0.0 and e3 == 0.0:
                err = 0.0
            else:
                err = abs(H) * e5 / np.sqrt((e5 + 0.01 * e3) * 2.0)
            if err < 1.0:
                if err == 0.0:
                    factor = MAX_FACTOR
                else:
                    factor = min(MAX_FACTOR, SAFETY * err**exponent)
                if rejected:
                    factor = min(1.0, factor)
                if not landing:
                    H_abs = H_abs * factor
                else:
                    H_abs = max(H_abs, H * factor) if factor < 1.0 else H_abs
                break
            H_abs = H_abs * max(MIN_FACTOR, SAFETY * err**exponent)
            rejected = True
            n_rej += 1
        n_steps += 1
        # event checks on the accepted step
        best = 0
        best_r = np.inf
        best_h = 0.0
        best_d = 0.0
        if (stop_mask & EV_STATIONARY) and dh > 0.0 and dn <= 0.0:
            re, he, de = _locate(ST_STATIONARY, r, h, dh, dh, fd, H, k, margin, Kh, Kd)
            if re < best_r:
                best, best_r, best_h, best_d = ST_STATIONARY, re, he, de
        if (stop_mask & EV_OVERSHOOT) and hn > 1.0 + margin and h <= 1.0 + margin and dn > 0.0:
            re, he, de = _locate(ST_OVERSHOOT, r, h, dh, dh, fd, H, k, margin, Kh, Kd)
            if re < best_r:
                best, best_r, best_h, best_d = ST_OVERSHOOT, re, he, de
        if (stop_mask & EV_NEGATIVE) and hn < 0.0 and h >= 0.0:
            re, he, de = _locate(ST_NEGATIVE, r, h, dh, dh, fd, H, k, margin, Kh, Kd)
            if re < best_r:
                best, best_r, best_h, best_d = ST_NEGATIVE, re, he, de
        if best != 0:
            return best, best_r, best_h, best_d, h_out, dh_out, i_out, n_steps, n_rej
        r = target if landing else r + H
        h = hn
        dh = dn
        fd = _f(r, h, dh, k)
        if landing and i_out < n_out and r == out_r[i_out]:
            h_out[i_out] = h
            dh_out[i_out] = dh
            i_out += 1
    return ST_END, r, h, dh, h_out, dh_out, i_out, n_steps, n_rej
