"""Jitted drivers for the coupled clock system.

Parameter vector layout follows ``model.PARAM_FIELDS`` plus one trailing
slot holding the current light level. Light modes: 0 = LD, 1 = DD, 2 = LL.
Integrator config vector: ``(rel_tol, abs_tol, max_step, event_tol)``.
"""
import math

import numpy as np
from numba import njit, prange

from ._dopri import FAC_MIN, SAFETY, dense, dense_component, error_norm, finish, stage_state, stage_time, step_factor

LD, DD, LL = 0, 1, 2
OK, STIFF, NO_RETURN, DEGENERATE = 0, 1, 2, 3
TWO_PI = 2.0 * math.pi


@njit(cache=True)
def cnt_deriv(t, u, a):
    P1, M1, P2, M2 = u[0], u[1], u[2], u[3]
    f = a[10]
    h1 = P1 / (0.1 + P1 + 2.0 * P1 * P1)
    h2 = P2 / (0.1 + P2 + 2.0 * P2 * P2)
    g1 = 1.0 / (1.0 + P1 ** 4)
    g2 = 1.0 / (1.0 + P2 ** 4)
    out = np.empty(4)
    out[0] = a[0] * (M1 - a[4] * h1 - a[5] * P1 - a[6] * f * P1)
    out[1] = a[0] * a[2] * (g1 - M1)
    out[2] = a[1] * (M2 - a[4] * h2 - a[5] * P2 - a[7] * f * P2)
    out[3] = a[1] * a[3] * (g2 - M2 + a[8] * M1 * g2)
    return out


@njit(cache=True)
def cnt_step(t, y, h, k1, a, t_end_stage):
    """Dormand-Prince step specialised to ``cnt_deriv`` (same tableau helpers)."""
    K = np.empty((7, y.shape[0]))
    K[0] = k1
    for s in range(1, 7):
        K[s] = cnt_deriv(stage_time(t, h, s, t_end_stage), stage_state(y, h, K, s), a)
    y_new = stage_state(y, h, K, 6)
    err, cont = finish(y, y_new, h, K)
    return y_new, K[6], err, cont


@njit(cache=True)
def light_segment(t, photoperiod, mode):
    """Light level at ``t`` and the absolute time of the next switch."""
    if mode == DD:
        return 0.0, np.inf
    if mode == LL:
        return 1.0, np.inf
    day = math.floor(t / 24.0) * 24.0
    t_mod = t - day
    if t_mod < photoperiod:
        nxt = day + photoperiod
        if nxt - t > 1e-12:
            return 1.0, nxt
        return 0.0, day + 24.0
    nxt = day + 24.0
    if nxt - t > 1e-12:
        return 0.0, nxt
    return 1.0, nxt + photoperiod


@njit(cache=True)
def wrap_pi(d):
    while d > math.pi:
        d -= TWO_PI
    while d <= -math.pi:
        d += TWO_PI
    return d


@njit(cache=True)
def drive(u0, t0, t_max, a_in, mode, cfg, sec, max_hits, frame, sample_dt, n_samples):
    """Integrate from ``(u0, t0)`` up to ``t_max``.

    ``sec = (component, level, direction, guard)`` defines a directional
    crossing; integration stops after ``max_hits`` crossings (0 = never).
    ``frame = (origin_P, origin_M, orientation)`` enables O1 winding
    tracking when orientation is non-zero. ``n_samples`` states are
    recorded at ``t0 + i * sample_dt``.

    Returns ``(status, t_end, u_end, hit_t, hit_u, hit_w, n_hits, samples)``
    where ``hit_w`` is the oriented O1 angle swept since the previous hit.
    """
    a = a_in.copy()
    rtol, atol, hmax, etol = cfg[0], cfg[1], cfg[2], cfg[3]
    idx = int(sec[0])
    level = sec[1]
    direction = sec[2]
    guard = sec[3]
    oP, oM, orient = frame[0], frame[1], frame[2]
    track = orient != 0.0
    hit_t = np.zeros(max(max_hits, 1))
    hit_u = np.zeros((max(max_hits, 1), 4))
    hit_w = np.zeros(max(max_hits, 1))
    samples = np.zeros((n_samples, 4))
    n_hits = 0
    si = 0
    y = u0.copy()
    t = t0
    if n_samples > 0:
        samples[0] = y
        si = 1
    theta_prev = math.atan2(y[1] - oM, y[0] - oP) if track else 0.0
    wind = 0.0
    last_hit = t0
    h = min(hmax, 0.01)
    hmin = 1e-12 * max(1.0, abs(t_max))
    while t < t_max:
        f, t_sw = light_segment(t, a[9], mode)
        a[10] = f
        seg_end = min(t_sw, t_max)
        k1 = cnt_deriv(t, y, a)
        err_old = 1e-4
        while t < seg_end:
            h = min(h, hmax)
            last = False
            if t + h >= seg_end:
                h = seg_end - t
                last = True
            t_stage = np.nextafter(seg_end, -np.inf) if last else t + h
            y_new, k7, err_vec, cont = cnt_step(t, y, h, k1, a, t_stage)
            err = error_norm(err_vec, y, y_new, rtol, atol)
            if not err <= 1.0:  # NaN from an overflowing step counts as a rejection
                h *= max(FAC_MIN, SAFETY * err ** -0.2) if err < np.inf else FAC_MIN
                if h < hmin:
                    return STIFF, t, y, hit_t, hit_u, hit_w, n_hits, samples
                continue
            t_new = seg_end if last else t + h
            while si < n_samples and t0 + si * sample_dt <= t_new:
                samples[si] = dense(cont, (t0 + si * sample_dt - t) / h)
                si += 1
            if max_hits > 0:
                g0 = y[idx] - level
                g1 = y_new[idx] - level
                crossed = (direction >= 0 and g0 < 0.0 <= g1) or (direction <= 0 and g0 > 0.0 >= g1)
                if crossed:
                    lo, hi = 0.0, 1.0
                    glo = g0
                    while (hi - lo) * h > etol:
                        mid = 0.5 * (lo + hi)
                        gm = dense_component(cont, mid, idx) - level
                        if (glo < 0.0) == (gm < 0.0) and gm != 0.0:
                            lo, glo = mid, gm
                        else:
                            hi = mid
                    te = t + hi * h
                    if te - last_hit >= guard:
                        ue = dense(cont, hi)
                        if track:
                            th = math.atan2(ue[1] - oM, ue[0] - oP)
                            wind += wrap_pi(th - theta_prev)
                            theta_prev = th
                        hit_t[n_hits] = te
                        hit_u[n_hits] = ue
                        hit_w[n_hits] = wind * orient
                        wind = 0.0
                        n_hits += 1
                        last_hit = te
                        if n_hits == max_hits:
                            return OK, te, ue, hit_t, hit_u, hit_w, n_hits, samples
            if track:
                th = math.atan2(y_new[1] - oM, y_new[0] - oP)
                wind += wrap_pi(th - theta_prev)
                theta_prev = th
            t = t_new
            y = y_new
            k1 = k7
            h = h * step_factor(err, err_old)
            err_old = max(err, 1e-4)
    status = NO_RETURN if max_hits > 0 else OK
    return status, t, y, hit_t, hit_u, hit_w, n_hits, samples


@njit(cache=True)
def frame_angle(P, M, frame):
    """Angle in (0, 2*pi] of ``(P, M)`` in the rotated, oriented frame."""
    th = frame[2] * (math.atan2(M - frame[1], P - frame[0]) - frame[3])
    th = th % TWO_PI
    if th <= 0.0:
        th += TWO_PI
    return th


@njit(cache=True)
def phase_lookup(theta, theta_table, phase_step):
    """Invert a monotone unrolled angle table (starting at 0, ending at 2*pi)."""
    j = np.searchsorted(theta_table, theta, side="right") - 1
    n = theta_table.shape[0]
    if j < 0:
        j = 0
    if j >= n - 1:
        j = n - 2
    d = theta_table[j + 1] - theta_table[j]
    frac = (theta - theta_table[j]) / d if d > 0 else 0.0
    x = (j + frac) * phase_step
    return x


@njit(cache=True)
def on_cycle_state(x, cyc, cyc_dt, a, cfg):
    """O1 state at phase ``x`` (hours after lights-on) of the LD cycle."""
    n = cyc.shape[0]
    xm = x % 24.0
    i = int(xm / cyc_dt)
    if i >= n:
        i = n - 1
    ti = i * cyc_dt
    u = np.empty(4)
    u[0] = cyc[i, 0]
    u[1] = cyc[i, 1]
    u[2] = 1.0
    u[3] = 0.5
    if xm - ti > 1e-13:
        dummy_sec = np.array([0.0, 0.0, 0.0, 0.0])
        frame0 = np.zeros(3)
        res = drive(u, ti, xm, a, LD, cfg, dummy_sec, 0, frame0, 0.0, 0)
        u = res[2]
    return u[0], u[1]


@njit(cache=True)
def map2d_eval(x, y, a, mode, cfg, sec, o2_start, t_window, cyc, cyc_dt, theta_table, frame):
    """One application of the 2-D map.

    ``frame = (origin_P, origin_M, orientation, rotation)``; ``o2_start`` is
    the O2 point placed on the section. Returns
    ``(status, x_next, y_next, rho, winding, M2_hit, P1_hit, M1_hit)``.
    """
    P1, M1 = on_cycle_state(x, cyc, cyc_dt, a, cfg)
    u0 = np.empty(4)
    u0[0] = P1
    u0[1] = M1
    u0[2] = o2_start[0]
    u0[3] = o2_start[1]
    t0 = y
    fr = np.array([frame[0], frame[1], frame[2]])
    res = drive(u0, t0, t0 + t_window, a, mode, cfg, sec, 1, fr, 0.0, 0)
    status = res[0]
    if status != OK:
        return status, np.nan, np.nan, np.nan, np.nan, np.nan, np.nan, np.nan
    te = res[3][0]
    ue = res[4][0]
    w = res[5][0]
    rho = te - t0
    y_next = (y + rho) % 24.0
    if y_next <= 0.0:
        y_next += 24.0
    dP = ue[0] - frame[0]
    dM = ue[1] - frame[1]
    if dP * dP + dM * dM < 1e-24:
        return DEGENERATE, np.nan, y_next, rho, w, ue[3], ue[0], ue[1]
    th = frame_angle(ue[0], ue[1], frame)
    x_next = phase_lookup(th, theta_table, 24.0 / (theta_table.shape[0] - 1))
    if x_next <= 0.0:
        x_next += 24.0
    return OK, x_next, y_next, rho, w, ue[3], ue[0], ue[1]


@njit(cache=True)
def map1d_nt_eval(y, a, cfg, sec, start, t_window):
    """Single oscillator map; the oscillator occupies the O1 slot."""
    u0 = np.empty(4)
    u0[0] = start[0]
    u0[1] = start[1]
    u0[2] = start[0]
    u0[3] = start[1]
    res = drive(u0, y, y + t_window, a, LD, cfg, sec, 1, np.zeros(3), 0.0, 0)
    if res[0] != OK:
        return res[0], np.nan, np.nan
    rho = res[3][0] - y
    y_next = (y + rho) % 24.0
    if y_next <= 0.0:
        y_next += 24.0
    return OK, y_next, rho


@njit(cache=True, parallel=True)
def map2d_grid(xs, ys, a, mode, cfg, sec, o2_start, t_window, cyc, cyc_dt, theta_table, frame):
    """Evaluate the map at every ``(xs[k], ys[k])``; rows of the output are
    ``(status, x_next, y_next, rho, winding, M2_hit)``."""
    n = xs.shape[0]
    out = np.empty((n, 6))
    for k in prange(n):
        r = map2d_eval(xs[k], ys[k], a, mode, cfg, sec, o2_start, t_window, cyc, cyc_dt, theta_table, frame)
        out[k, 0] = r[0]
        out[k, 1] = r[1]
        out[k, 2] = r[2]
        out[k, 3] = r[3]
        out[k, 4] = r[4]
        out[k, 5] = r[5]
    return out


@njit(cache=True)
def torus_dist(x0, y0, x1, y1):
    dx = (x1 - x0 + 12.0) % 24.0 - 12.0
    dy = (y1 - y0 + 12.0) % 24.0 - 12.0
    return math.sqrt(dx * dx + dy * dy)


@njit(cache=True)
def iterate_one(x, y, tx, ty, radius, max_iters, a, mode, cfg, sec, o2_start, t_window, cyc, cyc_dt,
                theta_table, frame):
    """Iterate until within ``radius`` of ``(tx, ty)``.

    Returns ``(status, n_iter, total_time)``; status 0 entrained, 4 iteration
    cap reached, otherwise the integration failure code.
    """
    total = 0.0
    for n in range(max_iters + 1):
        if torus_dist(x, y, tx, ty) < radius:
            return 0, n, total
        if n == max_iters:
            break
        r = map2d_eval(x, y, a, mode, cfg, sec, o2_start, t_window, cyc, cyc_dt, theta_table, frame)
        if r[0] != OK:
            return int(r[0]), n, total
        x = r[1]
        y = r[2]
        total += r[3]
    return 4, max_iters, total


@njit(cache=True, parallel=True)
def iterate_grid(xs, ys, tx, ty, radius, max_iters, a, mode, cfg, sec, o2_start, t_window, cyc, cyc_dt,
                 theta_table, frame):
    n = xs.shape[0]
    out = np.empty((n, 3))
    for k in prange(n):
        r = iterate_one(xs[k], ys[k], tx, ty, radius, max_iters, a, mode, cfg, sec, o2_start, t_window,
                        cyc, cyc_dt, theta_table, frame)
        out[k, 0] = r[0]
        out[k, 1] = r[1]
        out[k, 2] = r[2]
    return out
