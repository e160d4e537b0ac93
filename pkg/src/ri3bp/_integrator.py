"""Adaptive DOP853 kernel for the radial equation of the isosceles problem.

The independent variable is the primaries' eccentric anomaly ``v`` (time is
``t = v - sin v``), in which ``rho = sin^2(v/2)`` is analytic and the field is
smooth across the primaries' collisions. In two-body test mode the variable is
time itself. The state is ``(r, y)`` in the polar chart or ``(x, y)`` with
``r = 2/x^2`` in the McGehee chart; the kernel switches charts with hysteresis.
"""

import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _dop

from ._jit import njit

N_STAGES = 12
_A = np.ascontiguousarray(_dop.A[:N_STAGES, :N_STAGES])
_B = np.ascontiguousarray(_dop.B)
_C = np.ascontiguousarray(_dop.C[:N_STAGES])
_E3 = np.ascontiguousarray(_dop.E3)
_E5 = np.ascontiguousarray(_dop.E5)

# termination codes
DONE = 0
HIT_R_HIGH = 1
TURNED = 2
COLLAPSE = 3
UNDERFLOW = 4
MAX_STEPS = 5
HIT_R_LOW = 6

POLAR = 0
MCGEHEE = 1


@njit
def rhs(v, z0, z1, chart, G, twobody):
    if twobody:
        dtdv = 1.0
        rho2 = 0.0
    else:
        s = np.sin(0.5 * v)
        rho = s * s
        dtdv = 2.0 * rho
        rho2 = rho * rho
    if chart == POLAR:
        r = z0
        d = r * r + rho2
        acc = G * G / (r * r * r) - r / (d * np.sqrt(d))
        return dtdv * z1, dtdv * acc
    x2 = z0 * z0
    x4 = x2 * x2
    w = 1.0 + 0.25 * x4 * rho2
    dx = -0.25 * x2 * z0 * z1
    dy = -0.25 * x4 / (w * np.sqrt(w)) + 0.125 * x4 * x2 * G * G
    return dtdv * dx, dtdv * dy


@njit
def _step(v, z0, z1, f0, f1, h, chart, G, twobody, K):
    K[0, 0] = f0
    K[0, 1] = f1
    for s in range(1, N_STAGES):
        a0 = 0.0
        a1 = 0.0
        for j in range(s):
            a0 += _A[s, j] * K[j, 0]
            a1 += _A[s, j] * K[j, 1]
        k0, k1 = rhs(v + _C[s] * h, z0 + h * a0, z1 + h * a1, chart, G, twobody)
        K[s, 0] = k0
        K[s, 1] = k1
    b0 = 0.0
    b1 = 0.0
    for j in range(N_STAGES):
        b0 += _B[j] * K[j, 0]
        b1 += _B[j] * K[j, 1]
    n0 = z0 + h * b0
    n1 = z1 + h * b1
    g0, g1 = rhs(v + h, n0, n1, chart, G, twobody)
    K[N_STAGES, 0] = g0
    K[N_STAGES, 1] = g1
    return n0, n1, g0, g1


@njit
def _error_norm(z0, z1, n0, n1, h, rtol, atol, K):
    e50 = 0.0
    e51 = 0.0
    e30 = 0.0
    e31 = 0.0
    for j in range(N_STAGES + 1):
        e50 += _E5[j] * K[j, 0]
        e51 += _E5[j] * K[j, 1]
        e30 += _E3[j] * K[j, 0]
        e31 += _E3[j] * K[j, 1]
    sc0 = atol + rtol * max(abs(z0), abs(n0))
    sc1 = atol + rtol * max(abs(z1), abs(n1))
    err5 = (e50 / sc0) ** 2 + (e51 / sc1) ** 2
    err3 = (e30 / sc0) ** 2 + (e31 / sc1) ** 2
    if err5 == 0.0 and err3 == 0.0:
        return 0.0
    return abs(h) * err5 / np.sqrt((err5 + 0.01 * err3) * 2.0)


@njit
def _radius(z0, chart):
    if chart == POLAR:
        return z0
    return 2.0 / (z0 * z0)


@njit
def _initial_step(v, z0, z1, f0, f1, chart, G, twobody, rtol, atol, direction, span):
    sc0 = atol + rtol * abs(z0)
    sc1 = atol + rtol * abs(z1)
    d0 = np.sqrt(0.5 * ((z0 / sc0) ** 2 + (z1 / sc1) ** 2))
    d1 = np.sqrt(0.5 * ((f0 / sc0) ** 2 + (f1 / sc1) ** 2))
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, span)
    g0, g1 = rhs(v + direction * h0, z0 + direction * h0 * f0, z1 + direction * h0 * f1, chart, G, twobody)
    d2 = np.sqrt(0.5 * (((g0 - f0) / sc0) ** 2 + ((g1 - f1) / sc1) ** 2)) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 8.0)
    return min(100.0 * h0, h1, span)


@njit
def propagate(r0, y0, v0, v1, G, twobody, rtol, atol, r_switch, hysteresis,
              r_floor, r_low, r_high, stop_on_turn, max_steps, grid, record):
    """Integrate from ``v0`` toward ``v1`` (either direction).

    ``grid`` lists output abscissae (monotone in the direction of travel,
    strictly between ``v0`` and ``v1`` or equal to them); steps are clipped to
    land on them. Stops early on the events encoded by the status codes.
    Returns ``(status, v, r, y, n_accept, n_reject, grid_r, grid_y, n_grid,
    rec_v, rec_r, rec_y, n_rec)``.
    """
    direction = 1.0 if v1 >= v0 else -1.0
    span_total = abs(v1 - v0)
    chart = POLAR
    z0 = r0
    z1 = y0
    if r0 > r_switch:
        chart = MCGEHEE
        z0 = np.sqrt(2.0 / r0)
    ng = grid.shape[0]
    grid_r = np.full(ng, np.nan)
    grid_y = np.full(ng, np.nan)
    cap = 1024 if record else 1
    rec_v = np.empty(cap)
    rec_r = np.empty(cap)
    rec_y = np.empty(cap)
    n_rec = 0
    if record:
        rec_v[0] = v0
        rec_r[0] = r0
        rec_y[0] = y0
        n_rec = 1
    K = np.empty((N_STAGES + 1, 2))
    v = v0
    gi = 0
    while gi < ng and (grid[gi] - v0) * direction <= 0.0:
        grid_r[gi] = r0
        grid_y[gi] = y0
        gi += 1
    f0, f1 = rhs(v, z0, z1, chart, G, twobody)
    if span_total == 0.0:
        return (DONE, v, r0, y0, 0, 0, grid_r, grid_y, gi, rec_v, rec_r, rec_y, n_rec)
    h = _initial_step(v, z0, z1, f0, f1, chart, G, twobody, rtol, atol, direction, span_total)
    err_prev = 1e-4
    n_acc = 0
    n_rej = 0
    status = MAX_STEPS
    yd_prev = direction * y0
    while True:
        remaining = (v1 - v) * direction
        if remaining <= 0.0:
            status = DONE
            break
        target = v1
        if gi < ng:
            target = grid[gi]
        dist = (target - v) * direction
        clipped = False
        h_try = h
        if h_try >= dist:
            h_try = dist
            clipped = True
        if h_try <= 1e-14 * max(1.0, abs(v)):
            if clipped and dist <= 1e-14 * max(1.0, abs(v)):
                # target numerically coincides with v: snap to it
                v = target
                if gi < ng and target == grid[gi]:
                    rr = _radius(z0, chart)
                    grid_r[gi] = rr
                    grid_y[gi] = z1
                    gi += 1
                continue
            status = UNDERFLOW
            break
        hs = direction * h_try
        n0, n1, g0, g1 = _step(v, z0, z1, f0, f1, hs, chart, G, twobody, K)
        err = _error_norm(z0, z1, n0, n1, hs, rtol, atol, K)
        if not (err <= 1.0) or (chart == POLAR and n0 <= 0.0) or (chart == MCGEHEE and n0 <= 0.0):
            n_rej += 1
            if err != err or err > 1e300:
                fac = 0.2
            else:
                fac = max(0.2, 0.9 * err ** (-1.0 / 8.0))
            h = h_try * fac
            continue
        # accepted
        n_acc += 1
        if clipped:
            v = target
        else:
            v = v + hs
        z0 = n0
        z1 = n1
        f0 = g0
        f1 = g1
        if err == 0.0:
            fac = 5.0
        else:
            fac = 0.9 * err ** (-0.7 / 8.0) * err_prev ** (0.4 / 8.0)
            fac = min(5.0, max(0.2, fac))
        err_prev = max(err, 1e-4)
        h_new = h_try * fac
        if clipped:
            h = max(h, h_new)
        else:
            h = h_new
        r_cur = _radius(z0, chart)
        if chart == POLAR and r_cur > r_switch * (1.0 + hysteresis):
            chart = MCGEHEE
            z0 = np.sqrt(2.0 / r_cur)
            f0, f1 = rhs(v, z0, z1, chart, G, twobody)
        elif chart == MCGEHEE and r_cur < r_switch / (1.0 + hysteresis):
            chart = POLAR
            z0 = r_cur
            f0, f1 = rhs(v, z0, z1, chart, G, twobody)
        if clipped and gi < ng and v == grid[gi]:
            grid_r[gi] = r_cur
            grid_y[gi] = z1
            gi += 1
        if record:
            if n_rec >= cap:
                cap *= 2
                nv = np.empty(cap)
                nr = np.empty(cap)
                ny = np.empty(cap)
                nv[:n_rec] = rec_v[:n_rec]
                nr[:n_rec] = rec_r[:n_rec]
                ny[:n_rec] = rec_y[:n_rec]
                rec_v = nv
                rec_r = nr
                rec_y = ny
            rec_v[n_rec] = v
            rec_r[n_rec] = r_cur
            rec_y[n_rec] = z1
            n_rec += 1
        yd = direction * z1
        if r_cur < r_floor:
            status = COLLAPSE
            break
        if r_cur >= r_high:
            status = HIT_R_HIGH
            break
        if r_cur <= r_low:
            status = HIT_R_LOW
            break
        if stop_on_turn and yd_prev > 0.0 and yd <= 0.0:
            status = TURNED
            break
        yd_prev = yd
        if n_acc >= max_steps:
            status = MAX_STEPS
            break
    r_end = _radius(z0, chart)
    return (status, v, r_end, z1, n_acc, n_rej, grid_r, grid_y, gi, rec_v, rec_r, rec_y, n_rec)
