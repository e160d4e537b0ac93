"""Homoclinic orbits to infinity and near-infinity connecting arcs.

Homoclinics are located two ways: as zeros of the splitting function on the
section ``t = 0`` (shooting), and as critical points of the reduced action
(Newton on the discrete gradient). Connecting arcs solve the two-point
problem ``r(t0) = R0``, ``r(t0 + T) = R1`` in the far region.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .action import (DiscretizedPath, action_derivative, action_hessian, h1_norm_of_derivative,
                     inertia, reduced_action, smallest_eigenvalues, tridiagonal_solve)
from .dynamics import (DEFAULT_SETTINGS, ClassifyThresholds, PolarState, Trajectory,
                       final_motion, integrate, propagate_to)
from . import _integrator as _ig
from .errors import (ArcLeavesFarRegion, DomainError, MatchFail, NoSignChange, NonConverged,
                     NotHyperbolic, NoSolutionInBand, SingularJacobian)
from .kepler import TWO_PI, parabola_arrays, s0_generating
from .manifolds import (R_TABLE, SLOPE_TOL, splitting_curve, splitting_delta, stable_slope,
                        unstable_slope)

MATCH_EPS = 1e-6
R_MATCH = 30.0


# ---------------------------------------------------------------------------
# homoclinic by shooting


@dataclass
class HomoclinicOrbit:
    G: float
    r_star: float
    y_star: float
    trajectory: Trajectory
    pericenter_time: float
    min_r: float
    el_residual: float
    divergence: float
    match_errors: tuple
    twobody: bool = False
    bracket: tuple = None
    settings: object = DEFAULT_SETTINGS

    @property
    def section_state(self):
        return PolarState(self.r_star, self.y_star, 0.0, self.G)

    def sample(self, times):
        """Radius and velocity at arbitrary absolute times (re-integrated)."""
        times = np.asarray(times, dtype=float)
        r = np.empty(times.size)
        y = np.empty(times.size)
        st = self.settings.with_(twobody=self.twobody)
        fwd = times >= 0
        for mask, sign in ((fwd, 1), (~fwd, -1)):
            if not np.any(mask):
                continue
            ts = times[mask]
            span = ts.max() if sign > 0 else ts.min()
            if span == 0.0:
                r[mask], y[mask] = self.r_star, self.y_star
                continue
            tr = integrate(self.section_state, span, settings=st, sample_times=ts)
            order = np.argsort(np.argsort(ts))
            r[mask] = tr.r[order]
            y[mask] = tr.y[order]
        return r, y

    def default_shift(self):
        """Whole periods moving the pericenter closest to ``s = 0``."""
        return int(np.round(self.pericenter_time / TWO_PI))

    def restrict(self, half_width, h, G0=1.0, shift_periods=None):
        """Nodes of ``r_h(s + 2 pi k) - r0(s)`` on ``[-n, n]``."""
        k = self.default_shift() if shift_periods is None else int(shift_periods)
        path = DiscretizedPath.symmetric(half_width, h, 0.0, G0)
        r, _ = self.sample(path.s + TWO_PI * k)
        out = path.with_phi(r - path.reference.r0)
        out.flags["shift_periods"] = k
        return out

    def diagnostics(self):
        return {"G": self.G, "r_star": self.r_star, "y_star": self.y_star,
                "pericenter_time": self.pericenter_time, "min_r": self.min_r,
                "el_residual": self.el_residual, "divergence": self.divergence,
                "match_error_past": self.match_errors[0],
                "match_error_future": self.match_errors[1], "twobody": self.twobody}


def _segment_defect(traj, settings, stride):
    """Sup of one-segment re-integration defects between retained samples."""
    fine = settings.with_(tol=settings.tol * 0.1)
    idx = np.arange(0, traj.t.size, stride)
    if idx[-1] != traj.t.size - 1:
        idx = np.append(idx, traj.t.size - 1)
    worst = 0.0
    for a, b in zip(idx[:-1], idx[1:]):
        res = propagate_to(traj.r[a], traj.y[a], traj.t[a], traj.t[b], traj.G, fine)
        worst = max(worst, abs(res.r - traj.r[b]), abs(res.y - traj.y[b]))
    return worst


def _midpoint_divergence(traj, settings):
    """Re-integrate from the pericenter sample over the whole window."""
    fine = settings.with_(tol=settings.tol * 0.1)
    i = int(np.argmin(traj.r))
    mid = PolarState(traj.r[i], traj.y[i], traj.t[i], traj.G)
    worst = 0.0
    for sel, span in ((slice(i, None), traj.t[-1] - traj.t[i]),
                      (slice(None, i + 1), traj.t[0] - traj.t[i])):
        ts = traj.t[sel]
        if span == 0.0 or ts.size < 2:
            continue
        tr = integrate(mid, span, settings=fine, sample_times=ts)
        worst = max(worst, float(np.max(np.abs(tr.r - traj.r[sel]))))
    return worst


def _twobody_homoclinic(G, settings, r_match):
    """The parabola itself, pericenter at ``t = 0``."""
    st = settings.with_(twobody=True)
    g = abs(G)
    start = PolarState(0.5 * g * g, 0.0, 0.0, g)
    fwd = integrate(start, 1e6, settings=st, r_high=r_match)
    bwd = integrate(start, -1e6, settings=st, r_high=r_match)
    traj = _join(bwd, fwd)
    return HomoclinicOrbit(g, start.r, 0.0, traj, 0.0, float(traj.r.min()), 0.0, 0.0,
                           (0.0, 0.0), True, None, st)


def _join(bwd, fwd):
    t = np.concatenate([bwd.t[:-1], fwd.t])
    r = np.concatenate([bwd.r[:-1], fwd.r])
    y = np.concatenate([bwd.y[:-1], fwd.y])
    return Trajectory(t, r, y, fwd.G, fwd.twobody, 1, bwd.steps + fwd.steps,
                      bwd.rejected + fwd.rejected, fwd.status, fwd.settings)


def find_homoclinic(G, window=(3.0, 10.0), bracket=None, n_samples=41, r_far=None,
                    tol=SLOPE_TOL, settings=DEFAULT_SETTINGS, r_match=R_MATCH,
                    match_eps=MATCH_EPS, which=0):
    """Homoclinic through a zero of the splitting function on ``t = 0``.

    ``bracket`` skips the sampling; otherwise the ``which``-th simple bracket
    of the sampled splitting curve is used. In two-body mode the splitting
    vanishes identically and the parabola is returned.
    """
    if G == 0:
        raise DomainError("G must be nonzero")
    if settings.twobody:
        return _twobody_homoclinic(G, settings, r_match)
    if bracket is None:
        curve = splitting_curve(G, window, n_samples, r_far, tol, settings)
        simple = curve.simple_brackets()
        if len(simple) <= which:
            raise NoSignChange("splitting function has no simple sign change in the window",
                               G=G, window=tuple(window), brackets=curve.brackets)
        bracket = (simple[which]["r_lo"], simple[which]["r_hi"])
    lo, hi = map(float, bracket)

    def delta(r):
        return splitting_delta(r, G, r_far, tol, settings)[0]

    dlo, dhi = delta(lo), delta(hi)
    if dlo * dhi > 0:
        raise NoSignChange("bracket does not straddle a zero", bracket=(lo, hi))
    r_star = brentq(delta, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps)
    _, y_star, y_unst = splitting_delta(r_star, G, r_far, tol, settings)

    start = PolarState(r_star, y_star, 0.0, G)
    horizon = 1e5
    fwd = integrate(start, horizon, settings=settings, r_high=r_match)
    bwd = integrate(start, -horizon, settings=settings, r_high=r_match)
    if fwd.status != "HIT_R_HIGH" or bwd.status != "HIT_R_HIGH":
        raise MatchFail("orbit does not reach the matching radius in both directions",
                        future=fwd.status, past=bwd.status)
    traj = _join(bwd, fwd)

    # manifold matching at both ends
    rf = max(1e3, 10.0 * r_match) if r_far is None else r_far
    err_future = abs(fwd.y[-1] - stable_slope(fwd.r[-1], fwd.t[-1], G, rf, tol, settings))
    err_past = abs(bwd.y[0] - unstable_slope(bwd.r[0], bwd.t[0], G, rf, tol, settings))
    if max(err_future, err_past) > match_eps:
        raise MatchFail("window ends miss the manifolds", past=err_past, future=err_future)

    i = int(np.argmin(traj.r))
    stride = max(1, traj.t.size // 200)
    return HomoclinicOrbit(
        float(G), float(r_star), float(y_star), traj, float(traj.t[i]), float(traj.r[i]),
        _segment_defect(traj, settings, stride), _midpoint_divergence(traj, settings),
        (float(err_past), float(err_future)), False, (lo, hi), settings,
    )


# ---------------------------------------------------------------------------
# Newton on the reduced action


@dataclass
class NewtonResult:
    path: DiscretizedPath
    gradient_norm: float
    iterations: int
    value: float
    negative_eigenvalues: int
    determinant_sign: int
    trace: list = field(default_factory=list)
    degenerate: bool = False
    relative_min_eigenvalue: float = float("nan")

    def as_dict(self):
        return {"gradient_norm": self.gradient_norm, "iterations": self.iterations,
                "value": self.value, "negative_eigenvalues": self.negative_eigenvalues,
                "determinant_sign": self.determinant_sign, "trace": self.trace,
                "degenerate": self.degenerate,
                "relative_min_eigenvalue": self.relative_min_eigenvalue}


def refine_newton(path, G, tails, tol=1e-10, max_iter=20, twobody=None, singular_tol=1e-12,
                  allow_singular=False):
    """Newton on the reduced-action gradient with the exact tridiagonal Hessian.

    Convergence is measured in the dual of the ``<<.,.>>`` metric. Steps are
    halved while they do not reduce the gradient norm. A nearly singular
    Hessian at the converged point raises unless ``allow_singular``, in which
    case the result carries ``degenerate = True``.
    """
    tb = tails.twobody if twobody is None else twobody
    cur = path
    g = action_derivative(cur, G, tb, tails)
    gn = h1_norm_of_derivative(cur, g)
    trace = [gn]
    it = 0
    while gn > tol:
        if it >= max_iter:
            raise NonConverged("Newton did not reach the gradient tolerance", trace=trace)
        d, o = action_hessian(cur, G, tb, tails)
        step = tridiagonal_solve(d, o, -g)
        lam = 1.0
        while True:
            try:
                trial = cur.with_phi(cur.phi + lam * step)
                gt = action_derivative(trial, G, tb, tails)
                gtn = h1_norm_of_derivative(trial, gt)
            except (ValueError, ArithmeticError):
                gtn = np.inf
            if gtn < gn or lam < 1e-3:
                break
            lam *= 0.5
        if not np.isfinite(gtn):
            raise NonConverged("Newton step left the admissible set", trace=trace)
        cur, g, gn = trial, gt, gtn
        trace.append(gn)
        it += 1
        if it >= 3 and trace[-1] > 0.9 * trace[-2] and gn > tol:
            # stagnation at the roundoff floor counts only if already tiny
            if gn < 10 * tol:
                break
    d, o = action_hessian(cur, G, tb, tails)
    neg, _ = inertia(d, o)
    scale = float(np.max(np.abs(d)))
    lam_min = _min_abs_eig(d, o)
    degenerate = lam_min < singular_tol * scale
    if degenerate and not allow_singular:
        raise SingularJacobian("Hessian nearly singular at the critical point",
                               eigenvalue=lam_min)
    value = reduced_action(cur, G, tails, tb)
    return NewtonResult(cur, gn, it, value, neg, -1 if neg % 2 else 1, trace, degenerate,
                        lam_min / scale)


def _min_abs_eig(d, o):
    from scipy.linalg import eigvalsh_tridiagonal

    lo = smallest_eigenvalues(d, o, 1)[0]
    # eigenvalue closest to zero via a small symmetric window around 0
    width = max(abs(lo), 1e-300)
    near = eigvalsh_tridiagonal(d, o, select="v", select_range=(-width, width))
    return float(np.min(np.abs(near))) if near.size else width


def path_radius_error(path, orbit):
    """Sup distance between a path's radii and the shooting homoclinic."""
    k = path.flags.get("shift_periods", orbit.default_shift())
    r, _ = orbit.sample(path.s + TWO_PI * k)
    return float(np.max(np.abs(path.radius - r)))


# ---------------------------------------------------------------------------
# connecting arcs


@dataclass
class Connector:
    T: float
    R0: float
    R1: float
    G: float
    t0: float
    v_plus: float
    v_minus: float
    min_r: float
    apocenter: float

    def as_dict(self):
        return dict(self.__dict__)


def _arc(R0, y0, t0, T, G, settings, r_low):
    return propagate_to(R0, y0, t0, t0 + T, G, settings, r_low=r_low)


def _kepler_time_to_apocenter(energy, r, G):
    """Two-body time from radius ``r`` (outbound) to the apocenter."""
    a = -0.5 / energy
    e = np.sqrt(max(1.0 - G * G / a, 0.0))
    anomaly = np.arccos(np.clip((1.0 - r / a) / e, -1.0, 1.0))
    return a**1.5 * (np.pi - (anomaly - e * np.sin(anomaly)))


def kepler_launch_guess(T, R0, R1, G):
    """Launch velocity of the two-body arc ``R0 -> apocenter -> R1`` lasting ``T``."""
    def excess(energy):
        return (_kepler_time_to_apocenter(energy, R0, G)
                + _kepler_time_to_apocenter(energy, R1, G) - T)

    R = max(R0, R1)
    lo = (-1.0 / R + 0.5 * G * G / (R * R)) * (1 - 1e-12)  # apocenter at R
    if lo >= 0 or excess(lo) > 0:
        return None
    energy = brentq(excess, lo, -1e-18, xtol=1e-300, rtol=1e-14, maxiter=500)
    return float(np.sqrt(2.0 * energy + 2.0 / R0 - G * G / R0**2))


def boundary_velocities(T, R0, R1, G, t0=0.0, slope=None, settings=DEFAULT_SETTINGS,
                        r_region=None, tol=1e-13):
    """Two-point problem ``r(t0) = R0``, ``r(t0 + T) = R1`` in the far region.

    ``r(t0 + T)`` increases with the launch velocity, which is bracketed
    below the stable-manifold slope ``slope`` (shot when not given) and
    refined with Brent's method. The bracket is centred on the two-body
    arc's launch velocity, shifted by the manifold's offset from the
    parabola slope. Returns a ``Connector``.
    """
    if T <= 0:
        raise DomainError("T must be positive")
    r_region = R_TABLE if r_region is None else r_region
    if min(R0, R1) < r_region:
        raise DomainError("arc endpoints must lie in the far region")
    if slope is None:
        slope = stable_slope(R0, t0, G, max(1e3, 10 * R0), SLOPE_TOL, settings)
    r_low = 0.5 * r_region

    def f(y0):
        res = _arc(R0, y0, t0, T, G, settings, r_low)
        if res.status == _ig.HIT_R_LOW:
            # fell back toward the primaries before time T: too slow
            return -R1 - (t0 + T - res.t)
        return res.r - R1

    if f(slope) < 0:
        raise NoSolutionInBand("even the parabolic launch returns below R1", T=T)
    guess = kepler_launch_guess(T, R0, R1, G)
    if guess is None or not np.isfinite(guess):
        guess = slope - 1e-3 * abs(slope)
    else:
        guess = min(guess + slope - s0_generating(R0, G)[1], slope)
    width = 1e-6 * abs(slope) + 1e-9
    lo, hi = guess - width, min(guess + width, slope)
    f_lo, f_hi = f(lo), f(hi)
    while f_lo > 0 or f_hi < 0:
        width *= 4.0
        if width > 4.0 * abs(slope):
            raise NoSolutionInBand("no launch velocity in the band reaches R1 at time T", T=T)
        if f_lo > 0:
            lo = guess - width
            f_lo = f(lo)
        if f_hi < 0:
            hi = min(guess + width, slope)
            f_hi = f(hi)
    y0 = brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=200)
    tr = integrate(PolarState(R0, y0, t0, G), T, settings=settings)
    if tr.r.min() < r_region * (1 - 1e-12):
        raise ArcLeavesFarRegion("connecting arc dips below the far region",
                                 min_r=float(tr.r.min()))
    return Connector(float(T), float(R0), float(R1), float(G), float(t0), float(y0),
                     float(tr.y[-1]), float(tr.r.min()), float(tr.r.max()))


def slope_gap(conn, slope):
    return abs(conn.v_plus - slope)


def discover_t_min(R0, R1, G, eps0=1e-2, T_start=16.0, T_max=1e5, t0=0.0, slope=None,
                   settings=DEFAULT_SETTINGS):
    """Smallest doubled ``T`` where the arc exists and ``|v+ - slope| <= eps0``."""
    if slope is None:
        slope = stable_slope(R0, t0, G, max(1e3, 10 * R0), SLOPE_TOL, settings)
    T = float(T_start)
    ladder = []
    while T <= T_max:
        try:
            conn = boundary_velocities(T, R0, R1, G, t0, slope, settings)
            gap = slope_gap(conn, slope)
            ladder.append((T, gap))
            if gap <= eps0:
                return T, ladder
        except (NoSolutionInBand, ArcLeavesFarRegion):
            ladder.append((T, float("nan")))
        T *= 2.0
    raise NoSolutionInBand("no admissible connecting time below T_max", ladder=ladder)


def hyperbolic_velocity(R0, eps, G, t0=0.0, slope=None, settings=DEFAULT_SETTINGS,
                        thresholds=ClassifyThresholds(), verify=True):
    """Launch velocity ``d_r S^+(R0, t0) + eps`` and its verified final motion.

    Returns ``(velocity, label)``; with ``eps > 0`` the orbit must classify H.
    """
    if eps < 0:
        raise DomainError("eps must be nonnegative")
    if slope is None:
        slope = stable_slope(R0, t0, G, max(1e3, 10 * R0), SLOPE_TOL, settings)
    v = slope + eps
    if not verify:
        return v, None
    lab = final_motion(PolarState(R0, v, t0, G), +1, thresholds, settings, max_horizon=1e5)
    if eps > 0 and lab.label != "H":
        raise NotHyperbolic("launch above the stable manifold did not escape hyperbolically",
                            label=lab.label)
    return v, lab


def asymptotic_speed(label):
    return float(np.sqrt(max(2.0 * label.final_energy, 0.0)))


def parabola_path(half_width, h, G, G0=1.0):
    """Path whose radii are the G-parabola (pericenter at ``s = 0``)."""
    p = DiscretizedPath.symmetric(half_width, h, 0.0, G0)
    r, _, _ = parabola_arrays(p.s, G)
    return p.with_phi(r - p.reference.r0)
