"""Stable/unstable manifolds of the periodic orbit at infinity.

Slopes are found by shooting. An orbit launched at ``(r, y, t)`` either turns
around (too slow) or reaches ``r_far``; the shooting function is the energy of
the period-averaged problem at the stopping point, which is conserved to high
accuracy far out and vanishes exactly on the averaged zero level. Its root in
``y`` is the manifold slope. Bracketing plus Brent's method does the root
finding.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .dynamics import DEFAULT_SETTINGS, propagate_to
from . import _integrator as _ig
from .errors import DomainError, MaxBisections, NoBracket, NoReturn, RadiusCollapse, StepUnderflow
from .kepler import TWO_PI, averaged_potential, averaged_zero_energy_slope, s0_generating

R_TABLE = 10.0
R_FAR = 1e4
BAND_C = 10.0
SLOPE_TOL = 1e-12
PARABOLIC_TIME = np.sqrt(2.0) / 3.0  # t ~ (sqrt(2)/3) r^(3/2) along a parabola


def averaged_energy(r, y, G, twobody=False):
    return 0.5 * y * y + G * G / (2.0 * r * r) - averaged_potential(r, twobody)


def _escape_energy(r, y, t, G, direction, r_far, settings):
    """Averaged energy where the orbit stops (turnaround or ``r_far``)."""
    span = 3.0 * PARABOLIC_TIME * r_far**1.5 + 200.0
    res = propagate_to(r, y, t, t + direction * span, G, settings,
                       r_high=r_far, stop_on_turn=True)
    if res.status in (_ig.COLLAPSE, _ig.UNDERFLOW):
        raise NoReturn("orbit collapsed while shooting", r=r, y=y, t=t)
    return averaged_energy(res.r, res.y, G, settings.twobody)


def _shoot(r, t, G, direction, outward, r_far, tol, settings, max_iter):
    """Velocity at ``(r, t)`` on the branch that escapes parabolically.

    ``direction`` is the time direction (+1 stable, -1 unstable). With
    ``outward`` the launch moves away from the primaries; otherwise it moves
    inward first and the returned velocity belongs to the branch escaping
    after one pericenter passage.
    """
    if r <= 0:
        raise DomainError("r must be positive")
    if r_far < 10.0 * r:
        raise DomainError("r_far must be at least 10 r")
    tb = settings.twobody
    if G * G / (r * r) >= 2.0 * averaged_potential(r, tb):
        raise NoBracket("no escaping velocity at this radius", r=r)
    center = averaged_zero_energy_slope(r, G, tb)
    sign = direction * (1.0 if outward else -1.0)

    def g(speed):
        return _escape_energy(r, sign * speed, t, G, direction, r_far, settings)

    width = 0.05
    lo = hi = None
    while width <= 4.0:
        a = center * max(1.0 - width, 1e-3)
        b = center * (1.0 + width)
        ga, gb = g(a), g(b)
        if ga < 0.0 < gb:
            lo, hi = a, b
            break
        width *= 2.0
    if lo is None:
        raise NoBracket("launch window does not straddle the manifold", r=r, t=t)
    try:
        speed = brentq(g, lo, hi, xtol=tol, rtol=4.0 * np.finfo(float).eps, maxiter=max_iter)
    except RuntimeError as exc:
        raise MaxBisections(str(exc), r=r, t=t) from exc
    return sign * speed


def stable_slope(r, t, G, r_far=R_FAR, tol=SLOPE_TOL, settings=DEFAULT_SETTINGS, max_iter=200):
    """``d_r S^+(r, t; G)``: outgoing velocity on the local stable manifold."""
    return _shoot(r, t, G, +1, True, r_far, tol, settings, max_iter)


def unstable_slope(r, t, G, r_far=R_FAR, tol=SLOPE_TOL, settings=DEFAULT_SETTINGS):
    """``d_r S^-(r, t) = -d_r S^+(r, -t)`` from reversibility."""
    return -stable_slope(r, -t, G, r_far, tol, settings)


def unstable_slope_direct(r, t, G, r_far=R_FAR, tol=SLOPE_TOL, settings=DEFAULT_SETTINGS):
    """Unstable slope by shooting backward in time (independent of reversibility)."""
    return _shoot(r, t, G, -1, True, r_far, tol, settings, 200)


def incoming_stable_velocity(r, t, G, r_far=R_FAR, tol=SLOPE_TOL, settings=DEFAULT_SETTINGS):
    """Inward velocity at ``(r, t)`` whose orbit escapes after one pericenter."""
    return _shoot(r, t, G, +1, False, r_far, tol, settings, 200)


def parabolicity_check(r, y, t, G, r_far=R_FAR, c=BAND_C, settings=DEFAULT_SETTINGS):
    """Two-body energy at ``r_far`` and whether it lies in ``+-c r_far^(-3/2)``."""
    span = 3.0 * PARABOLIC_TIME * r_far**1.5 + 200.0
    res = propagate_to(r, y, t, t + span, G, settings, r_high=r_far, stop_on_turn=True)
    e2 = 0.5 * res.y**2 + G * G / (2 * res.r**2) - 1.0 / res.r
    band = c * r_far**-1.5
    return e2, band, bool(res.status == _ig.HIT_R_HIGH and abs(e2) <= band)


# ---------------------------------------------------------------------------
# tables


def _trig_coefficients(values):
    """Real trigonometric coefficients of samples on a uniform periodic grid."""
    n = values.shape[-1]
    return np.fft.rfft(values, axis=-1) / n


def _trig_eval(coef, n, t):
    """Evaluate the trigonometric interpolant (Nyquist term halved)."""
    k = np.arange(coef.shape[-1])
    w = np.full(k.size, 2.0)
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 1.0
    phase = np.exp(1j * np.multiply.outer(np.asarray(t, dtype=float), k))
    return np.real(np.sum(w * coef * phase, axis=-1))


def _trig_eval_dt(coef, n, t):
    k = np.arange(coef.shape[-1])
    w = np.full(k.size, 2.0)
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 0.0  # the Nyquist cosine has no consistent derivative
    phase = np.exp(1j * np.multiply.outer(np.asarray(t, dtype=float), k))
    return np.real(np.sum(w * coef * 1j * k * phase, axis=-1))


@dataclass
class GeneratingTable:
    """Tabulated ``d_r S^+`` on a log r-grid times a uniform phase grid.

    Interpolation: the deviation from the parabola slope is scaled by
    ``r^(5/2)``, expanded in a trigonometric series in ``t`` and each
    coefficient is a cubic spline in ``log r``. ``S^+`` is the r-antiderivative
    normalized to equal ``S0`` at the top radius.
    """

    G: float
    r_grid: np.ndarray
    t_grid: np.ndarray
    slopes: np.ndarray
    tol: float = SLOPE_TOL
    r_far: float = R_FAR
    twobody: bool = False
    cross_validation_error: float = float("nan")
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.r_grid = np.asarray(self.r_grid, dtype=float)
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        self.slopes = np.asarray(self.slopes, dtype=float)
        self._build()

    def _build(self):
        _, ds0 = s0_generating(self.r_grid, self.G)
        scaled = (self.slopes - ds0[:, None]) * self.r_grid[:, None] ** 2.5
        coef = _trig_coefficients(scaled)
        self._nt = self.t_grid.size
        logr = np.log(self.r_grid)
        self._spl_re = CubicSpline(logr, coef.real, axis=0)
        self._spl_im = CubicSpline(logr, coef.imag, axis=0)
        self._gl_x, self._gl_w = np.polynomial.legendre.leggauss(40)

    @property
    def r_min(self):
        return float(self.r_grid[0])

    @property
    def r_max(self):
        return float(self.r_grid[-1])

    def contains(self, r):
        r = np.asarray(r, dtype=float)
        return bool(np.all((r >= self.r_min * (1 - 1e-12)) & (r <= self.r_max * (1 + 1e-12))))

    def _check(self, r):
        from .errors import BoundaryOutOfTable

        if not self.contains(r):
            raise BoundaryOutOfTable(
                f"radius outside table domain [{self.r_min}, {self.r_max}]", r=r
            )

    def _coef(self, logr, nu=0):
        return self._spl_re(logr, nu) + 1j * self._spl_im(logr, nu)

    def _scaled(self, r, t):
        return _trig_eval(self._coef(np.log(r)), self._nt, t)

    def deviation(self, r, t):
        """``d_r S^+ - dS0`` at ``(r, t)``."""
        self._check(r)
        r = np.asarray(r, dtype=float)
        return self._scaled(r, t) * r**-2.5

    def slope(self, r, t):
        self._check(r)
        _, ds0 = s0_generating(r, self.G)
        out = ds0 + self.deviation(r, t)
        return float(out) if np.ndim(out) == 0 else out

    def dslope(self, r, t):
        """``d^2_r S^+`` at ``(r, t)``."""
        from .kepler import s0_curvature

        self._check(r)
        r = np.asarray(r, dtype=float)
        lr = np.log(r)
        q = _trig_eval(self._coef(lr), self._nt, t)
        dq = _trig_eval(self._coef(lr, 1), self._nt, t)
        out = s0_curvature(r, self.G) + (dq - 2.5 * q) * r**-3.5
        return float(out) if np.ndim(out) == 0 else out

    def generating(self, r, t):
        """``S^+(r, t)`` normalized so that ``S^+(r_max, t) = S0(r_max)``."""
        self._check(r)
        r = float(r)
        s0, _ = s0_generating(r, self.G)
        if r >= self.r_max:
            return s0
        a, b = np.log(r), np.log(self.r_max)
        x = 0.5 * (b - a) * self._gl_x + 0.5 * (b + a)
        rr = np.exp(x)
        dev = _trig_eval(self._coef(x), self._nt, t) * rr**-1.5  # d(log r) = dr / r
        return s0 - 0.5 * (b - a) * float(np.dot(self._gl_w, dev))

    # unstable side via reversibility
    def unstable_slope(self, r, t):
        return -self.slope(r, -np.asarray(t))

    def unstable_dslope(self, r, t):
        return -self.dslope(r, -np.asarray(t))

    def unstable_generating(self, r, t):
        return -self.generating(r, -float(t))

    def time_average(self, r):
        """Phase average of the slope at ``r``."""
        self._check(r)
        _, ds0 = s0_generating(r, self.G)
        c0 = self._coef(np.log(np.asarray(r, dtype=float)))[..., 0].real
        return ds0 + c0 * np.asarray(r, dtype=float) ** -2.5

    def header(self):
        return {
            "kind": "generating_table",
            "format_version": 1,
            "G": self.G,
            "twobody": self.twobody,
            "r_grid": [float(v) for v in self.r_grid],
            "t_grid_size": int(self.t_grid.size),
            "tol": self.tol,
            "r_far": self.r_far,
            "cross_validation_error": self.cross_validation_error,
            "interpolation": "trigonometric in t, cubic spline in log r of r^2.5 (slope - dS0)",
        }


def t_grid(n_t):
    return TWO_PI * np.arange(n_t) / n_t


def _cross_validate(table):
    """Leave-one-out error of the r-interpolation on interior nodes."""
    r = table.r_grid
    if r.size < 5:
        return float("nan")
    worst = 0.0
    for i in range(1, r.size - 1):
        keep = np.arange(r.size) != i
        sub = GeneratingTable(table.G, r[keep], table.t_grid, table.slopes[keep], table.tol,
                              table.r_far, table.twobody)
        pred = sub.slope(r[i], table.t_grid)
        worst = max(worst, float(np.max(np.abs(pred - table.slopes[i]))))
    return worst


def build_table(G, r_range=(R_TABLE, 1e3), n_r=9, n_t=16, r_far=None, tol=SLOPE_TOL,
                settings=DEFAULT_SETTINGS, shrink=True, progress=None):
    """Fill a generating table over a log-spaced r-grid and uniform phases.

    ``r_far`` defaults to ``max(1e4, 10 r)`` per fiber. A NO_BRACKET at some
    radius removes that radius and everything below it when ``shrink``.
    """
    r_lo, r_hi = map(float, r_range)
    if r_lo < 0 or r_hi <= r_lo:
        raise DomainError("bad r-range")
    rg = np.geomspace(r_lo, r_hi, n_r)
    tg = t_grid(n_t)
    slopes = np.full((n_r, n_t), np.nan)
    cut = -1
    for i in range(n_r - 1, -1, -1):
        rf = max(r_far if r_far is not None else R_FAR, 10.0 * rg[i])
        try:
            for j, tj in enumerate(tg):
                slopes[i, j] = stable_slope(rg[i], tj, G, rf, tol, settings)
        except NoBracket as exc:
            if not shrink:
                raise NoBracket(f"table fiber r={rg[i]:.6g} failed: {exc}", r=rg[i]) from exc
            cut = i
            break
        if progress is not None:
            progress(i, rg[i])
    keep = slice(cut + 1, None)
    if rg[keep].size < 4:
        raise NoBracket("table domain collapsed", r_range=r_range)
    table = GeneratingTable(float(G), rg[keep], tg, slopes[keep], tol,
                            float(r_far if r_far is not None else R_FAR), settings.twobody)
    table.cross_validation_error = _cross_validate(table)
    table.meta["shrunk_from"] = r_lo if cut >= 0 else None
    return table


def decay_exponent(table, t_values, decades=1.0):
    """Least-squares slope of ``log|slope - dS0|`` vs ``log r`` over the top decade."""
    r = table.r_grid
    sel = r >= table.r_max / 10.0**decades * (1 - 1e-12)
    out = []
    for t in np.atleast_1d(t_values):
        dev = np.abs(table.deviation(r[sel], t))
        p = np.polyfit(np.log(r[sel]), np.log(dev), 1)
        out.append(float(p[0]))
    return out


# ---------------------------------------------------------------------------
# splitting


@dataclass
class SplittingCurve:
    G: float
    window: tuple
    r: np.ndarray
    delta: np.ndarray
    y_stable: np.ndarray
    y_unstable: np.ndarray
    errors: list
    noise: float
    brackets: list = field(default_factory=list)

    def simple_brackets(self):
        """Sign changes whose both ends exceed the numerical noise floor."""
        return [b for b in self.brackets if b["simple"]]

    def table(self):
        return {"r": self.r, "delta": self.delta, "y_stable": self.y_stable,
                "y_unstable": self.y_unstable}


def splitting_delta(r, G, r_far=None, tol=SLOPE_TOL, settings=DEFAULT_SETTINGS):
    """``Delta(r) = (unstable branch velocity) - d_r S^+(r, 0)`` on the section ``t = 0``.

    By reversibility the outgoing unstable branch at ``(r, y, 0)`` mirrors the
    incoming stable branch at ``(r, -y, 0)``, so both terms are stable-side
    shots from the same point.
    """
    rf = r_far if r_far is not None else max(1e3, 10.0 * r)
    ys = stable_slope(r, 0.0, G, rf, tol, settings)
    yu = -incoming_stable_velocity(r, 0.0, G, rf, tol, settings)
    return yu - ys, ys, yu


def splitting_curve(G, window, n_samples=41, r_far=None, tol=SLOPE_TOL, settings=DEFAULT_SETTINGS):
    """Sample the splitting function over ``window`` and bracket its zeros."""
    if G == 0:
        raise DomainError("G must be nonzero")
    r1, r2 = map(float, window)
    rs = np.linspace(r1, r2, int(n_samples))
    d = np.full(rs.size, np.nan)
    ys = np.full(rs.size, np.nan)
    yu = np.full(rs.size, np.nan)
    errors = []
    for i, r in enumerate(rs):
        try:
            d[i], ys[i], yu[i] = splitting_delta(r, G, r_far, tol, settings)
        except (NoBracket, MaxBisections, NoReturn, RadiusCollapse, StepUnderflow) as exc:
            errors.append({"r": float(r), "code": exc.code, "message": str(exc)})
    # noise floor: both shots converge to ~tol; the far matching adds ~1/r_far^4
    noise = 20.0 * tol + 10.0 * (r_far if r_far else 1e3) ** -4
    curve = SplittingCurve(float(G), (r1, r2), rs, d, ys, yu, errors, noise)
    for i in range(rs.size - 1):
        a, b = d[i], d[i + 1]
        if np.isfinite(a) and np.isfinite(b) and a * b < 0:
            curve.brackets.append({
                "r_lo": float(rs[i]), "r_hi": float(rs[i + 1]),
                "delta_lo": float(a), "delta_hi": float(b),
                "simple": bool(min(abs(a), abs(b)) > noise),
            })
    return curve
