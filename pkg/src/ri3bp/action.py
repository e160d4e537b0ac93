"""Discretized renormalized action, reduced action and path operators.

Discretization on a uniform grid ``s_i = s_start + i h``: kinetic energy by
forward differences on cells (midpoint rule), every other term by the
trapezoid rule. The gradient and the tridiagonal Hessian are exact for this
discrete functional. Tails beyond the window are represented by boundary
terms built from a generating function (``TableTails``) or from the two-body
surrogate (``TwoBodyTails``).
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.linalg import eigvalsh_tridiagonal, solve_banded

from ._jit import njit
from .errors import DomainError, NonpositiveRadius, WindowTooSmall
from .kepler import TWO_PI, parabola_arrays, rho, s0_curvature, s0_generating

DEFAULT_G0 = 1.0


# ---------------------------------------------------------------------------
# paths


@dataclass
class DiscretizedPath:
    """Node values of a perturbation ``phi`` of the reference parabola."""

    phi: np.ndarray
    h: float
    s_start: float
    G0: float = DEFAULT_G0
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        self.phi = np.ascontiguousarray(self.phi, dtype=float)
        if self.h <= 0:
            raise DomainError("h must be positive")
        if self.phi.size < 3:
            raise DomainError("a path needs at least three nodes")
        r = self.radius
        if not np.all(r > 0):
            raise NonpositiveRadius("path reaches a nonpositive radius", min_r=float(r.min()))

    @classmethod
    def symmetric(cls, half_width, h, phi=0.0, G0=DEFAULT_G0):
        """Path on ``[-S, S]`` with ``2S/h + 1`` nodes (``S`` rounded to the grid)."""
        n_cells = int(round(2.0 * half_width / h))
        s = -0.5 * n_cells * h + h * np.arange(n_cells + 1)
        values = phi(s) if callable(phi) else np.full(s.size, float(phi))
        return cls(values, h, float(s[0]), G0)

    @property
    def n_nodes(self):
        return self.phi.size

    @property
    def s(self):
        return self.s_start + self.h * np.arange(self.phi.size)

    @property
    def s_end(self):
        return self.s_start + self.h * (self.phi.size - 1)

    @property
    def reference(self):
        return reference_arrays(self.s_start, self.h, self.phi.size, self.G0)

    @property
    def radius(self):
        return self.reference.r0 + self.phi

    def with_phi(self, phi):
        return DiscretizedPath(phi, self.h, self.s_start, self.G0, dict(self.flags))

    def table(self):
        return {"s": self.s, "phi": self.phi}

    def header(self):
        return {"kind": "path", "s_start": self.s_start, "s_end": self.s_end, "h": self.h,
                "nodes": self.n_nodes, "G0": self.G0, "flags": self.flags}


@dataclass(frozen=True)
class ReferenceArrays:
    s: np.ndarray
    r0: np.ndarray
    r0_dot: np.ndarray
    r0_ddot: np.ndarray
    v0: np.ndarray  # G0^2/(2 r0^2) - 1/r0
    rho2: np.ndarray
    weights: np.ndarray  # trapezoid weights including h


@lru_cache(maxsize=64)
def reference_arrays(s_start, h, n, G0):
    s = s_start + h * np.arange(n)
    r0, r0d, r0dd = parabola_arrays(s, G0)
    v0 = G0 * G0 / (2.0 * r0 * r0) - 1.0 / r0
    rh = rho(s)
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    arrs = [s, r0, r0d, r0dd, v0, rh * rh, w]
    for a in arrs:
        a.setflags(write=False)
    return ReferenceArrays(*arrs)


# ---------------------------------------------------------------------------
# hot kernels


@njit
def _window_terms(phi, h, r0, r0dd, v0, rho2, w, G, twobody):
    n = phi.shape[0]
    kin = 0.0
    for i in range(n - 1):
        d = phi[i + 1] - phi[i]
        kin += d * d
    kin *= 0.5 / h
    pot = 0.0
    b = 0.0
    for i in range(n):
        r = r0[i] + phi[i]
        q = 0.0 if twobody else rho2[i]
        pot += w[i] * (1.0 / np.sqrt(r * r + q) + v0[i] - r0dd[i] * phi[i])
        b += w[i] * 0.5 / (r * r)
    a = kin + pot
    return a - G * G * b, a, b


@njit
def _window_gradient(phi, h, r0, r0dd, rho2, w, G, twobody):
    n = phi.shape[0]
    g = np.empty(n)
    for i in range(n):
        r = r0[i] + phi[i]
        q = 0.0 if twobody else rho2[i]
        d = r * r + q
        g[i] = w[i] * (G * G / (r * r * r) - r / (d * np.sqrt(d)) - r0dd[i])
    for i in range(n - 1):
        flux = (phi[i + 1] - phi[i]) / h
        g[i] -= flux
        g[i + 1] += flux
    return g


@njit
def _window_hessian(phi, h, r0, rho2, w, G, twobody):
    n = phi.shape[0]
    diag = np.empty(n)
    off = np.full(n - 1, -1.0 / h)
    for i in range(n):
        r = r0[i] + phi[i]
        q = 0.0 if twobody else rho2[i]
        d = r * r + q
        diag[i] = w[i] * ((2.0 * r * r - q) / (d * d * np.sqrt(d)) - 3.0 * G * G / (r * r * r * r))
        diag[i] += 2.0 / h
    diag[0] -= 1.0 / h
    diag[n - 1] -= 1.0 / h
    return diag, off


# ---------------------------------------------------------------------------
# tails


def _tail_constant(G, G0):
    # limit of S0(r; G) - S0(r0; G0) along the tails
    return -np.pi * (abs(G) - abs(G0))


class TwoBodyTails:
    """Two-body surrogate: ``S^+ = S0(.; G)``, ``S^- = -S0(.; G)``.

    Exact in two-body test mode, an approximation of order ``r^(-3/2)``
    otherwise (reported as ``error_estimate``).
    """

    def __init__(self, G, twobody=True):
        self.G = float(G)
        self.twobody = bool(twobody)

    def plus(self, r, t):
        s, ds = s0_generating(r, self.G)
        return s, ds, float(s0_curvature(r, self.G))

    def minus(self, r, t):
        s, ds = s0_generating(r, self.G)
        return -s, -ds, -float(s0_curvature(r, self.G))

    def contains(self, r):
        return r > 0.5 * self.G**2

    def error_estimate(self, r_left, r_right):
        if self.twobody:
            return 0.0
        # mean deviation of the true generating function, 5/(12 sqrt 2) r^(-3/2)
        c = 5.0 / (12.0 * np.sqrt(2.0))
        return c * (r_left**-1.5 + r_right**-1.5)


class TableTails:
    """Tails from a ``GeneratingTable``; the unstable side by reversibility."""

    def __init__(self, table):
        self.table = table
        self.G = table.G
        self.twobody = table.twobody
        self._offset = _asymptotic_offset(table)

    def plus(self, r, t):
        tb = self.table
        return (tb.generating(r, t) + self._offset, float(tb.slope(r, t)), float(tb.dslope(r, t)))

    def minus(self, r, t):
        tb = self.table
        return (-(tb.generating(r, -t) + self._offset), -float(tb.slope(r, -t)),
                -float(tb.dslope(r, -t)))

    def contains(self, r):
        return self.table.contains(r)

    def error_estimate(self, r_left, r_right):
        return 2.0 * self.table.tol * max(r_left, r_right)


def _asymptotic_offset(table, nodes=128):
    """``-int_{r_top}^inf (averaged slope - dS0) dr``: normalizes ``S^+`` at infinity."""
    if table.twobody:
        return 0.0
    G = table.G
    u = TWO_PI * np.arange(nodes) / nodes
    rho_u = np.sin(0.5 * u) ** 2
    wts = 2.0 * rho_u / nodes

    def dev(x):  # r = r_top / x^2 maps (0, 1] onto [r_top, inf)
        r = table.r_max / (x * x)
        q = np.sqrt(r * r + rho_u**2)
        # averaged potential minus 1/r without cancellation
        du = -np.sum(wts * rho_u**2 / (r * q * (q + r)))
        ds0 = s0_generating(r, G)[1]
        ya = np.sqrt(ds0 * ds0 + 2.0 * du)
        return 2.0 * du / (ya + ds0) * 2.0 * table.r_max / x**3

    val, _ = quad(dev, 0.0, 1.0, epsabs=1e-16, epsrel=1e-12, limit=200)
    return -val


def _check_tails(tails, G):
    if tails is not None and abs(tails.G - G) > 1e-14 * max(1.0, abs(G)):
        raise DomainError("tails were built for a different angular momentum")


def _tail_terms(path, G, tails):
    """Boundary terms, their gradients and curvatures at both ends."""
    ref = path.reference
    r = path.radius
    from .errors import BoundaryOutOfTable

    for rr in (r[0], r[-1]):
        if not tails.contains(rr):
            raise BoundaryOutOfTable("boundary radius outside the tail domain", r=float(rr))
    sp, dsp, ddsp = tails.plus(float(r[-1]), float(ref.s[-1]))
    sm, dsm, ddsm = tails.minus(float(r[0]), float(ref.s[0]))
    const = _tail_constant(G, path.G0)
    s0r, _ = s0_generating(ref.r0[-1], path.G0)
    s0l, _ = s0_generating(ref.r0[0], path.G0)
    t_right = -sp + s0r + ref.r0_dot[-1] * path.phi[-1] + const
    t_left = sm + s0l - ref.r0_dot[0] * path.phi[0] + const
    g_right = -dsp + ref.r0_dot[-1]
    g_left = dsm - ref.r0_dot[0]
    return t_left, t_right, g_left, g_right, ddsm, -ddsp


# ---------------------------------------------------------------------------
# public API


@dataclass
class ActionReport:
    value: float  # A_G on the window
    B: float
    A: float
    gradient_norm: float
    quadrature_error: float
    tail: float = 0.0
    tail_error: float = 0.0

    @property
    def total(self):
        return self.value + self.tail

    def as_dict(self):
        return {"A_G": self.value, "A": self.A, "B": self.B, "tail": self.tail,
                "total": self.total, "gradient_norm": self.gradient_norm,
                "quadrature_error": self.quadrature_error, "tail_error": self.tail_error}


def _terms(path, G, twobody):
    ref = path.reference
    return _window_terms(path.phi, path.h, ref.r0, ref.r0_ddot, ref.v0, ref.rho2, ref.weights,
                         float(G), bool(twobody))


def _coarsened(path):
    if (path.n_nodes - 1) % 2:
        return None
    return DiscretizedPath(path.phi[::2], 2.0 * path.h, path.s_start, path.G0)


def window_action(path, G, twobody=False):
    """``A_G`` on the window only (no tails)."""
    return float(_terms(path, G, twobody)[0])


def action_value(path, G, G0=None, twobody=False, tails=None, max_tail_error=None):
    """Window action with its ``A - G^2 B`` split plus tail terms when given."""
    if G0 is not None and abs(G0 - path.G0) > 0:
        raise DomainError("path was built for a different reference G0")
    _check_tails(tails, G)
    ag, a, b = _terms(path, G, twobody)
    coarse = _coarsened(path)
    q_err = float("nan")
    if coarse is not None:
        q_err = abs(ag - _terms(coarse, G, twobody)[0]) / 3.0
    tail = 0.0
    tail_err = 0.0
    if tails is not None:
        tl, tr, *_ = _tail_terms(path, G, tails)
        tail = float(tl + tr)
        r = path.radius
        tail_err = float(tails.error_estimate(r[0], r[-1]))
        if max_tail_error is not None and tail_err > max_tail_error:
            raise WindowTooSmall("tail truncation estimate above tolerance", estimate=tail_err)
    grad = action_derivative(path, G, twobody, tails)
    gn = h1_norm_of_derivative(path, grad)
    return ActionReport(float(ag), float(b), float(a), gn, q_err, tail, tail_err)


def action_derivative(path, G, twobody=False, tails=None):
    """Exact partial derivatives ``dA/dphi_i`` of the discrete functional."""
    ref = path.reference
    g = _window_gradient(path.phi, path.h, ref.r0, ref.r0_ddot, ref.rho2, ref.weights,
                         float(G), bool(twobody))
    if tails is not None:
        _, _, gl, gr, _, _ = _tail_terms(path, G, tails)
        g[0] += gl
        g[-1] += gr
    return g


def action_gradient(path, G, G0=None, twobody=False, tails=None):
    """Gradient representative in the ``h``-scaled Euclidean product."""
    g = action_derivative(path, G, twobody, tails)
    return path.with_phi(g / path.h) if np.all(path.radius > 0) else None


def action_hessian(path, G, twobody=False, tails=None):
    """Tridiagonal Hessian ``(diag, off)`` of the discrete functional."""
    ref = path.reference
    diag, off = _window_hessian(path.phi, path.h, ref.r0, ref.rho2, ref.weights, float(G),
                                bool(twobody))
    if tails is not None:
        _, _, _, _, hl, hr = _tail_terms(path, G, tails)
        diag[0] += hl
        diag[-1] += hr
    return diag, off


def metric_tridiagonal(path):
    """Gram matrix of ``<<phi, psi>> = int phi' psi' + 2 int phi psi / r0^3``."""
    ref = path.reference
    n = path.n_nodes
    diag = np.full(n, 2.0 / path.h)
    diag[0] = diag[-1] = 1.0 / path.h
    diag += 2.0 * ref.weights / ref.r0**3
    off = np.full(n - 1, -1.0 / path.h)
    return diag, off


def _banded(diag, off):
    ab = np.zeros((3, diag.size))
    ab[0, 1:] = off
    ab[1] = diag
    ab[2, :-1] = off
    return ab


def tridiagonal_solve(diag, off, rhs):
    return solve_banded((1, 1), _banded(diag, off), rhs)


def riesz_representative(path, derivative):
    """Gradient in the ``<<.,.>>`` metric from partial derivatives."""
    d, o = metric_tridiagonal(path)
    return tridiagonal_solve(d, o, derivative)


def h1_norm_of_derivative(path, derivative):
    """Dual norm of a derivative, i.e. the ``<<.,.>>`` norm of the gradient."""
    rep = riesz_representative(path, derivative)
    return float(np.sqrt(max(np.dot(rep, derivative), 0.0)))


def h1_norm(path, phi):
    d, o = metric_tridiagonal(path)
    mphi = d * phi
    mphi[:-1] += o * phi[1:]
    mphi[1:] += o * phi[:-1]
    return float(np.sqrt(np.dot(phi, mphi)))


def reduced_action(path, G, tails, twobody=None):
    """Window action plus the minimizing-tail boundary terms."""
    tb = tails.twobody if twobody is None else twobody
    _check_tails(tails, G)
    ag = _terms(path, G, tb)[0]
    tl, tr, *_ = _tail_terms(path, G, tails)
    return float(ag + tl + tr)


def reduced_gradient_norm(path, G, tails, twobody=None):
    tb = tails.twobody if twobody is None else twobody
    return h1_norm_of_derivative(path, action_derivative(path, G, tb, tails))


def inertia(diag, off):
    """Number of negative and of near-zero eigenvalues of a symmetric tridiagonal matrix."""
    scale = float(np.max(np.abs(diag)) + 2.0 * np.max(np.abs(off), initial=0.0))
    neg = eigvalsh_tridiagonal(diag, off, select="v", select_range=(-np.inf, 0.0))
    small = eigvalsh_tridiagonal(diag, off, select="v",
                                 select_range=(-1e-13 * scale, 1e-13 * scale))
    return int(neg.size), int(small.size)


def smallest_eigenvalues(diag, off, count=3):
    return eigvalsh_tridiagonal(diag, off, select="i", select_range=(0, count - 1))


# ---------------------------------------------------------------------------
# translation and barycenter


def _tail_orbit(r_b, s_b, s_query, tails, side, G):
    """Radius along the minimizing tail through ``r_b`` at time ``s_b``."""
    from .dynamics import IntegratorSettings, PolarState, integrate

    if side > 0:
        _, v, _ = tails.plus(r_b, s_b)
    else:
        _, v, _ = tails.minus(r_b, s_b)
    settings = IntegratorSettings(tol=1e-13, twobody=tails.twobody)
    span = (s_query[-1] - s_b) if side > 0 else (s_query[0] - s_b)
    traj = integrate(PolarState(r_b, v, s_b, G), span, settings=settings, sample_times=s_query)
    return traj.r


def translate(path, k, tails=None, G=None):
    """``T phi(s) = phi(s + tau) + r0(s + tau) - r0(s)`` with ``tau = 2 pi k``.

    The grid step must divide the period. Nodes whose source lies outside the
    window are filled from the minimizing tail of ``tails`` (two-body
    surrogate at ``G`` by default) and counted in ``flags``.
    """
    k = int(k)
    if k == 0:
        return path.with_phi(path.phi.copy())
    per_period = TWO_PI / path.h
    m = int(round(per_period))
    if abs(per_period - m) > 1e-9 * m:
        raise DomainError("translations need a grid step dividing the period 2 pi")
    shift = k * m
    G = path.G0 if G is None else float(G)
    if tails is None:
        tails = TwoBodyTails(G, twobody=True)
    n = path.n_nodes
    r = path.radius.copy()
    s = path.s
    src = np.arange(n) + shift
    inside = (src >= 0) & (src < n)
    r_new = np.empty(n)
    r_new[inside] = r[src[inside]]
    right = src >= n
    left = src < 0
    if np.any(right):
        sq = s[-1] + h_times(src[right] - (n - 1), path.h)
        r_new[right] = _tail_orbit(r[-1], s[-1], sq, tails, +1, G)
    if np.any(left):
        sq = s[0] + h_times(src[left], path.h)
        r_new[left] = _tail_orbit(r[0], s[0], sq, tails, -1, G)
    out = path.with_phi(r_new - path.reference.r0)
    out.flags["translated_by"] = path.flags.get("translated_by", 0) + k
    out.flags["extended_nodes"] = int(np.count_nonzero(~inside))
    return out


def h_times(i, h):
    return np.asarray(i, dtype=float) * h


def _parabola_tail_integrals(r_b, s_b, G, side):
    """``int w`` and ``int s w`` of ``w = (1 + r^2)^-2`` along the G-parabola tail."""
    from .kepler import parabola_tau

    g = abs(G)
    if r_b <= 0.5 * g * g:
        raise WindowTooSmall("boundary radius below the parabola pericenter", r=r_b)
    tau_b = np.sqrt(2.0 * r_b / (g * g) - 1.0)
    u_b = 0.5 * g**3 * (tau_b + tau_b**3 / 3.0)

    # integrate in tau (r = G^2 (tau^2 + 1)/2, du = G^3 (1 + tau^2)/2 dtau) to infinity
    def weight(tau):
        rr = 0.5 * g * g * (tau * tau + 1.0)
        return (1.0 + rr * rr) ** -2 * 0.5 * g**3 * (1.0 + tau * tau)

    def s_of(tau):
        u = 0.5 * g**3 * (tau + tau**3 / 3.0)
        return s_b + side * (u - u_b)

    w0, _ = quad(weight, tau_b, np.inf, epsabs=0, epsrel=1e-13, limit=400)
    w1, _ = quad(lambda x: s_of(x) * weight(x), tau_b, np.inf, epsabs=0, epsrel=1e-13, limit=400)
    return w0, w1


def barycenter(path, G=None):
    """Time centroid of ``(1 + (r0 + phi)^2)^-2``.

    The window is completed by the parabola tails with angular momentum ``G``
    (``G0`` by default) through the boundary radii.
    """
    G = path.G0 if G is None else float(G)
    r = path.radius
    s = path.s
    w = path.reference.weights
    dens = (1.0 + r * r) ** -2
    den = float(np.dot(w, dens))
    num = float(np.dot(w, s * dens))
    for side, idx in ((+1, -1), (-1, 0)):
        t0, t1 = _parabola_tail_integrals(float(r[idx]), float(s[idx]), G, side)
        den += t0
        num += t1
    if not np.isfinite(num / den):
        raise WindowTooSmall("barycenter undefined")
    return num / den


def bump(s, center=0.0, height=1.0, width=1.0):
    """Smooth compactly supported bump (C-infinity)."""
    x = (np.asarray(s, dtype=float) - center) / width
    out = np.zeros_like(x)
    m = np.abs(x) < 1
    out[m] = height * np.exp(1.0 - 1.0 / (1.0 - x[m] ** 2))
    return out
