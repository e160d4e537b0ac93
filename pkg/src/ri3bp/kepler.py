"""Primaries' rectilinear Kepler clock and the two-body parabola.

The primaries move on a degenerate ellipse. Their half separation is
``rho(t) = (1 - cos u) / 2`` where the eccentric anomaly solves
``u - sin u = t``. The massless body's reference motion is the zero-energy
parabola of the two-body problem with angular momentum ``G``.
"""

from dataclasses import dataclass

import numpy as np

from ._jit import njit
from .errors import DomainError

KEPLER_TOL = 1e-15
TWO_PI = 2.0 * np.pi


@njit
def _u_minus_sin(u):
    # series below |u| = 0.05 avoids the cancellation in u - sin u
    if abs(u) < 0.05:
        u2 = u * u
        return u * u2 * (1.0 / 6.0 - u2 * (1.0 / 120.0 - u2 * (1.0 / 5040.0 - u2 / 362880.0)))
    return u - np.sin(u)


@njit
def _kepler_scalar(t, tol):
    if t == 0.0:
        return 0.0
    lo = t - 1.0
    hi = t + 1.0
    if abs(t) < 0.1:
        u = np.cbrt(6.0 * t)
    else:
        u = t + np.sin(t)
    for _ in range(200):
        f = _u_minus_sin(u) - t
        if f > 0.0:
            hi = u
        else:
            lo = u
        if abs(f) <= tol * max(1.0, abs(t)):
            return u
        fp = 2.0 * np.sin(0.5 * u) ** 2
        u_new = u - f / fp if fp > 0.0 else 0.5 * (lo + hi)
        if not (lo < u_new < hi):
            u_new = 0.5 * (lo + hi)
        if abs(u_new - u) <= 4e-16 * max(1.0, abs(u)):
            return u_new
        u = u_new
    return u


@njit
def _kepler_array(t, tol):
    out = np.empty(t.shape[0])
    for i in range(t.shape[0]):
        out[i] = _kepler_scalar(t[i], tol)
    return out


def solve_kepler(t, tol=KEPLER_TOL):
    """Eccentric anomaly ``u`` with ``u - sin u = t``.

    Newton from ``u = t + sin t`` (``(6t)^(1/3)`` near the origin) inside the
    bracket ``[t - 1, t + 1]``; bisection whenever Newton leaves it.
    Accepts scalars or arrays.
    """
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("solve_kepler needs finite times")
    if arr.ndim == 0:
        return float(_kepler_scalar(float(arr), tol))
    flat = _kepler_array(np.ascontiguousarray(arr.ravel()), tol)
    return flat.reshape(arr.shape)


def time_of_anomaly(u):
    """``t(u) = u - sin u`` (series-stabilized near zero)."""
    arr = np.asarray(u, dtype=float)
    if arr.ndim == 0:
        return float(_u_minus_sin(float(arr)))
    return np.vectorize(_u_minus_sin, otypes=[float])(arr)


def rho_of_anomaly(u):
    """Half separation as a function of the anomaly, ``sin^2(u/2)``."""
    return np.sin(0.5 * np.asarray(u, dtype=float)) ** 2


def rho(t):
    """Half separation ``(1 - cos u(t)) / 2`` of the primaries; in ``[0, 1]``."""
    out = rho_of_anomaly(solve_kepler(t))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class KeplerClock:
    """Callable wrapper carrying the Kepler solve tolerance."""

    tol: float = KEPLER_TOL

    def anomaly(self, t):
        return solve_kepler(t, self.tol)

    def rho(self, t):
        out = rho_of_anomaly(solve_kepler(t, self.tol))
        return float(out) if np.ndim(out) == 0 else out


# --- two-body parabola ------------------------------------------------------


def _check_G(G):
    if G == 0 or not np.isfinite(G):
        raise DomainError("the parabola degenerates to a collision orbit for G = 0")
    return abs(float(G))


def parabola_tau(u, G):
    """Inverse of Barker's relation ``u = (G^3/2)(tau + tau^3/3)``.

    The surd ``A^(1/3) - A^(-1/3)`` with ``A = 3u/G^3 + sqrt(9u^2/G^6 + 1)``
    is used for ``|u| >= G^3/3``; Newton on the cubic below that.
    """
    g = _check_G(G)
    u_arr = np.asarray(u, dtype=float)
    w = 2.0 * np.abs(u_arr) / g**3  # tau + tau^3/3 = w
    tau = np.empty_like(w)
    big = np.abs(u_arr) >= g**3 / 3.0
    if np.any(big):
        z = 1.5 * w[big]
        A = z + np.sqrt(z * z + 1.0)
        c = np.cbrt(A)
        tau[big] = c - 1.0 / c
    small = ~big
    if np.any(small):
        x = w[small].copy()  # convex cubic, Newton from above is monotone
        for _ in range(60):
            f = x + x**3 / 3.0 - w[small]
            step = f / (1.0 + x * x)
            x = x - step
            if np.all(np.abs(step) <= 1e-17 + 2e-16 * np.abs(x)):
                break
        tau[small] = x
    out = np.sign(u_arr) * tau
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ParabolaSample:
    u: float
    r0: float
    r0_dot: float
    r0_ddot: float
    G0: float


def parabola_arrays(u, G):
    """Vectorized ``(r0, r0_dot, r0_ddot)`` along the parabola.

    The parameter ``u`` of Barker's relation is the physical time, so the
    arrays are samples of the orbit in time directly.
    """
    g = _check_G(G)
    tau = np.asarray(parabola_tau(u, g), dtype=float)
    r0 = 0.5 * g * g * (tau * tau + 1.0)
    # 2 tau / (G (1 + tau^2)) equals sign(u) sqrt(2/r0 - G^2/r0^2) but keeps
    # full relative accuracy near the pericenter
    r0_dot = 2.0 * tau / (g * (1.0 + tau * tau))
    r0_ddot = g * g / r0**3 - 1.0 / r0**2
    return r0, r0_dot, r0_ddot


def parabola_state(u, G):
    """State of the zero-energy two-body orbit at time ``u``."""
    r0, r0_dot, r0_ddot = parabola_arrays(u, G)
    return ParabolaSample(float(u), float(r0), float(r0_dot), float(r0_ddot), float(G))


def s0_generating(r, G):
    """Generating function of the two-body parabola and its slope.

    Returns ``(S0, dS0)`` with ``dS0 = sqrt(2/r - G^2/r^2)`` and the
    normalization ``S0(G^2/2) = 0``. Domain ``r >= G^2/2`` (the turning point
    itself is allowed as the limit).
    """
    g = abs(float(G))
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0.5 * g * g) or np.any(r_arr <= 0):
        raise DomainError("s0_generating needs r > G^2/2")
    w = np.sqrt(np.maximum(2.0 * r_arr - g * g, 0.0))
    if g == 0.0:
        S = 2.0 * w
    else:
        S = 2.0 * w - 2.0 * g * np.arctan(w / g)
    dS = w / r_arr
    if r_arr.ndim == 0:
        return float(S), float(dS)
    return S, dS


def s0_curvature(r, G):
    """``d^2 S0 / dr^2``."""
    g2 = float(G) ** 2
    r = np.asarray(r, dtype=float)
    w = np.sqrt(2.0 * r - g2)
    return (1.0 / w - w / r) / r


def averaged_potential(r, twobody=False, nodes=128):
    """Period average of ``1/sqrt(r^2 + rho(t)^2)`` over one primary period.

    With ``dt = (1 - cos u) du`` the average is a smooth periodic integral in
    the anomaly, so the trapezoid rule converges geometrically.
    """
    r = np.asarray(r, dtype=float)
    if twobody:
        return 1.0 / r
    u = TWO_PI * np.arange(nodes) / nodes
    s = np.sin(0.5 * u) ** 2
    weight = 2.0 * s / nodes
    rr = r[..., None] if r.ndim else r
    val = np.sum(weight / np.sqrt(rr * rr + s * s), axis=-1)
    return float(val) if r.ndim == 0 else val


def averaged_zero_energy_slope(r, G, twobody=False):
    """Outgoing velocity on the zero level of the averaged Hamiltonian."""
    r = np.asarray(r, dtype=float)
    arg = 2.0 * averaged_potential(r, twobody) - float(G) ** 2 / r**2
    out = np.sqrt(np.maximum(arg, 0.0))
    return float(out) if np.ndim(out) == 0 else out
