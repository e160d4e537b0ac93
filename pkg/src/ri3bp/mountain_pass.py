"""Mountain-pass search for the reduced action.

A string of paths joins a far constant shift (very negative action) to a
near-collision shift (also very negative action). Images follow the
``<<.,.>>``-preconditioned descent direction, are redistributed at equal
metric arclength on both sides of the highest image, and the highest image
climbs along the tangent. The string only locates the pass: eigenvector
following from the highest image converges to the index-one critical point,
which Newton then refines on a finer grid.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh

from .action import (DiscretizedPath, TwoBodyTails, action_derivative, action_hessian,
                     barycenter, h1_norm_of_derivative, metric_tridiagonal, reduced_action,
                     tridiagonal_solve)
from .connections import refine_newton
from .errors import DomainError, NonConverged, SingularJacobian, Stalled
from .kepler import TWO_PI


@dataclass
class MountainPassResult:
    level: float  # fine-grid critical value (coarse saddle value when unpolished)
    saddle_level: float  # index-one critical value on the string grid
    string_level: float
    path: DiscretizedPath
    string_path: DiscretizedPath
    gradient_norm: float
    string_gradient_norm: float
    iterations: int
    polished: bool
    negative_eigenvalues: int = -1
    barycenter: float = float("nan")
    endpoint_actions: tuple = ()
    degenerate: bool = False
    history: list = field(default_factory=list)

    def as_dict(self):
        return {"level": self.level, "saddle_level": self.saddle_level,
                "string_level": self.string_level,
                "gradient_norm": self.gradient_norm,
                "string_gradient_norm": self.string_gradient_norm, "iterations": self.iterations,
                "polished": self.polished, "negative_eigenvalues": self.negative_eigenvalues,
                "barycenter": self.barycenter, "degenerate": self.degenerate, "endpoint_actions": list(self.endpoint_actions)}


def _max_shift(template, tails, cap):
    r_top = getattr(getattr(tails, "table", None), "r_max", None)
    r_end = float(max(template.reference.r0[0], template.reference.r0[-1]))
    if r_top is None:
        return cap
    return min(cap, 0.95 * r_top - r_end)


def _metric_norms(diag, off, dphi):
    """Row-wise ``<<.,.>>`` norms of path differences."""
    m = dphi * diag
    m[:, :-1] += dphi[:, 1:] * off
    m[:, 1:] += dphi[:, :-1] * off
    return np.sqrt(np.maximum(np.sum(m * dphi, axis=1), 0.0))


def _redistribute(images, diag, off, lo, hi):
    """Equal-arclength linear reinterpolation of ``images[lo..hi]`` in place."""
    seg = images[lo:hi + 1]
    if seg.shape[0] < 3:
        return
    d = _metric_norms(diag, off, np.diff(seg, axis=0))
    cum = np.concatenate([[0.0], np.cumsum(d)])
    if cum[-1] <= 0:
        return
    target = np.linspace(0.0, cum[-1], seg.shape[0])
    new = seg.copy()
    for k in range(1, seg.shape[0] - 1):
        j = min(max(np.searchsorted(cum, target[k]) - 1, 0), seg.shape[0] - 2)
        span = cum[j + 1] - cum[j]
        lam = 0.0 if span == 0 else (target[k] - cum[j]) / span
        new[k] = (1 - lam) * seg[j] + lam * seg[j + 1]
    images[lo:hi + 1] = new


def prolong(path, h_new):
    """Cubic interpolation of ``phi`` onto a finer grid over the same window."""
    n_cells = int(round((path.s_end - path.s_start) / h_new))
    s = path.s_start + h_new * np.arange(n_cells + 1)
    phi = CubicSpline(path.s, path.phi)(s)
    return DiscretizedPath(phi, h_new, path.s_start, path.G0)


@dataclass
class SaddleResult:
    path: DiscretizedPath
    value: float
    gradient_norm: float
    negative_eigenvalues: int
    iterations: int
    trace: list


def _dense(diag, off):
    return np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)


def eigenvector_following(path, G, tails, index=1, tol=1e-10, max_iter=100, twobody=None,
                          trust=0.3, max_nodes=4000):
    """Newton-type search for a critical point of Morse index ``index``.

    Works in the eigenbasis of the pencil (Hessian, ``<<.,.>>`` Gram matrix):
    the ``index`` lowest modes take ascent steps and all others descent steps,
    each scaled by the inverse absolute eigenvalue, with the whole step
    limited to ``trust`` in the metric norm. Dense, meant for coarse grids.
    """
    if path.n_nodes > max_nodes:
        raise DomainError("eigenvector following is dense; coarsen the path first")
    tb = tails.twobody if twobody is None else twobody
    gram = _dense(*metric_tridiagonal(path))
    cur = path
    trace = []
    for it in range(max_iter + 1):
        g = action_derivative(cur, G, tb, tails)
        gn = h1_norm_of_derivative(cur, g)
        trace.append(gn)
        w, vecs = eigh(_dense(*action_hessian(cur, G, tb, tails)), gram)
        n_neg = int(np.count_nonzero(w < 0))
        if gn <= tol and n_neg == index:
            return SaddleResult(cur, reduced_action(cur, G, tails, tb), gn, n_neg, it, trace)
        c = vecs.T @ g
        lam = np.maximum(np.abs(w), 1e-12)
        sign = np.where(np.arange(w.size) < index, 1.0, -1.0)
        step = vecs @ (sign * c / lam)
        size = float(np.sqrt(step @ gram @ step))
        if size > trust:
            step *= trust / size
        r_min = float(cur.radius.min())
        big = float(np.max(np.abs(step)))
        if big > 0.5 * r_min:
            step *= 0.5 * r_min / big
        cur = cur.with_phi(cur.phi + step)
    raise NonConverged("saddle search did not converge", trace=trace)


def mountain_pass(G, tails=None, G0=1.0, half_width=8 * np.pi, m=128, n_images=21,
                  iterations=600, mu=None, collision_gap=0.05, m_bar=20.0, dt=0.1,
                  string_tol=1e-5, coarse_tol=1e-9, polish_m=8192, newton_tol=1e-10,
                  twobody=None,
                  asymmetry=0.02, string_tails=None, climb_after=100, callback=None):
    """Estimate ``c_G`` as the highest point of a relaxed string.

    ``m`` nodes per primary period on ``[-n, n]``. Endpoints: the constant
    shift ``mu`` (largest the tails allow, at most 50) and the shift leaving
    a radius ``collision_gap`` at ``s = 0``. Only images whose minimum radius
    is at most ``m_bar`` compete for the maximum.

    The string runs with ``string_tails`` (the two-body surrogate unless
    given), which unlike a table is defined at every boundary radius. The
    highest image then seeds eigenvector following toward a Morse index one
    critical point on the same grid, and Newton on a grid with ``polish_m``
    nodes per period finishes; both use ``tails``. Even paths form an invariant subspace of
    the flow, so the initial string gets an odd perturbation of size
    ``asymmetry`` to let it leave that subspace.
    """
    if tails is None:
        tails = TwoBodyTails(G, twobody=True)
    tb = tails.twobody if twobody is None else twobody
    if string_tails is None:
        string_tails = tails if isinstance(tails, TwoBodyTails) else TwoBodyTails(G, twobody=tb)
    h = TWO_PI / m
    template = DiscretizedPath.symmetric(half_width, h, 0.0, G0)
    mu = _max_shift(template, tails, 50.0) if mu is None else float(mu)
    eta = collision_gap - float(template.reference.r0.min())
    if mu <= 0:
        raise DomainError("tails domain leaves no room for the far endpoint")
    n = template.n_nodes
    lam = np.linspace(0.0, 1.0, n_images)
    images = np.outer(1 - lam, np.full(n, mu)) + np.outer(lam, np.full(n, eta))
    s = template.s
    images += np.outer(4 * lam * (1 - lam), asymmetry * s * np.exp(-s * s / 8.0))
    diag, off = metric_tridiagonal(template)

    def act(phi):
        return reduced_action(template.with_phi(phi), G, string_tails, tb)

    a_end = (act(images[0]), act(images[-1]))
    values = np.array([act(p) for p in images])
    if max(a_end) >= values.max() - 1e-3:
        raise DomainError("endpoints are not below the string maximum", ends=a_end)

    history = []
    climb = 0
    gnorm = np.inf
    it = 0
    for it in range(1, iterations + 1):
        eligible = [k for k in range(1, n_images - 1)
                    if (template.reference.r0 + images[k]).min() <= m_bar]
        if not eligible:
            raise Stalled("no image satisfies the minimum-radius constraint")
        best = max(eligible, key=lambda k: values[k])
        # keep the climbing image unless another one is clearly higher
        if climb not in eligible or values[best] > values[climb] + 1e-8 * (1 + abs(values[best])):
            climb = best
        climbing = it > climb_after
        for k in range(1, n_images - 1):
            p = template.with_phi(images[k])
            g = action_derivative(p, G, tb, string_tails)
            step = tridiagonal_solve(diag, off, g)
            if k == climb:
                gnorm = float(np.sqrt(max(np.dot(step, g), 0.0)))
            if k == climb and climbing:
                tau = images[k + 1] - images[k - 1]
                tn = _metric_norms(diag, off, tau[None, :])[0]
                if tn > 0:
                    tau /= tn
                    mt = diag * tau
                    mt[:-1] += off * tau[1:]
                    mt[1:] += off * tau[:-1]
                    step = step - 2.0 * np.dot(mt, step) * tau
            r = template.reference.r0 + images[k]
            cap = 0.25 * r.min()
            big = np.max(np.abs(dt * step))
            scale = 1.0 if big <= cap else cap / big
            images[k] = images[k] - scale * dt * step
        _redistribute(images, diag, off, 0, climb)
        _redistribute(images, diag, off, climb, n_images - 1)
        values = np.array([act(p) for p in images])
        history.append((float(values[climb]), gnorm))
        if callback is not None:
            callback(it, values, climb, gnorm)
        if climbing and gnorm <= string_tol:
            break

    string_path = template.with_phi(images[climb].copy())
    string_level = float(values[climb])
    result = MountainPassResult(
        level=string_level, saddle_level=string_level, string_level=string_level,
        path=string_path, string_path=string_path, gradient_norm=gnorm,
        string_gradient_norm=gnorm, iterations=it, polished=False, endpoint_actions=a_end,
        history=history)
    try:
        sad = eigenvector_following(string_path, G, tails, 1, tol=coarse_tol, twobody=tb)
    except NonConverged as exc:
        raise Stalled("no index-one critical point near the string maximum",
                      gradient_norm=gnorm) from exc
    result.saddle_level = result.level = sad.value
    result.path = sad.path
    result.gradient_norm = sad.gradient_norm
    result.negative_eigenvalues = sad.negative_eigenvalues
    if polish_m:
        try:
            nr = refine_newton(prolong(sad.path, TWO_PI / polish_m), G, tails, tol=newton_tol,
                               twobody=tb, allow_singular=True)
            result.level = nr.value
            result.path = nr.path
            result.gradient_norm = nr.gradient_norm
            result.negative_eigenvalues = nr.negative_eigenvalues
            result.polished = True
            result.degenerate = nr.degenerate
        except (NonConverged, SingularJacobian) as exc:
            result.history.append(("polish_failed", exc.code))
    result.barycenter = float(barycenter(result.path, G))
    return result
