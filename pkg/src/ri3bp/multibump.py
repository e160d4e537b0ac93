"""Multibump orbits: copies of a homoclinic block joined by far excursions.

Each block is a path on ``[-n, n]`` around a bump centred at an integer
number of primary periods. Consecutive blocks are joined by a connecting arc
solving the far-region two-point problem; at a joined end the manifold slope
in the block's boundary term is replaced by the arc's velocity. The stacked
block gradients form the residual ``F`` whose zeros are multibump orbits.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .action import _window_gradient, _window_hessian, h1_norm_of_derivative
from .connections import Connector, boundary_velocities
from .dynamics import (DEFAULT_SETTINGS, ClassifyThresholds, PolarState, final_motion,
                       integrate, propagate_to)
from .errors import DomainError, NonConverged, ShadowingFail
from .kepler import TWO_PI
from .manifolds import R_TABLE

TAGS = ("parabolic", "periodic", "hyperbolic")


@dataclass(frozen=True)
class Itinerary:
    """``L`` connectors with lengths ``lengths`` (whole primary periods)."""

    lengths: tuple
    tag: str = "parabolic"
    l_min: int = 0

    def __post_init__(self):
        object.__setattr__(self, "lengths", tuple(int(x) for x in self.lengths))
        if self.tag not in TAGS:
            raise DomainError(f"unknown tag {self.tag!r}")
        if self.tag == "periodic" and not self.lengths:
            raise DomainError("a periodic itinerary needs at least one connector")
        if any(x < max(self.l_min, 1) for x in self.lengths):
            raise DomainError("block length below the admissible minimum", l_min=self.l_min)

    @property
    def L(self):
        return len(self.lengths)

    @property
    def n_blocks(self):
        return self.L if self.tag == "periodic" else self.L + 1

    def centers(self):
        """Block centres in absolute time (multiples of ``2 pi``)."""
        return TWO_PI * np.concatenate([[0], np.cumsum(self.lengths)])[: self.n_blocks]

    def links(self):
        """``(left block, right block, length)`` per connector."""
        nb = self.n_blocks
        return [(j, (j + 1) % nb, l) for j, l in enumerate(self.lengths)]

    def as_dict(self):
        return {"L": self.L, "lengths": list(self.lengths), "tag": self.tag,
                "l_min": self.l_min}


def connector_time(length, half_width):
    return TWO_PI * length - 2.0 * half_width


@dataclass
class LinkState:
    """Connector at the current boundary radii with its velocity partials."""

    conn: Connector
    dvp_dR0: float
    dvp_dR1: float
    dvm_dR0: float
    dvm_dR1: float


def _flow_partials(R0, y0, t0, T, G, settings, dr=1e-6):
    """Central-difference monodromy of the arc, ``d(r, y)(T) / d(r, y)(0)``."""
    out = np.empty((2, 2))
    for k, (a, b) in enumerate(((dr, 0.0), (0.0, dr * 1e-2))):
        ends = []
        for sgn in (1, -1):
            res = propagate_to(R0 + sgn * a, y0 + sgn * b, t0, t0 + T, G, settings)
            ends.append((res.r, res.y))
        step = 2.0 * (a + b)
        out[0, k] = (ends[0][0] - ends[1][0]) / step
        out[1, k] = (ends[0][1] - ends[1][1]) / step
    return out


def _link(T, R0, R1, G, t0, slope, settings):
    conn = boundary_velocities(T, R0, R1, G, t0, slope, settings)
    phi = _flow_partials(R0, conn.v_plus, t0, T, G, settings)
    # r(T) = R1 fixes v+ as a function of (R0, R1)
    dvp_dR0 = -phi[0, 0] / phi[0, 1]
    dvp_dR1 = 1.0 / phi[0, 1]
    dvm_dR0 = phi[1, 0] + phi[1, 1] * dvp_dR0
    dvm_dR1 = phi[1, 1] * dvp_dR1
    return LinkState(conn, dvp_dR0, dvp_dR1, dvm_dR0, dvm_dR1)


@dataclass
class _Ends:
    """Per-block boundary data: gradient and curvature contributions."""

    g_left: float
    g_right: float
    h_left: float
    h_right: float


class MultibumpProblem:
    """Residual and Jacobian of ``F`` for a fixed itinerary."""

    def __init__(self, itinerary, G, tails, template, eps_hyp=0.0, settings=DEFAULT_SETTINGS):
        self.itinerary = itinerary
        self.G = float(G)
        self.tails = tails
        self.template = template
        self.half_width = -template.s_start
        if abs(template.s_end + template.s_start) > 1e-9 * template.h:
            raise DomainError("block template must be symmetric")
        self.eps_hyp = float(eps_hyp)
        self.settings = settings.with_(twobody=tails.twobody)
        self.centers = itinerary.centers()
        self.links_spec = itinerary.links()
        for _, _, l in self.links_spec:
            if connector_time(l, self.half_width) <= 0:
                raise DomainError("connector time must be positive; lengthen the blocks")

    # -- pieces ---------------------------------------------------------------

    def _abs_time(self, j, side):
        return float(self.centers[j] + (self.half_width if side > 0 else -self.half_width))

    def connectors(self, blocks):
        out = []
        for a, b, l in self.links_spec:
            R0 = float(blocks[a].radius[-1])
            R1 = float(blocks[b].radius[0])
            t0 = self._abs_time(a, +1) % TWO_PI
            slope = self.tails.plus(R0, t0)[1]
            T = connector_time(l, self.half_width)
            out.append(_link(T, R0, R1, self.G, t0, slope, self.settings))
        return out

    def _ends(self, blocks, links):
        ref = self.template.reference
        nb = len(blocks)
        ends = []
        for j, p in enumerate(blocks):
            r = p.radius
            tl = self._abs_time(j, -1) % TWO_PI
            tr = self._abs_time(j, +1) % TWO_PI
            _, dsm, ddsm = self.tails.minus(float(r[0]), tl)
            _, dsp, ddsp = self.tails.plus(float(r[-1]), tr)
            ends.append(_Ends(dsm - ref.r0_dot[0], -dsp + ref.r0_dot[-1], ddsm, -ddsp))
        for (a, b, _), lk in zip(self.links_spec, links):
            ends[a].g_right = -lk.conn.v_plus + ref.r0_dot[-1]
            ends[a].h_right = -lk.dvp_dR0
            ends[b].g_left = lk.conn.v_minus - ref.r0_dot[0]
            ends[b].h_left = lk.dvm_dR1
        if self.itinerary.tag == "hyperbolic":
            last = ends[nb - 1]
            last.g_right -= self.eps_hyp
        return ends

    def _boundary_check(self, blocks):
        joined_left = {b for _, b, _ in self.links_spec}
        joined_right = {a for a, _, _ in self.links_spec}
        for j, p in enumerate(blocks):
            for side, idx, joined in ((-1, 0, joined_left), (1, -1, joined_right)):
                r = float(p.radius[idx])
                if j not in joined and not self.tails.contains(r):
                    from .errors import BoundaryOutOfTable

                    raise BoundaryOutOfTable("free block end outside the tail domain", r=r,
                                             block=j)

    # -- public ---------------------------------------------------------------

    def residual(self, blocks, links=None):
        """Block-indexed derivative arrays ``F_j``."""
        self._boundary_check(blocks)
        if links is None:
            links = self.connectors(blocks)
        ref = self.template.reference
        out = []
        for p, e in zip(blocks, self._ends(blocks, links)):
            g = _window_gradient(p.phi, p.h, ref.r0, ref.r0_ddot, ref.rho2, ref.weights,
                                 self.G, self.tails.twobody)
            g[0] += e.g_left
            g[-1] += e.g_right
            out.append(g)
        return out, links

    def jacobian(self, blocks, links):
        ref = self.template.reference
        n = self.template.n_nodes
        diags, offs = [], []
        for p, e in zip(blocks, self._ends(blocks, links)):
            d, o = _window_hessian(p.phi, p.h, ref.r0, ref.rho2, ref.weights, self.G,
                                   self.tails.twobody)
            d[0] += e.h_left
            d[-1] += e.h_right
            diags.append(d)
            offs.append(o)
        nb = len(blocks)
        size = nb * n
        rows = [np.arange(size)]
        cols = [np.arange(size)]
        vals = [np.concatenate(diags)]
        for j in range(nb):
            i = j * n + np.arange(n - 1)
            rows += [i, i + 1]
            cols += [i + 1, i]
            vals += [offs[j], offs[j]]
        for (a, b, _), lk in zip(self.links_spec, links):
            ia, ib = a * n + n - 1, b * n
            # d F_a[N] / d phi_b[0] and d F_b[0] / d phi_a[N]
            rows += [np.array([ia]), np.array([ib])]
            cols += [np.array([ib]), np.array([ia])]
            vals += [np.array([-lk.dvp_dR1]), np.array([lk.dvm_dR0])]
        return sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(size, size))

    def norm(self, blocks, residual):
        return float(np.sqrt(sum(h1_norm_of_derivative(p, g) ** 2
                                 for p, g in zip(blocks, residual))))

    def blocks_from(self, x):
        n = self.template.n_nodes
        return [self.template.with_phi(x[j * n:(j + 1) * n])
                for j in range(self.itinerary.n_blocks)]


def multibump_residual(blocks, itinerary, G, tails, eps_hyp=0.0, settings=DEFAULT_SETTINGS):
    """``F_1..F_{L+1}`` (or the cyclic ``F_per``) at the given blocks.

    Returns ``(residual arrays, total dual norm, connectors)``.
    """
    prob = MultibumpProblem(itinerary, G, tails, blocks[0], eps_hyp, settings)
    if len(blocks) != itinerary.n_blocks:
        raise DomainError("block count does not match the itinerary",
                          expected=itinerary.n_blocks, got=len(blocks))
    res, links = prob.residual(blocks)
    return res, prob.norm(blocks, res), [lk.conn for lk in links]


def _determinant_sign(lu):
    """Sign of ``det J`` from a sparse LU factorization."""
    d = lu.U.diagonal()
    sign = int(np.prod(np.sign(d)))
    for perm in (lu.perm_r, lu.perm_c):
        # parity of a permutation from its cycle decomposition
        seen = np.zeros(perm.size, dtype=bool)
        parity = 0
        for i in range(perm.size):
            if seen[i]:
                continue
            j, length = i, 0
            while not seen[j]:
                seen[j] = True
                j = perm[j]
                length += 1
            parity += length - 1
        sign *= -1 if parity % 2 else 1
    return sign


@dataclass
class ShadowingReport:
    eps: float
    eps_velocity: float
    r_far: float
    block_radius_errors: list
    block_velocity_errors: list
    connector_min_r: list
    block_min_r: list

    @property
    def passed(self):
        return (max(self.block_radius_errors, default=0.0) <= self.eps
                and max(self.block_velocity_errors, default=0.0) <= self.eps_velocity
                and min(self.connector_min_r, default=np.inf) >= self.r_far)

    def as_dict(self):
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


@dataclass
class MultibumpSolution:
    G: float
    itinerary: Itinerary
    blocks: list
    connectors: list
    residual_norm: float
    iterations: int
    determinant_sign: int
    trace: list
    shadowing: ShadowingReport = None
    t: np.ndarray = None
    r: np.ndarray = None
    y: np.ndarray = None
    periodic: dict = None
    final_motions: dict = None
    eps_hyp: float = 0.0
    ball_distance: float = float("nan")
    extra: dict = field(default_factory=dict)

    def manifest(self):
        return {"G": self.G, "itinerary": self.itinerary.as_dict(),
                "residual_norm": self.residual_norm, "iterations": self.iterations,
                "determinant_sign": self.determinant_sign, "trace": self.trace,
                "connectors": [c.as_dict() for c in self.connectors],
                "shadowing": None if self.shadowing is None else self.shadowing.as_dict(),
                "periodic": self.periodic, "final_motions": self.final_motions,
                "eps_hyp": self.eps_hyp, "ball_distance": self.ball_distance,
                "half_width": -self.blocks[0].s_start, "h": self.blocks[0].h}

    def table(self):
        return {"t": self.t, "r": self.r, "y": self.y}


def _sup_velocity(p):
    return np.gradient(p.radius, p.h)


def shadowing_report(blocks, base, connectors, r_far=R_TABLE, fraction=0.1):
    """Block distances to ``base`` and far-region margins of the arcs.

    The tolerance is ``fraction`` of the base block's radial amplitude
    (``max r - min r`` over the window), and likewise for velocities.
    """
    rb = base.radius
    vb = _sup_velocity(base)
    eps = fraction * float(rb.max() - rb.min())
    eps_v = fraction * float(vb.max() - vb.min())
    rad, vel = [], []
    for p in blocks:
        rad.append(float(np.max(np.abs(p.radius - rb))))
        vel.append(float(np.max(np.abs(_sup_velocity(p) - vb))))
    return ShadowingReport(eps, eps_v, float(r_far), rad, vel,
                           [c.min_r for c in connectors], [float(p.radius.min()) for p in blocks])


def _assemble(prob, blocks, connectors, samples_per_arc=2000):
    ts, rs, ys = [], [], []
    for j, p in enumerate(blocks):
        ts.append(prob.centers[j] + p.s)
        rs.append(p.radius)
        ys.append(_sup_velocity(p))
        link = next((c for (a, _, _), c in zip(prob.links_spec, connectors) if a == j), None)
        if link is None:
            continue
        t0 = prob._abs_time(j, +1)
        grid = np.linspace(0.0, link.T, samples_per_arc)[1:-1]
        tr = integrate(PolarState(link.R0, link.v_plus, link.t0, prob.G), link.T,
                       settings=prob.settings, sample_times=link.t0 + grid)
        ts.append(t0 + grid)
        rs.append(tr.r)
        ys.append(tr.y)
    t = np.concatenate(ts)
    order = np.argsort(t, kind="stable")
    return t[order], np.concatenate(rs)[order], np.concatenate(ys)[order]


def _shooting_nodes(prob, blocks, connectors):
    """Multiple-shooting seed: centre, block ends and arc midpoints of every block."""
    nodes = []
    for j, p in enumerate(blocks):
        c = p.n_nodes // 2
        v = _sup_velocity(p)
        nodes.append((prob.centers[j], p.radius[c], v[c]))
        nodes.append((prob._abs_time(j, +1), p.radius[-1], connectors[j].v_plus))
        conn = connectors[j]
        half = 0.5 * conn.T
        res = propagate_to(conn.R0, conn.v_plus, conn.t0, conn.t0 + half, prob.G, prob.settings)
        nodes.append((prob._abs_time(j, +1) + half, res.r, res.y))
        t_in = prob._abs_time(j, +1) + conn.T
        nodes.append((t_in, blocks[(j + 1) % len(blocks)].radius[0], conn.v_minus))
    return nodes


def _periodic_polish(prob, blocks, connectors, tol=1e-12, max_iter=15):
    """Periodic orbit through the discrete solution by cyclic multiple shooting.

    Unknowns are states at the block centres, block ends and arc midpoints;
    the last segment wraps around by one period. Also reports the one-pass
    return mismatch from the polished state at the first centre.
    """
    period = TWO_PI * sum(prob.itinerary.lengths)
    G, st = prob.G, prob.settings
    nodes = _shooting_nodes(prob, blocks, connectors)
    times = np.array([t for t, _, _ in nodes] + [nodes[0][0] + period])
    z = np.array([[r, y] for _, r, y in nodes]).ravel()
    seed = z.copy()
    k = len(nodes)

    def flow(i, w):
        res = propagate_to(w[0], w[1], times[i] % TWO_PI, times[i] % TWO_PI
                           + times[i + 1] - times[i], G, st)
        return np.array([res.r, res.y])

    def defects(zz):
        return np.concatenate([flow(i, zz[2 * i:2 * i + 2]) - zz[2 * ((i + 1) % k):2 * ((i + 1) % k) + 2]
                               for i in range(k)])

    d = defects(z)
    trace = [float(np.max(np.abs(d)))]
    best = (trace[0], z)
    for _ in range(max_iter):
        if trace[-1] <= tol:
            break
        J = np.zeros((2 * k, 2 * k))
        for i in range(k):
            w = z[2 * i:2 * i + 2]
            for c in range(2):
                e = np.zeros(2)
                e[c] = 1e-7 * max(1.0, abs(w[c]))
                J[2 * i:2 * i + 2, 2 * i + c] = (flow(i, w + e) - flow(i, w - e)) / (2 * e[c])
            nxt = (i + 1) % k
            J[2 * i:2 * i + 2, 2 * nxt:2 * nxt + 2] -= np.eye(2)
        z = z + np.linalg.solve(J, -d)
        d = defects(z)
        trace.append(float(np.max(np.abs(d))))
        if trace[-1] < best[0]:
            best = (trace[-1], z)
        elif len(trace) > 3 and min(trace[-3:]) >= best[0]:
            break  # integration noise floor
    z = best[1]
    res = propagate_to(z[0], z[1], 0.0, period, G, st)
    one_pass = float(max(abs(res.r - z[0]), abs(res.y - z[1])))
    return {"state": [float(z[0]), float(z[1])], "period": period,
            "shooting_defect": best[0], "mismatch": one_pass, "trace": trace,
            "segments": k, "discrete_offset": float(np.max(np.abs(z - seed)))}


def solve_multibump(itinerary, G, base, tails, eps_hyp=0.0, tol=1e-10, max_iter=25,
                    settings=DEFAULT_SETTINGS, shadow_fraction=0.1, eps_ball=None,
                    classify_ends=True, thresholds=ClassifyThresholds(), samples_per_arc=2000,
                    raise_on_shadowing=False):
    """Newton on the stacked residual seeded with copies of ``base``.

    ``base`` is a converged block path (e.g. from ``refine_newton``) whose
    grid all blocks share. Tag ``periodic`` closes the itinerary cyclically
    and polishes the result on the period map; tag ``hyperbolic`` launches
    the last block at the stable slope plus ``eps_hyp``.
    """
    if itinerary.tag == "hyperbolic" and eps_hyp <= 0:
        raise DomainError("hyperbolic itineraries need eps_hyp > 0")
    prob = MultibumpProblem(itinerary, G, tails, base, eps_hyp, settings)
    nb = itinerary.n_blocks
    x = np.tile(base.phi, nb)
    blocks = prob.blocks_from(x)
    res, links = prob.residual(blocks)
    fn = prob.norm(blocks, res)
    trace = [fn]
    it = 0
    while fn > tol:
        if it >= max_iter:
            raise NonConverged("multibump Newton did not converge", trace=trace)
        lu = splu(prob.jacobian(blocks, links))
        step = lu.solve(-np.concatenate(res))
        lam = 1.0
        while True:
            try:
                tb = prob.blocks_from(x + lam * step)
                tres, tlinks = prob.residual(tb)
                tfn = prob.norm(tb, tres)
            except (ValueError, ArithmeticError) as exc:  # left the admissible set
                tfn = np.inf
                last_exc = exc
            if tfn < fn or lam < 1e-3:
                break
            lam *= 0.5
        if not np.isfinite(tfn):
            raise NonConverged("multibump Newton step left the admissible set",
                               trace=trace, cause=type(last_exc).__name__)
        x, blocks, res, links, fn = x + lam * step, tb, tres, tlinks, tfn
        trace.append(fn)
        it += 1
        if it >= 4 and trace[-1] > 0.5 * trace[-2] and fn < 100 * tol:
            break  # roundoff floor of the connector solves
    lu = splu(prob.jacobian(blocks, links))
    sign = _determinant_sign(lu)
    conns = [lk.conn for lk in links]
    sol = MultibumpSolution(float(G), itinerary, blocks, conns, fn, it, sign, trace,
                            eps_hyp=float(eps_hyp))
    sol.ball_distance = float(max(np.max(np.abs(p.phi - base.phi)) for p in blocks))
    sol.shadowing = shadowing_report(blocks, base, conns, R_TABLE, shadow_fraction)
    sol.t, sol.r, sol.y = _assemble(prob, blocks, conns, samples_per_arc)
    if itinerary.tag == "periodic":
        sol.periodic = _periodic_polish(prob, blocks, conns)
    if classify_ends and itinerary.tag != "periodic":
        sol.final_motions = _end_motions(prob, blocks, thresholds)
    if eps_ball is not None and sol.ball_distance > eps_ball:
        sol.extra["ball_violation"] = sol.ball_distance
    if raise_on_shadowing and not sol.shadowing.passed:
        raise ShadowingFail("multibump orbit violates the shadowing bounds",
                            report=sol.shadowing.as_dict())
    return sol


def _end_motions(prob, blocks, thresholds):
    """Past motion from the first block's left end, future from the last's right end."""
    first, last = blocks[0], blocks[-1]
    tl = prob._abs_time(0, -1)
    tr = prob._abs_time(len(blocks) - 1, +1)
    r_l = float(first.radius[0])
    r_r = float(last.radius[-1])
    y_l = prob.tails.minus(r_l, tl % TWO_PI)[1]
    y_r = prob.tails.plus(r_r, tr % TWO_PI)[1] + (
        prob.eps_hyp if prob.itinerary.tag == "hyperbolic" else 0.0)
    past = final_motion(PolarState(r_l, y_l, tl % TWO_PI, prob.G), -1, thresholds,
                        prob.settings, max_horizon=1e6)
    future = final_motion(PolarState(r_r, y_r, tr % TWO_PI, prob.G), +1, thresholds,
                          prob.settings, max_horizon=1e6)
    return {"past": past.label, "future": future.label,
            "past_energy": past.final_energy, "future_energy": future.final_energy}
