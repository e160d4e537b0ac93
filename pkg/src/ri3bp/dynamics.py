"""Radial dynamics of the massless body, integration and final-motion labels."""

from dataclasses import dataclass, field, asdict

import numpy as np

from . import _integrator as _ig
from .errors import (
    DomainError,
    HorizonTooShort,
    RadiusCollapse,
    SingularityError,
    StepUnderflow,
)
from .kepler import TWO_PI, rho, solve_kepler, time_of_anomaly


@dataclass(frozen=True)
class PolarState:
    r: float
    y: float
    t: float
    G: float


@dataclass(frozen=True)
class McGeheeState:
    x: float
    y: float
    t: float


def to_mcgehee(state):
    if state.r <= 0:
        raise DomainError("r must be positive")
    return McGeheeState(float(np.sqrt(2.0 / state.r)), state.y, state.t)


def to_polar(state, G):
    if state.x <= 0:
        raise DomainError("x must be positive")
    return PolarState(2.0 / (state.x * state.x), state.y, state.t, G)


def straightened(state, G, twobody=False):
    """Diagnostic straightened coordinates near infinity.

    Returns ``(q_tilde, p_tilde, q, p)``: ``q_tilde = (x - y)/2`` and
    ``p_tilde = (x + y)/2``; ``q`` and ``p`` subtract the zero-level graphs of
    the averaged problem, so the local stable set is ``q ~ 0`` and the
    unstable set ``p ~ 0``.
    """
    from .kepler import averaged_zero_energy_slope

    m = to_mcgehee(state)
    y_graph = averaged_zero_energy_slope(state.r, G, twobody)
    q_t = 0.5 * (m.x - m.y)
    p_t = 0.5 * (m.x + m.y)
    return q_t, p_t, 0.5 * (y_graph - m.y), 0.5 * (m.y + y_graph)


def _rho_of(t, twobody):
    return 0.0 if twobody else rho(t)


def vector_field(state, twobody=False):
    """``(dr, dy, dt)`` of the radial equation at ``state``."""
    if state.r <= 0:
        raise DomainError("vector_field needs r > 0")
    rh = _rho_of(state.t, twobody)
    d = state.r**2 + rh**2
    if d == 0.0 or not np.isfinite(d):
        raise SingularityError("collision with a primary", r=state.r, t=state.t)
    acc = state.G**2 / state.r**3 - state.r / d**1.5
    return state.y, acc, 1.0


def energy_arrays(r, y, t, G, twobody=False):
    r = np.asarray(r, dtype=float)
    y = np.asarray(y, dtype=float)
    rh = 0.0 if twobody else rho(np.asarray(t, dtype=float))
    return 0.5 * y * y + G * G / (2.0 * r * r) - 1.0 / np.sqrt(r * r + rh * rh)


def energy(state, twobody=False):
    if state.r <= 0:
        raise DomainError("energy needs r > 0")
    return float(energy_arrays(state.r, state.y, state.t, state.G, twobody))


@dataclass(frozen=True)
class IntegratorSettings:
    """Integrator controls. ``tol`` is the relative local tolerance."""

    tol: float = 1e-12
    atol_factor: float = 1e-3
    r_switch: float = 1e3
    hysteresis: float = 0.1
    r_floor: float = 1e-8
    max_steps: int = 50_000_000
    twobody: bool = False

    def with_(self, **kw):
        d = asdict(self)
        d.update(kw)
        return IntegratorSettings(**d)


DEFAULT_SETTINGS = IntegratorSettings()


# ---------------------------------------------------------------------------
# time <-> integration variable


def to_clock(t, twobody):
    """Integration variable for time ``t``: the anomaly, or ``t`` itself."""
    return np.asarray(t, dtype=float) if twobody else solve_kepler(t)


def from_clock(v, twobody):
    return np.asarray(v, dtype=float) if twobody else time_of_anomaly(v)


@dataclass
class PropagationResult:
    status: int
    t: float
    r: float
    y: float
    steps: int
    rejected: int


def propagate_to(r, y, t0, t1, G, settings=DEFAULT_SETTINGS, r_low=0.0,
                 r_high=np.inf, stop_on_turn=False, max_steps=None):
    """Low-level propagation between times with event stops; no sampling."""
    v0 = float(to_clock(t0, settings.twobody))
    v1 = float(to_clock(t1, settings.twobody))
    out = _ig.propagate(
        float(r), float(y), v0, v1, float(G), bool(settings.twobody),
        settings.tol, settings.tol * settings.atol_factor, settings.r_switch,
        settings.hysteresis, settings.r_floor, float(r_low), float(r_high),
        bool(stop_on_turn), int(max_steps or settings.max_steps), np.empty(0), False,
    )
    status, v, r_e, y_e, na, nr = out[:6]
    t_end = float(from_clock(v, settings.twobody))
    return PropagationResult(int(status), t_end, float(r_e), float(y_e), int(na), int(nr))


def _raise_for_status(status, t):
    if status == _ig.COLLAPSE:
        raise RadiusCollapse("radius fell below the floor", t=t)
    if status == _ig.UNDERFLOW:
        raise StepUnderflow("step size underflow near a singularity", t=t)


@dataclass
class Trajectory:
    """Samples in increasing time plus integrator statistics."""

    t: np.ndarray
    r: np.ndarray
    y: np.ndarray
    G: float
    twobody: bool
    direction: int = 1
    steps: int = 0
    rejected: int = 0
    status: str = "DONE"
    settings: dict = field(default_factory=dict)

    @property
    def energy(self):
        return energy_arrays(self.r, self.y, self.t, self.G, self.twobody)

    @property
    def horizon(self):
        return float(self.t[-1] - self.t[0])

    @property
    def max_energy_drift(self):
        e = self.energy
        return float(np.max(np.abs(e - e[0])))

    def ordered(self):
        """Samples in the direction of integration."""
        if self.direction > 0:
            return self.t, self.r, self.y
        return self.t[::-1], self.r[::-1], self.y[::-1]

    def start(self):
        t, r, y = self.ordered()
        return PolarState(float(r[0]), float(y[0]), float(t[0]), self.G)

    def end(self):
        t, r, y = self.ordered()
        return PolarState(float(r[-1]), float(y[-1]), float(t[-1]), self.G)

    def metadata(self):
        return {
            "G": self.G,
            "twobody": self.twobody,
            "direction": self.direction,
            "samples": int(self.t.size),
            "steps": self.steps,
            "rejected_steps": self.rejected,
            "max_energy_drift": self.max_energy_drift,
            "status": self.status,
            "settings": self.settings,
        }

    def table(self):
        """Columns ``s, r, y, t_mod_2pi, energy``."""
        return {
            "s": self.t,
            "r": self.r,
            "y": self.y,
            "t_mod_2pi": np.mod(self.t, TWO_PI),
            "energy": self.energy,
        }


_STATUS_NAMES = {
    _ig.DONE: "DONE",
    _ig.HIT_R_HIGH: "HIT_R_HIGH",
    _ig.TURNED: "TURNED",
    _ig.COLLAPSE: "R_COLLAPSE",
    _ig.UNDERFLOW: "STEP_UNDERFLOW",
    _ig.MAX_STEPS: "MAX_STEPS",
    _ig.HIT_R_LOW: "HIT_R_LOW",
}


def integrate(start, horizon, tol=None, settings=DEFAULT_SETTINGS, sample_times=None,
              r_high=np.inf, r_low=0.0, stop_on_turn=False, record_steps=None):
    """Integrate from ``start`` over ``horizon`` (negative for the past).

    With ``sample_times`` (absolute times inside the span) the trajectory is
    sampled exactly there, steps being clipped to hit them; otherwise every
    accepted step is recorded. Event stops (``r_high``, ``r_low``,
    ``stop_on_turn``) end the trajectory early with the matching status.
    """
    if tol is not None:
        settings = settings.with_(tol=float(tol))
    if settings.tol <= 0:
        raise DomainError("tol must be positive")
    if start.r <= 0:
        raise DomainError("start radius must be positive")
    tb = settings.twobody
    t0 = float(start.t)
    t1 = t0 + float(horizon)
    direction = 1 if horizon >= 0 else -1
    v0 = float(to_clock(t0, tb))
    v1 = float(to_clock(t1, tb))
    if sample_times is not None:
        ts = np.asarray(sample_times, dtype=float)
        if direction < 0:
            ts = ts[::-1]
        grid = np.ascontiguousarray(to_clock(ts, tb), dtype=float)
        record = False if record_steps is None else bool(record_steps)
    else:
        grid = np.empty(0)
        record = True if record_steps is None else bool(record_steps)
    out = _ig.propagate(
        float(start.r), float(start.y), v0, v1, float(start.G), bool(tb),
        settings.tol, settings.tol * settings.atol_factor, settings.r_switch,
        settings.hysteresis, settings.r_floor, float(r_low), float(r_high),
        bool(stop_on_turn), int(settings.max_steps), grid, record,
    )
    status, v_end, r_end, y_end, n_acc, n_rej, gr, gy, ng, rv, rr, ry, nrec = out
    t_end = float(from_clock(v_end, tb))
    _raise_for_status(status, t_end)
    if sample_times is not None:
        tt = np.asarray(from_clock(grid[:ng], tb), dtype=float)
        # keep exact requested times (the clock inverse adds roundoff only)
        tt = ts[:ng]
        r_s, y_s = gr[:ng], gy[:ng]
    else:
        tt = np.asarray(from_clock(rv[:nrec], tb), dtype=float)
        r_s, y_s = rr[:nrec], ry[:nrec]
    if direction < 0:
        tt, r_s, y_s = tt[::-1], r_s[::-1], y_s[::-1]
    return Trajectory(
        np.array(tt), np.array(r_s), np.array(y_s), float(start.G), bool(tb), direction,
        int(n_acc), int(n_rej), _STATUS_NAMES[int(status)], asdict(settings),
    )


def reverse_state(state):
    """Time-reversal symmetry ``(r, y, t) -> (r, -y, -t)``."""
    return PolarState(state.r, -state.y, -state.t, state.G)


# ---------------------------------------------------------------------------
# final motions


@dataclass(frozen=True)
class ClassifyThresholds:
    min_horizon: float = 1e3
    r_esc: float = 1e3
    e_min: float = 1e-4
    r_bound: float = 1e2
    k_alternations: int = 3


@dataclass(frozen=True)
class FinalMotionLabel:
    label: str
    direction: int
    limsup_r: float
    last_abs_y: float
    turning_points: int
    final_energy: float
    conclusive: bool

    def as_dict(self):
        return asdict(self)


def classify(traj, thresholds=ClassifyThresholds()):
    """Chazy label of the trajectory in its direction of integration.

    H and (with a finished far excursion) the escape decisions are made from
    the last sample; B requires the whole horizon to stay below ``r_bound``.
    Only H is conclusive, the other labels are finite-horizon heuristics.
    """
    if abs(traj.horizon) < thresholds.min_horizon and traj.status not in ("HIT_R_HIGH",):
        raise HorizonTooShort(
            f"horizon {abs(traj.horizon):.3g} < {thresholds.min_horizon:.3g}"
        )
    t, r, y = traj.ordered()
    yd = traj.direction * y  # outward velocity in the direction of travel
    e = energy_arrays(r, y, t, traj.G, traj.twobody)
    turning = int(np.count_nonzero(np.diff(np.sign(yd)) != 0))
    limsup = float(np.max(r))
    e_end = float(e[-1])
    last_abs_y = float(abs(y[-1]))

    # alternations between the far and the near zone
    zone = np.where(r > thresholds.r_esc, 1, np.where(r < thresholds.r_bound, -1, 0))
    visited = zone[zone != 0]
    alternations = int(np.count_nonzero(np.diff(visited) != 0)) if visited.size else 0

    def make(label, conclusive=False):
        return FinalMotionLabel(label, traj.direction, limsup, last_abs_y, turning, e_end, conclusive)

    if alternations >= thresholds.k_alternations:
        return make("O")
    if r[-1] > thresholds.r_esc and yd[-1] > 0:
        if e_end >= thresholds.e_min:
            return make("H", True)
        tail = max(2, r.size // 10)
        decreasing = abs(yd[-1]) < abs(yd[-tail])
        if abs(e_end) < thresholds.e_min and decreasing:
            return make("P")
    if limsup <= thresholds.r_bound:
        return make("B")
    return make("UNDETERMINED")


def final_motion(state, direction=1, thresholds=ClassifyThresholds(), settings=DEFAULT_SETTINGS,
                 max_horizon=1e7):
    """Integrate in ``direction`` and classify.

    Integration stops once the orbit is well past ``r_esc`` (twice it), which
    is enough for the H and P decisions; otherwise it runs the minimum
    horizon, extended up to ``max_horizon`` while the orbit is outside the
    bounded zone.
    """
    horizon = thresholds.min_horizon
    while True:
        traj = integrate(state, direction * horizon, settings=settings,
                         r_high=2.0 * thresholds.r_esc)
        lab = classify(traj, thresholds)
        if lab.label != "UNDETERMINED" or horizon >= max_horizon or traj.status == "HIT_R_HIGH":
            return lab
        horizon *= 4.0
