import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ri3bp.errors import DomainError
from ri3bp.kepler import (KeplerClock, parabola_arrays, parabola_state, parabola_tau, rho,
                          s0_curvature, s0_generating, solve_kepler)

# mpmath findroot on u - sin u = 1 at 30 digits
U_AT_1 = 1.9345632107520242676
RHO_AT_1 = 0.67789857019441406436

finite_t = st.floats(-1e3, 1e3, allow_nan=False)


def test_kepler_fixed_points():
    assert solve_kepler(0.0) == 0.0
    assert solve_kepler(math.pi) == pytest.approx(math.pi, abs=1e-15)


def test_kepler_oracle_value():
    assert solve_kepler(1.0) == pytest.approx(U_AT_1, abs=1e-14)
    assert rho(1.0) == pytest.approx(RHO_AT_1, abs=1e-14)


@given(finite_t)
def test_kepler_residual(t):
    u = solve_kepler(t)
    assert abs(u - math.sin(u) - t) <= 1e-12 * max(1.0, abs(t))


def test_kepler_monotone():
    t = np.linspace(-50, 50, 10001)
    assert np.all(np.diff(solve_kepler(t)) > 0)


def test_kepler_rejects_nonfinite():
    with pytest.raises(DomainError):
        solve_kepler(np.array([0.0, np.nan]))


@given(finite_t)
def test_rho_even_periodic_bounded(t):
    r = rho(t)
    assert 0.0 <= r <= 1.0
    assert rho(-t) == pytest.approx(r, abs=1e-12)
    assert rho(t + 2 * math.pi) == pytest.approx(r, abs=1e-11)


def test_rho_values_and_clock():
    assert rho(0.0) == 0.0
    assert rho(math.pi) == pytest.approx(1.0, abs=1e-15)
    assert KeplerClock().rho(1.0) == pytest.approx(RHO_AT_1, abs=1e-14)


@given(st.floats(-1e4, 1e4), st.floats(0.2, 5.0))
def test_tau_solves_cubic_and_is_odd(u, G):
    tau = parabola_tau(u, G)
    assert 0.5 * G**3 * (tau + tau**3 / 3) == pytest.approx(u, rel=1e-12, abs=1e-12)
    assert parabola_tau(-u, G) == -tau


def test_tau_examples():
    assert parabola_tau(0.0, 1.0) == 0.0
    assert parabola_tau(2.0 / 3.0, 1.0) == pytest.approx(1.0, abs=1e-15)
    assert parabola_tau(1e4, 1.0) == pytest.approx((6e4) ** (1 / 3), rel=1e-3)
    with pytest.raises(DomainError):
        parabola_tau(1.0, 0.0)


def test_parabola_examples():
    p = parabola_state(0.0, 1.0)
    assert (p.r0, p.r0_dot) == (0.5, 0.0)
    p = parabola_state(2.0 / 3.0, 1.0)
    assert p.r0 == pytest.approx(1.0, abs=1e-15)
    assert p.r0_dot == pytest.approx(1.0, abs=1e-15)
    p = parabola_state(1e4, 1.0)
    assert p.r0 == pytest.approx(0.5 + (6e4) ** (2 / 3) / 2, rel=0.01)


@given(st.floats(-1e5, 1e5), st.floats(0.3, 3.0))
def test_parabola_invariants(u, G):
    r0, r0d, r0dd = parabola_arrays(u, G)
    assert r0 >= G * G / 2 * (1 - 1e-15)
    assert 0.5 * r0d**2 + G * G / (2 * r0**2) - 1 / r0 == pytest.approx(0.0, abs=1e-12)
    assert r0dd == pytest.approx(G * G / r0**3 - 1 / r0**2, abs=1e-15)
    r1, r1d, _ = parabola_arrays(-u, G)
    assert r1 == r0 and r1d == -r0d


def test_parabola_solves_equation_of_motion():
    s = np.linspace(-10, 10, 80001)
    h = s[1] - s[0]
    r0, _, r0dd = parabola_arrays(s, 1.0)
    fd = (r0[2:] - 2 * r0[1:-1] + r0[:-2]) / h**2
    assert np.max(np.abs(fd - r0dd[1:-1])) <= 1e-6


def test_parabola_stays_close_across_G():
    u = np.geomspace(1, 1e6, 50)
    for G, Gs in ((1.0, 1.2), (1.0, 0.7), (2.0, 2.5)):
        diff = np.abs(parabola_arrays(u, G)[0] - parabola_arrays(u, Gs)[0])
        assert np.max(diff) <= 2.0 * abs(G * G - Gs * Gs)


def test_s0_examples():
    assert s0_generating(0.5, 1.0) == (0.0, 0.0)
    assert s0_generating(1.0, 1.0)[1] == pytest.approx(1.0, abs=1e-15)
    assert s0_generating(100.0, 1.0)[1] == pytest.approx(math.sqrt(0.02 - 0.0001), abs=1e-15)
    with pytest.raises(DomainError):
        s0_generating(0.4, 1.0)


@pytest.mark.parametrize("G", [0.5, 1.0, 2.0])
def test_s0_derivatives_by_central_differences(G):
    r = np.geomspace(G * G / 2 + 0.01, 1e4, 300)
    d = 1e-6 * r
    fd = (s0_generating(r + d, G)[0] - s0_generating(r - d, G)[0]) / (2 * d)
    ds = s0_generating(r, G)[1]
    assert np.max(np.abs(fd - ds) / ds) <= 1e-8
    fd2 = (s0_generating(r + d, G)[1] - s0_generating(r - d, G)[1]) / (2 * d)
    assert np.max(np.abs(fd2 - s0_curvature(r, G)) / np.abs(fd2)) <= 1e-6
