import numpy as np
import pytest

from ri3bp.action import TwoBodyTails, reduced_action
from ri3bp.connections import (boundary_velocities, find_homoclinic, hyperbolic_velocity,
                               kepler_launch_guess, parabola_path, refine_newton, slope_gap)
from ri3bp.dynamics import IntegratorSettings
from ri3bp.errors import DomainError, NoSolutionInBand
from ri3bp.kepler import parabola_arrays
from ri3bp.manifolds import stable_slope

TB = IntegratorSettings(twobody=True)

# independent shooting oracle: scipy solve_ivp (DOP853, rtol 1e-12) in the
# physical time with its own Kepler solver, bisected on the launch velocity
ORACLE_T200_R50_G2 = (0.035211217252834034, -0.03521111650257916)


def test_connector_matches_shooting_oracle():
    c = boundary_velocities(200.0, 50.0, 50.0, 2.0)
    assert c.v_plus == pytest.approx(ORACLE_T200_R50_G2[0], abs=1e-10)
    assert c.v_minus == pytest.approx(ORACLE_T200_R50_G2[1], abs=1e-10)
    assert c.min_r >= 50.0 - 1e-9
    assert c.apocenter > 50.0


def test_twobody_connector_is_symmetric_and_kepler():
    c = boundary_velocities(300.0, 40.0, 40.0, 1.5, settings=TB)
    assert c.v_minus == pytest.approx(-c.v_plus, abs=1e-10)
    assert c.v_plus == pytest.approx(kepler_launch_guess(300.0, 40.0, 40.0, 1.5), abs=1e-9)


def test_gap_shrinks_with_time():
    slope = stable_slope(20.0, 0.0, 2.0, 1e3)
    gaps = [slope_gap(boundary_velocities(T, 20.0, 20.0, 2.0, slope=slope), slope)
            for T in (800.0, 1600.0, 3200.0)]
    assert gaps[0] > gaps[1] > gaps[2] > 0


def test_connector_domain_errors():
    with pytest.raises(DomainError):
        boundary_velocities(-1.0, 20.0, 20.0, 2.0)
    with pytest.raises(DomainError):
        boundary_velocities(100.0, 2.0, 20.0, 2.0)
    with pytest.raises(NoSolutionInBand):
        # too short to reach R1 even on the parabola
        boundary_velocities(1.0, 20.0, 400.0, 2.0)


def test_hyperbolic_launch():
    v, lab = hyperbolic_velocity(50.0, 1e-2, 2.0)
    assert lab.label == "H"
    v2, lab2 = hyperbolic_velocity(50.0, 2e-2, 2.0)
    assert v2 > v and lab2.final_energy > lab.final_energy
    _, lab0 = hyperbolic_velocity(50.0, 0.0, 2.0, settings=TB)
    assert lab0.label == "P"


def test_twobody_homoclinic_is_the_parabola():
    orb = find_homoclinic(1.7, settings=TB)
    r, rdot, _ = parabola_arrays(np.array([5.0]), 1.7)
    rs, ys = orb.sample(np.array([5.0]))
    assert rs[0] == pytest.approx(r[0], rel=1e-9)
    assert ys[0] == pytest.approx(rdot[0], rel=1e-8)


def test_newton_at_exact_critical_point_takes_no_step():
    G = 1.4
    p = parabola_path(4 * np.pi, 2 * np.pi / 64, G)
    tails = TwoBodyTails(G)
    first = refine_newton(p, G, tails, tol=1e-10, allow_singular=True)
    again = refine_newton(first.path, G, tails, tol=1e-10, allow_singular=True)
    assert again.iterations == 0
    assert np.array_equal(again.path.phi, first.path.phi)
    assert again.value == pytest.approx(reduced_action(first.path, G, tails), abs=1e-15)
