import numpy as np
import pytest

from ri3bp.dynamics import IntegratorSettings, PolarState, integrate
from ri3bp.errors import BoundaryOutOfTable, DomainError
from ri3bp.kepler import s0_generating
from ri3bp.manifolds import (averaged_energy, splitting_curve, splitting_delta, stable_slope,
                             t_grid, unstable_slope, unstable_slope_direct)

TB = IntegratorSettings(twobody=True)
# brentq on the splitting function at tol 1e-13 (bracket [3.0, 3.1], G = 2)
R_STAR_G2 = 3.04673297743824
Y_STAR_G2 = 0.4553071010197445


@pytest.mark.parametrize("r,t", [(5.0, 0.0), (30.0, 1.0), (200.0, 2.5)])
def test_twobody_slope_is_parabola_slope(r, t):
    y = stable_slope(r, t, 1.0, 1e4, 1e-13, TB)
    assert y == pytest.approx(s0_generating(r, 1.0)[1], abs=1e-11)


def test_stable_slope_reproduces_table_nodes(suite):
    tab = suite.table
    i, j = 3, 5
    r, t = float(tab.r_grid[i]), float(tab.t_grid[j])
    assert stable_slope(r, t, 2.0, max(1e3, 10 * r)) == pytest.approx(tab.slopes[i, j], abs=1e-14)


def test_orbit_on_stable_graph_stays_on_it():
    G, r0, t0 = 2.0, 15.0, 0.3
    y0 = stable_slope(r0, t0, G, 1e3)
    times = t0 + np.array([20.0, 60.0, 120.0, 200.0])
    tr = integrate(PolarState(r0, y0, t0, G), 200.0, sample_times=times)
    for t, r, y in zip(tr.t, tr.r, tr.y):
        assert abs(y - stable_slope(r, t, G, 1e3)) <= 5e-12


def test_unstable_by_reversibility_matches_direct_shot():
    a = unstable_slope(12.0, 0.8, 2.0, 1e3)
    b = unstable_slope_direct(12.0, 0.8, 2.0, 1e3)
    assert a == pytest.approx(b, abs=1e-11)
    assert a < 0


def test_slope_lies_near_averaged_zero_level():
    # the manifold is a graph close to the averaged-zero-energy curve
    y = stable_slope(40.0, 0.0, 2.0, 1e3)
    assert abs(averaged_energy(40.0, y, 2.0)) <= 40.0**-1.5


def test_table_interpolates_between_nodes(suite):
    tab = suite.table
    r, t = 17.3, 2.2
    assert float(tab.slope(r, t)) == pytest.approx(stable_slope(r, t, 2.0, 1e3), abs=1e-6)
    # S+ is an antiderivative of the slope
    d = 1e-4
    fd = (tab.generating(r + d, t) - tab.generating(r - d, t)) / (2 * d)
    assert fd == pytest.approx(float(tab.slope(r, t)), abs=1e-8)
    # slope decays toward the parabola slope
    dev = np.abs(tab.deviation(tab.r_grid, 0.0))
    assert dev[-1] < dev[0]


def test_table_phase_grid():
    assert np.allclose(t_grid(4), [0, np.pi / 2, np.pi, 3 * np.pi / 2])


def test_table_rejects_outside(suite):
    assert not suite.table.contains(5.0)
    with pytest.raises(BoundaryOutOfTable):
        suite.table.slope(5.0, 0.0)


def test_splitting_vanishes_in_twobody_mode():
    curve = splitting_curve(2.0, (3.0, 10.0), 8, settings=TB)
    assert np.nanmax(np.abs(curve.delta)) <= 1e-8
    assert curve.simple_brackets() == []


def test_splitting_root_at_G2():
    d_lo = splitting_delta(3.0, 2.0)[0]
    d_hi = splitting_delta(3.1, 2.0)[0]
    assert d_lo * d_hi < 0
    d, ys, yu = splitting_delta(R_STAR_G2, 2.0)
    assert abs(d) <= 1e-10
    assert ys == pytest.approx(Y_STAR_G2, abs=1e-10)


def test_splitting_rejects_G0():
    with pytest.raises(DomainError):
        splitting_curve(0.0, (1, 2))
