import numpy as np
import pytest

from ri3bp.action import action_derivative
from ri3bp.errors import DomainError
from ri3bp.kepler import TWO_PI
from ri3bp.multibump import Itinerary, connector_time, multibump_residual, solve_multibump


def test_itinerary_shapes():
    it = Itinerary((3, 5))
    assert it.L == 2 and it.n_blocks == 3
    assert np.allclose(it.centers(), TWO_PI * np.array([0, 3, 8]))
    assert it.links() == [(0, 1, 3), (1, 2, 5)]
    per = Itinerary((3, 5), tag="periodic")
    assert per.n_blocks == 2
    assert per.links()[-1] == (1, 0, 5)


@pytest.mark.parametrize("kw", [dict(lengths=(4,), tag="bogus"), dict(lengths=(), tag="periodic"),
                                dict(lengths=(2,), l_min=5), dict(lengths=(0,))])
def test_itinerary_rejects(kw):
    with pytest.raises(DomainError):
        Itinerary(**kw)


def test_connector_time():
    assert connector_time(10, 8 * np.pi) == pytest.approx(4 * np.pi)


def test_single_block_is_plain_gradient(suite):
    base = suite.newton_coarse.path
    res, norm, conns = multibump_residual([base], Itinerary(()), suite.G, suite.tails)
    assert conns == []
    g = action_derivative(base, suite.G, False, suite.tails)
    assert np.max(np.abs(res[0] - g)) < 1e-14
    assert norm == pytest.approx(suite.newton_coarse.gradient_norm, rel=1e-6, abs=1e-12)


def test_copies_of_base_are_near_critical_for_long_gaps(suite):
    base = suite.newton_coarse.path
    norms = []
    for length in (200, 400, 800):
        _, n, _ = multibump_residual([base, base], Itinerary((length,)), suite.G, suite.tails)
        norms.append(n)
    assert norms[0] > norms[1] > norms[2]


def test_block_count_mismatch(suite):
    base = suite.newton_coarse.path
    with pytest.raises(DomainError):
        multibump_residual([base], Itinerary((400,)), suite.G, suite.tails)


def test_two_bump_solution(suite):
    base = suite.newton_coarse.path
    length = suite.length_for(10 * suite.t_min[0])
    sol = solve_multibump(Itinerary((length,)), suite.G, base, suite.tails, tol=1e-10,
                          classify_ends=False)
    assert sol.residual_norm <= 1e-10
    assert sol.shadowing.passed
    assert sol.determinant_sign in (-1, 1)
    c = sol.connectors[0]
    assert c.min_r >= 10.0
