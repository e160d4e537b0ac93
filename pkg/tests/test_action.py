import numpy as np
import pytest
from hypothesis import given, strategies as st

from ri3bp.action import (DiscretizedPath, TwoBodyTails, action_derivative, action_hessian,
                          action_value, barycenter, bump, h1_norm, inertia, reduced_action,
                          reduced_gradient_norm, riesz_representative, translate, window_action)
from ri3bp.errors import DomainError, NonpositiveRadius
from ri3bp.kepler import parabola_arrays

# scipy quad of the continuous window integrand for a unit bump on [-1, 1], G = G0 = 1
BUMP_ACTION = -0.24021571496137892


def bump_path(m, half_width=1.5 * np.pi, height=1.0, center=0.0):
    return DiscretizedPath.symmetric(half_width, 2 * np.pi / m,
                                     lambda s: bump(s, center, height, 1.0))


def random_path(seed, m=64, half_width=3 * np.pi):
    rng = np.random.default_rng(seed)
    p = DiscretizedPath.symmetric(half_width, 2 * np.pi / m, 0.0)
    phi = sum(bump(p.s, c, a, w) for c, a, w in zip(rng.uniform(-6, 6, 3), rng.uniform(-0.3, 0.3, 3),
                                                    rng.uniform(0.5, 2.0, 3)))
    return p.with_phi(phi)


def test_bump_matches_quadrature_oracle():
    a512 = action_value(bump_path(512), 1.0, twobody=True).value
    a1024 = action_value(bump_path(1024), 1.0, twobody=True).value
    assert abs(a1024 - BUMP_ACTION) < 2e-4
    assert abs((4 * a1024 - a512) / 3 - BUMP_ACTION) < 1e-6


def test_second_order_convergence():
    vals = [window_action(bump_path(m), 1.0, twobody=True) for m in (128, 256, 512)]
    ratio = (vals[0] - vals[1]) / (vals[1] - vals[2])
    assert 3.6 <= ratio <= 4.4


def test_zero_perturbation_has_zero_action_in_twobody_mode():
    p = DiscretizedPath.symmetric(4 * np.pi, 2 * np.pi / 128, 0.0)
    rep = action_value(p, 1.0, twobody=True)
    assert abs(rep.value) < 1e-13
    assert rep.gradient_norm < 1e-6


@pytest.mark.parametrize("twobody", [True, False])
def test_gradient_matches_finite_differences(twobody):
    p = random_path(1)
    tails = TwoBodyTails(1.3, twobody=twobody)
    g = action_derivative(p, 1.3, twobody, tails)
    rng = np.random.default_rng(2)
    for i in rng.choice(p.n_nodes, 6, replace=False):
        d = 1e-6
        up, dn = p.phi.copy(), p.phi.copy()
        up[i] += d
        dn[i] -= d
        fd = (reduced_action(p.with_phi(up), 1.3, tails, twobody)
              - reduced_action(p.with_phi(dn), 1.3, tails, twobody)) / (2 * d)
        assert fd == pytest.approx(g[i], abs=1e-8)


def test_hessian_matches_finite_differences():
    p = random_path(3)
    tails = TwoBodyTails(1.3, twobody=False)
    diag, off = action_hessian(p, 1.3, False, tails)
    v = np.random.default_rng(4).standard_normal(p.n_nodes)
    d = 1e-6
    fd = (action_derivative(p.with_phi(p.phi + d * v), 1.3, False, tails)
          - action_derivative(p.with_phi(p.phi - d * v), 1.3, False, tails)) / (2 * d)
    hv = diag * v
    hv[:-1] += off * v[1:]
    hv[1:] += off * v[:-1]
    assert np.max(np.abs(fd - hv)) < 1e-6


def test_split_A_minus_G2_B():
    p = random_path(5)
    for G in (0.7, 1.0, 1.9):
        rep = action_value(p, G)
        assert rep.value == pytest.approx(rep.A - G * G * rep.B, abs=1e-12)


@given(st.floats(0.5, 2.0), st.floats(0.5, 2.0))
def test_action_decreases_with_G_squared(g1, g2):
    p = random_path(6)
    a1, a2 = window_action(p, g1), window_action(p, g2)
    if g1 < g2:
        assert a2 <= a1
    else:
        assert a1 <= a2


def test_reduced_action_of_G_parabola():
    # the G-parabola written over the G0 = 1 reference, exact two-body tails
    for G in (1.3, 2.0):
        vals = []
        for m in (256, 512):
            p = DiscretizedPath.symmetric(4 * np.pi, 2 * np.pi / m, 0.0)
            q = p.with_phi(parabola_arrays(p.s, G)[0] - p.reference.r0)
            vals.append(reduced_action(q, G, TwoBodyTails(G)))
        assert abs(vals[1] + 2 * np.pi * (G - 1.0)) < 1e-4
        # discretization error shrinks by about four
        assert abs(vals[1] + 2 * np.pi * (G - 1)) < 0.3 * abs(vals[0] + 2 * np.pi * (G - 1))


def test_riesz_representative_norm():
    p = random_path(7)
    g = action_derivative(p, 1.3)
    rep = riesz_representative(p, g)
    assert h1_norm(p, rep) == pytest.approx(np.sqrt(rep @ g), rel=1e-10)


def test_inertia_counts_negative_directions():
    diag = np.array([-1.0, 2.0, 3.0, -4.0])
    off = np.zeros(3)
    assert inertia(diag, off) == (2, 0)


def test_translate_zero_is_identity_and_shifts_by_periods():
    p = random_path(8)
    assert np.array_equal(translate(p, 0).phi, p.phi)
    q = translate(p, 1, G=1.0)
    m = 64
    r, rq = p.radius, q.radius
    assert np.allclose(rq[:-m], r[m:], atol=1e-15)
    assert q.flags["extended_nodes"] == m


def test_translate_rejects_incommensurate_step():
    p = DiscretizedPath.symmetric(3.0, 0.1, 0.0)
    with pytest.raises(DomainError):
        translate(p, 1)


def test_barycenter_of_even_path_is_zero():
    p = bump_path(128, height=0.4)
    assert abs(barycenter(p)) < 1e-10
    shifted = translate(DiscretizedPath.symmetric(6 * np.pi, 2 * np.pi / 64,
                                                  lambda s: bump(s, 0, 0.4, 1)), 1)
    assert barycenter(shifted) == pytest.approx(-2 * np.pi, abs=1e-6)


def test_path_validation():
    with pytest.raises(NonpositiveRadius):
        DiscretizedPath.symmetric(2.0, 0.1, -10.0)
    with pytest.raises(DomainError):
        DiscretizedPath(np.zeros(5), -1.0, 0.0)
