"""Transport-recursion coefficients against an independent symbolic solution
of the same recursion, plus the weighted-kernel ground-state identity."""

import math

import numpy as np
import pytest

import heatlab
from heatlab import fields, parametrix

FOUR_PI = 4.0 * math.pi

# Taylor series of u_1, u_2 about r = 0 on the unit sphere, solved
# symbolically (exact rational arithmetic) from the same transport recursion
# before this module was written; frozen here as the numerical reference.
U1_SERIES = (1.0 / 3.0, 1.0 / 30.0, 31.0 / 10080.0, 17.0 / 56700.0,
             9689.0 / 319334400.0)
U2_SERIES = (1.0 / 15.0, 1.0 / 105.0, 19.0 / 15120.0, 3277.0 / 19958400.0)


def _series(coeffs, r):
    out = np.zeros_like(r)
    for j, c in enumerate(reversed(coeffs)):
        out = out * r * r + c
    return out


@pytest.fixture(scope="module")
def sphere_chain():
    model = heatlab.build_sphere(1.0, band_limit=8)
    prof = parametrix.radial_profile(model)
    u_0 = parametrix.u0(prof)
    u_1 = parametrix.u_next(prof, u_0)
    u_2 = parametrix.u_next(prof, u_1)
    return model, u_0, u_1, u_2


def test_u0_is_inverse_sqrt_jacobian(sphere_chain):
    _, u_0, _, _ = sphere_chain
    assert u_0.diagonal_value == 1.0
    r = np.linspace(0.1, 1.0, 7)
    want = np.sqrt(r / np.sin(r))
    assert np.allclose(u_0(r), want, rtol=1e-12)


def test_u1_profile_matches_series(sphere_chain):
    _, _, u_1, _ = sphere_chain
    r = np.linspace(0.0, 0.5, 26)
    err = np.abs(u_1(r) - _series(U1_SERIES, r))
    assert err.max() < 1e-8


def test_u2_profile_matches_series(sphere_chain):
    _, _, _, u_2 = sphere_chain
    r = np.linspace(0.0, 0.5, 26)
    err = np.abs(u_2(r) - _series(U2_SERIES, r))
    assert err.max() < 2e-7


def test_unit_sphere_diagonal_values(sphere_chain):
    _, _, u_1, u_2 = sphere_chain
    assert u_1.diagonal_value == pytest.approx(1.0 / 3.0, abs=1e-9)
    assert u_2.diagonal_value == pytest.approx(1.0 / 15.0, abs=1e-7)


def test_radius_two_diagonal_scaling():
    """u_1(0) = 1/(3 R^2), u_2(0) = 1/(15 R^4)."""
    model = heatlab.build_sphere(2.0, band_limit=8)
    prof = parametrix.radial_profile(model)
    u_1 = parametrix.u_next(prof, parametrix.u0(prof))
    u_2 = parametrix.u_next(prof, u_1)
    assert u_1.diagonal_value == pytest.approx(1.0 / 12.0, abs=1e-9)
    assert u_2.diagonal_value == pytest.approx(1.0 / 240.0, abs=1e-7)


def test_sphere_invariants_match_curvature_ladder():
    model = heatlab.build_sphere(1.0, band_limit=8)
    inv = parametrix.heat_invariants(model)
    assert inv.method == "transport_recursion"
    assert inv.a0 == pytest.approx(FOUR_PI, rel=1e-14)
    assert inv.a1 == pytest.approx(FOUR_PI / 3.0, abs=2e-8)
    assert inv.a2 == pytest.approx(FOUR_PI / 15.0, abs=1e-6)


def test_flat_invariants_vanish(circle, torus11):
    for model in (circle, torus11):
        inv = parametrix.heat_invariants(model)
        assert inv.a0 == model.volume
        assert abs(inv.a1) < 1e-12
        assert abs(inv.a2) < 1e-8


def test_invariants_reject_high_order(circle):
    with pytest.raises(ValueError):
        parametrix.heat_invariants(circle, m=3)


def test_weighted_invariants_sphere_out_of_scope(sphere):
    f = fields.project(sphere, lambda p: np.cos(p[:, 0]))
    with pytest.raises(NotImplementedError):
        parametrix.heat_invariants(sphere, f=f)


def test_drifting_a1_is_quarter_dirichlet(torus11):
    f = fields.trig_polynomial(torus11, [(0.4, (1, 0), "cos"),
                                         (0.2, (0, 1), "sin")])
    inv = parametrix.heat_invariants(torus11, f=f)
    D = fields.dirichlet_norm(torus11, f)
    assert inv.method == "witten_quadrature"
    assert inv.a1 == pytest.approx(-0.25 * D, abs=1e-12)
    assert inv.a2 is None


def test_ray_bracket_transport_reproduces_witten_value(torus11):
    """Running the transport step with the ray bracket of f must land on
    u_1(0, base) = -bracket(base): two independent evaluation paths."""
    f = fields.trig_polynomial(torus11, [(0.4, (1, 0), "cos"),
                                         (0.2, (0, 1), "sin")])
    vw = fields.witten_potential(torus11, f)
    prof = parametrix.radial_profile(torus11)
    for base, direction in (((0.15, 0.3), (1.0, 0.0)),
                            ((0.15, 0.3), (0.6, -0.8))):
        bracket = parametrix.ray_bracket(torus11, f, base, direction)
        u_1 = parametrix.u_next(prof, parametrix.u0(prof),
                                f_bracket=bracket)
        want = -float(vw(np.array([base]))[0])
        assert u_1.diagonal_value == pytest.approx(want, abs=1e-9)
        assert u_1.radial is False


def test_ray_bracket_rejects_sphere(sphere):
    f = fields.project(sphere, lambda p: np.cos(p[:, 0]))
    with pytest.raises(NotImplementedError):
        parametrix.ray_bracket(sphere, f, (0.0, 0.0), (1.0, 0.0))


def test_ray_bracket_requires_flat_order_one(torus11):
    f = fields.trig_polynomial(torus11, [(0.4, (1, 0), "cos")])
    bracket = parametrix.ray_bracket(torus11, f, (0.0, 0.0), (1.0, 0.0))
    prof = parametrix.radial_profile(torus11)
    u_1 = parametrix.u_next(prof, parametrix.u0(prof), f_bracket=bracket)
    with pytest.raises(NotImplementedError):
        parametrix.u_next(prof, u_1, f_bracket=bracket)


def test_weighted_kernel_relation():
    """Pointwise ground-state transform: the weighted kernel equals the
    Schrodinger kernel times e^{(f(x)+f(y))/2}; both sides built from
    different eigenproblems."""
    torus = heatlab.build_flat_torus((1.0, 1.0), band_limit=12)
    f = fields.trig_polynomial(torus, [(0.4, (1, 0), "cos"),
                                       (0.2, (0, 1), "sin")])
    lhs, rhs = parametrix.weighted_kernel_relation(
        torus, f, t=0.05, x=(0.2, 0.7), y=(0.55, 0.1), N=64)
    assert lhs == pytest.approx(rhs, rel=5e-6)


def test_weighted_kernel_relation_rejects_bad_t(torus11):
    f = fields.trig_polynomial(torus11, [(0.4, (1, 0), "cos")])
    with pytest.raises(ValueError):
        parametrix.weighted_kernel_relation(torus11, f, t=0.0,
                                            x=(0.0, 0.0), y=(0.1, 0.1))
