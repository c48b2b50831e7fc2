"""Energy evaluations: closed-form oracles, route agreement, pairings."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thinepi.grids import build_grid
from thinepi.profiles import halfspace_2d, make_profile
from thinepi.spectral import eigenbasis, even_circle_basis, half_sphere_basis
from thinepi.traces import SphericalTrace, circle_dtheta, trace_from_basis, \
    trace_from_halfspace, trace_from_profile
from thinepi.weiss import (BallFunction, EnergyReport, ball_sum, beta_pairing,
                           bilinear_R, default_radii, homogeneous_extension,
                           kappa, volume_integral, weiss_quadrature,
                           weiss_raised, weiss_spectral, weiss_tilde)


@pytest.fixture(scope="module")
def circle():
    return build_grid(1, 2048)


@pytest.fixture(scope="module")
def sin_basis(circle):
    return half_sphere_basis(1, 10, grid=circle)


# ---------------------------------------------------------------------------
# Closed-form oracles
# ---------------------------------------------------------------------------

def test_constant_function_energy_is_minus_mu_times_sphere_area(circle):
    const = SphericalTrace(circle, np.ones(circle.size),
                           dtheta=np.zeros(circle.size))
    v = homogeneous_extension(const, 0.0)
    for mu in (0.5, 1.0, 2.0):
        assert weiss_quadrature(v, mu) == pytest.approx(-mu * 2.0 * np.pi, rel=1e-12)


def test_constant_function_energy_n2():
    g = build_grid(2, 64)
    const = SphericalTrace(g, np.ones(g.size))
    v = homogeneous_extension(const, 0.0)
    assert weiss_quadrature(v, 2.0) == pytest.approx(-8.0 * np.pi, rel=1e-10)


def test_profile_extension_has_zero_energy(circle):
    p = make_profile(0, 1)
    v = homogeneous_extension(trace_from_profile(p, circle), 1.0)
    assert abs(weiss_quadrature(v, 1.0)) < 1e-12


def test_halfspace_three_halves_energy(circle):
    c = trace_from_halfspace(halfspace_2d(1.5), circle)
    assert weiss_quadrature(homogeneous_extension(c, 1.5), 1.0) == \
        pytest.approx(np.pi / 2.0, rel=1e-12)
    assert weiss_quadrature(homogeneous_extension(c, 1.0), 1.0) == \
        pytest.approx(5.0 * np.pi / 8.0, rel=1e-12)


def test_halfspace_integer_homogeneity_energies(circle):
    c2 = trace_from_halfspace(halfspace_2d(2.0), circle)
    assert weiss_quadrature(homogeneous_extension(c2, 2.0), 1.0) == \
        pytest.approx(np.pi, rel=1e-12)
    c3 = trace_from_halfspace(halfspace_2d(3.0), circle)
    assert weiss_quadrature(homogeneous_extension(c3, 3.0), 1.0) == \
        pytest.approx(2.0 * np.pi, rel=1e-12)


def test_single_mode_raised_energy_worked_case(sin_basis):
    # mode with angular eigenvalue 4 at mu=1: base 3/2, raised (at 3/2) 13/12,
    # contraction defect -7/60, all scaling quadratically in the amplitude
    for eps in (1.0, 0.1):
        c = np.zeros(10)
        c[1] = eps
        rep = weiss_raised(c, sin_basis, 1.0, 1.5)
        assert rep.base_value == pytest.approx(1.5 * eps ** 2, rel=1e-14)
        assert rep.value == pytest.approx(13.0 / 12.0 * eps ** 2, rel=1e-14)
        assert rep.kappa == pytest.approx(0.2, abs=1e-15)
        assert rep.residual == pytest.approx(-7.0 / 60.0 * eps ** 2, rel=1e-13)
        assert rep.value - (1.0 - rep.kappa) * rep.base_value == \
            pytest.approx(rep.residual, abs=1e-13)


# ---------------------------------------------------------------------------
# Route agreement
# ---------------------------------------------------------------------------

def test_spectral_matches_quadrature_random_vectors(circle, sin_basis):
    rng = np.random.default_rng(3)
    for _ in range(20):
        c = rng.standard_normal(10)
        mu = rng.uniform(0.5, 3.0)
        tr = trace_from_basis(sin_basis, c)
        wq = weiss_quadrature(homogeneous_extension(tr, mu), mu)
        ws = weiss_spectral(c, sin_basis, mu)
        assert wq == pytest.approx(ws, rel=1e-10)


def test_raised_spectral_matches_quadrature(circle, sin_basis):
    rng = np.random.default_rng(4)
    for _ in range(10):
        c = rng.standard_normal(10)
        mu, alpha = 1.0, rng.uniform(1.1, 2.5)
        tr = trace_from_basis(sin_basis, c)
        wq = weiss_quadrature(homogeneous_extension(tr, alpha), mu)
        rep = weiss_raised(c, sin_basis, mu, alpha)
        assert wq == pytest.approx(rep.value, rel=1e-10)
        assert rep.value - (1.0 - rep.kappa) * rep.base_value == \
            pytest.approx(rep.residual, rel=1e-9, abs=1e-12)


def test_discrete_n2_routes_agree_and_improve():
    rng = np.random.default_rng(5)
    mu = 0.5
    worsts = []
    for res in (128, 256):
        g = build_grid(2, res)
        basis = eigenbasis(g, g.equator, 6, use_cache=False)
        worst = 0.0
        for _ in range(10):
            c = rng.standard_normal(6)
            c /= np.linalg.norm(c)
            ws = weiss_spectral(c, basis, mu)
            tr = SphericalTrace(g, basis.reconstruct(c))
            wq = weiss_quadrature(homogeneous_extension(tr, mu), mu)
            worst = max(worst, abs(wq - ws) / abs(ws))
        worsts.append(worst)
    assert worsts[1] < 3e-3
    assert worsts[1] < 0.5 * worsts[0]


def test_quadratic_scaling_of_energy(sin_basis):
    rng = np.random.default_rng(6)
    c = rng.standard_normal(10)
    for mu in (1.0, 3.0):
        base = weiss_spectral(c, sin_basis, mu)
        for s in (0.1, 2.0, -1.0):
            assert weiss_spectral(s * c, sin_basis, mu) == \
                pytest.approx(s * s * base, rel=1e-12)


# ---------------------------------------------------------------------------
# Bilinear form and surface pairing
# ---------------------------------------------------------------------------

def test_bilinear_R_of_v_with_itself_is_the_energy(circle, sin_basis):
    rng = np.random.default_rng(7)
    c = rng.standard_normal(10)
    v = homogeneous_extension(trace_from_basis(sin_basis, c), 2.0)
    w = weiss_quadrature(v, 2.0)
    assert bilinear_R(v, v, 2.0) == pytest.approx(w, rel=1e-13)


def test_bilinear_R_homogeneous_pair_matches_sampled_route(circle, sin_basis):
    rng = np.random.default_rng(8)
    a = trace_from_basis(sin_basis, rng.standard_normal(10))
    b = trace_from_basis(sin_basis, rng.standard_normal(10))
    va, vb = homogeneous_extension(a, 1.5), homogeneous_extension(b, 2.5)
    exact = bilinear_R(va, vb, 1.0)
    radii, rw = default_radii(64)
    sa = BallFunction(circle, radii, values=np.power(radii, 1.5)[:, None] * a.values,
                      radial_weights=rw)
    sb = BallFunction(circle, radii, values=np.power(radii, 2.5)[:, None] * b.values,
                      radial_weights=rw)
    assert bilinear_R(sa, sb, 1.0) == pytest.approx(exact, rel=1e-4)


def test_beta_pairing_predicts_bilinear_R(circle, sin_basis):
    # mixed kinked-times-smooth integrands make both routes second order in
    # the angular step, so agreement at 2048 nodes is ~1e-4 and tightens on
    # the fine grid exercised below
    rng = np.random.default_rng(9)
    cos_basis = even_circle_basis(circle, 8)
    for _ in range(10):
        phi_c = rng.standard_normal(6)
        psi = trace_from_basis(cos_basis, rng.standard_normal(8))
        assert np.max(np.abs(psi.values[circle.equator])) > 1e-3
        mu = rng.uniform(0.5, 2.5)
        alpha = rng.uniform(0.5, 3.0)
        rep = beta_pairing(phi_c, psi, mu, alpha, basis=sin_basis)
        vphi = homogeneous_extension(trace_from_basis(sin_basis, phi_c), mu)
        vpsi = homogeneous_extension(psi, alpha)
        rq = bilinear_R(vphi, vpsi, mu)
        assert rep.predicted_R == pytest.approx(rq, rel=2e-3, abs=1e-3)
        n = 1
        assert (n + alpha + mu - 1.0) * rq - rep.beta == pytest.approx(0.0, abs=2e-3)


def test_beta_identity_tight_on_fine_circle():
    grid = build_grid(1, 2 ** 17)
    sin10 = half_sphere_basis(1, 10, grid=grid)
    cos8 = even_circle_basis(grid, 8)
    rng = np.random.default_rng(19)
    for _ in range(3):
        phi_c = rng.standard_normal(6)
        psi = trace_from_basis(cos8, rng.standard_normal(8))
        mu, alpha = rng.uniform(0.5, 2.5), rng.uniform(0.5, 3.0)
        rep = beta_pairing(phi_c, psi, mu, alpha, basis=sin10)
        vphi = homogeneous_extension(trace_from_basis(sin10, phi_c), mu)
        vpsi = homogeneous_extension(psi, alpha)
        rq = bilinear_R(vphi, vpsi, mu)
        assert abs((1 + alpha + mu - 1.0) * rq - rep.beta) < 1e-6


def test_beta_pairing_equator_term_vanishes_for_vanishing_psi(circle, sin_basis):
    # psi built from the constrained basis itself vanishes at the equator
    rng = np.random.default_rng(10)
    psi = trace_from_basis(sin_basis, rng.standard_normal(10))
    rep = beta_pairing(rng.standard_normal(6), psi, 1.0, 2.0, basis=sin_basis)
    assert rep.equator_term == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------------------
# Sampled route details
# ---------------------------------------------------------------------------

def test_sampled_route_matches_closed_form(circle, sin_basis):
    rng = np.random.default_rng(11)
    c = rng.standard_normal(10)
    tr = trace_from_basis(sin_basis, c)
    mu = 2.0
    exact = weiss_quadrature(homogeneous_extension(tr, mu), mu)
    radii, rw = default_radii(64)
    vals = np.power(radii, mu)[:, None] * tr.values[None, :]
    sampled = BallFunction(circle, radii, values=vals, radial_weights=rw)
    got, err = weiss_quadrature(sampled, mu, with_error=True)
    assert got == pytest.approx(exact, rel=1e-4)
    assert err < 1e-2 * abs(exact)


def test_sampled_route_error_threshold_raises(circle, sin_basis):
    c = np.zeros(10)
    c[3] = 1.0
    tr = trace_from_basis(sin_basis, c)
    radii, rw = default_radii(24)
    vals = np.power(radii, 2.0)[:, None] * tr.values[None, :]
    sampled = BallFunction(circle, radii, values=vals, radial_weights=rw)
    with pytest.raises(ValueError, match="quadrature error"):
        weiss_quadrature(sampled, 2.0, error_threshold=1e-16)


def test_radii_must_end_at_one(circle):
    with pytest.raises(ValueError, match="end at 1"):
        BallFunction(circle, np.linspace(0.1, 0.9, 5),
                     values=np.zeros((5, circle.size)))


def test_volume_integral_and_tilde_energy(circle):
    const = SphericalTrace(circle, np.ones(circle.size),
                           dtheta=np.zeros(circle.size))
    v = homogeneous_extension(const, 1.0)
    # int_B r * 1 dx = 2*pi * int_0^1 r * r dr = 2*pi/3
    assert volume_integral(v, lambda pts: np.ones(len(pts))) == \
        pytest.approx(2.0 * np.pi / 3.0, rel=1e-12)
    w = weiss_quadrature(v, 1.0)
    assert weiss_tilde(v, lambda pts: np.ones(len(pts)), 1.0) == \
        pytest.approx(w + 2.0 * np.pi / 3.0, rel=1e-10)


def test_ball_sum_energy_expands_bilinearly(circle, sin_basis):
    rng = np.random.default_rng(12)
    a = trace_from_basis(sin_basis, rng.standard_normal(10))
    b = trace_from_basis(sin_basis, rng.standard_normal(10))
    mu = 1.0
    v = ball_sum([(1.0, a), (1.5, b)])
    va, vb = homogeneous_extension(a, 1.0), homogeneous_extension(b, 1.5)
    expected = weiss_quadrature(va, mu) + weiss_quadrature(vb, mu) \
        + 2.0 * bilinear_R(va, vb, mu)
    assert weiss_quadrature(v, mu) == pytest.approx(expected, rel=1e-12)


def test_energy_report_row():
    rep = EnergyReport(case_id="case", mu=1.0, alpha=1.5,
                       w_quad=1.0 + 1e-9, w_spec=1.0)
    assert rep.discrepancy == pytest.approx(1e-9)
    assert rep.row()["case_id"] == "case"


@given(st.floats(1.01, 5.0), st.floats(0.25, 4.0))
@settings(max_examples=30, deadline=None)
def test_kappa_matches_its_definition(alpha, mu):
    n = 1
    assert kappa(alpha, mu, n) == pytest.approx((alpha - mu) / (n + alpha + mu - 1))


def test_numeric_circle_derivative_consistency(circle):
    p = make_profile(1, 1)
    tr = trace_from_profile(p, circle)
    d_num = circle_dtheta(circle, tr.values)
    assert np.max(np.abs(d_num - tr.dtheta)) < 1e-4
