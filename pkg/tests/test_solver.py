"""Constrained solver: oracle solutions, complementarity, reduction to the
zero-obstacle normal form, persistence."""

import warnings

import numpy as np
import pytest

from thinepi.polynomials import Polynomial, even_harmonic_extension
from thinepi.profiles import halfspace_2d, make_profile
from thinepi.solver import (Mode2D, ProblemSpec, _assemble, _sweep_redblack,
                            contact_set, discrete_energy, field_config,
                            load_solution, make_field,
                            reduce_to_zero_obstacle, solve_thin_obstacle,
                            taylor_polynomial)

ZERO_1D = Polynomial.zero(1)


@pytest.fixture(scope="module")
def halfspace_solution():
    hs = halfspace_2d(1.5)
    spec = ProblemSpec(dimension=2, h=1 / 64, obstacle=ZERO_1D, boundary=hs)
    return hs, spec, solve_thin_obstacle(spec)


# ---------------------------------------------------------------------------
# Problem description
# ---------------------------------------------------------------------------

def test_spec_validation_errors():
    with pytest.raises(ValueError, match="dimension"):
        ProblemSpec(dimension=4, h=1 / 32)
    with pytest.raises(ValueError, match="res"):
        ProblemSpec(dimension=2, h=1 / 8)
    with pytest.raises(ValueError, match="k must"):
        ProblemSpec(dimension=2, h=1 / 32, k=1)
    with pytest.raises(ValueError, match="gamma"):
        ProblemSpec(dimension=2, h=1 / 32, gamma=1.5)
    with pytest.raises(ValueError, match="omega"):
        ProblemSpec(dimension=2, h=1 / 32, omega=2.5)


def test_spec_config_roundtrip():
    spec = ProblemSpec(
        dimension=2, h=1 / 32,
        obstacle={"kind": "polynomial", "coeffs": [[[4], 1.0]]},
        boundary={"kind": "sum", "terms": [
            {"kind": "profile", "m": 0, "n": 1},
            {"kind": "scaled", "factor": 0.1,
             "of": {"kind": "mode", "j": 2, "power": 1.5}}]},
        k=3, gamma=0.25)
    again = ProblemSpec.from_config(spec.to_config())
    assert again.to_config() == spec.to_config()
    pts = np.array([[0.3, 0.2], [0.1, -0.5]])
    assert np.allclose(again.boundary(pts), spec.boundary(pts))
    with pytest.raises(ValueError, match="missing required keys"):
        ProblemSpec.from_config({"dimension": 2})


def test_make_field_kinds():
    const = make_field({"kind": "constant", "value": 2.5}, 1)
    assert const(np.zeros((3, 1))) == pytest.approx([2.5] * 3)
    assert make_field({"kind": "zero"}, 2)(np.ones((2, 2))) == pytest.approx([0, 0])
    hs = make_field({"kind": "halfspace", "mu": 1.5}, 2)
    assert hs(np.array([1.0, 0.0])) == pytest.approx(1.0)
    with pytest.raises(ValueError, match="unknown field kind"):
        make_field({"kind": "nope"}, 1)
    mode = Mode2D(j=2, power=1.5, amplitude=0.5)
    cfg = field_config(mode)
    back = make_field(cfg, 2)
    pt = np.array([0.6, 0.35])
    assert back(pt) == pytest.approx(mode(pt))
    assert mode(pt) == pytest.approx(mode(pt * np.array([1.0, -1.0])))  # even
    assert mode(np.array([0.5, 0.0])) == 0.0                     # thin line


# ---------------------------------------------------------------------------
# Oracle solves
# ---------------------------------------------------------------------------

def test_constant_boundary_gives_constant_solution():
    spec = ProblemSpec(dimension=2, h=1 / 32, obstacle=ZERO_1D, boundary=1.0)
    sol = solve_thin_obstacle(spec)
    assert sol.converged
    assert np.max(np.abs(sol.values[sol.kind > 0] - 1.0)) < 1e-7
    assert sol.contact.sum() == 0
    mask, gamma = contact_set(sol)
    assert mask.sum() == 0 and gamma == []


def test_profile_boundary_contact_everywhere():
    p = make_profile(0, 1)
    spec = ProblemSpec(dimension=2, h=1 / 32, obstacle=ZERO_1D, boundary=p)
    sol = solve_thin_obstacle(spec)
    assert sol.max_error_vs(p) < 2e-2
    thin = sol.kind[..., 0] == 2
    assert sol.contact.sum() == thin.sum()
    assert np.max(np.abs(sol.complementarity)) <= 1e-9
    _, gamma = contact_set(sol)
    assert gamma == []


def test_halfspace_solution_error_and_free_boundary(halfspace_solution):
    hs, spec, sol = halfspace_solution
    res = spec.resolution
    assert sol.converged
    assert sol.max_error_vs(hs) <= 5e-2
    assert np.max(np.abs(sol.complementarity)) <= 1e-9
    assert sol.laplace_residual <= 1e-9
    mask, gamma = contact_set(sol)
    # exact contact is the half-line {x <= 0}; discrete free boundary at origin
    xs = np.arange(-res, res + 1) / res
    thin = sol.kind[..., 0] == 2
    expected = thin & (xs <= 0)
    assert np.array_equal(mask, expected)
    assert [g for (g,) in gamma] == [res]


def test_halfspace_error_decreases_with_resolution(halfspace_solution):
    hs, spec, fine = halfspace_solution
    coarse = solve_thin_obstacle(
        ProblemSpec(dimension=2, h=1 / 32, obstacle=ZERO_1D, boundary=hs))
    assert fine.max_error_vs(hs) < coarse.max_error_vs(hs)


def test_solution_feasible_and_even(halfspace_solution):
    _, _, sol = halfspace_solution
    thin = sol.kind[..., 0] == 2
    assert np.all(sol.values[..., 0][thin] >= sol.phi_thin[thin] - 1e-12)
    pts = np.array([[0.3, 0.4], [0.3, -0.4], [-0.2, 0.11], [-0.2, -0.11]])
    v = sol.evaluate(pts)
    assert v[0] == v[1] and v[2] == v[3]
    # interpolation reproduces node values exactly
    node = np.array([10 * sol.h - 1.0, 3 * sol.h])
    assert sol.evaluate(node) == pytest.approx(sol.values[10, 3], abs=1e-14)


def test_three_dimensional_profile_solve():
    p = make_profile(0, 2)
    spec = ProblemSpec(dimension=3, h=1 / 16, obstacle=Polynomial.zero(2),
                       boundary=p)
    sol = solve_thin_obstacle(spec)
    assert sol.converged
    assert sol.max_error_vs(p) < 3e-2
    thin = sol.kind[..., 0] == 2
    assert sol.contact.sum() == thin.sum()
    assert np.max(np.abs(sol.complementarity)) <= 1e-9


# ---------------------------------------------------------------------------
# Iteration properties
# ---------------------------------------------------------------------------

def test_energy_monotone_across_sweeps():
    hs = halfspace_2d(1.5)
    spec = ProblemSpec(dimension=2, h=1 / 32, obstacle=ZERO_1D, boundary=hs,
                       max_sweeps=50)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sol = solve_thin_obstacle(spec, record_energy_every=1)
    assert sol.energy_trace is not None and len(sol.energy_trace) == 50
    assert np.all(np.diff(sol.energy_trace) <= 1e-12)


def test_comparison_principle():
    g1 = halfspace_2d(1.5)
    rng = np.random.default_rng(11)
    for _ in range(3):
        shift = float(rng.uniform(0.05, 0.4))
        g2 = lambda pts, s=shift: g1(pts) + s
        a = solve_thin_obstacle(ProblemSpec(dimension=2, h=1 / 32,
                                            obstacle=ZERO_1D, boundary=g1))
        b = solve_thin_obstacle(ProblemSpec(dimension=2, h=1 / 32,
                                            obstacle=ZERO_1D, boundary=g2))
        free = a.kind > 0
        assert float(np.min((b.values - a.values)[free])) >= -1e-9


def test_redblack_fallback_same_fixed_point():
    hs = halfspace_2d(1.5)
    spec = ProblemSpec(dimension=2, h=1 / 32, obstacle=ZERO_1D, boundary=hs)
    u, kind, phi, f = _assemble(spec)
    h2 = spec.h ** 2
    for _ in range(30_000):
        if _sweep_redblack(u, kind, phi, f, h2, spec.omega) <= spec.tol:
            break
    sol = solve_thin_obstacle(spec)
    assert np.max(np.abs(u - sol.values)) < 1e-7


def test_nonconvergence_warns():
    hs = halfspace_2d(1.5)
    spec = ProblemSpec(dimension=2, h=1 / 32, obstacle=ZERO_1D, boundary=hs,
                       max_sweeps=5)
    with pytest.warns(UserWarning, match="sweep cap"):
        sol = solve_thin_obstacle(spec)
    assert not sol.converged


# ---------------------------------------------------------------------------
# Reduction to zero obstacle
# ---------------------------------------------------------------------------

def test_taylor_polynomial_values():
    p = Polynomial.monomial(1, (4,))
    q = taylor_polynomial(p, [0.5], 2)
    xs = np.linspace(0.3, 0.7, 9)[:, None]
    series = 0.5 ** 4 + 4 * 0.5 ** 3 * (xs[:, 0] - 0.5) \
        + 6 * 0.5 ** 2 * (xs[:, 0] - 0.5) ** 2
    assert q(xs) == pytest.approx(series, abs=1e-12)
    # full-degree truncation returns the polynomial itself
    assert taylor_polynomial(p, [0.5], 4).coeffs == pytest.approx({(4,): 1.0})


def test_reduction_worked_example():
    phi = Polynomial.monomial(1, (4,))
    p = make_profile(0, 1)
    spec = ProblemSpec(dimension=2, h=1 / 32, obstacle=phi, boundary=p,
                       k=2, gamma=0.5)
    sol = solve_thin_obstacle(spec)
    red = reduce_to_zero_obstacle(sol)
    assert red.q_k.is_zero()
    assert red.h_poly.coeffs == pytest.approx({(2,): -12.0})
    assert red.c_empirical == pytest.approx(12.0, rel=1e-9)
    thin = sol.kind[..., 0] == 2
    v_thin = red.v_values[..., 0][thin]
    u_thin = sol.values[..., 0][thin]
    phi_thin = sol.phi_thin[thin]
    assert v_thin == pytest.approx(u_thin - phi_thin, abs=1e-10)
    assert np.min(v_thin) >= -1e-10


def test_reduction_taylor_exact_gives_zero_rhs():
    phi = Polynomial.monomial(1, (4,))
    p = make_profile(0, 1)
    spec = ProblemSpec(dimension=2, h=1 / 32, obstacle=phi, boundary=p,
                       k=4, gamma=0.5)
    sol = solve_thin_obstacle(spec)
    red = reduce_to_zero_obstacle(sol)
    assert red.h_poly.is_zero()
    assert np.max(np.abs(red.v_values[..., 0] - (sol.values[..., 0]
                                                 - phi(sol.thin_points())
                                                 .reshape(sol.phi_thin.shape)))) < 1e-12


def test_even_harmonic_extension_example():
    q = Polynomial.monomial(1, (2,))
    ext = even_harmonic_extension(q)
    assert ext.coeffs == pytest.approx({(2, 0): 1.0, (0, 2): -1.0})
    assert ext.laplacian().is_zero()


def test_reduction_requires_polynomial_obstacle():
    hs = halfspace_2d(1.5)
    spec = ProblemSpec(dimension=2, h=1 / 32,
                       obstacle=lambda pts: np.zeros(len(pts)), boundary=hs)
    sol = solve_thin_obstacle(spec)
    with pytest.raises(ValueError, match="Taylor data"):
        reduce_to_zero_obstacle(sol)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def test_dump_load_roundtrip(tmp_path, halfspace_solution):
    _, _, sol = halfspace_solution
    base = tmp_path / "case"
    bin_path, json_path = sol.dump(base)
    assert bin_path.exists() and json_path.exists()
    back = load_solution(base)
    assert np.array_equal(back.values, sol.values)
    assert np.array_equal(back.contact, sol.contact)
    assert np.array_equal(back.phi_thin, sol.phi_thin)
    assert back.spec.dimension == 2 and back.spec.h == sol.spec.h
    assert back.sweeps == sol.sweeps


def test_load_detects_corruption(tmp_path, halfspace_solution):
    _, _, sol = halfspace_solution
    base = tmp_path / "case"
    bin_path, _ = sol.dump(base)
    blob = bytearray(bin_path.read_bytes())
    blob[100] ^= 0xFF
    bin_path.write_bytes(bytes(blob))
    with pytest.raises(ValueError, match="hash"):
        load_solution(base)
