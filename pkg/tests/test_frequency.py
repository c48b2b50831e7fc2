"""Scale-analysis tests: moments, truncated frequency, rescalings,
monotonicity bounds, blow-up fits, and contact stratification."""

import math

import numpy as np
import pytest

from thinepi.frequency import (
    BlowupFit,
    FrequencyParams,
    FrequencyProfile,
    _grid_field,
    blowup_fit,
    default_sphere,
    linfty_l2_check,
    oscillation_bound_check,
    rescale,
    stratify_contact,
    surface_moments,
    truncated_frequency,
    vanishing_on_Zdelta_check,
    weiss_monotonicity_check,
)
from thinepi.grids import radii_ladder
from thinepi.profiles import halfspace_2d, make_profile
from thinepi.solver import ProblemSpec, reduce_to_zero_obstacle, \
    solve_thin_obstacle

PARAMS = FrequencyParams(theta=0.25, c_phi=10.0, k=2, gamma=0.5)


@pytest.fixture(scope="module")
def p01():
    return make_profile(0, 1)


@pytest.fixture(scope="module")
def h32():
    return halfspace_2d(1.5)


@pytest.fixture(scope="module")
def sol_profile32(p01):
    spec = ProblemSpec(dimension=2, h=1 / 32, obstacle={"kind": "zero"},
                       boundary=p01, k=2, gamma=0.5)
    return solve_thin_obstacle(spec)


@pytest.fixture(scope="module")
def sol_half64(h32):
    spec = ProblemSpec(dimension=2, h=1 / 64, obstacle={"kind": "zero"},
                       boundary=h32, k=2, gamma=0.5)
    return solve_thin_obstacle(spec)


def near_profile_solution(seed: int, eps: float = 0.02, r0: float = 0.3):
    """Solve with boundary = catalog profile plus a random even bump that
    vanishes at the equator, mixture normalized and scale-equalized."""
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=2)
    amps /= np.linalg.norm(amps)
    terms = [{"kind": "mode", "j": j, "power": j,
              "amplitude": eps * float(a) / r0 ** (j - 2)}
             for j, a in zip((2, 3), amps)]
    spec = ProblemSpec(
        dimension=2, h=1 / 32, obstacle={"kind": "zero"},
        boundary={"kind": "sum",
                  "terms": [{"kind": "profile", "m": 0, "n": 1}] + terms},
        k=2, gamma=0.5)
    return solve_thin_obstacle(spec)


@pytest.fixture(scope="module")
def sol_near_p():
    return near_profile_solution(101)


@pytest.fixture(scope="module")
def quartic_case():
    spec = ProblemSpec(
        dimension=2, h=1 / 64,
        obstacle={"kind": "polynomial", "coeffs": [[[4], 1.0]]},
        boundary={"kind": "sum", "terms": [
            {"kind": "polynomial", "coeffs": [[[4, 0], 1.0]]},
            {"kind": "scaled", "factor": 2.0,
             "of": {"kind": "profile", "m": 0, "n": 1}}]},
        k=2, gamma=0.5)
    sol = solve_thin_obstacle(spec)
    return sol, reduce_to_zero_obstacle(sol)


# ---------------------------------------------------------------------------
# surface moments
# ---------------------------------------------------------------------------

def test_surface_moments_homogeneous_exact(p01):
    for r in (0.2, 0.45):
        H, I = surface_moments(p01, None, r)
        assert H == pytest.approx(r ** 3, rel=1e-12)
        assert r * I / H == pytest.approx(1.0, abs=1e-9)


def test_surface_moments_solution_matches_field(sol_half64, h32):
    for r in (0.15, 0.4):
        Hs, Is = surface_moments(sol_half64, np.zeros(2), r)
        Ha, Ia = surface_moments(h32, np.zeros(2), r)
        assert Hs == pytest.approx(Ha, rel=3e-2)
        assert Is == pytest.approx(Ia, rel=3e-2)


def test_surface_moments_radius_guards(sol_half64):
    with pytest.raises(ValueError, match="too small"):
        surface_moments(sol_half64, np.zeros(2), 0.02)
    with pytest.raises(ValueError, match="domain"):
        surface_moments(sol_half64, np.array([0.8, 0.0]), 0.5)


# ---------------------------------------------------------------------------
# truncated frequency
# ---------------------------------------------------------------------------

def test_frequency_homogeneous_identity(p01):
    prof = truncated_frequency(p01, None, PARAMS)
    assert np.abs(prof.normalized() - 3.0).max() <= 1e-6
    assert prof.mu_estimate() == pytest.approx(1.0, abs=1e-8)
    assert prof.violations == []
    assert not prof.truncation_active.any()


def test_frequency_homogeneous_half_integer(h32):
    prof = truncated_frequency(h32, None, PARAMS)
    assert np.abs(prof.normalized() - 4.0).max() <= 1e-6
    assert prof.mu_estimate() == pytest.approx(1.5, abs=1e-8)


def test_frequency_truncation_branch_for_zero_field():
    zero = lambda pts: np.zeros(np.asarray(pts).shape[0])
    prof = truncated_frequency(zero, np.zeros(2), PARAMS)
    assert prof.truncation_active.all()
    expected = 1 + 2 * (2 + 0.5 - 0.25)
    assert np.abs(prof.normalized() - expected).max() <= 1e-10
    with pytest.raises(ValueError, match="reliable"):
        prof.mu_estimate()


def test_frequency_profile_invariants():
    good = dict(x0=np.zeros(2), n=1, radii=[0.4, 0.2], H=[1.0, 0.5],
                I=[1.0, 0.5], Phi=[3.0, 3.0],
                truncation_active=np.zeros(2, dtype=bool),
                theta=0.25, c_phi=10.0, k=2, gamma=0.5)
    FrequencyProfile(**good)
    with pytest.raises(ValueError, match="decreasing"):
        FrequencyProfile(**{**good, "radii": [0.2, 0.4]})
    with pytest.raises(ValueError, match="nonnegative"):
        FrequencyProfile(**{**good, "H": [1.0, -0.5]})
    with pytest.raises(ValueError, match="theta"):
        FrequencyParams(theta=0.7, gamma=0.5).resolved_theta()


def test_frequency_violation_log_on_radial_ripple(p01):
    ripple = lambda pts: p01(pts) * (1.0 + 0.01 * np.sin(
        40 * np.linalg.norm(np.asarray(pts), axis=-1)))
    prof = truncated_frequency(ripple, np.zeros(2), PARAMS)
    assert prof.violations
    for radius, drop in prof.violations:
        assert drop > 0
        assert radius in prof.radii
    assert prof.max_violation() > 0


def test_frequency_solved_case_plateau(sol_half64):
    prof = truncated_frequency(sol_half64, np.zeros(2), PARAMS)
    assert prof.mu_estimate() == pytest.approx(1.5, abs=5e-3)
    assert prof.max_violation() <= 1e-2


def test_frequency_needs_usable_radii(sol_half64):
    with pytest.raises(ValueError, match="usable ladder"):
        truncated_frequency(sol_half64, np.zeros(2), PARAMS,
                            radii=np.array([0.03, 0.02]))


def test_frequency_rows_for_reporting(p01):
    rows = truncated_frequency(p01, None, PARAMS).rows()
    assert {"radius", "H", "I", "Phi", "normalized", "truncated"} \
        <= set(rows[0])
    assert rows[0]["radius"] > rows[-1]["radius"]


# ---------------------------------------------------------------------------
# rescalings
# ---------------------------------------------------------------------------

def test_rescale_three_modes_exact(p01):
    grid = default_sphere(1)
    tr = rescale(p01, None, 0.4, mode="l2-normalized")
    assert math.sqrt(tr.norm_sq) == pytest.approx(1.0, abs=1e-12)
    tr2 = rescale(p01, None, 0.4, mode="mu-homogeneous", mu=1.0)
    assert np.abs(tr2.values - p01.trace_on(grid)).max() <= 1e-14
    tr3 = rescale(p01, None, 0.5, mode="double", mu=1.0, rho=0.3)
    nrm = math.sqrt(float(grid.weights @ p01.trace_on(grid) ** 2))
    assert np.abs(tr3.values - p01.trace_on(grid) / nrm).max() <= 1e-13


def test_rescale_guards():
    zero = lambda pts: np.zeros(np.asarray(pts).shape[0])
    with pytest.raises(ValueError, match="normalizer"):
        rescale(zero, np.zeros(2), 0.3, mode="l2-normalized")
    with pytest.raises(ValueError, match="unknown rescaling"):
        rescale(zero, np.zeros(2), 0.3, mode="affine")
    with pytest.raises(ValueError, match="needs mu"):
        rescale(zero, np.zeros(2), 0.3, mode="mu-homogeneous")


def test_rescale_ball_has_zero_scale_energy(p01):
    from thinepi.weiss import weiss_quadrature

    ball = rescale(p01, None, 0.6, mode="mu-homogeneous", mu=1.0,
                   as_ball=True)
    assert abs(weiss_quadrature(ball, 1.0)) <= 1e-9


# ---------------------------------------------------------------------------
# energy monotonicity along scales
# ---------------------------------------------------------------------------

def test_monotonicity_homogeneous_solution_is_flat(p01):
    radii = radii_ladder(0.5, 8)[::-1]
    rep = weiss_monotonicity_check(p01, 1.0, radii)
    assert abs(rep.min_margin_gradient) <= 1e-10
    assert abs(rep.min_margin_competitor) <= 1e-10
    assert np.abs(rep.energies).max() <= 1e-9
    assert rep.passed()


def test_monotonicity_sharp_single_mode(h32):
    # one mode of homogeneity 3/2 analyzed at 1: both bounds are equalities
    radii = radii_ladder(0.5, 8)[::-1]
    rep = weiss_monotonicity_check(h32, 1.0, radii)
    for row in rep.rows:
        assert row.dG == pytest.approx(math.pi / 2, abs=5e-3)
        assert abs(row.margin_gradient) <= 5e-3
        assert abs(row.margin_competitor) <= 5e-3


def test_monotonicity_mixed_field(p01, h32):
    v = lambda pts: p01(pts) + 0.3 * h32(pts)
    radii = radii_ladder(0.5, 8)[::-1]
    rep = weiss_monotonicity_check(v, 1.0, radii, dimension=2)
    assert rep.min_margin_gradient >= -5e-3
    assert rep.min_margin_competitor >= -5e-3
    assert rep.passed(slack=5e-3)


def test_monotonicity_solved_case(sol_half64):
    radii = radii_ladder(0.45, 8)[::-1]
    rep = weiss_monotonicity_check(sol_half64, 1.5, radii)
    assert rep.passed(slack=0.1)


def test_monotonicity_with_forcing(quartic_case):
    sol, red = quartic_case
    adapter = _grid_field(red.v_values, sol.spec)
    radii = radii_ladder(0.4, 8)[::-1]
    rep = weiss_monotonicity_check(adapter, 1.0, radii, c_w=0.0,
                                   h=red.h_field())
    assert rep.min_margin_gradient >= 0.0
    assert rep.min_margin_competitor >= 0.0
    # energies decrease toward small radii (monotone in r)
    assert np.all(np.diff(rep.energies) < 0)


def test_monotonicity_guards(p01):
    with pytest.raises(ValueError, match="at least 4"):
        weiss_monotonicity_check(p01, 1.0, [0.5, 0.4, 0.3])
    with pytest.raises(ValueError, match="decreasing"):
        weiss_monotonicity_check(p01, 1.0, [0.2, 0.3, 0.4, 0.5])


# ---------------------------------------------------------------------------
# oscillation bound
# ---------------------------------------------------------------------------

def test_oscillation_coincident_and_homogeneous(p01):
    rep = oscillation_bound_check(p01, 1.0, 0.5, 0.5)
    assert rep.left == 0.0 and rep.c_empirical == 0.0
    rep2 = oscillation_bound_check(p01, 1.0, 0.5, 0.2)
    assert rep2.left <= 1e-12
    assert rep2.c_empirical == 0.0


def test_oscillation_mixed_field(p01, h32):
    v = lambda pts: p01(pts) + 0.3 * h32(pts)
    rep = oscillation_bound_check(v, 1.0, 0.5, 0.1, dimension=2)
    assert rep.left > 0
    assert not rep.negative_energy
    assert 0 < rep.c_empirical < 10
    with pytest.raises(ValueError, match="r'"):
        oscillation_bound_check(v, 1.0, 0.1, 0.5, dimension=2)


# ---------------------------------------------------------------------------
# blow-up fitting
# ---------------------------------------------------------------------------

def test_blowup_exact_profile_is_degenerate(p01):
    radii = radii_ladder(0.5, 10)[::-1]
    fit = blowup_fit(p01, None, 0, radii)
    assert fit.degenerate
    assert fit.exponent is None and fit.band is None
    assert fit.admissible
    assert fit.coefficients[0] == pytest.approx(p01.normalization, rel=1e-10)
    assert fit.dist_linf.max() <= 1e-12


def test_blowup_half_mode_exponent(p01, h32):
    v = lambda pts: p01(pts) + 0.3 * h32(pts)
    radii = radii_ladder(0.6, 16)[::-1]
    fit = blowup_fit(v, np.zeros(2), 0, radii)
    assert not fit.degenerate
    assert abs(fit.exponent - 0.5) <= 0.05
    assert fit.band[0] < fit.exponent < fit.band[1]
    assert np.all(np.diff(fit.dist_linf) < 0)   # decreasing with the radii
    assert fit.admissible


def test_blowup_solved_near_profile_positive_exponent(sol_near_p):
    radii = radii_ladder(0.45, 10)[::-1]
    fit = blowup_fit(sol_near_p, np.zeros(2), 0, radii)
    assert not fit.degenerate
    assert fit.exponent > 0.3


def test_blowup_guards(p01):
    with pytest.raises(ValueError, match="4 radii"):
        blowup_fit(p01, None, 0, [0.5, 0.4, 0.3])
    with pytest.raises(ValueError, match="inconsistent"):
        blowup_fit(p01, None, 0, radii_ladder(0.5, 6)[::-1],
                   frequency_label=2.0)
    with pytest.raises(ValueError, match="decreasing"):
        blowup_fit(p01, None, 0, [0.1, 0.2, 0.3, 0.4])


def test_blowup_rows_for_reporting(p01):
    fit = blowup_fit(p01, None, 0, radii_ladder(0.5, 6)[::-1])
    rows = fit.rows()
    assert {"radius", "dist_l2", "dist_linf"} <= set(rows[0])
    assert len(rows) == 6


# ---------------------------------------------------------------------------
# vanishing on the high-slope directions
# ---------------------------------------------------------------------------

def test_zdelta_exact_profile_passes(p01):
    rep = vanishing_on_Zdelta_check(p01, 0.3, p01, 0.4)
    assert not rep.skipped
    assert rep.hypothesis_linf <= 1e-12
    assert rep.max_sup_rescaled == 0.0
    assert rep.passed
    for row in rep.barrier_rows:
        assert abs(row["center_value"]) <= 1e-10
        assert row["interior_margin"] <= 1e-6


def test_zdelta_far_field_skips(p01):
    far = lambda pts: p01(np.asarray(pts)) + 1.0
    rep = vanishing_on_Zdelta_check(far, 0.3, p01, 0.4)
    assert rep.skipped
    assert rep.hypothesis_linf > 0.1
    assert not rep.passed


def test_zdelta_solved_near_profile(sol_near_p, p01):
    rep = vanishing_on_Zdelta_check(sol_near_p, 0.3, p01, 0.4)
    assert not rep.skipped
    assert rep.max_sup_rescaled <= 1e-12
    assert rep.passed


def test_zdelta_radius_guard(sol_half64, p01):
    with pytest.raises(ValueError, match="too large"):
        vanishing_on_Zdelta_check(sol_half64, 0.8, p01, 0.4)


# ---------------------------------------------------------------------------
# sup-vs-L2 interpolation constant
# ---------------------------------------------------------------------------

def test_linfty_l2_exact_zero(p01):
    rep = linfty_l2_check(p01, p01, 0.3)
    assert rep.sigma == pytest.approx(0.25)
    assert rep.linf <= 1e-12
    assert rep.c_empirical <= 1e-9


def test_linfty_l2_stable_across_instances(p01):
    cs = []
    for i in range(6):
        sol = near_profile_solution(200 + i)
        rep = linfty_l2_check(sol, p01, 0.28 + 0.01 * (i % 5))
        assert math.isfinite(rep.c_empirical) and rep.c_empirical > 0
        cs.append(rep.c_empirical)
    assert max(cs) / min(cs) < 2.0


def test_linfty_l2_radius_guard(sol_half64, p01):
    with pytest.raises(ValueError, match="too large"):
        linfty_l2_check(sol_half64, p01, 0.6)


# ---------------------------------------------------------------------------
# contact stratification
# ---------------------------------------------------------------------------

def test_stratify_profile_case_all_frequency_one(sol_profile32):
    rep = stratify_contact(sol_profile32, max_points=24)
    labels = rep.labels()
    assert labels[1.0] > 0
    assert all(labels[f] == 0 for f in (1.5, 2.0, 2.5, 3.0))
    assert rep.unresolved          # boundary-adjacent nodes
    assert not rep.unlabeled
    for row in rep.rows:
        assert row["label"] in (1.0, "unresolved")


def test_stratify_half_solution_origin_and_interior(sol_half64):
    rep = stratify_contact(sol_half64, max_points=24)
    origin = [r for r in rep.rows if abs(r["x0"][0]) < 1e-12]
    assert len(origin) == 1 and origin[0]["label"] == 1.5
    interior = [r for r in rep.rows if -0.6 < r["x0"][0] < -0.2]
    assert interior
    assert all(r["label"] == 1.0 for r in interior)


def test_stratify_no_contact_is_empty():
    spec = ProblemSpec(dimension=2, h=1 / 32, obstacle={"kind": "zero"},
                       boundary={"kind": "constant", "value": 1.0},
                       k=2, gamma=0.5)
    sol = solve_thin_obstacle(spec)
    rep = stratify_contact(sol)
    assert rep.rows == []
    assert all(len(v) == 0 for v in rep.strata.values())


def test_stratify_3d_with_line_fits():
    spec = ProblemSpec(dimension=3, h=1 / 16, obstacle={"kind": "zero"},
                       boundary={"kind": "profile", "m": 0, "n": 2},
                       k=2, gamma=0.5)
    sol = solve_thin_obstacle(spec)
    rep = stratify_contact(sol, max_points=40)
    assert rep.labels()[1.0] >= 3
    assert rep.line_fits
    fit = rep.line_fits[0]
    assert fit.frequency == 1.0
    assert fit.direction.shape == (2,)
    assert math.isfinite(fit.residual_rms)
