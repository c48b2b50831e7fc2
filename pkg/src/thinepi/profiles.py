"""Catalog of odd-homogeneity blow-up profiles and explicit 2D solutions.

A profile of homogeneity 2m+1 has the factored form

    p(x) = -|x_{n+1}| * (p0(x') + x_{n+1}^2 * p1(x', x_{n+1})),

with p0 homogeneous of degree 2m and nonnegative on the thin hyperplane.
Admissibility (harmonicity off the hyperplane together with the
superharmonic jump across it) forces the part of p above the hyperplane to be
the unique odd harmonic extension of the slope -p0, so p1 is determined by p0.
Profiles are normalized to unit L^2 norm of their sphere trace.

The module also provides the classical 2D homogeneous solutions used as exact
oracles: for each admissible homogeneity mu (half-integers 2m-1/2, even
integers 2m, odd integers 2m+1) an evaluator with known trace, contact set,
and exactly known trace norm.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .grids import SphereGrid
from .polynomials import Polynomial, odd_harmonic_extension

SQRT_PI = float(np.sqrt(np.pi))


def admissible_frequencies(max_mu: float, n: int = 1) -> list[float]:
    """Known homogeneities of nonzero global 2D solutions up to max_mu:
    {2m - 1/2 : m >= 1} union {2m : m >= 1} union {2m+1 : m >= 0}."""
    if n != 1:
        raise ValueError("the explicit admissible-frequency list is 2D only")
    out = set()
    m = 1
    while 2 * m - 0.5 <= max_mu or 2 * m <= max_mu:
        if 2 * m - 0.5 <= max_mu:
            out.add(2 * m - 0.5)
        if 2 * m <= max_mu:
            out.add(float(2 * m))
        m += 1
    m = 0
    while 2 * m + 1 <= max_mu:
        out.add(float(2 * m + 1))
        m += 1
    return sorted(out)


def in_frequency_list(mu: float, tol: float = 1e-12) -> bool:
    members = admissible_frequencies(mu + 1.0)
    return any(abs(mu - a) <= tol for a in members)


# ---------------------------------------------------------------------------
# Blow-up profiles
# ---------------------------------------------------------------------------

@dataclass
class BlowupProfile:
    """Odd-homogeneity profile -|t|(p0 + t^2 p1), t the last coordinate."""

    m: int
    n: int
    p0: Polynomial                 # n variables, degree 2m, >= 0 on the plane
    p1: Polynomial                 # n+1 variables, degree 2m-2 (zero if m=0)
    normalization: float = 1.0

    @property
    def homogeneity(self) -> float:
        return float(2 * self.m + 1)

    def upper_polynomial(self) -> Polynomial:
        """The polynomial equal to p on {t >= 0} (n+1 variables)."""
        d = self.n + 1
        t1 = Polynomial.monomial(d, (0,) * self.n + (1,))
        t3 = Polynomial.monomial(d, (0,) * self.n + (3,))
        body = self.p0.lift(d) * t1 + self.p1 * t3
        return body.scale(-self.normalization)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        scalar = pts.ndim == 1
        if scalar:
            pts = pts[None, :]
        folded = pts.copy()
        folded[..., -1] = np.abs(folded[..., -1])
        out = self.upper_polynomial()(folded)
        return out[0] if scalar else out

    def trace_on(self, grid: SphereGrid) -> np.ndarray:
        if grid.n != self.n:
            raise ValueError(f"grid dimension {grid.n} != profile dimension {self.n}")
        return self(grid.nodes)

    def trace_gradient_on(self, grid: SphereGrid) -> np.ndarray:
        """Tangential gradient of the sphere trace, upper one-sided at the
        equator; shape (N, n+1)."""
        folded = grid.nodes.copy()
        folded[:, -1] = np.abs(folded[:, -1])
        sign = np.where(grid.nodes[:, -1] < 0.0, -1.0, 1.0)
        gp = self.upper_polynomial().gradient()
        g = np.stack([gp[v](folded) for v in range(self.n + 1)], axis=1)
        g[:, -1] *= sign
        g -= np.sum(g * grid.nodes, axis=1, keepdims=True) * grid.nodes
        return g

    def trace_norm_exact(self) -> float:
        """Exact L^2(S^n) norm of the trace via sphere moments."""
        P = self.upper_polynomial()
        return float(np.sqrt((P * P).sphere_integral()))

    # -- serialization ------------------------------------------------------

    def to_json(self) -> str:
        def poly_items(p: Polynomial):
            return [[list(e), c] for e, c in sorted(p.coeffs.items())]
        return json.dumps({
            "m": self.m, "n": self.n,
            "p0": poly_items(self.p0), "p1": poly_items(self.p1),
            "normalization": self.normalization,
        }, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "BlowupProfile":
        data = json.loads(text)
        p0 = Polynomial(data["n"], {tuple(e): c for e, c in data["p0"]})
        p1 = Polynomial(data["n"] + 1, {tuple(e): c for e, c in data["p1"]})
        return BlowupProfile(m=data["m"], n=data["n"], p0=p0, p1=p1,
                             normalization=data["normalization"])


def default_slope(m: int, n: int) -> Polynomial:
    """Default slope factor p0: 1 for m=0; (2m+1)x1^(2m) for n=1 (the
    imaginary-part family); |x'|^(2m) for n=2."""
    if m == 0:
        return Polynomial.constant(n, 1.0)
    if n == 1:
        return Polynomial.monomial(1, (2 * m,), float(2 * m + 1))
    radial = Polynomial.monomial(2, (2, 0)) + Polynomial.monomial(2, (0, 2))
    out = Polynomial.constant(2, 1.0)
    for _ in range(m):
        out = out * radial
    return out


def make_profile(m: int, n: int, coefficients=None, normalize: bool = True) -> BlowupProfile:
    """Build and validate a profile from slope data.

    ``coefficients`` may be None (default family), a Polynomial p0 in n
    variables, or a dict with keys "p0" and optionally "p1" mapping exponent
    tuples to floats.  An explicit p1 is cross-checked against the one forced
    by harmonicity.
    """
    if m < 0 or n not in (1, 2):
        raise ValueError(f"need m >= 0 and n in {{1,2}}, got m={m}, n={n}")
    given_p1 = None
    if coefficients is None:
        p0 = default_slope(m, n)
    elif isinstance(coefficients, Polynomial):
        p0 = coefficients
    else:
        p0 = Polynomial(n, {tuple(e): float(c) for e, c in dict(coefficients["p0"]).items()})
        if "p1" in coefficients and coefficients["p1"] is not None:
            given_p1 = Polynomial(
                n + 1, {tuple(e): float(c) for e, c in dict(coefficients["p1"]).items()})

    if p0.is_zero():
        raise ValueError("slope factor p0 must be nonzero")
    degrees = {sum(e) for e in p0.coeffs}
    if degrees != {2 * m}:
        raise ValueError(f"p0 must be homogeneous of degree {2*m}, found degrees {sorted(degrees)}")

    profile = _profile_from_slope(m, n, p0)
    report = verify_admissible(profile)
    if not report.passed:
        raise ValueError(f"profile is not admissible: {report.failures()}")

    if given_p1 is not None:
        diff = given_p1 - profile.p1
        scale = max((abs(c) for c in profile.p1.coeffs.values()), default=1.0)
        if any(abs(c) > 1e-10 * max(scale, 1.0) for c in diff.coeffs.values()):
            raise ValueError(
                "given p1 does not match the harmonic extension forced by p0; "
                f"expected {profile.p1}, got {given_p1}")

    if normalize:
        profile.normalization = 1.0 / profile.trace_norm_exact()
    return profile


def _profile_from_slope(m: int, n: int, p0: Polynomial) -> BlowupProfile:
    ext = odd_harmonic_extension(p0.scale(-1.0))  # harmonic, odd, slope -p0
    # ext = -(p0 * t + p1 * t^3); recover p1 by stripping the linear-in-t part.
    d = n + 1
    p1_coeffs: dict[tuple[int, ...], float] = {}
    for e, c in ext.coeffs.items():
        if e[-1] == 1:
            continue  # the -p0 * t part
        e1 = e[:-1] + (e[-1] - 3,)
        if e1[-1] < 0:
            raise AssertionError("odd extension produced an even power of t")
        p1_coeffs[e1] = -c
    return BlowupProfile(m=m, n=n, p0=p0, p1=Polynomial(d, p1_coeffs))


def operator_T(p: BlowupProfile) -> Polynomial:
    """Slope factor on the thin hyperplane, including normalization."""
    return p.p0.scale(p.normalization)


def zero_set(p: BlowupProfile, delta: float, grid: SphereGrid) -> np.ndarray:
    """Equator nodes where the normalized slope factor is >= delta."""
    if delta < 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    t_eval = operator_T(p)(grid.nodes[grid.equator][:, : p.n])
    mask = grid.equator[t_eval >= delta]
    if mask.size == 0:
        warnings.warn("empty zero-set mask: epiperimetric hypotheses may fail",
                      stacklevel=2)
    return np.sort(mask)


# ---------------------------------------------------------------------------
# Admissibility report
# ---------------------------------------------------------------------------

@dataclass
class AdmissibilityReport:
    harmonic_residual: float       # max |Lap p| off the plane (exact poly calculus)
    jump_sign_min: float           # min of p0 over sampled thin-plane directions
    euler_residual: float          # max |grad p . x - (2m+1) p| at samples
    parity_residual: float         # max |p(x', t) - p(x', -t)| at samples
    plane_residual: float          # max |p(x', 0)| at samples
    passed: bool = field(init=False)
    tolerance: float = 1e-8

    def __post_init__(self):
        self.passed = (
            self.harmonic_residual <= self.tolerance
            and self.jump_sign_min >= -self.tolerance
            and self.euler_residual <= self.tolerance
            and self.parity_residual <= self.tolerance
            and self.plane_residual <= self.tolerance
        )

    def failures(self) -> list[str]:
        out = []
        if self.harmonic_residual > self.tolerance:
            out.append(f"not harmonic off the plane (residual {self.harmonic_residual:.3e})")
        if self.jump_sign_min < -self.tolerance:
            out.append(f"slope factor changes sign (min {self.jump_sign_min:.3e})")
        if self.euler_residual > self.tolerance:
            out.append(f"not homogeneous (Euler residual {self.euler_residual:.3e})")
        if self.parity_residual > self.tolerance:
            out.append(f"not even in the last coordinate ({self.parity_residual:.3e})")
        if self.plane_residual > self.tolerance:
            out.append(f"does not vanish on the plane ({self.plane_residual:.3e})")
        return out


def verify_admissible(p: BlowupProfile, tolerance: float = 1e-8,
                      samples: int = 1000, seed: int = 7) -> AdmissibilityReport:
    """Residual checks for the profile class membership; never raises."""
    P = p.upper_polynomial()
    lap = P.laplacian()
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((samples, p.n + 1))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    pts *= rng.uniform(0.1, 1.0, size=(samples, 1))

    harm = float(np.max(np.abs(lap(pts)))) if lap.coeffs else 0.0

    thin_dirs = rng.standard_normal((samples, p.n))
    thin_dirs /= np.linalg.norm(thin_dirs, axis=1, keepdims=True)
    jump_min = float(np.min(operator_T(p)(thin_dirs)))

    vals = p(pts)
    gp = P.gradient()
    folded = pts.copy()
    folded[:, -1] = np.abs(folded[:, -1])
    sign = np.where(pts[:, -1] < 0.0, -1.0, 1.0)
    g = np.stack([gp[v](folded) for v in range(p.n + 1)], axis=1)
    g[:, -1] *= sign
    euler = float(np.max(np.abs(np.sum(g * pts, axis=1) - p.homogeneity * vals)))

    mirrored = pts.copy()
    mirrored[:, -1] = -mirrored[:, -1]
    parity = float(np.max(np.abs(p(mirrored) - vals)))

    on_plane = pts.copy()
    on_plane[:, -1] = 0.0
    plane = float(np.max(np.abs(p(on_plane))))

    scale = max(float(np.max(np.abs(vals))), 1.0)
    return AdmissibilityReport(
        harmonic_residual=harm / scale, jump_sign_min=jump_min,
        euler_residual=euler / scale, parity_residual=parity / scale,
        plane_residual=plane / scale, tolerance=tolerance,
    )


# ---------------------------------------------------------------------------
# Explicit 2D homogeneous solutions
# ---------------------------------------------------------------------------

@dataclass
class HalfspaceSolution2D:
    """Classical mu-homogeneous solution on R^2, even in x2.

    Families by homogeneity: half-integers 2m-1/2 have trace cos(mu*theta)
    with contact on the half-line theta=pi; even integers 2m are the plain
    harmonic polynomials Re((x1+i x2)^mu) touching only at the origin; odd
    integers 2m+1 have trace -sin(mu*theta) and contact on the whole line.
    The folded angle theta is measured in [0, pi] on the upper half circle.
    """

    mu: float
    family: str                    # "halfinteger" | "even" | "odd"
    sign: float = 1.0

    def trace(self, theta_folded: np.ndarray) -> np.ndarray:
        th = np.asarray(theta_folded, dtype=float)
        if self.family == "odd":
            return -self.sign * np.sin(self.mu * th)
        return self.sign * np.cos(self.mu * th)

    def trace_dtheta(self, theta_folded: np.ndarray) -> np.ndarray:
        th = np.asarray(theta_folded, dtype=float)
        if self.family == "odd":
            return -self.sign * self.mu * np.cos(self.mu * th)
        return -self.sign * self.mu * np.sin(self.mu * th)

    def trace_on(self, grid: SphereGrid) -> np.ndarray:
        if grid.n != 1:
            raise ValueError("2D solutions trace onto S^1 grids only")
        return self.trace(grid.theta_folded)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        scalar = pts.ndim == 1
        if scalar:
            pts = pts[None, :]
        r = np.hypot(pts[..., 0], pts[..., 1])
        th = np.arctan2(np.abs(pts[..., 1]), pts[..., 0])
        with np.errstate(invalid="ignore"):
            out = np.where(r > 0.0, r**self.mu * self.trace(th), 0.0)
        return out[0] if scalar else out

    @property
    def trace_norm_sq(self) -> float:
        return float(np.pi)  # same for all three families

    def contact_description(self) -> str:
        return {
            "halfinteger": "half-line {x1 <= 0, x2 = 0}",
            "even": "origin only",
            "odd": "whole line {x2 = 0}",
        }[self.family]


def halfspace_2d(mu: float) -> HalfspaceSolution2D:
    """Evaluator for the explicit mu-homogeneous solution; mu must belong to
    the admissible list."""
    if not in_frequency_list(mu):
        raise ValueError(
            f"mu={mu} is not an admissible 2D homogeneity "
            "(half-integers 2m-1/2, even integers >= 2, odd integers >= 1)")
    rounded = round(mu)
    if abs(mu - rounded) > 1e-12:
        family = "halfinteger"
    elif rounded % 2 == 0:
        family = "even"
    else:
        family = "odd"
    return HalfspaceSolution2D(mu=float(mu), family=family)
