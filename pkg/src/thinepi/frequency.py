"""Scale analysis of solutions: surface moments, truncated frequency,
rescalings, energy monotonicity along scales, blow-up fitting, and contact
stratification.

All routines act on *fields*: callables mapping arrays of ambient points to
values.  A solved grid state is adapted through its interpolating evaluator;
exact constructions (catalog profiles, separated-variables modes, sums) are
used directly.  Quadrature over centered spheres uses the same sphere grids
as the spectral machinery.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from dataclasses import replace as dc_replace

from .grids import SphereGrid, build_grid, radial_rule, radii_ladder
from .polynomials import Polynomial, monomials_of_degree
from .profiles import BlowupProfile, HalfspaceSolution2D, \
    _profile_from_slope, verify_admissible, zero_set
from .solver import GridSolution, reduce_to_zero_obstacle
from .traces import SphericalTrace
from .weiss import BallFunction, default_radii, homogeneous_extension, \
    volume_integral, weiss_quadrature

_GRID_CACHE: dict = {}


def default_sphere(n: int, resolution: int | None = None) -> SphereGrid:
    """Shared quadrature sphere for moment integrals."""
    if resolution is None:
        resolution = 2048 if n == 1 else 32
    key = (n, resolution)
    if key not in _GRID_CACHE:
        kind = "circle" if n == 1 else "latlong"
        _GRID_CACHE[key] = build_grid(n, resolution, kind=kind)
    return _GRID_CACHE[key]


@dataclass
class FieldAdapter:
    """Uniform access to a field: evaluator, dimension, reachable radius,
    and (for grid-backed fields) the mesh width."""

    evaluate: object
    dimension: int
    r_max: float
    h: float | None

    @staticmethod
    def adapt(v, dimension: int | None = None) -> "FieldAdapter":
        if isinstance(v, FieldAdapter):
            return v
        if isinstance(v, GridSolution):
            return FieldAdapter(evaluate=v.evaluate, dimension=v.spec.dimension,
                                r_max=1.0, h=v.spec.h)
        if isinstance(v, BlowupProfile):
            return FieldAdapter(evaluate=v, dimension=v.n + 1,
                                r_max=math.inf, h=None)
        if isinstance(v, HalfspaceSolution2D):
            return FieldAdapter(evaluate=v, dimension=2,
                                r_max=math.inf, h=None)
        if callable(v):
            if dimension is None:
                raise ValueError(
                    "plain callables need an explicit dimension or a "
                    "full-coordinate center")
            return FieldAdapter(evaluate=v, dimension=dimension,
                                r_max=math.inf, h=None)
        raise TypeError(f"cannot adapt {type(v).__name__} as a field")


def _adapt(v, x0=None, dimension: int | None = None) -> FieldAdapter:
    """Adapt a field, inferring the ambient dimension from the center when
    needed.  Plain callables must be given the full ambient center."""
    if dimension is None and x0 is not None:
        dimension = int(np.atleast_1d(np.asarray(x0)).size)
    return FieldAdapter.adapt(v, dimension=dimension)


def _center(x0, d: int) -> np.ndarray:
    if x0 is None:
        return np.zeros(d)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.size == d - 1:                      # thin-plane coordinates
        x0 = np.append(x0, 0.0)
    if x0.size != d:
        raise ValueError(f"center has {x0.size} coordinates, expected {d}")
    return x0


def _check_reach(adapter: FieldAdapter, x0: np.ndarray, radius: float):
    if not math.isfinite(adapter.r_max):
        return
    if float(np.linalg.norm(x0)) + radius > adapter.r_max - 2.0 * (adapter.h or 0.0):
        raise ValueError(
            f"radius {radius:.4g} around |x0|={np.linalg.norm(x0):.4g} leaves "
            f"the computational domain (limit {adapter.r_max})")
    if adapter.h is not None and radius < 3.0 * adapter.h:
        raise ValueError(
            f"radius {radius:.4g} too small for the grid (needs >= 3h = "
            f"{3 * adapter.h:.4g})")


# ---------------------------------------------------------------------------
# Surface moments and truncated frequency
# ---------------------------------------------------------------------------

def surface_moments(v, x0, r: float, grid: SphereGrid | None = None,
                    dr: float | None = None) -> tuple[float, float]:
    """(H, I) on the sphere of radius r about x0: the squared-trace integral
    and the trace/normal-derivative pairing, by sphere quadrature with a
    central radial difference."""
    adapter = _adapt(v, x0)
    d = adapter.dimension
    x0 = _center(x0, d)
    n = d - 1
    grid = grid or default_sphere(n)
    if dr is None:
        dr = adapter.h / 2.0 if adapter.h is not None else 1e-4 * r
    _check_reach(adapter, x0, r + dr)
    pts = x0[None, :] + r * grid.nodes
    vals = np.asarray(adapter.evaluate(pts), dtype=float)
    vp = np.asarray(adapter.evaluate(x0[None, :] + (r + dr) * grid.nodes))
    vm = np.asarray(adapter.evaluate(x0[None, :] + (r - dr) * grid.nodes))
    dv = (vp - vm) / (2.0 * dr)
    scale = r ** n
    H = scale * float(grid.weights @ (vals * vals))
    I = scale * float(grid.weights @ (vals * dv))
    return H, I


@dataclass
class FrequencyParams:
    """Truncation parameters: theta defaults to gamma/2, the truncation
    prefactor c_phi to 10."""

    theta: float | None = None
    c_phi: float = 10.0
    k: int = 2
    gamma: float = 0.5

    def resolved_theta(self) -> float:
        th = self.gamma / 2.0 if self.theta is None else self.theta
        if not 0.0 < th < self.gamma:
            raise ValueError(
                f"theta must lie in (0, gamma)=(0,{self.gamma}), got {th}")
        return th


@dataclass
class FrequencyProfile:
    """Radius-indexed frequency diagnostics around one center."""

    x0: np.ndarray
    n: int
    radii: np.ndarray                 # strictly decreasing
    H: np.ndarray
    I: np.ndarray
    Phi: np.ndarray
    truncation_active: np.ndarray
    theta: float
    c_phi: float
    k: int
    gamma: float
    violations: list = field(default_factory=list)   # (radius, drop) pairs

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        if np.any(np.diff(self.radii) >= 0):
            raise ValueError("radii ladder must be strictly decreasing")
        if np.any(np.asarray(self.H) < 0):
            raise ValueError("surface moment H must be nonnegative")
        if not np.all(np.isfinite(self.Phi)):
            raise ValueError("frequency entries must be finite")

    def normalized(self) -> np.ndarray:
        """Phi with the truncation prefactor divided out."""
        return self.Phi / (1.0 + self.c_phi * self.radii ** self.theta)

    def mu_estimate(self, tail: int = 5) -> float:
        """Median of (normalized Phi - n)/2 over the smallest reliable radii."""
        reliable = ~self.truncation_active
        norm = self.normalized()[reliable]
        if norm.size == 0:
            raise ValueError("no reliable radii: truncation active everywhere")
        take = norm[-min(tail, norm.size):]
        return float((np.median(take) - self.n) / 2.0)

    def max_violation(self) -> float:
        return max((drop for _, drop in self.violations), default=0.0)

    def rows(self) -> list[dict]:
        return [{"radius": float(r), "H": float(h), "I": float(i),
                 "Phi": float(p), "normalized": float(np_),
                 "truncated": bool(t)}
                for r, h, i, p, np_, t in zip(
                    self.radii, self.H, self.I, self.Phi, self.normalized(),
                    self.truncation_active)]


def truncated_frequency(v, x0, params: FrequencyParams | None = None,
                        radii=None, r_max: float | None = None,
                        count: int = 24,
                        grid: SphereGrid | None = None) -> FrequencyProfile:
    """Truncated frequency on a geometric radii ladder.

    Phi(r) = (r + c_phi r^(1+theta)) d/dr log max{H(r), r^(n+2(k+gamma-theta))},
    the log-derivative taken by centered differences in log r.  Radii where
    the power branch of the max is active are flagged.
    """
    params = params or FrequencyParams()
    theta = params.resolved_theta()
    adapter = _adapt(v, x0)
    d = adapter.dimension
    x0 = _center(x0, d)
    n = d - 1
    grid = grid or default_sphere(n)

    if radii is None:
        if r_max is None:
            reach = adapter.r_max if math.isfinite(adapter.r_max) else 1.0
            r_max = min(0.6, 0.85 * (reach - float(np.linalg.norm(x0))))
        radii = radii_ladder(r_max, count)[::-1]       # coarse to fine
    radii = np.asarray(radii, dtype=float)
    if adapter.h is not None:
        cap = adapter.r_max - float(np.linalg.norm(x0)) - 3.0 * adapter.h
        radii = radii[(radii >= 3.0 * adapter.h) & (radii <= cap)]
    if radii.size < 2:
        raise ValueError("need at least two usable ladder radii")

    H = np.empty(radii.size)
    I = np.empty(radii.size)
    for i, r in enumerate(radii):
        H[i], I[i] = surface_moments(adapter, x0, float(r), grid=grid)

    power = n + 2.0 * (params.k + params.gamma - theta)
    floor = radii ** power
    M = np.maximum(H, floor)
    active = floor > H
    logM, logr = np.log(M), np.log(radii)
    dlog = np.empty(radii.size)
    dlog[1:-1] = (logM[:-2] - logM[2:]) / (logr[:-2] - logr[2:])
    dlog[0] = (logM[0] - logM[1]) / (logr[0] - logr[1])
    dlog[-1] = (logM[-2] - logM[-1]) / (logr[-2] - logr[-1])
    Phi = (1.0 + params.c_phi * radii ** theta) * dlog

    violations = []
    for i in range(radii.size - 1):
        drop = Phi[i + 1] - Phi[i]       # positive when Phi rises as r falls
        if drop > 0.0:
            violations.append((float(radii[i + 1]), float(drop)))

    return FrequencyProfile(x0=x0, n=n, radii=radii, H=H, I=I, Phi=Phi,
                            truncation_active=active, theta=theta,
                            c_phi=params.c_phi, k=params.k,
                            gamma=params.gamma, violations=violations)


# ---------------------------------------------------------------------------
# Rescalings
# ---------------------------------------------------------------------------

def rescale(v, x0, r: float, mode: str = "l2-normalized",
            grid: SphereGrid | None = None, mu: float | None = None,
            rho: float | None = None, radial_count: int = 64,
            as_ball: bool = False):
    """Rescaled trace (or sampled ball function) at scale r about x0.

    Modes: "l2-normalized" divides v(x0 + r.) by its sphere trace norm;
    "mu-homogeneous" divides by r^mu; "double" first normalizes at scale rho,
    then rescales homogeneously at r.
    """
    adapter = _adapt(v, x0)
    d = adapter.dimension
    x0 = _center(x0, d)
    grid = grid or default_sphere(d - 1)

    if mode == "l2-normalized":
        scale_r, denom = r, None
    elif mode == "mu-homogeneous":
        if mu is None:
            raise ValueError("mu-homogeneous rescaling needs mu")
        scale_r, denom = r, r ** mu
    elif mode == "double":
        if mu is None or rho is None:
            raise ValueError("double rescaling needs both rho and mu")
        _check_reach(adapter, x0, rho)
        tr_rho = np.asarray(adapter.evaluate(x0[None, :] + rho * grid.nodes))
        norm_rho = math.sqrt(float(grid.weights @ (tr_rho * tr_rho)))
        if norm_rho < 1e-300:
            raise ValueError("zero normalizer at the outer scale")
        scale_r, denom = rho * r, norm_rho * r ** mu
    else:
        raise ValueError(f"unknown rescaling mode {mode!r}")

    _check_reach(adapter, x0, scale_r)
    tvals = np.asarray(adapter.evaluate(x0[None, :] + scale_r * grid.nodes),
                       dtype=float)
    if denom is None:
        denom = math.sqrt(float(grid.weights @ (tvals * tvals)))
        if denom < 1e-300:
            raise ValueError("zero normalizer: trace vanishes at this scale")
    if not as_ball:
        return SphericalTrace(grid, tvals / denom)
    radii, rweights = default_radii(radial_count)
    values = np.empty((radii.size, grid.size))
    for i, s in enumerate(radii):
        pts = x0[None, :] + (scale_r * s) * grid.nodes
        values[i] = np.asarray(adapter.evaluate(pts), dtype=float) / denom
    return BallFunction(grid=grid, radii=radii, values=values,
                        radial_weights=rweights)


# ---------------------------------------------------------------------------
# Energy monotonicity along scales
# ---------------------------------------------------------------------------

@dataclass
class MonotonicityRow:
    r_hi: float
    r_lo: float
    dG: float                         # discrete derivative of the energy
    bound_gradient: float             # radial-deviation lower bound
    bound_competitor: float           # homogeneous-competitor lower bound
    margin_gradient: float
    margin_competitor: float


@dataclass
class WeissMonotonicityReport:
    mu: float
    c_w: float
    rows: list
    energies: np.ndarray              # G(r) per ladder radius
    min_margin_gradient: float
    min_margin_competitor: float
    violations: list                  # rows with negative margin

    def passed(self, slack: float = 1e-3) -> bool:
        return (self.min_margin_gradient >= -slack
                and self.min_margin_competitor >= -slack)


def _radial_deviation(adapter: FieldAdapter, x0, r, mu, grid, dr) -> float:
    """Integral over the unit sphere of (radial derivative of the rescaling
    minus mu times the rescaling)^2."""
    pts = x0[None, :] + r * grid.nodes
    a = np.asarray(adapter.evaluate(pts), dtype=float)
    vp = np.asarray(adapter.evaluate(x0[None, :] + (r + dr) * grid.nodes))
    vm = np.asarray(adapter.evaluate(x0[None, :] + (r - dr) * grid.nodes))
    dv = (vp - vm) / (2.0 * dr)
    dev = (r * dv - mu * a) / r ** mu
    return float(grid.weights @ (dev * dev))


def weiss_monotonicity_check(v, mu: float, radii, c_w: float = 0.0,
                             x0=None, h=None, k: int = 2, gamma: float = 0.5,
                             grid: SphereGrid | None = None,
                             radial_count: int = 48,
                             dimension: int | None = None
                             ) -> WeissMonotonicityReport:
    """Discrete differences of G(r) = W_mu(v_r) [+ volume term when a forcing
    field h is given] + c_w r^(k+gamma-mu) on the ladder, compared with the
    two lower bounds: twice the radial-deviation integral over r, and the
    homogeneous-competitor gap (n+2mu-1)(W_mu(z_r)-G0(r))/r plus the
    radial-deviation integral over r."""
    adapter = _adapt(v, x0, dimension)
    d = adapter.dimension
    x0 = _center(x0, d)
    n = d - 1
    grid = grid or default_sphere(n, 1024 if n == 1 else None)
    radii = np.asarray(radii, dtype=float)
    if radii.size < 4:
        raise ValueError("monotonicity ladder needs at least 4 radii")
    if np.any(np.diff(radii) >= 0):
        raise ValueError("radii must be strictly decreasing")

    def energy_at(r: float) -> tuple[float, float]:
        ball = rescale(adapter, x0, r, mode="mu-homogeneous", mu=mu,
                       grid=grid, radial_count=radial_count, as_ball=True)
        w = weiss_quadrature(ball, mu)
        if h is not None:
            w = w + volume_integral(ball, _rescaled_forcing(h, x0, r, mu))
        trace = SphericalTrace(grid, ball.values[-1])
        z = homogeneous_extension(trace, mu)
        return w, weiss_quadrature(z, mu) - w

    def deviation_at(r: float) -> float:
        dr = adapter.h / 2.0 if adapter.h is not None else 1e-4 * r
        return _radial_deviation(adapter, x0, r, mu, grid, dr)

    G = np.empty(radii.size)
    for i, r in enumerate(radii):
        w, _ = energy_at(float(r))
        G[i] = w + c_w * r ** (k + gamma - mu)

    rows, violations = [], []
    for i in range(radii.size - 1):
        r_hi, r_lo = radii[i], radii[i + 1]
        dG = (G[i] - G[i + 1]) / (r_hi - r_lo)
        r_mid = math.sqrt(r_hi * r_lo)
        w_mid, gap_mid = energy_at(r_mid)
        dev_mid = deviation_at(r_mid)
        b1 = 2.0 * dev_mid / r_mid
        b2 = ((n + 2.0 * mu - 1.0) * gap_mid + dev_mid) / r_mid
        row = MonotonicityRow(
            r_hi=float(r_hi), r_lo=float(r_lo), dG=float(dG),
            bound_gradient=float(b1), bound_competitor=float(b2),
            margin_gradient=float(dG - b1), margin_competitor=float(dG - b2))
        rows.append(row)
        if row.margin_gradient < 0 or row.margin_competitor < 0:
            violations.append(row)

    return WeissMonotonicityReport(
        mu=mu, c_w=c_w, rows=rows, energies=G,
        min_margin_gradient=min(r.margin_gradient for r in rows),
        min_margin_competitor=min(r.margin_competitor for r in rows),
        violations=violations)


def _rescaled_forcing(h, x0, r: float, mu: float):
    """Forcing field of the mu-homogeneous rescaling: x -> r^(2-mu) h(x0+rx)."""
    factor = r ** (2.0 - mu)

    def h_r(points):
        pts = np.asarray(points, dtype=float)
        return factor * np.asarray(h(x0[None, :] + r * pts), dtype=float)

    return h_r


@dataclass
class OscillationReport:
    r: float
    r_prime: float
    left: float                       # L1 sphere distance of the rescalings
    energy: float                     # G(r) at the larger radius
    right_base: float                 # sqrt(log(r/r')) * sqrt(max(G, 0))
    c_empirical: float
    negative_energy: bool


def oscillation_bound_check(v, mu: float, r: float, r_prime: float,
                            x0=None, c_w: float = 0.0, k: int = 2,
                            gamma: float = 0.5, h=None,
                            grid: SphereGrid | None = None,
                            dimension: int | None = None) -> OscillationReport:
    """L1 sphere distance between two homogeneous rescalings against the
    square-root-log bound with the scale energy at the larger radius."""
    if not 0.0 < r_prime <= r:
        raise ValueError("need 0 < r' <= r")
    adapter = _adapt(v, x0, dimension)
    d = adapter.dimension
    x0 = _center(x0, d)
    grid = grid or default_sphere(d - 1, 1024 if d == 2 else None)
    t_r = rescale(adapter, x0, r, mode="mu-homogeneous", mu=mu, grid=grid)
    t_rp = rescale(adapter, x0, r_prime, mode="mu-homogeneous", mu=mu,
                   grid=grid)
    left = float(grid.weights @ np.abs(t_r.values - t_rp.values))
    ball = rescale(adapter, x0, r, mode="mu-homogeneous", mu=mu, grid=grid,
                   as_ball=True)
    G = weiss_quadrature(ball, mu)
    if h is not None:
        G += volume_integral(ball, _rescaled_forcing(h, x0, r, mu))
    G += c_w * r ** (k + gamma - mu)
    negative = G < 0.0
    right_base = math.sqrt(math.log(r / r_prime)) * math.sqrt(max(G, 0.0))
    if right_base > 0.0:
        c_emp = left / right_base
    else:
        c_emp = 0.0 if left <= 1e-14 else math.inf
    return OscillationReport(r=r, r_prime=r_prime, left=left, energy=float(G),
                             right_base=right_base, c_empirical=c_emp,
                             negative_energy=bool(negative))


# ---------------------------------------------------------------------------
# Blow-up fitting
# ---------------------------------------------------------------------------

@dataclass
class BlowupFit:
    """Best catalog profile at the finest radius with per-radius distances
    and the fitted decay exponent of the sup-norm distance."""

    m: int
    mu: float
    profile: BlowupProfile
    coefficients: np.ndarray
    radii: np.ndarray
    dist_l2: np.ndarray
    dist_linf: np.ndarray
    exponent: float | None
    band: tuple | None                # two-standard-error interval
    intercept: float | None
    degenerate: bool
    admissible: bool

    def rows(self) -> list[dict]:
        return [{"radius": float(r), "dist_l2": float(a), "dist_linf": float(b)}
                for r, a, b in zip(self.radii, self.dist_l2, self.dist_linf)]


def blowup_fit(v, x0, m: int, radii, grid: SphereGrid | None = None,
               frequency_label: float | None = None,
               shell_count: int = 16,
               dimension: int | None = None) -> BlowupFit:
    """Least-squares catalog fit to the homogeneous rescalings at the finest
    ladder radius, then a log-log fit of the sup-norm distances against r."""
    mu = 2.0 * m + 1.0
    if frequency_label is not None and abs(frequency_label - mu) > 0.1:
        raise ValueError(
            f"frequency label {frequency_label} inconsistent with "
            f"homogeneity {mu}")
    radii = np.asarray(radii, dtype=float)
    if radii.size < 4:
        raise ValueError("exponent fit needs at least 4 radii")
    if np.any(np.diff(radii) >= 0):
        raise ValueError("radii must be strictly decreasing")

    adapter = _adapt(v, x0, dimension)
    d = adapter.dimension
    x0 = _center(x0, d)
    n = d - 1
    grid = grid or default_sphere(n, 1024 if n == 1 else None)

    # linear catalog basis: slope monomials of degree 2m
    monos = monomials_of_degree(n, 2 * m)
    basis_profiles = [
        _profile_from_slope(m, n, Polynomial.monomial(n, e)) for e in monos]
    A = np.stack([bp.trace_on(grid) for bp in basis_profiles], axis=1)

    traces = [rescale(adapter, x0, float(r), mode="mu-homogeneous", mu=mu,
                      grid=grid).values for r in radii]
    t_fit = traces[-1]
    W = grid.weights
    Gm = A.T @ (W[:, None] * A)
    rhs = A.T @ (W * t_fit)
    coeffs = np.linalg.solve(Gm, rhs)
    p0_hat = Polynomial(n, {e: c for e, c in zip(monos, coeffs)})
    if p0_hat.is_zero():
        profile = dc_replace(basis_profiles[-1], normalization=0.0)
        admissible = False
    else:
        profile = _profile_from_slope(m, n, p0_hat)
        admissible = verify_admissible(profile).passed
    p_trace = A @ coeffs

    dist_l2 = np.array([math.sqrt(max(float(W @ (t - p_trace) ** 2), 0.0))
                        for t in traces])
    shells = np.linspace(1.0 / shell_count, 1.0, shell_count)
    p_shell = np.stack([s ** mu * p_trace for s in shells])
    dist_linf = np.empty(radii.size)
    for i, r in enumerate(radii):
        worst = 0.0
        for srow, s in zip(p_shell, shells):
            pts = x0[None, :] + (r * s) * grid.nodes
            vr = np.asarray(adapter.evaluate(pts), dtype=float) / r ** mu
            worst = max(worst, float(np.max(np.abs(vr - srow))))
        dist_linf[i] = worst

    sel = dist_linf > 1e-13
    if np.count_nonzero(sel) < 4:
        return BlowupFit(m=m, mu=mu, profile=profile, coefficients=coeffs,
                         radii=radii, dist_l2=dist_l2, dist_linf=dist_linf,
                         exponent=None, band=None, intercept=None,
                         degenerate=True, admissible=admissible)
    x = np.log(radii[sel])
    y = np.log(dist_linf[sel])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    dofs = max(x.size - 2, 1)
    se = math.sqrt(float(resid @ resid) / dofs / float(np.sum((x - x.mean()) ** 2)))
    return BlowupFit(m=m, mu=mu, profile=profile, coefficients=coeffs,
                     radii=radii, dist_l2=dist_l2, dist_linf=dist_linf,
                     exponent=float(slope), band=(float(slope - 2 * se),
                                                  float(slope + 2 * se)),
                     intercept=float(intercept), degenerate=False,
                     admissible=admissible)


# ---------------------------------------------------------------------------
# Scale-propagation diagnostics
# ---------------------------------------------------------------------------

@dataclass
class ZdeltaReport:
    """Vanishing of rescalings on the thin contact directions, with the
    quadratic-barrier comparison run on the grid."""

    delta: float
    eta3: float
    hypothesis_linf: float
    skipped: bool
    r_primes: np.ndarray | None = None
    sup_raw: np.ndarray | None = None
    sup_rescaled: np.ndarray | None = None
    barrier_rows: list = field(default_factory=list)
    contact_tol: float = 1e-8

    @property
    def max_sup_rescaled(self) -> float:
        if self.sup_rescaled is None or self.sup_rescaled.size == 0:
            return 0.0
        return float(np.max(self.sup_rescaled))

    @property
    def passed(self) -> bool:
        return (not self.skipped) and self.max_sup_rescaled <= self.contact_tol


def vanishing_on_Zdelta_check(v, r: float, p: BlowupProfile, delta: float,
                              x0=None, eta3: float = 0.1,
                              grid: SphereGrid | None = None,
                              contact_tol: float = 1e-8,
                              n_rprime: int = 5, r1: float = 0.2,
                              max_directions: int = 8) -> ZdeltaReport:
    """Check that the rescalings vanish on the high-slope equator directions
    at all radii in (r/3, r), gated on closeness to the profile.

    The barrier diagnostic recenters at each tested thin direction and
    compares the rescaled field against -(n+1) x_d^2 + |x'|^2: the comparison
    function is superharmonic and positive on the thin plane away from zeros
    of the field, so its domination certifies the center value is zero.
    """
    mu = p.homogeneity
    n = p.n
    adapter = FieldAdapter.adapt(v, dimension=n + 1)
    x0 = _center(x0, n + 1)
    grid = grid or default_sphere(n, 1024 if n == 1 else None)

    # closeness hypothesis on the annulus
    shells = np.linspace(0.25, 1.5, 26)
    if math.isfinite(adapter.r_max):
        top = (adapter.r_max - 3 * (adapter.h or 0) - float(np.linalg.norm(x0))) / r
        if top < 1.2:           # the barrier neighborhoods need scale 1.2 r
            raise ValueError("scale r too large to sample the annulus")
        shells = shells[shells <= top]
    p_trace = p.trace_on(grid)
    linf = 0.0
    for s in shells:
        pts = x0[None, :] + (r * s) * grid.nodes
        vr = np.asarray(adapter.evaluate(pts), dtype=float) / r ** mu
        linf = max(linf, float(np.max(np.abs(vr - s ** mu * p_trace))))
    if linf > eta3:
        return ZdeltaReport(delta=delta, eta3=eta3, hypothesis_linf=linf,
                            skipped=True, contact_tol=contact_tol)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        z_nodes = zero_set(p, delta, grid)
    dirs = grid.nodes[z_nodes]
    if len(dirs) > max_directions:
        step = len(dirs) // max_directions
        dirs = dirs[::step][:max_directions]

    r_primes = np.geomspace(r / 3.0 * 1.02, r * 0.98, n_rprime)
    sup_raw = np.empty(n_rprime)
    sup_rescaled = np.empty(n_rprime)
    barrier_rows = []
    sphere_dirs = grid.nodes
    ball_s = np.linspace(0.15, 1.0, 7)
    for j, rp in enumerate(r_primes):
        pts = x0[None, :] + rp * dirs
        vals = np.asarray(adapter.evaluate(pts), dtype=float)
        sup_raw[j] = float(np.max(np.abs(vals))) if vals.size else 0.0
        sup_rescaled[j] = sup_raw[j] / rp ** mu

        # barrier comparison at the worst direction
        if dirs.size:
            worst = dirs[int(np.argmax(np.abs(vals)))]
            center = (rp / r) * worst
            boundary_margin = -math.inf
            interior_margin = -math.inf
            for s in ball_s:
                offs = (r1 * s) * sphere_dirs
                xpts = x0[None, :] + r * (center[None, :] + offs)
                w = np.asarray(adapter.evaluate(xpts), dtype=float) / r ** mu
                barrier = (np.sum(offs[:, :n] ** 2, axis=1)
                           - (n + 1) * offs[:, n] ** 2)
                margin = float(np.max(w - barrier))
                interior_margin = max(interior_margin, margin)
                if s == ball_s[-1]:
                    boundary_margin = margin
            center_val = float(np.asarray(adapter.evaluate(
                (x0 + r * center)[None, :]))[0]) / r ** mu
            barrier_rows.append({
                "r_prime": float(rp), "boundary_margin": boundary_margin,
                "interior_margin": interior_margin,
                "center_value": center_val})

    return ZdeltaReport(delta=delta, eta3=eta3, hypothesis_linf=linf,
                        skipped=False, r_primes=r_primes, sup_raw=sup_raw,
                        sup_rescaled=sup_rescaled, barrier_rows=barrier_rows,
                        contact_tol=contact_tol)


@dataclass
class LinftyL2Report:
    r: float
    sigma: float
    linf: float                       # sup distance on the outer annulus
    l2: float                         # L2 distance on the larger annulus
    c_empirical: float


def linfty_l2_check(v, p: BlowupProfile, r: float, x0=None,
                    grid: SphereGrid | None = None,
                    shell_count: int = 26,
                    radial_count: int = 48) -> LinftyL2Report:
    """Empirical constant in the sup-vs-L2 interpolation bound with exponent
    sigma = 1/(n+3): sup over the annulus (1/4, 3/2) of |v_r - p| against
    the L2 distance over the annulus (1/8, 2) raised to sigma."""
    mu = p.homogeneity
    n = p.n
    adapter = FieldAdapter.adapt(v, dimension=n + 1)
    x0 = _center(x0, n + 1)
    grid = grid or default_sphere(n, 1024 if n == 1 else None)
    if math.isfinite(adapter.r_max):
        need = 2.0 * r + float(np.linalg.norm(x0))
        if need > adapter.r_max - 3 * (adapter.h or 0):
            raise ValueError(
                f"scale r={r} too large: the outer annulus needs radius {need}")
    p_trace = p.trace_on(grid)

    shells = np.linspace(0.25, 1.5, shell_count)
    linf = 0.0
    for s in shells:
        pts = x0[None, :] + (r * s) * grid.nodes
        vr = np.asarray(adapter.evaluate(pts), dtype=float) / r ** mu
        linf = max(linf, float(np.max(np.abs(vr - s ** mu * p_trace))))

    # Gauss-Legendre radial rule transplanted to (1/8, 2)
    r01, w01 = radial_rule(radial_count)
    lo, hi = 1.0 / 8.0, 2.0
    s_nodes = lo + (hi - lo) * r01
    s_weights = (hi - lo) * w01
    total = 0.0
    for s, w in zip(s_nodes, s_weights):
        pts = x0[None, :] + (r * s) * grid.nodes
        vr = np.asarray(adapter.evaluate(pts), dtype=float) / r ** mu
        diff = vr - s ** mu * p_trace
        total += w * s ** n * float(grid.weights @ (diff * diff))
    l2 = math.sqrt(max(total, 0.0))

    sigma = 1.0 / (n + 3.0)
    if l2 <= 0.0:
        c_emp = 0.0 if linf <= 1e-14 else math.inf
    else:
        c_emp = linf / l2 ** sigma
    return LinftyL2Report(r=r, sigma=sigma, linf=linf, l2=l2,
                          c_empirical=c_emp)


# ---------------------------------------------------------------------------
# Contact-set stratification
# ---------------------------------------------------------------------------

@dataclass
class StratumFit:
    frequency: float
    points: np.ndarray
    direction: np.ndarray | None      # n=2 line fit
    centroid: np.ndarray | None
    residual_rms: float | None


@dataclass
class StratifyReport:
    rows: list                        # per-node dicts
    strata: dict                      # frequency -> list of thin coordinates
    unresolved: list
    unlabeled: list
    line_fits: list                   # StratumFit entries (n=2 only)

    def labels(self) -> dict:
        return {k: len(vv) for k, vv in self.strata.items()}


def _grid_field(values: np.ndarray, spec) -> FieldAdapter:
    from scipy.interpolate import RegularGridInterpolator

    res = spec.resolution
    horiz = np.arange(-res, res + 1) * spec.h
    vert = np.arange(0, res + 1) * spec.h
    interp = RegularGridInterpolator(
        tuple([horiz] * (spec.dimension - 1) + [vert]), values,
        method="linear", bounds_error=True)

    def evaluate(points):
        pts = np.asarray(points, dtype=float)
        folded = pts.copy()
        folded[..., -1] = np.abs(folded[..., -1])
        return interp(folded)

    return FieldAdapter(evaluate=evaluate, dimension=spec.dimension,
                        r_max=1.0, h=spec.h)


def stratify_contact(u: GridSolution, spec=None,
                     frequencies=(1.0, 1.5, 2.0, 2.5, 3.0),
                     params: FrequencyParams | None = None,
                     grid: SphereGrid | None = None,
                     max_points: int = 48, min_radii: int = 6,
                     ladder_count: int = 20, label_tol: float = 0.1,
                     r_fraction: float = 0.8) -> StratifyReport:
    """Frequency labels for contact nodes from per-center ladder plateaus.

    Nodes too close to the domain boundary to fit ``min_radii`` ladder radii
    between the grid scale and the sphere are reported as unresolved.  For a
    two-dimensional thin set, each labeled stratum gets a least-squares line
    fit with its perpendicular residual.
    """
    spec = spec or u.spec
    n = spec.n
    params = params or FrequencyParams(k=spec.k, gamma=spec.gamma)
    grid = grid or default_sphere(n, 1024 if n == 1 else None)

    coords = u.thin_points()
    mask_flat = np.asarray(u.contact).ravel()
    contact_idx = np.nonzero(mask_flat)[0]
    if contact_idx.size > max_points:
        step = int(np.ceil(contact_idx.size / max_points))
        contact_idx = contact_idx[::step]

    needs_reduction = (spec.obstacle is not None
                       and isinstance(spec.obstacle, Polynomial)
                       and not spec.obstacle.is_zero())

    rows, unresolved, unlabeled = [], [], []
    strata: dict = {float(f): [] for f in frequencies}
    base_adapter = FieldAdapter.adapt(u)
    for flat in contact_idx:
        xthin = coords[flat]
        x0 = np.append(xthin, 0.0)
        dist = float(np.linalg.norm(x0))
        r_hi = min(0.6, r_fraction * (1.0 - dist))
        radii = (radii_ladder(r_hi, ladder_count)[::-1] if r_hi > 0
                 else np.array([]))
        radii = radii[(radii >= 3.0 * spec.h)
                      & (radii <= 1.0 - dist - 3.0 * spec.h)]
        if radii.size < min_radii:
            unresolved.append(xthin)
            rows.append({"x0": xthin, "label": "unresolved",
                         "mu_estimate": None})
            continue
        if needs_reduction:
            red = reduce_to_zero_obstacle(u, spec, xthin)
            adapter = _grid_field(red.v_values, spec)
        else:
            adapter = base_adapter
        try:
            prof = truncated_frequency(adapter, x0, params=params,
                                       radii=radii, grid=grid)
            mu_est = prof.mu_estimate()
        except ValueError:
            unresolved.append(xthin)
            rows.append({"x0": xthin, "label": "unresolved",
                         "mu_estimate": None})
            continue
        dists = [abs(mu_est - f) for f in frequencies]
        best = int(np.argmin(dists))
        if dists[best] <= label_tol:
            label = float(frequencies[best])
            strata[label].append(xthin)
        else:
            label = None
            unlabeled.append((xthin, mu_est))
        rows.append({"x0": xthin, "label": label, "mu_estimate": mu_est})

    line_fits = []
    if n == 2:
        for freq, pts in strata.items():
            if len(pts) < 3:
                continue
            P = np.asarray(pts, dtype=float)
            centroid = P.mean(axis=0)
            Q = P - centroid
            _, _, vt = np.linalg.svd(Q, full_matrices=False)
            direction = vt[0]
            perp = Q - np.outer(Q @ direction, direction)
            rms = float(np.sqrt(np.mean(np.sum(perp ** 2, axis=1))))
            line_fits.append(StratumFit(frequency=freq, points=P,
                                        direction=direction,
                                        centroid=centroid, residual_rms=rms))

    return StratifyReport(rows=rows, strata=strata, unresolved=unresolved,
                          unlabeled=unlabeled, line_fits=line_fits)
