"""Finite-difference solver for the thin obstacle problem on the unit ball.

The computational domain is the upper half-ball {|x| < 1, x_d >= 0} embedded
in a uniform Cartesian grid on [-1,1]^(d-1) x [0,1].  Even symmetry in the
last coordinate reduces the plane condition to a one-sided flux: the row of
nodes on {x_d = 0} uses the standard stencil with the upper neighbor counted
twice.  Dirichlet data is imposed at every grid node on or outside the unit
sphere, evaluated at the radial projection of the node (nearest-node
imposition; O(h) boundary error, second order in the interior).

The constrained system

    min(u - phi, -(L u - f)) = 0   on the thin plane,
    L u = f                        at interior nodes,
    u = g                          on and outside the sphere,

with L the reflected 5/7-point Laplacian, is solved by projected SOR with a
fixed lexicographic sweep order (deterministic).  Sweeps are compiled with
numba when available, with a red-black vectorized fallback otherwise.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .polynomials import Polynomial, even_harmonic_extension
from .profiles import BlowupProfile, HalfspaceSolution2D, halfspace_2d, \
    make_profile

try:  # pragma: no cover - exercised implicitly
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        return wrap if not (args and callable(args[0])) else args[0]


NEG_INF = -1e30


# ---------------------------------------------------------------------------
# Field descriptors (obstacle / boundary / right-hand side)
# ---------------------------------------------------------------------------

class Mode2D:
    """r^power * sin(j * theta) / sqrt(pi) on R^2, theta folded to [0, pi].

    Even in the second coordinate and vanishing on the thin line; used to
    inject a single separated-variables component with prescribed radial
    power into boundary data.
    """

    def __init__(self, j: int, power: float, amplitude: float = 1.0):
        self.j = int(j)
        self.power = float(power)
        self.amplitude = float(amplitude)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        scalar = pts.ndim == 1
        if scalar:
            pts = pts[None, :]
        r = np.hypot(pts[..., 0], pts[..., 1])
        th = np.arctan2(np.abs(pts[..., 1]), pts[..., 0])
        with np.errstate(invalid="ignore"):
            out = np.where(
                r > 0.0,
                self.amplitude * r ** self.power * np.sin(self.j * th)
                / math.sqrt(math.pi),
                0.0,
            )
        return out[0] if scalar else out

    def config(self) -> dict:
        return {"kind": "mode", "j": self.j, "power": self.power,
                "amplitude": self.amplitude}


class _SumField:
    def __init__(self, terms):
        self.terms = list(terms)

    def __call__(self, points):
        out = self.terms[0](points)
        for t in self.terms[1:]:
            out = out + t(points)
        return out


class _ScaledField:
    def __init__(self, factor, inner):
        self.factor = float(factor)
        self.inner = inner

    def __call__(self, points):
        return self.factor * self.inner(points)


class _ConstantField:
    def __init__(self, value):
        self.value = float(value)

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            return self.value
        return np.full(pts.shape[:-1], self.value)


def make_field(config, nvars: int):
    """Build an evaluator (points -> values) from a config dictionary.

    Recognized kinds: zero, constant {value}, polynomial {coeffs},
    profile {m, n}, halfspace {mu}, mode {j, power, amplitude},
    sum {terms}, scaled {factor, of}.
    """
    if config is None:
        return None
    if callable(config):
        return config
    if isinstance(config, (int, float)):
        return _ConstantField(config)
    kind = config.get("kind")
    if kind == "zero":
        return _ConstantField(0.0)
    if kind == "constant":
        return _ConstantField(config["value"])
    if kind == "polynomial":
        coeffs = {tuple(int(x) for x in e): float(c) for e, c in config["coeffs"]}
        return Polynomial(nvars, coeffs)
    if kind == "profile":
        return make_profile(config["m"], config.get("n", nvars - 1))
    if kind == "halfspace":
        return halfspace_2d(config["mu"])
    if kind == "mode":
        return Mode2D(config["j"], config["power"], config.get("amplitude", 1.0))
    if kind == "sum":
        return _SumField(make_field(t, nvars) for t in config["terms"])
    if kind == "scaled":
        return _ScaledField(config["factor"], make_field(config["of"], nvars))
    raise ValueError(f"unknown field kind {kind!r}")


def field_config(obj) -> dict | None:
    """Inverse of make_field for the descriptor types (callables that do not
    carry a descriptor serialize as opaque)."""
    if obj is None:
        return None
    if isinstance(obj, _ConstantField):
        return {"kind": "constant", "value": obj.value}
    if isinstance(obj, Polynomial):
        return {"kind": "polynomial",
                "coeffs": [[list(e), c] for e, c in sorted(obj.coeffs.items())]}
    if isinstance(obj, BlowupProfile):
        return {"kind": "profile", "m": obj.m, "n": obj.n}
    if isinstance(obj, HalfspaceSolution2D):
        return {"kind": "halfspace", "mu": obj.mu}
    if isinstance(obj, Mode2D):
        return obj.config()
    if isinstance(obj, _SumField):
        return {"kind": "sum", "terms": [field_config(t) for t in obj.terms]}
    if isinstance(obj, _ScaledField):
        return {"kind": "scaled", "factor": obj.factor,
                "of": field_config(obj.inner)}
    return {"kind": "opaque", "repr": repr(obj)}


# ---------------------------------------------------------------------------
# Problem description
# ---------------------------------------------------------------------------

@dataclass
class ProblemSpec:
    """Thin obstacle problem: dimension d = n+1 in {2,3}, grid spacing h,
    obstacle on the thin plane, even Dirichlet data on the sphere, smoothness
    parameters (k, gamma) of the obstacle class, optional right-hand side."""

    dimension: int
    h: float
    obstacle: object = None            # callable on (n)-points, or None
    boundary: object = 0.0             # callable on (d)-points (sphere data)
    k: int = 2
    gamma: float = 0.5
    rhs: object = None                 # callable on (d)-points, or None
    omega: float = 1.8
    tol: float = 1e-10
    max_sweeps: int = 200_000

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.dimension}")
        res = round(1.0 / self.h)
        if res < 16 or abs(res * self.h - 1.0) > 1e-9:
            raise ValueError(
                f"h must be 1/res with res >= 16 (h={self.h}); "
                "need at least 32 nodes per diameter")
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0,1), got {self.gamma}")
        if not 0.0 < self.omega < 2.0:
            raise ValueError(f"omega must lie in (0,2), got {self.omega}")
        if isinstance(self.obstacle, (dict, int, float)):
            self.obstacle = make_field(self.obstacle, self.n)
        if isinstance(self.boundary, (dict, int, float)):
            self.boundary = make_field(self.boundary, self.dimension)
        if isinstance(self.rhs, (dict, int, float)):
            self.rhs = make_field(self.rhs, self.dimension)

    @property
    def n(self) -> int:
        return self.dimension - 1

    @property
    def resolution(self) -> int:
        return round(1.0 / self.h)

    def to_config(self) -> dict:
        return {
            "dimension": self.dimension, "h": self.h,
            "obstacle": field_config(self.obstacle),
            "boundary": field_config(self.boundary),
            "k": self.k, "gamma": self.gamma,
            "rhs": field_config(self.rhs),
            "omega": self.omega, "tol": self.tol,
            "max_sweeps": self.max_sweeps,
        }

    @staticmethod
    def from_config(data: dict) -> "ProblemSpec":
        required = [key for key in ("dimension", "h") if key not in data]
        if required:
            raise ValueError(f"config missing required keys: {required}")
        return ProblemSpec(
            dimension=int(data["dimension"]), h=float(data["h"]),
            obstacle=make_field(data.get("obstacle"), int(data["dimension"]) - 1),
            boundary=make_field(data.get("boundary", 0.0), int(data["dimension"])),
            k=int(data.get("k", 2)), gamma=float(data.get("gamma", 0.5)),
            rhs=make_field(data.get("rhs"), int(data["dimension"])),
            omega=float(data.get("omega", 1.8)),
            tol=float(data.get("tol", 1e-10)),
            max_sweeps=int(data.get("max_sweeps", 200_000)),
        )

    @staticmethod
    def from_file(path) -> "ProblemSpec":
        return ProblemSpec.from_config(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# Sweep kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def _sweep_2d(u, kind, phi, f, h2, omega):  # pragma: no cover - compiled
    max_upd = 0.0
    nx, ny = u.shape
    for i in range(nx):
        for j in range(ny):
            kd = kind[i, j]
            if kd == 0:
                continue
            old = u[i, j]
            if j == 0:
                target = (u[i - 1, 0] + u[i + 1, 0] + 2.0 * u[i, 1]
                          - h2 * f[i, 0]) * 0.25
                new = old + omega * (target - old)
                if new < phi[i]:
                    new = phi[i]
            else:
                target = (u[i - 1, j] + u[i + 1, j] + u[i, j - 1] + u[i, j + 1]
                          - h2 * f[i, j]) * 0.25
                new = old + omega * (target - old)
            d = abs(new - old)
            if d > max_upd:
                max_upd = d
            u[i, j] = new
    return max_upd


@njit(cache=True)
def _sweep_3d(u, kind, phi, f, h2, omega):  # pragma: no cover - compiled
    max_upd = 0.0
    n1, n2, ny = u.shape
    sixth = 1.0 / 6.0
    for i in range(n1):
        for k in range(n2):
            for j in range(ny):
                kd = kind[i, k, j]
                if kd == 0:
                    continue
                old = u[i, k, j]
                if j == 0:
                    target = (u[i - 1, k, 0] + u[i + 1, k, 0]
                              + u[i, k - 1, 0] + u[i, k + 1, 0]
                              + 2.0 * u[i, k, 1] - h2 * f[i, k, 0]) * sixth
                    new = old + omega * (target - old)
                    if new < phi[i, k]:
                        new = phi[i, k]
                else:
                    target = (u[i - 1, k, j] + u[i + 1, k, j]
                              + u[i, k - 1, j] + u[i, k + 1, j]
                              + u[i, k, j - 1] + u[i, k, j + 1]
                              - h2 * f[i, k, j]) * sixth
                    new = old + omega * (target - old)
                d = abs(new - old)
                if d > max_upd:
                    max_upd = d
                u[i, k, j] = new
    return max_upd


def _sweep_redblack(u, kind, phi, f, h2, omega):
    """Vectorized two-color fallback sweep (same fixed point as the compiled
    lexicographic kernel, different update order)."""
    idx = np.indices(u.shape).sum(axis=0)
    phi_full = _phi_full(phi, u.shape)   # NEG_INF off the thin plane
    max_upd = 0.0
    for color in (0, 1):
        target = _gs_targets(u, f, h2)
        new = np.maximum(u + omega * (target - u), phi_full)
        sel = (kind > 0) & (idx % 2 == color)
        upd = np.abs(new - u)[sel]
        if upd.size:
            max_upd = max(max_upd, float(upd.max()))
        u[sel] = new[sel]
    return max_upd


def _phi_full(phi, shape):
    full = np.full(shape, NEG_INF)
    full[..., 0] = phi
    return full


def _gs_targets(u, f, h2):
    """Unrelaxed Gauss-Seidel targets at every node (neighbors from the
    current array); even reflection doubles the upper neighbor on the thin
    row.  Frozen entries of the result are meaningless."""
    d = u.ndim
    target = np.zeros_like(u)
    inner = tuple(slice(1, -1) for _ in range(d - 1)) + (slice(1, -1),)
    acc = np.zeros_like(u)
    for ax in range(d):
        acc[inner] += _shift(u, ax, 1)[inner] + _shift(u, ax, -1)[inner]
    target[inner] = (acc[inner] - h2 * f[inner]) / (2.0 * d)
    # thin row: j = 0, horizontal neighbors + doubled upper
    thin = tuple(slice(1, -1) for _ in range(d - 1)) + (0,)
    acc0 = np.zeros(u.shape[:-1])
    for ax in range(d - 1):
        acc0[thin[:-1]] += (_shift(u[..., 0], ax, 1)[thin[:-1]]
                            + _shift(u[..., 0], ax, -1)[thin[:-1]])
    target[..., 0][thin[:-1]] = (acc0[thin[:-1]] + 2.0 * u[..., 1][thin[:-1]]
                                 - h2 * f[..., 0][thin[:-1]]) / (2.0 * d)
    return target


def _shift(a, axis, step):
    return np.roll(a, -step, axis=axis)


# ---------------------------------------------------------------------------
# Solution container
# ---------------------------------------------------------------------------

@dataclass
class GridSolution:
    """Solved state on the closed upper half-ball.

    ``values`` has one axis per horizontal coordinate plus the vertical axis
    last; index j on the last axis is height j*h.  Full-ball queries reflect
    the vertical coordinate, so even symmetry is exact by construction.
    """

    spec: ProblemSpec
    values: np.ndarray
    kind: np.ndarray                  # 0 frozen, 1 interior, 2 thin plane
    phi_thin: np.ndarray              # obstacle on the thin-plane nodes
    contact: np.ndarray               # bool over thin-plane nodes
    laplace_residual: float           # update-scaled, off-contact free nodes
    complementarity: np.ndarray       # min(u-phi, u-target) on thin nodes
    sweeps: int
    final_update: float
    converged: bool
    runtime: float
    energy_trace: np.ndarray | None = None
    _interp: object = field(default=None, repr=False, compare=False)

    @property
    def h(self) -> float:
        return self.spec.h

    def axes(self) -> list[np.ndarray]:
        res = self.spec.resolution
        horiz = np.arange(-res, res + 1) * self.spec.h
        vert = np.arange(0, res + 1) * self.spec.h
        return [horiz] * (self.spec.dimension - 1) + [vert]

    def thin_points(self) -> np.ndarray:
        """Coordinates of the thin-plane nodes, shape (prod, n)."""
        res = self.spec.resolution
        horiz = np.arange(-res, res + 1) * self.spec.h
        if self.spec.dimension == 2:
            return horiz[:, None]
        a, b = np.meshgrid(horiz, horiz, indexing="ij")
        return np.stack([a.ravel(), b.ravel()], axis=1)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Multilinear interpolation; even reflection in the last coordinate."""
        from scipy.interpolate import RegularGridInterpolator

        if self._interp is None:
            self._interp = RegularGridInterpolator(
                tuple(self.axes()), self.values, method="linear",
                bounds_error=True)
        pts = np.asarray(points, dtype=float)
        scalar = pts.ndim == 1
        if scalar:
            pts = pts[None, :]
        folded = pts.copy()
        folded[..., -1] = np.abs(folded[..., -1])
        out = self._interp(folded)
        return out[0] if scalar else out

    def max_error_vs(self, exact) -> float:
        """Sup-norm against a callable over the free (non-frozen) nodes."""
        pts = _node_points(self.spec)
        free = self.kind.ravel() > 0
        vals = np.asarray(exact(pts[free]), dtype=float)
        return float(np.max(np.abs(self.values.ravel()[free] - vals)))

    def stats(self) -> dict:
        return {
            "sweeps": self.sweeps, "final_update": self.final_update,
            "converged": self.converged, "runtime_seconds": self.runtime,
            "laplace_residual": self.laplace_residual,
            "complementarity_max": float(np.max(np.abs(self.complementarity)))
            if self.complementarity.size else 0.0,
            "contact_nodes": int(np.count_nonzero(self.contact)),
        }

    # -- persistence --------------------------------------------------------

    def dump(self, base_path) -> tuple[Path, Path]:
        """Write <base>.bin (flat little-endian arrays) + <base>.json header."""
        base = Path(base_path)
        arrays = {
            "values": np.ascontiguousarray(self.values, dtype="<f8"),
            "kind": np.ascontiguousarray(self.kind, dtype="i1"),
            "phi_thin": np.ascontiguousarray(self.phi_thin, dtype="<f8"),
            "contact": np.ascontiguousarray(self.contact, dtype="i1"),
            "complementarity": np.ascontiguousarray(self.complementarity,
                                                    dtype="<f8"),
        }
        blob = b"".join(a.tobytes() for a in arrays.values())
        fields, offset = {}, 0
        for name, a in arrays.items():
            fields[name] = {"offset": offset, "dtype": str(a.dtype),
                            "shape": list(a.shape)}
            offset += a.nbytes
        bin_path = base.with_suffix(".bin")
        bin_path.write_bytes(blob)
        header = {
            "format": "thin-epi-solution-v1",
            "binary_file": bin_path.name,
            "binary_sha256": hashlib.sha256(blob).hexdigest(),
            "fields": fields,
            "spec": self.spec.to_config(),
            "stats": self.stats(),
        }
        json_path = base.with_suffix(".json")
        json_path.write_text(json.dumps(header, indent=2, sort_keys=True))
        return bin_path, json_path


def load_solution(base_path) -> GridSolution:
    base = Path(base_path)
    header = json.loads(base.with_suffix(".json").read_text())
    if header.get("format") != "thin-epi-solution-v1":
        raise ValueError(f"unrecognized solution format in {base}.json")
    blob = (base.parent / header["binary_file"]).read_bytes()
    if hashlib.sha256(blob).hexdigest() != header["binary_sha256"]:
        raise ValueError("solution binary does not match its recorded hash")
    arrays = {}
    for name, meta in header["fields"].items():
        dt = np.dtype(meta["dtype"])
        count = int(np.prod(meta["shape"])) if meta["shape"] else 1
        start = meta["offset"]
        arrays[name] = np.frombuffer(
            blob, dtype=dt, count=count, offset=start).reshape(meta["shape"]).copy()
    spec = ProblemSpec.from_config(header["spec"])
    stats = header["stats"]
    return GridSolution(
        spec=spec, values=arrays["values"], kind=arrays["kind"],
        phi_thin=arrays["phi_thin"], contact=arrays["contact"].astype(bool),
        laplace_residual=stats["laplace_residual"],
        complementarity=arrays["complementarity"],
        sweeps=stats["sweeps"], final_update=stats["final_update"],
        converged=stats["converged"], runtime=stats["runtime_seconds"],
    )


# ---------------------------------------------------------------------------
# Assembly and solve
# ---------------------------------------------------------------------------

def _node_points(spec: ProblemSpec) -> np.ndarray:
    res = spec.resolution
    horiz = np.arange(-res, res + 1) * spec.h
    vert = np.arange(0, res + 1) * spec.h
    grids = np.meshgrid(*([horiz] * (spec.dimension - 1) + [vert]),
                        indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _assemble(spec: ProblemSpec):
    pts = _node_points(spec)
    d = spec.dimension
    res = spec.resolution
    shape = tuple([2 * res + 1] * (d - 1) + [res + 1])
    rad = np.linalg.norm(pts, axis=1).reshape(shape)

    kind = np.ones(shape, dtype=np.int8)
    kind[rad >= 1.0 - 1e-12] = 0
    thin_free = (kind[..., 0] == 1)
    kind[..., 0][thin_free] = 2

    u = np.zeros(shape)
    frozen = kind == 0
    proj = pts / np.maximum(np.linalg.norm(pts, axis=1, keepdims=True), 1e-300)
    g = spec.boundary if spec.boundary is not None else _ConstantField(0.0)
    u[frozen] = np.asarray(g(proj.reshape(shape + (d,))[frozen]), dtype=float)

    horiz = np.arange(-res, res + 1) * spec.h
    if d == 2:
        thin_pts = horiz[:, None]
        thin_shape = (2 * res + 1,)
    else:
        a, b = np.meshgrid(horiz, horiz, indexing="ij")
        thin_pts = np.stack([a.ravel(), b.ravel()], axis=1)
        thin_shape = (2 * res + 1, 2 * res + 1)
    if spec.obstacle is None:
        phi = np.full(thin_shape, NEG_INF)
    else:
        phi = np.asarray(spec.obstacle(thin_pts), dtype=float).reshape(thin_shape)

    if spec.rhs is None:
        f = np.zeros(shape)
    else:
        f = np.asarray(spec.rhs(pts), dtype=float).reshape(shape)

    # feasible start: harmonic guess 0 lifted to the obstacle on the plane
    thin_sel = kind[..., 0] == 2
    u[..., 0][thin_sel] = np.maximum(u[..., 0][thin_sel], phi[thin_sel])
    return u, kind, phi, f


def discrete_energy(values: np.ndarray, f: np.ndarray, h: float) -> float:
    """Lyapunov functional of the projected sweep: half the sum of squared
    link differences (thin-row horizontal links at half weight) plus the
    load term (thin nodes at half weight).  Non-increasing across sweeps for
    relaxation parameters in (0,2)."""
    d = values.ndim
    total = 0.0
    for ax in range(d):
        diff = np.diff(values, axis=ax)
        w = np.ones_like(diff)
        if ax < d - 1:
            w[..., 0] = 0.5          # horizontal links inside the thin plane
        total += 0.5 * float(np.sum(w * diff * diff))
    wload = np.ones_like(values)
    wload[..., 0] = 0.5
    total += h * h * float(np.sum(wload * f * values))
    return total


def solve_thin_obstacle(spec: ProblemSpec, record_energy_every: int = 0,
                        warn_on_cap: bool = True) -> GridSolution:
    """Projected SOR solve of the discrete complementarity system."""
    t0 = time.perf_counter()
    u, kind, phi, f = _assemble(spec)
    h2 = spec.h * spec.h
    if HAVE_NUMBA:
        kernel = _sweep_2d if spec.dimension == 2 else _sweep_3d
    else:  # pragma: no cover
        warnings.warn("numba unavailable: falling back to red-black sweeps",
                      stacklevel=2)
        kernel = _sweep_redblack

    energies = [] if record_energy_every else None
    sweeps, upd = 0, np.inf
    while sweeps < spec.max_sweeps:
        upd = kernel(u, kind, phi, f, h2, spec.omega)
        sweeps += 1
        if record_energy_every and sweeps % record_energy_every == 0:
            energies.append(discrete_energy(u, f, spec.h))
        if upd <= spec.tol:
            break
    converged = upd <= spec.tol
    if not converged and warn_on_cap:
        warnings.warn(
            f"projected SOR hit the {spec.max_sweeps}-sweep cap with final "
            f"update {upd:.3e} > tol {spec.tol:.3e}", stacklevel=2)

    target = _gs_targets(u, f, h2)
    free_off_plane = kind == 1
    thin_sel = kind[..., 0] == 2
    slack = u[..., 0] - phi
    flux = u[..., 0] - target[..., 0]          # >= 0 at contact
    comp = np.where(thin_sel, np.minimum(slack, flux), 0.0)
    contact_tol = 10.0 * spec.tol
    contact = thin_sel & (slack <= contact_tol)
    resid_vals = np.abs(u - target)[free_off_plane]
    off_contact_thin = thin_sel & ~contact
    resid_thin = np.abs(flux)[off_contact_thin]
    lap_resid = max(float(resid_vals.max()) if resid_vals.size else 0.0,
                    float(resid_thin.max()) if resid_thin.size else 0.0)

    return GridSolution(
        spec=spec, values=u, kind=kind, phi_thin=phi, contact=contact,
        laplace_residual=lap_resid, complementarity=comp[thin_sel],
        sweeps=sweeps, final_update=float(upd), converged=converged,
        runtime=time.perf_counter() - t0,
        energy_trace=np.asarray(energies) if energies else None,
    )


# ---------------------------------------------------------------------------
# Contact set
# ---------------------------------------------------------------------------

def contact_set(sol: GridSolution, tol: float | None = None):
    """(contact mask over thin-plane nodes, free-boundary node index list).

    The mask marks nodes with u - phi <= tol; the boundary list contains
    contact nodes with at least one non-contact neighbor in the thin-plane
    grid topology (the discrete free boundary).
    """
    if tol is None:
        tol = 10.0 * sol.spec.tol
    thin_sel = sol.kind[..., 0] == 2
    slack = sol.values[..., 0] - sol.phi_thin
    mask = thin_sel & (slack <= tol)
    boundary = []
    if sol.spec.dimension == 2:
        for i in np.nonzero(mask)[0]:
            for di in (-1, 1):
                jx = i + di
                if 0 <= jx < mask.size and thin_sel[jx] and not mask[jx]:
                    boundary.append((int(i),))
                    break
    else:
        idx = np.argwhere(mask)
        for i, k in idx:
            for di, dk in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                a, b = i + di, k + dk
                if (0 <= a < mask.shape[0] and 0 <= b < mask.shape[1]
                        and thin_sel[a, b] and not mask[a, b]):
                    boundary.append((int(i), int(k)))
                    break
    return mask, boundary


# ---------------------------------------------------------------------------
# Reduction to zero obstacle
# ---------------------------------------------------------------------------

def taylor_polynomial(p: Polynomial, x0, k: int) -> Polynomial:
    """Degree-k Taylor polynomial of p at x0, expressed in the original
    coordinates."""
    x0 = np.asarray(x0, dtype=float)
    shifted: dict[tuple[int, ...], float] = {}
    # expand p(x0 + t) and keep total degree <= k in t
    for e, c in p.coeffs.items():
        partial = {(0,) * p.nvars: c}
        for v, kv in enumerate(e):
            new: dict[tuple[int, ...], float] = {}
            for j in range(kv + 1):
                b = math.comb(kv, j) * x0[v] ** (kv - j)
                for ee, cc in partial.items():
                    e2 = list(ee)
                    e2[v] += j
                    e2 = tuple(e2)
                    new[e2] = new.get(e2, 0.0) + cc * b
            partial = new
        for ee, cc in partial.items():
            shifted[ee] = shifted.get(ee, 0.0) + cc
    trunc = {e: c for e, c in shifted.items() if sum(e) <= k}
    # translate back: q(x) = trunc(x - x0)
    out: dict[tuple[int, ...], float] = {}
    for e, c in trunc.items():
        partial = {(0,) * p.nvars: c}
        for v, kv in enumerate(e):
            new = {}
            for j in range(kv + 1):
                b = math.comb(kv, j) * (-x0[v]) ** (kv - j)
                for ee, cc in partial.items():
                    e2 = list(ee)
                    e2[v] += j
                    e2 = tuple(e2)
                    new[e2] = new.get(e2, 0.0) + cc * b
            partial = new
        for ee, cc in partial.items():
            out[ee] = out.get(ee, 0.0) + cc
    return Polynomial(p.nvars, out)


@dataclass
class ReducedProblem:
    """Zero-obstacle normal form around a thin-plane point."""

    x0: np.ndarray
    v_values: np.ndarray               # same layout as GridSolution.values
    h_poly: Polynomial                 # right-hand side, horizontal variables
    q_k: Polynomial                    # Taylor polynomial of the obstacle
    q_tilde: Polynomial                # its even harmonic extension
    c_empirical: float                 # sup |h| / |x-x0|^(k+gamma-2)
    spec: ProblemSpec

    def v_solution(self, base: GridSolution) -> GridSolution:
        """Wrap v in a GridSolution sharing the parent's grid metadata."""
        thin_sel = base.kind[..., 0] == 2
        return GridSolution(
            spec=self.spec, values=self.v_values, kind=base.kind,
            phi_thin=np.zeros_like(base.phi_thin),
            contact=thin_sel & (np.abs(self.v_values[..., 0]) <= 10 * self.spec.tol),
            laplace_residual=base.laplace_residual,
            complementarity=base.complementarity,
            sweeps=base.sweeps, final_update=base.final_update,
            converged=base.converged, runtime=base.runtime,
        )

    def h_field(self):
        """h as a field on ball points (depends on horizontal coordinates)."""
        poly = self.h_poly

        def h_eval(points):
            pts = np.asarray(points, dtype=float)
            return poly(pts[..., : poly.nvars])

        return h_eval


def reduce_to_zero_obstacle(sol: GridSolution, spec: ProblemSpec | None = None,
                            x0=None) -> ReducedProblem:
    """Normal form v = u - phi(x') + q_k(x') - qtilde_k(x) with right-hand
    side h = -Lap_horizontal(phi - q_k); v has zero obstacle and v = u - phi
    on the thin plane."""
    if spec is None:
        spec = sol.spec
    n = spec.n
    if x0 is None:
        x0 = np.zeros(n)
    x0 = np.asarray(x0, dtype=float)
    phi = spec.obstacle
    if phi is None:
        phi = Polynomial.zero(n)
    if not isinstance(phi, Polynomial):
        raise ValueError(
            "reduction requires Taylor data: obstacle must be a Polynomial")

    q_k = taylor_polynomial(phi, x0, spec.k)
    q_tilde = even_harmonic_extension(q_k)
    lap = q_tilde.laplacian()
    if not lap.is_zero(tol=1e-10 * max(
            (abs(c) for c in q_tilde.coeffs.values()), default=1.0)):
        raise AssertionError("even harmonic extension failed to be harmonic")

    pts = _node_points(spec)
    shape = sol.values.shape
    correction = (phi(pts[:, :n]) - q_k(pts[:, :n]) + q_tilde(pts)).reshape(shape)
    v = sol.values - correction
    # on the thin plane the correction reduces to phi - q_k + q_k = phi,
    # so v = u - phi >= 0 there up to solver tolerance
    h_poly = (phi - q_k).laplacian().scale(-1.0)

    thin = sol.thin_points()
    dist = np.linalg.norm(thin - x0, axis=1)
    hvals = np.abs(h_poly(thin))
    power = spec.k + spec.gamma - 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(dist > 0, hvals / np.maximum(dist, 1e-300) ** power, 0.0)
    c_emp = float(np.max(ratio)) if ratio.size else 0.0

    return ReducedProblem(x0=x0, v_values=v, h_poly=h_poly, q_k=q_k,
                          q_tilde=q_tilde, c_empirical=c_emp, spec=spec)
