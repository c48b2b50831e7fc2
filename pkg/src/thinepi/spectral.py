"""Eigenbases of the spherical Laplacian, even in the last coordinate, with
Dirichlet conditions on a prescribed subset of the equator.

Two routes are provided and kept deliberately independent so they can check
each other:

* analytic bases — reflected Dirichlet modes on the half-circle (n=1) and
  evenly reflected restrictions of harmonic polynomials odd in the last
  coordinate (n=2), with exact eigenvalues ``lambda_of(j, n) = j(n+j-1)``
  and exact L^2 normalizations;
* discrete bases — generalized eigenproblems for the even-reduced
  finite-difference operator on the circle or the cotangent-weight operator
  on the triangulated sphere, with masked nodes eliminated by block reduction.

Discrete results can be cached on disk keyed by (dimension, grid kind,
resolution, mask hash, mode count); the cache directory is taken from the
``THIN_EPI_CACHE`` environment variable unless given explicitly.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field
from math import comb
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grids import SphereGrid, build_grid
from .polynomials import Polynomial, monomials_of_degree, odd_harmonic_extension

SQRT_PI = float(np.sqrt(np.pi))
DENSE_EIG_LIMIT = 2500
EIG_TOL = 1e-10
TIE_TOL = 1e-9


def lambda_of(alpha: float, n: int) -> float:
    """Eigenvalue whose homogeneous harmonic extension has exponent alpha."""
    if alpha < 0:
        raise ValueError(f"homogeneity must be nonnegative, got {alpha}")
    return alpha * (n + alpha - 1)


def multiplicity(n: int, j: int) -> int:
    """Dimension of the degree-j eigenspace of the half-sphere Dirichlet problem."""
    if j < 1:
        raise ValueError(f"degree must be >= 1, got {j}")
    return comb(n + j - 2, j - 1)


def mode_count_ell(n: int, m: int) -> int:
    """Number of half-sphere modes (with multiplicity) of homogeneity <= 2m+1."""
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    return sum(multiplicity(n, j) for j in range(1, 2 * m + 2))


# ---------------------------------------------------------------------------
# Basis container
# ---------------------------------------------------------------------------

@dataclass
class EigenBasis:
    """Ordered even eigenmodes vanishing on the masked equator nodes.

    ``values`` has one column per mode, normalized to unit L^2 norm on the
    sphere.  For analytic bases, ``dtheta`` (n=1) or ``grads`` (n=2) hold
    closed-form tangential derivatives, and ``equator_dn`` holds the one-sided
    derivative taken from the upper half sphere in the direction of the upper
    pole, evaluated at the equator nodes.
    """

    grid: SphereGrid
    mask: np.ndarray               # sorted grid-node indices forced to zero
    lambdas: np.ndarray            # (count,) nondecreasing
    values: np.ndarray             # (N, count)
    even: bool = True
    source: str = "discrete"       # "discrete" or "analytic"
    degrees: np.ndarray | None = None      # per-mode homogeneity (analytic)
    dtheta: np.ndarray | None = None       # (N, count), n=1 analytic
    grads: np.ndarray | None = None        # (count, N, 3), n=2 analytic
    equator_dn: np.ndarray | None = None   # (count, n_equator)
    polys: list = field(default_factory=list, repr=False)  # n=2 analytic

    @property
    def count(self) -> int:
        return self.values.shape[1]

    def project(self, trace_values: np.ndarray) -> np.ndarray:
        """Quadrature inner products of a node function with every mode."""
        return self.values.T @ (self.grid.weights * trace_values)

    def reconstruct(self, coeffs: np.ndarray) -> np.ndarray:
        return self.values @ np.asarray(coeffs, dtype=float)

    def orthonormality_defect(self) -> float:
        gram = self.values.T @ (self.grid.weights[:, None] * self.values)
        return float(np.max(np.abs(gram - np.eye(self.count))))

    def rayleigh_defect(self) -> float:
        """Max relative gap between stored eigenvalues and Rayleigh quotients.

        Only available for discrete bases (needs the assembled operator).
        """
        K, M, rep, red_index = _reduced_operator(self.grid)
        defect = 0.0
        for k in range(self.count):
            u = np.empty(K.shape[0])
            u[red_index[rep]] = self.values[:, k]
            num = float(u @ (K @ u))
            den = float(u @ (M * u))
            defect = max(defect, abs(num / den - self.lambdas[k]) / (1.0 + self.lambdas[k]))
        return defect


# ---------------------------------------------------------------------------
# Analytic bases
# ---------------------------------------------------------------------------

def half_sphere_basis(n: int, max_degree: int, grid: SphereGrid | None = None) -> EigenBasis:
    """Exact basis vanishing on the whole equator, evenly reflected.

    n=1: sin(j*theta)/sqrt(pi) on [0, pi] folded over the reflection;
    n=2: harmonic polynomials odd in x3, evaluated at (x', |x3|), with exact
    Gram-matrix orthonormalization; degree j contributes ``multiplicity(n, j)``
    modes with eigenvalue j(n+j-1).
    """
    if max_degree < 1:
        raise ValueError(f"max_degree must be >= 1, got {max_degree}")
    if grid is None:
        grid = build_grid(n, 1024 if n == 1 else 48, kind=None if n == 1 else "latlong")
    if grid.n != n:
        raise ValueError(f"grid dimension {grid.n} does not match n={n}")
    if n == 1:
        return _circle_analytic_basis(grid, max_degree, dirichlet=True)
    return _sphere_oddlift_basis(grid, max_degree)


def even_circle_basis(grid: SphereGrid, count: int) -> EigenBasis:
    """Exact unconstrained even basis on S^1: constant plus cosine modes."""
    if grid.n != 1:
        raise ValueError("even_circle_basis requires an S^1 grid")
    return _circle_analytic_basis(grid, count - 1, dirichlet=False)


def _circle_analytic_basis(grid: SphereGrid, max_degree: int, dirichlet: bool) -> EigenBasis:
    th = grid.theta_folded
    cols, dcols, lams, degs, eq_dn = [], [], [], [], []
    if not dirichlet:
        cols.append(np.full(grid.size, 1.0 / np.sqrt(2.0 * np.pi)))
        dcols.append(np.zeros(grid.size))
        lams.append(0.0)
        degs.append(0)
        eq_dn.append(np.zeros(2))
    for j in range(1, max_degree + 1):
        if dirichlet:
            cols.append(np.sin(j * th) / SQRT_PI)
            dcols.append(j * np.cos(j * th) / SQRT_PI)
            # Upper-pointing tangents at the equator: +d/dtheta at theta=0,
            # -d/dtheta at theta=pi.
            eq_dn.append(np.array([j / SQRT_PI, -j * np.cos(j * np.pi) / SQRT_PI]))
        else:
            cols.append(np.cos(j * th) / SQRT_PI)
            dcols.append(-j * np.sin(j * th) / SQRT_PI)
            eq_dn.append(np.zeros(2))
        lams.append(float(j * j))
        degs.append(j)
    values = np.column_stack(cols)
    basis = EigenBasis(
        grid=grid,
        mask=np.array(grid.equator if dirichlet else [], dtype=int),
        lambdas=np.array(lams), values=values, source="analytic",
        degrees=np.array(degs), dtheta=np.column_stack(dcols),
        equator_dn=np.array(eq_dn),
    )
    if dirichlet:
        basis.values[grid.equator, :] = 0.0  # sin(j*0), sin(j*pi): pin exactly
    return basis


def odd_lift(q: Polynomial) -> Polynomial:
    """Harmonic polynomial in three variables, odd in x3, with x3-slope q."""
    return odd_harmonic_extension(q)


def _sphere_oddlift_basis(grid: SphereGrid, max_degree: int) -> EigenBasis:
    pts = grid.nodes.copy()
    pts[:, 2] = np.abs(pts[:, 2])
    upper_sign = np.where(grid.nodes[:, 2] < 0.0, -1.0, 1.0)
    eq_pts = grid.nodes[grid.equator]

    cols, lams, degs, polys = [], [], [], []
    grads_list = []
    eq_dn_rows = []
    for j in range(1, max_degree + 1):
        raw = [odd_lift(Polynomial.monomial(2, e)) for e in monomials_of_degree(2, j - 1)]
        gram = np.array([[ (a * b).sphere_integral() for b in raw] for a in raw])
        L = np.linalg.cholesky(gram)
        coeffs = np.linalg.inv(L)  # rows give orthonormal combinations
        for s in range(len(raw)):
            P = Polynomial.zero(3)
            for t in range(s + 1):
                P = P + raw[t].scale(coeffs[s, t])
            polys.append(P)
            cols.append(P(pts))
            lams.append(float(lambda_of(j, 2)))
            degs.append(j)
            gP = P.gradient()
            g = np.stack([gP[0](pts), gP[1](pts), upper_sign * gP[2](pts)], axis=1)
            g -= (np.sum(g * grid.nodes, axis=1, keepdims=True)) * grid.nodes
            grads_list.append(g)
            eq_dn_rows.append(gP[2](eq_pts))
    values = np.column_stack(cols)
    values[grid.equator, :] = 0.0
    return EigenBasis(
        grid=grid, mask=np.array(sorted(grid.equator), dtype=int),
        lambdas=np.array(lams), values=values, source="analytic",
        degrees=np.array(degs), grads=np.stack(grads_list),
        equator_dn=np.array(eq_dn_rows), polys=polys,
    )


# ---------------------------------------------------------------------------
# Discrete operators
# ---------------------------------------------------------------------------

def _reduced_operator(grid: SphereGrid):
    """Even-reduced stiffness and (diagonal) mass, with index maps.

    Returns (K_reduced sparse, m_reduced diagonal vector, rep, red_index):
    ``rep[i]`` maps each grid node to its representative (itself on the closed
    upper half, its mirror partner below), and ``red_index`` maps
    representative grid nodes to reduced unknown indices.
    """
    if grid.n == 1:
        return _circle_reduced_operator(grid)
    if grid.kind != "tri":
        raise ValueError("discrete S^2 eigenbases require the triangulated grid")
    return _tri_reduced_operator(grid)


def _circle_reduced_operator(grid: SphereGrid):
    num = grid.size
    half = num // 2
    h = 2.0 * np.pi / num
    nred = half + 1
    main = np.full(nred, 4.0 / h)
    main[0] = main[-1] = 2.0 / h
    off = np.full(nred - 1, -2.0 / h)
    K = sp.diags([off, main, off], offsets=(-1, 0, 1), format="csr")
    m = np.full(nred, 2.0 * h)
    m[0] = m[-1] = h
    rep = np.minimum(np.arange(num), grid.reflect)
    red_index = np.full(num, -1, dtype=int)
    red_index[: nred] = np.arange(nred)
    return K, m, rep, red_index


def _tri_reduced_operator(grid: SphereGrid):
    tris = grid.triangles
    a, b, c = grid.nodes[tris[:, 0]], grid.nodes[tris[:, 1]], grid.nodes[tris[:, 2]]
    rows, cols_, vals = [], [], []
    for (i0, i1, i2), (p0, p1, p2) in (
        ((0, 1, 2), (a, b, c)), ((1, 2, 0), (b, c, a)), ((2, 0, 1), (c, a, b)),
    ):
        # Half-cotangent of the angle at vertex i0, weighting edge (i1, i2).
        u = p1 - p0
        v = p2 - p0
        cross = np.linalg.norm(np.cross(u, v), axis=1)
        cot = 0.5 * np.sum(u * v, axis=1) / np.maximum(cross, 1e-300)
        e1, e2 = tris[:, i1], tris[:, i2]
        rows += [e1, e2, e1, e2]
        cols_ += [e1, e2, e2, e1]
        vals += [cot, cot, -cot, -cot]
    K = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols_))),
        shape=(grid.size, grid.size),
    ).tocsr()

    rep = np.where(grid.nodes[:, 2] < 0.0, grid.reflect, np.arange(grid.size))
    reps = np.unique(rep)
    red_index = np.full(grid.size, -1, dtype=int)
    red_index[reps] = np.arange(reps.size)
    P = sp.coo_matrix(
        (np.ones(grid.size), (np.arange(grid.size), red_index[rep])),
        shape=(grid.size, reps.size),
    ).tocsr()
    K_red = (P.T @ K @ P).tocsr()
    m_red = P.T @ grid.weights
    return K_red, m_red, rep, red_index


def eigenbasis(grid: SphereGrid, mask, count: int,
               cache_dir: str | os.PathLike | None = None,
               use_cache: bool = True) -> EigenBasis:
    """First ``count`` even eigenmodes vanishing on the masked equator nodes.

    ``mask`` is a set of grid node indices contained in the equator (it may be
    empty or the whole equator).  Masked rows are eliminated by reduction to
    the unmasked block, so eigenfunctions vanish there exactly.
    """
    mask = np.array(sorted(int(i) for i in np.asarray(mask, dtype=int).ravel()), dtype=int)
    if mask.size and not np.isin(mask, grid.equator).all():
        raise ValueError("mask must be a subset of the equator nodes")
    K, m, rep, red_index = _reduced_operator(grid)
    nred = K.shape[0]
    if count > nred - mask.size:
        raise ValueError(
            f"requested {count} modes but only {nred - mask.size} unknowns remain")

    if use_cache:
        cached = _cache_load(grid, mask, count, cache_dir)
        if cached is not None:
            return cached

    keep = np.setdiff1d(np.arange(nred), red_index[mask])
    Kb = K[keep][:, keep]
    mb = m[keep]
    scale = 1.0 / np.sqrt(mb)
    A = sp.diags(scale) @ Kb @ sp.diags(scale)
    A = 0.5 * (A + A.T)

    if keep.size <= DENSE_EIG_LIMIT:
        lam, vec = scipy.linalg.eigh(A.toarray())
        lam, vec = lam[:count], vec[:, :count]
    else:
        try:
            lam, vec = spla.eigsh(A.tocsc(), k=count, sigma=-0.5, which="LM", tol=EIG_TOL)
        except spla.ArpackNoConvergence as exc:
            raise RuntimeError(f"eigensolver failed to converge: {exc}") from exc
        order = np.argsort(lam)
        lam, vec = lam[order], vec[:, order]
    lam = lam.copy()
    lam[np.abs(lam) < 1e-9] = 0.0  # clamp roundoff around the constant mode

    # Undo the diagonal similarity, embed zeros at masked unknowns, expand to
    # the full grid through the reflection representative map.
    red_vals = np.zeros((nred, count))
    red_vals[keep, :] = scale[:, None] * vec
    norms = np.sqrt(np.einsum("i,ik->k", m, red_vals**2))
    red_vals /= norms
    full = red_vals[red_index[rep], :]

    full, lam = _fix_order_and_signs(full, lam)
    basis = EigenBasis(
        grid=grid, mask=mask, lambdas=lam, values=full, source="discrete",
    )
    if use_cache:
        _cache_store(basis, cache_dir)
    return basis


def _fix_order_and_signs(values: np.ndarray, lam: np.ndarray):
    """Deterministic ordering and signs: ties broken lexicographically by node
    values, sign chosen so the largest-magnitude entry is positive."""
    count = lam.size
    for k in range(count):
        col = values[:, k]
        idx = int(np.argmax(np.abs(col)))
        if col[idx] < 0:
            values[:, k] = -col
    order = list(range(count))
    # Stable insertion sort on (lambda with tie tolerance, lexicographic values).
    def less(i, j):
        if lam[i] < lam[j] - TIE_TOL:
            return True
        if lam[i] > lam[j] + TIE_TOL:
            return False
        vi, vj = values[:, i], values[:, j]
        diff = vi - vj
        nz = np.nonzero(np.abs(diff) > 1e-12)[0]
        return bool(diff[nz[0]] < 0) if nz.size else False
    for i in range(1, count):
        j = i
        while j > 0 and less(order[j], order[j - 1]):
            order[j], order[j - 1] = order[j - 1], order[j]
            j -= 1
    return values[:, order], lam[order]


# ---------------------------------------------------------------------------
# Cache
# ---------------------------------------------------------------------------

CACHE_ENV = "THIN_EPI_CACHE"
CACHE_VERSION = "v1"


def cache_root(cache_dir=None) -> Path:
    if cache_dir is not None:
        return Path(cache_dir)
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "thin-epi"


def _cache_key(grid: SphereGrid, mask: np.ndarray, count: int) -> str:
    hasher = hashlib.sha256()
    hasher.update(
        f"{CACHE_VERSION}|{grid.n}|{grid.kind}|{grid.resolution}|{count}|".encode())
    hasher.update(mask.astype(np.int64).tobytes())
    return hasher.hexdigest()[:24]


def _cache_load(grid, mask, count, cache_dir):
    path = cache_root(cache_dir) / "eigenbases" / (_cache_key(grid, mask, count) + ".npz")
    if not path.exists():
        return None
    try:
        data = np.load(path)
        return EigenBasis(grid=grid, mask=mask, lambdas=data["lambdas"],
                          values=data["values"], source="discrete")
    except Exception:
        return None


def _cache_store(basis: EigenBasis, cache_dir):
    root = cache_root(cache_dir) / "eigenbases"
    root.mkdir(parents=True, exist_ok=True)
    path = root / (_cache_key(basis.grid, basis.mask, basis.count) + ".npz")
    tmp = path.with_suffix(".tmp.npz")
    np.savez(tmp, lambdas=basis.lambdas, values=basis.values, mask=basis.mask)
    tmp.replace(path)


# ---------------------------------------------------------------------------
# Convergence report along a sequence of equator masks
# ---------------------------------------------------------------------------

@dataclass
class SpectralConvergenceReport:
    deltas: list[float]
    lambdas: np.ndarray        # (ndelta, count)
    lambda_err: np.ndarray     # vs limit-mask discrete eigenvalues
    l2_err: np.ndarray         # subspace-aligned eigenfunction differences
    limit_lambdas: np.ndarray
    mask_sizes: list[int]
    nonmonotone: bool

    def rows(self):
        for i, d in enumerate(self.deltas):
            yield {"delta": d, "mask_size": self.mask_sizes[i],
                   "lambda_err_max": float(self.lambda_err[i].max()),
                   "l2_err_max": float(self.l2_err[i].max())}


def verify_spectral_convergence(grid: SphereGrid, p, delta_sequence,
                                count: int = 6, cache_dir=None) -> SpectralConvergenceReport:
    """Track eigenpair convergence as the mask grows toward the full zero set.

    ``p`` is a blow-up profile; for each delta the mask is the set of equator
    nodes where the profile's slope factor exceeds delta.  The reference is
    the same discrete problem with the delta = 0 mask.
    """
    from .profiles import zero_set

    deltas = [float(d) for d in delta_sequence]
    if len(deltas) > 1 and any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("delta sequence must be strictly decreasing")
    ref = eigenbasis(grid, zero_set(p, 0.0, grid), count, cache_dir=cache_dir)

    lam_rows, lam_err_rows, l2_rows, mask_sizes = [], [], [], []
    for d in deltas:
        mask = zero_set(p, d, grid)
        basis = eigenbasis(grid, mask, count, cache_dir=cache_dir)
        mask_sizes.append(int(mask.size))
        lam_rows.append(basis.lambdas)
        lam_err_rows.append(np.abs(basis.lambdas - ref.lambdas))
        errs = np.empty(count)
        w = grid.weights
        for j in range(count):
            cluster = np.nonzero(
                np.abs(ref.lambdas - ref.lambdas[j]) <= 1e-6 * (1.0 + ref.lambdas[j]))[0]
            phi = basis.values[:, j]
            proj = np.zeros_like(phi)
            for k in cluster:
                proj += (ref.values[:, k] @ (w * phi)) * ref.values[:, k]
            errs[j] = np.sqrt(max(float((phi - proj) @ (w * (phi - proj))), 0.0))
        l2_rows.append(errs)

    lam_err = np.array(lam_err_rows)
    worst = lam_err.max(axis=1)
    nonmonotone = bool(np.any(np.diff(worst) > 1e-8 + 0.5 * worst[:-1]))
    return SpectralConvergenceReport(
        deltas=deltas, lambdas=np.array(lam_rows), lambda_err=lam_err,
        l2_err=np.array(l2_rows), limit_lambdas=ref.lambdas,
        mask_sizes=mask_sizes, nonmonotone=nonmonotone,
    )
