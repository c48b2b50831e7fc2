"""Sphere grids with exact mirror symmetry in the last coordinate.

Every grid carries node positions on the unit sphere S^n (n = 1 or 2),
quadrature weights for the surface measure, an index involution realizing the
reflection x_{n+1} -> -x_{n+1} exactly, and the list of equator nodes (last
coordinate exactly zero).  Three kinds are provided:

* ``circle``   -- uniform angles on S^1 including theta = 0 and pi;
* ``tri``      -- subdivided octahedron on S^2 (triangulation with an exact
                  equator ring, used by the cotangent Laplace-Beltrami operator);
* ``latlong``  -- Gauss-Legendre latitudes x uniform longitudes on S^2 (smooth
                  quadrature; the latitude count is kept odd so an exact
                  equator row exists).

Evenness in the last coordinate is everywhere enforced through the reflection
involution, never through floating-point comparisons of coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi
SPHERE_AREA = {1: TWO_PI, 2: 4.0 * np.pi}


@dataclass
class SphereGrid:
    """Nodes, weights and symmetry structure of a discretized S^n."""

    n: int
    kind: str
    resolution: int
    nodes: np.ndarray          # (N, n+1) unit vectors
    weights: np.ndarray        # (N,) surface-measure quadrature weights
    reflect: np.ndarray        # (N,) index involution for x_{n+1} -> -x_{n+1}
    equator: np.ndarray        # sorted indices of nodes with last coordinate 0
    theta: np.ndarray | None = None       # (N,) angles, circle only
    theta_folded: np.ndarray | None = None  # (N,) angles folded to [0, pi]
    triangles: np.ndarray | None = None   # (T, 3) vertex indices, tri only
    shape: tuple[int, int] | None = None  # (lat, lon), latlong only
    equator_weights: np.ndarray = field(default=None, repr=False)  # H^{n-1} weights

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def upper(self) -> np.ndarray:
        """Indices with positive last coordinate."""
        return np.nonzero(self.nodes[:, -1] > 0.0)[0]

    def integrate(self, values: np.ndarray) -> float:
        return float(self.weights @ values)

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return float(self.weights @ (f * g))

    def norm(self, f: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner(f, f), 0.0)))

    def is_even(self, values: np.ndarray, tol: float = 0.0) -> bool:
        return bool(np.max(np.abs(values - values[self.reflect])) <= tol)

    def evenize(self, values: np.ndarray) -> np.ndarray:
        """Project node values onto the even subspace (exact symmetrization)."""
        return 0.5 * (values + values[self.reflect])


def build_grid(n: int, resolution: int, kind: str | None = None) -> SphereGrid:
    """Build a sphere grid.

    ``resolution`` means: total node count for S^1 (must be even so that both
    theta = 0 and theta = pi are nodes); approximate equator node count for
    the S^2 triangulation; latitude count for the S^2 lat-long grid.
    """
    if n not in (1, 2):
        raise ValueError(f"only S^1 and S^2 are supported, got n={n}")
    if resolution < 16:
        raise ValueError(f"resolution must be at least 16, got {resolution}")
    if n == 1:
        if kind not in (None, "circle"):
            raise ValueError(f"unknown S^1 grid kind {kind!r}")
        if resolution % 2:
            raise ValueError("S^1 resolution must be even so theta = pi is a node")
        return _circle_grid(resolution)
    if kind in (None, "tri"):
        return _octasphere_grid(resolution)
    if kind == "latlong":
        return _latlong_grid(resolution)
    raise ValueError(f"unknown S^2 grid kind {kind!r}")


# ---------------------------------------------------------------------------
# S^1
# ---------------------------------------------------------------------------

def _circle_grid(resolution: int) -> SphereGrid:
    num = resolution
    half = num // 2
    theta = np.arange(num) * (TWO_PI / num)
    reflect = (-np.arange(num)) % num
    # Fold through the reflection index map so folded angles of mirror-partner
    # nodes are bit-identical: even traces evaluated through them are exactly
    # even without any symmetrization step.
    theta_folded = np.minimum(np.arange(num), reflect) * (TWO_PI / num)
    upper = np.column_stack([np.cos(theta_folded[: half + 1]),
                             np.sin(theta_folded[: half + 1])])
    upper[0] = (1.0, 0.0)
    upper[half] = (-1.0, 0.0)
    nodes = np.vstack([upper, upper[half - 1:0:-1] * (1.0, -1.0)])
    weights = np.full(num, TWO_PI / num)
    equator = np.array([0, half])
    # The thin set boundary on S^1 consists of two points: counting measure.
    return SphereGrid(
        n=1, kind="circle", resolution=resolution, nodes=nodes, weights=weights,
        reflect=reflect, equator=equator, theta=theta, theta_folded=theta_folded,
        equator_weights=np.ones(2),
    )


def fold_theta(theta: np.ndarray) -> np.ndarray:
    """Map circle angles to [0, pi] using the even reflection."""
    th = np.asarray(theta, dtype=float) % TWO_PI
    return np.where(th > np.pi, TWO_PI - th, th)


# ---------------------------------------------------------------------------
# S^2, subdivided octahedron
# ---------------------------------------------------------------------------

def _octasphere_grid(resolution: int) -> SphereGrid:
    level = max(2, int(np.ceil(np.log2(max(resolution, 8) / 4))))
    e1, e2, e3 = np.eye(3)
    upper_faces = [
        (e1, e2, e3), (e2, -e1, e3), (-e1, -e2, e3), (-e2, e1, e3),
    ]

    verts: list[np.ndarray] = []
    index: dict[bytes, int] = {}
    tris: list[tuple[int, int, int]] = []

    def vid(v: np.ndarray) -> int:
        v = v + 0.0  # canonicalize -0.0 to +0.0 so mirrored keys match
        key = v.tobytes()
        i = index.get(key)
        if i is None:
            i = len(verts)
            index[key] = i
            verts.append(v)
        return i

    def midpoint(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        m = a + b
        return m / np.sqrt(m @ m)

    def subdivide(a, b, c, depth):
        if depth == 0:
            tris.append((vid(a), vid(b), vid(c)))
            return
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        subdivide(a, ab, ca, depth - 1)
        subdivide(ab, b, bc, depth - 1)
        subdivide(ca, bc, c, depth - 1)
        subdivide(ab, bc, ca, depth - 1)

    for a, b, c in upper_faces:
        subdivide(a, b, c, level)

    # Mirror the upper half exactly.  Negation is exact in floating point, so
    # the reflected vertex keys match bit for bit and the involution is exact.
    n_upper_tris = len(tris)
    mirror = np.array([1.0, 1.0, -1.0])
    upper_vert_count = len(verts)
    mirrored_of = np.empty(upper_vert_count, dtype=int)
    for i in range(upper_vert_count):
        mirrored_of[i] = vid(verts[i] * mirror)
    for t in range(n_upper_tris):
        a, b, c = tris[t]
        tris.append((mirrored_of[a], mirrored_of[c], mirrored_of[b]))

    nodes = np.array(verts)
    triangles = np.array(tris, dtype=int)
    nvert = nodes.shape[0]

    reflect = np.empty(nvert, dtype=int)
    for i in range(nvert):
        reflect[i] = index[(nodes[i] * mirror + 0.0).tobytes()]

    equator = np.nonzero(nodes[:, 2] == 0.0)[0]
    order = np.argsort(np.arctan2(nodes[equator, 1], nodes[equator, 0]))
    equator = equator[order]

    # Lumped mass from planar triangle areas, normalized so the weight sum is
    # exactly the sphere area (the polyhedral area underestimates 4*pi by
    # O(h^2); the normalization keeps the quadrature contract exact).
    a, b, c = nodes[triangles[:, 0]], nodes[triangles[:, 1]], nodes[triangles[:, 2]]
    areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    weights = np.zeros(nvert)
    for k in range(3):
        np.add.at(weights, triangles[:, k], areas / 3.0)
    weights *= SPHERE_AREA[2] / weights.sum()

    # Equator ring arc-length weights for the H^1 line measure.
    ring = nodes[equator, :2]
    ang = np.arctan2(ring[:, 1], ring[:, 0])
    gaps = np.diff(np.concatenate([ang, [ang[0] + TWO_PI]]))
    eq_w = 0.5 * (gaps + np.roll(gaps, 1))

    return SphereGrid(
        n=2, kind="tri", resolution=resolution, nodes=nodes, weights=weights,
        reflect=reflect, equator=equator, triangles=triangles,
        equator_weights=eq_w,
    )


# ---------------------------------------------------------------------------
# S^2, Gauss-Legendre latitudes x uniform longitudes
# ---------------------------------------------------------------------------

def _latlong_grid(resolution: int) -> SphereGrid:
    nlat = resolution + 1 if resolution % 2 == 0 else resolution
    nlon = 2 * resolution
    z, wz = np.polynomial.legendre.leggauss(nlat)
    # Symmetrize so the node set is exactly invariant under z -> -z and the
    # middle node is exactly the equator.
    z = 0.5 * (z - z[::-1])
    wz = 0.5 * (wz + wz[::-1])
    z[nlat // 2] = 0.0

    phi = np.arange(nlon) * (TWO_PI / nlon)
    rho = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    nodes = np.empty((nlat * nlon, 3))
    weights = np.empty(nlat * nlon)
    for i in range(nlat):
        sl = slice(i * nlon, (i + 1) * nlon)
        nodes[sl, 0] = rho[i] * np.cos(phi)
        nodes[sl, 1] = rho[i] * np.sin(phi)
        nodes[sl, 2] = z[i]
        weights[sl] = wz[i] * (TWO_PI / nlon)

    idx = np.arange(nlat * nlon).reshape(nlat, nlon)
    reflect = idx[::-1, :].reshape(-1)
    equator = idx[nlat // 2].copy()

    return SphereGrid(
        n=2, kind="latlong", resolution=resolution, nodes=nodes, weights=weights,
        reflect=reflect, equator=equator, shape=(nlat, nlon),
        equator_weights=np.full(nlon, TWO_PI / nlon),
    )


# ---------------------------------------------------------------------------
# Radial quadrature and ladders
# ---------------------------------------------------------------------------

def radial_rule(npoints: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on (0, 1)."""
    x, w = np.polynomial.legendre.leggauss(npoints)
    return 0.5 * (x + 1.0), 0.5 * w


def radii_ladder(r_max: float, count: int, step: float = 2.0 ** -0.25) -> np.ndarray:
    """Geometric radii ladder r_max * step^i, i = 0..count-1, ascending."""
    return np.sort(r_max * step ** np.arange(count))
