"""Spherical trace functions: inner products, surface gradients, equator data.

A trace couples node values on a SphereGrid with optional closed-form
derivative data.  When derivatives are not supplied they are reconstructed
numerically:

* circle: fourth-order-consistent centered differences in the angle away from
  the equator, one-sided second-order stencils from the upper half at the two
  equator nodes (traces are even, so they may kink there);
* triangulated sphere: per-triangle P1 gradients averaged to vertices with
  area weights, restricted to upper triangles at equator vertices, then
  projected tangentially.

The squared surface gradient of an even trace is continuous across the
equator even when the trace kinks, so lumped quadrature of Dirichlet energies
remains second-order accurate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import SphereGrid


@dataclass
class SphericalTrace:
    """Node values of an even function on S^n with optional derivative data."""

    grid: SphereGrid
    values: np.ndarray
    dtheta: np.ndarray | None = None   # n=1: derivative in the folded angle
    grad: np.ndarray | None = None     # (N, n+1) tangential, upper-sided at kinks

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.size,):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid size {self.grid.size}")

    # -- inner products -----------------------------------------------------

    @property
    def norm_sq(self) -> float:
        return float(self.grid.inner(self.values, self.values))

    def inner(self, other: "SphericalTrace | np.ndarray") -> float:
        vals = other.values if isinstance(other, SphericalTrace) else other
        return float(self.grid.inner(self.values, vals))

    def is_even(self, tol: float = 0.0) -> bool:
        return self.grid.is_even(self.values, tol)

    def scaled(self, s: float) -> "SphericalTrace":
        return SphericalTrace(
            grid=self.grid, values=s * self.values,
            dtheta=None if self.dtheta is None else s * self.dtheta,
            grad=None if self.grad is None else s * self.grad)

    def __add__(self, other: "SphericalTrace") -> "SphericalTrace":
        if other.grid is not self.grid:
            raise ValueError("traces live on different grids")
        dth = None
        if self.dtheta is not None and other.dtheta is not None:
            dth = self.dtheta + other.dtheta
        gr = None
        if self.grad is not None and other.grad is not None:
            gr = self.grad + other.grad
        return SphericalTrace(self.grid, self.values + other.values, dth, gr)

    def __sub__(self, other: "SphericalTrace") -> "SphericalTrace":
        return self + other.scaled(-1.0)

    # -- derivatives --------------------------------------------------------

    def gradient_sq(self) -> np.ndarray:
        """Nodewise squared surface gradient."""
        if self.grid.n == 1:
            d = self.dtheta if self.dtheta is not None else circle_dtheta(
                self.grid, self.values)
            return d * d
        g = self.grad if self.grad is not None else vertex_gradients(
            self.grid, self.values)
        return np.sum(g * g, axis=1)

    def gradient_dot(self, other: "SphericalTrace") -> np.ndarray:
        """Nodewise dot product of surface gradients (upper-sided at kinks)."""
        if self.grid.n == 1:
            d1 = self.dtheta if self.dtheta is not None else circle_dtheta(
                self.grid, self.values)
            d2 = other.dtheta if other.dtheta is not None else circle_dtheta(
                self.grid, other.values)
            return d1 * d2
        g1 = self.grad if self.grad is not None else vertex_gradients(
            self.grid, self.values)
        g2 = other.grad if other.grad is not None else vertex_gradients(
            self.grid, other.values)
        return np.sum(g1 * g2, axis=1)

    def dirichlet(self) -> float:
        """Integral of the squared surface gradient over the sphere."""
        return float(self.grid.weights @ self.gradient_sq())

    def equator_values(self) -> np.ndarray:
        return self.values[self.grid.equator]

    def equator_up_derivative(self) -> np.ndarray:
        """One-sided derivative at equator nodes, taken from the upper half in
        the direction of the upper pole."""
        if self.grid.n == 1:
            return circle_equator_up_derivative(self.grid, self.values)
        g = self.grad if self.grad is not None else vertex_gradients(
            self.grid, self.values)
        return g[self.grid.equator, 2]


# ---------------------------------------------------------------------------
# Circle derivative reconstruction
# ---------------------------------------------------------------------------

def circle_dtheta(grid: SphereGrid, values: np.ndarray) -> np.ndarray:
    """Derivative with respect to the folded angle at every node.

    Centered fourth-order stencils away from the equator; one-sided
    second-order stencils from the smooth side at the two equator nodes.
    The result is expressed in the folded-angle convention, so it is an even
    array for even inputs.
    """
    num = grid.size
    half = num // 2
    h = 2.0 * np.pi / num
    v = np.asarray(values, dtype=float)
    d_full = (
        8.0 * (np.roll(v, -1) - np.roll(v, 1))
        - (np.roll(v, -2) - np.roll(v, 2))
    ) / (12.0 * h)
    # convert d/dtheta to d/d(folded theta): lower half flips orientation
    sign = np.ones(num)
    sign[half + 1:] = -1.0
    d = d_full * sign
    # one-sided from the upper half at the equator nodes
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    d[half] = (3.0 * v[half] - 4.0 * v[half - 1] + v[half - 2]) / (2.0 * h)
    # the nodes adjacent to the equator see the kink in their 5-point stencil;
    # use second-order centered differences confined to one smooth side
    d[1] = (v[2] - v[0]) / (2.0 * h)
    d[half - 1] = (v[half] - v[half - 2]) / (2.0 * h)
    d[half + 1] = -(v[half + 2] - v[half]) / (2.0 * h)
    d[num - 1] = -(v[0] - v[num - 2]) / (2.0 * h)
    return d


def circle_equator_up_derivative(grid: SphereGrid, values: np.ndarray) -> np.ndarray:
    """Upper one-sided angular derivative at the equator nodes (theta = 0 and
    theta = pi), oriented into the upper half circle."""
    num = grid.size
    half = num // 2
    h = 2.0 * np.pi / num
    v = np.asarray(values, dtype=float)
    at0 = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    atpi = (-3.0 * v[half] + 4.0 * v[half - 1] - v[half - 2]) / (2.0 * h)
    return np.array([at0, atpi])


# ---------------------------------------------------------------------------
# Triangulated-sphere gradient reconstruction
# ---------------------------------------------------------------------------

def triangle_gradients(grid: SphereGrid, values: np.ndarray):
    """P1 gradient of the node values on each flat triangle, with areas."""
    tris = grid.triangles
    a, b, c = grid.nodes[tris[:, 0]], grid.nodes[tris[:, 1]], grid.nodes[tris[:, 2]]
    va, vb, vc = values[tris[:, 0]], values[tris[:, 1]], values[tris[:, 2]]
    u = b - a
    v = c - a
    normal = np.cross(u, v)
    norm2 = np.sum(normal * normal, axis=1)
    # gradient of the linear interpolant: solve in the triangle plane
    #   g . u = vb - va, g . v = vc - va, g . normal = 0
    g = (
        np.cross(v, normal) * (vb - va)[:, None]
        + np.cross(normal, u) * (vc - va)[:, None]
    ) / norm2[:, None]
    areas = 0.5 * np.sqrt(norm2)
    return g, areas


def vertex_gradients(grid: SphereGrid, values: np.ndarray) -> np.ndarray:
    """Area-weighted average of adjacent triangle gradients per vertex.

    At equator vertices only upper-half triangles contribute, giving the
    upper-sided gradient of an even function; the result is projected onto
    the tangent plane of the sphere at each vertex.
    """
    if grid.kind != "tri":
        raise ValueError("vertex gradients need a triangulated grid")
    g, areas = triangle_gradients(grid, values)
    tris = grid.triangles
    zsum = grid.nodes[tris, 2].sum(axis=1)
    upper_tri = zsum > 0.0

    accum = np.zeros((grid.size, 3))
    wsum = np.zeros(grid.size)
    for k in range(3):
        np.add.at(accum, tris[:, k], areas[:, None] * g)
        np.add.at(wsum, tris[:, k], areas)
    # redo equator vertices with upper triangles only
    eq_set = np.zeros(grid.size, dtype=bool)
    eq_set[grid.equator] = True
    accum[eq_set] = 0.0
    wsum[eq_set] = 0.0
    tri_touches_eq = eq_set[tris].any(axis=1)
    sel = tri_touches_eq & upper_tri
    for k in range(3):
        vs = tris[sel, k]
        on_eq = eq_set[vs]
        np.add.at(accum, vs[on_eq], areas[sel][on_eq, None] * g[sel][on_eq])
        np.add.at(wsum, vs[on_eq], areas[sel][on_eq])
    out = accum / np.maximum(wsum, 1e-300)[:, None]
    out -= np.sum(out * grid.nodes, axis=1, keepdims=True) * grid.nodes
    return out


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------

def trace_from_profile(p, grid: SphereGrid) -> SphericalTrace:
    tr = SphericalTrace(grid, p.trace_on(grid), grad=p.trace_gradient_on(grid))
    if grid.n == 1:
        # convert the (upper-sided) planar gradient to a folded-angle
        # derivative; only strictly-lower nodes flip orientation
        tangent = np.column_stack([-grid.nodes[:, 1], grid.nodes[:, 0]])
        sign = np.ones(grid.size)
        sign[grid.size // 2 + 1:] = -1.0
        tr.dtheta = np.sum(tr.grad * tangent, axis=1) * sign
    return tr


def trace_from_halfspace(sol, grid: SphereGrid) -> SphericalTrace:
    return SphericalTrace(grid, sol.trace_on(grid),
                          dtheta=sol.trace_dtheta(grid.theta_folded))


def trace_from_basis(basis, coeffs) -> SphericalTrace:
    c = np.asarray(coeffs, dtype=float)
    if c.size < basis.count:
        c = np.append(c, np.zeros(basis.count - c.size))
    vals = basis.reconstruct(c)
    dth = None if basis.dtheta is None else basis.dtheta @ c
    gr = None
    if basis.grads is not None:
        gr = np.einsum("k,kij->ij", c, basis.grads)
    return SphericalTrace(basis.grid, vals, dtheta=dth, grad=gr)
