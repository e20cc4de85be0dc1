"""Per-element bounding structures.

Turns the basis envelopes into bounds on nodal functions (1D edges,
2D faces), and from those builds axis-aligned and oriented bounding
boxes for volume elements (quads, hexes) and surface elements (curved
lines in 2D/3D, curved quads in 3D).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fpx.basis import (
    BasisEnvelope,
    ReferenceBasis,
    eval_tensor_product,
    lagrange_eval,
    legendre_coeffs,
)

__all__ = [
    "GeometryError",
    "DegenerateElementError",
    "SingularTransformError",
    "ElementGeometry",
    "Aabb",
    "Obb",
    "FunctionBounds1D",
    "FunctionBounds2D",
    "bound_function_1d",
    "bound_function_2d",
    "element_aabb",
    "element_obb",
    "aabb_contains",
    "obb_contains",
]

DEFAULT_EXPANSION = 0.10
# Axis extent below this fraction of the largest extent is treated as
# zero-extent (flat surface elements and the like).
ZERO_EXTENT_REL = 1e-12


class GeometryError(ValueError):
    """Inconsistent element geometry."""


class DegenerateElementError(GeometryError):
    """Element with no spatial extent on any axis."""


class SingularTransformError(GeometryError):
    """Center Jacobian (or tangent frame) unusable for an OBB."""


@dataclass
class ElementGeometry:
    """Nodal description of one curvilinear element.

    `nodes` has shape (phys_dim, N**ref_dim) in lexicographic ordering
    with the first reference axis fastest.
    """

    phys_dim: int
    ref_dim: int
    order: int
    nodes: np.ndarray

    def __post_init__(self):
        self.nodes = np.ascontiguousarray(self.nodes, dtype=float)
        if self.phys_dim not in (2, 3):
            raise GeometryError(f"phys_dim must be 2 or 3, got {self.phys_dim}")
        if not 1 <= self.ref_dim <= self.phys_dim:
            raise GeometryError(
                f"ref_dim {self.ref_dim} incompatible with phys_dim "
                f"{self.phys_dim}")
        n = self.order + 1
        want = (self.phys_dim, n ** self.ref_dim)
        if self.nodes.shape != want:
            raise GeometryError(
                f"nodes shape {self.nodes.shape}, expected {want}")
        if not np.all(np.isfinite(self.nodes)):
            raise GeometryError("non-finite nodal coordinates")

    @property
    def node_count_1d(self) -> int:
        return self.order + 1

    def tensor(self) -> np.ndarray:
        """Nodes reshaped to (phys_dim, N, ..., N), last axis fastest."""
        n = self.node_count_1d
        return self.nodes.reshape((self.phys_dim,) + (n,) * self.ref_dim)


def center_map_and_jacobian(geom: ElementGeometry, basis: ReferenceBasis):
    """Position and gradient of the element map at the reference center."""
    v0, d0, _ = lagrange_eval(basis, 0.0, second=False)
    vals = [v0[None, :]] * geom.ref_dim
    x_c = eval_tensor_product(geom.nodes, vals)[0]
    cols = []
    for a in range(geom.ref_dim):
        mats = list(vals)
        mats[a] = d0[None, :]
        cols.append(eval_tensor_product(geom.nodes, mats)[0])
    return x_c, np.stack(cols, axis=1)  # (d,), (d, d_r)


@dataclass
class FunctionBounds1D:
    """Piecewise-linear bounds of a 1D nodal function at interval points."""

    interval_points: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def sample(self, r):
        eta = self.interval_points
        rr = np.atleast_1d(np.asarray(r, dtype=float))
        idx = np.clip(np.searchsorted(eta, rr, side="right") - 1,
                      0, eta.size - 2)
        t = (rr - eta[idx]) / (eta[idx + 1] - eta[idx])
        lo = self.lower[idx] * (1 - t) + self.lower[idx + 1] * t
        hi = self.upper[idx] * (1 - t) + self.upper[idx + 1] * t
        return lo, hi


@dataclass
class FunctionBounds2D:
    """Piecewise-bilinear bounds of a 2D nodal function on the M x M grid."""

    interval_points: np.ndarray
    lower: np.ndarray  # (M, M), first index along r, second along s
    upper: np.ndarray

    def sample(self, r, s):
        eta = self.interval_points
        rr = np.atleast_1d(np.asarray(r, dtype=float))
        ss = np.atleast_1d(np.asarray(s, dtype=float))
        ir = np.clip(np.searchsorted(eta, rr, "right") - 1, 0, eta.size - 2)
        js = np.clip(np.searchsorted(eta, ss, "right") - 1, 0, eta.size - 2)
        tr = (rr - eta[ir]) / (eta[ir + 1] - eta[ir])
        ts = (ss - eta[js]) / (eta[js + 1] - eta[js])

        def bilerp(g):
            return (g[ir, js] * (1 - tr) * (1 - ts)
                    + g[ir + 1, js] * tr * (1 - ts)
                    + g[ir, js + 1] * (1 - tr) * ts
                    + g[ir + 1, js + 1] * tr * ts)

        return bilerp(self.lower), bilerp(self.upper)


def bound_function_1d(envelope: BasisEnvelope, values) -> FunctionBounds1D:
    """Bound u(r) = sum_i u_i phi_i(r) between interval-point anchors.

    The linear Legendre part a0 + a1 r is split off first so the
    envelope only has to absorb the residual; bounds are exact for
    linear data.
    """
    basis = envelope.basis
    u = np.asarray(values, dtype=float)
    a0, a1 = legendre_coeffs(basis, u)
    w = u - a0 - a1 * basis.nodes
    lin = a0 + a1 * envelope.interval_points
    t_lo = w[:, None] * envelope.lower
    t_hi = w[:, None] * envelope.upper
    lower = lin + np.minimum(t_lo, t_hi).sum(axis=0)
    upper = lin + np.maximum(t_lo, t_hi).sum(axis=0)
    return FunctionBounds1D(envelope.interval_points, lower, upper)


def bound_function_2d(envelope: BasisEnvelope, values) -> FunctionBounds2D:
    """Bound u(r, s) = sum_ij u_ij phi_i(r) phi_j(s) on the interval grid.

    Two sweeps of the tensor product: contract the i index against the
    r-direction envelope carrying running (min, max) pairs, then the j
    index against the s-direction envelope.  O(N M^2) instead of the
    naive O(N^2 M^2).
    """
    u = np.asarray(values, dtype=float)
    n = envelope.basis.node_count
    if u.shape != (n, n):
        raise GeometryError(f"expected ({n}, {n}) coefficients, got {u.shape}")
    vlo, vhi = envelope.lower, envelope.upper  # (N, M)
    # Sweep 1: partial sums over i for every (j, k).
    t_lo = u.T[:, :, None] * vlo[None, :, :]   # (j, i, k)
    t_hi = u.T[:, :, None] * vhi[None, :, :]
    a_lo = np.minimum(t_lo, t_hi).sum(axis=1)  # (j, k)
    a_hi = np.maximum(t_lo, t_hi).sum(axis=1)
    # Sweep 2: contract j against the s-direction envelope.
    cand = np.stack([
        a_lo[:, :, None] * vlo[:, None, :],
        a_lo[:, :, None] * vhi[:, None, :],
        a_hi[:, :, None] * vlo[:, None, :],
        a_hi[:, :, None] * vhi[:, None, :],
    ])                                          # (4, j, k, l)
    lower = cand.min(axis=0).sum(axis=0)        # (k, l)
    upper = cand.max(axis=0).sum(axis=0)
    return FunctionBounds2D(envelope.interval_points, lower, upper)


@dataclass
class Aabb:
    """Axis-aligned box, stored post-expansion."""

    lo: np.ndarray
    hi: np.ndarray
    expansion_factor: float = DEFAULT_EXPANSION

    @property
    def extents(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.extents))

    def measure(self) -> float:
        return float(np.prod(self.extents))


@dataclass
class Obb:
    """Oriented box: unit cube through `inv_transform` about `center`."""

    center: np.ndarray
    inv_transform: np.ndarray

    def measure(self) -> float:
        d = self.center.size
        return float(2.0 ** d / abs(np.linalg.det(self.inv_transform)))


def _expand_box(lo, hi, factor):
    """Grow extents by `factor`; flat axes grow off the smallest live one."""
    lo = lo.copy()
    hi = hi.copy()
    ext = hi - lo
    max_ext = float(ext.max())
    if max_ext <= 0.0:
        raise DegenerateElementError("element has zero extent on every axis")
    flat = ext < ZERO_EXTENT_REL * max_ext
    pad = factor * ext
    if flat.any():
        pad[flat] = factor * ext[~flat].min()
    lo -= 0.5 * pad
    hi += 0.5 * pad
    return lo, hi


def _coordinate_bounds(geom: ElementGeometry, envelope: BasisEnvelope):
    """Raw per-axis (lo, hi) of the nodal position function, unexpanded."""
    d, dr, n = geom.phys_dim, geom.ref_dim, geom.node_count_1d
    tens = geom.tensor()  # (d, [N,] N, N) last axis fastest
    lo = np.full(d, np.inf)
    hi = np.full(d, -np.inf)

    def absorb_1d(vals):
        for c in range(d):
            b = bound_function_1d(envelope, vals[c])
            lo[c] = min(lo[c], b.lower.min())
            hi[c] = max(hi[c], b.upper.max())

    def absorb_2d(vals):
        # vals: (d, N_s, N_r) -> coefficients (i=r fastest, j=s)
        for c in range(d):
            b = bound_function_2d(envelope, vals[c].T)
            lo[c] = min(lo[c], b.lower.min())
            hi[c] = max(hi[c], b.upper.max())

    if dr == 1:
        absorb_1d(tens)
    elif dr == 2 and d == 2:
        # Quad: union of the four edge curves.
        for edge in (tens[:, 0, :], tens[:, -1, :],
                     tens[:, :, 0], tens[:, :, -1]):
            absorb_1d(edge)
    elif dr == 2:
        # Curved quad embedded in 3D: bound the full surface patch.
        absorb_2d(tens)
    else:
        # Hex: union of the six face patches.
        for face in (tens[:, 0, :, :], tens[:, -1, :, :],
                     tens[:, :, 0, :], tens[:, :, -1, :],
                     tens[:, :, :, 0], tens[:, :, :, -1]):
            absorb_2d(face)
    return lo, hi


def element_aabb(geom: ElementGeometry, envelope: BasisEnvelope,
                 expansion: float = DEFAULT_EXPANSION) -> Aabb:
    """Axis-aligned bounding box of the element's position function."""
    lo, hi = _coordinate_bounds(geom, envelope)
    lo, hi = _expand_box(lo, hi, expansion)
    return Aabb(lo, hi, expansion)


def _rotation_to_x(t: np.ndarray) -> np.ndarray:
    """Rotation carrying direction `t` onto the +x axis (Rodrigues form)."""
    d = t.size
    nt = np.linalg.norm(t)
    if nt == 0.0:
        raise SingularTransformError("zero tangent vector at element center")
    t = t / nt
    if d == 2:
        c, s = t
        return np.array([[c, s], [-s, c]])
    e1 = np.zeros(3)
    e1[0] = 1.0
    k = np.cross(t, e1)
    sk = np.linalg.norm(k)
    ck = float(t @ e1)
    if sk < 1e-14:
        if ck > 0.0:
            return np.eye(3)
        # Antiparallel: rotate pi about any perpendicular axis.
        return np.diag([-1.0, -1.0, 1.0])
    k = k / sk
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + sk * kx + (1.0 - ck) * (kx @ kx)


def _rotation_normal_to_z(nvec: np.ndarray) -> np.ndarray:
    nn = np.linalg.norm(nvec)
    if nn == 0.0:
        raise SingularTransformError("zero normal vector at element center")
    n = nvec / nn
    e3 = np.array([0.0, 0.0, 1.0])
    k = np.cross(n, e3)
    sk = np.linalg.norm(k)
    ck = float(n @ e3)
    if sk < 1e-14:
        return np.eye(3) if ck > 0.0 else np.diag([1.0, -1.0, -1.0])
    k = k / sk
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + sk * kx + (1.0 - ck) * (kx @ kx)


def _center_frame(geom: ElementGeometry, basis: ReferenceBasis):
    """(x_c, M) with x(r) ~ x_c + M ref-frame: M = J_c or inverse rotation."""
    x_c, jac = center_map_and_jacobian(geom, basis)
    d, dr = geom.phys_dim, geom.ref_dim
    if dr == d:
        det = np.linalg.det(jac)
        scale = np.prod(np.linalg.norm(jac, axis=0))
        if abs(det) < 1e-13 * max(scale, 1e-300):
            raise SingularTransformError("singular center Jacobian")
        return x_c, jac
    if dr == 1:
        rot = _rotation_to_x(jac[:, 0])
        return x_c, np.linalg.inv(rot)
    # Curved quad in 3D: align the normal with z, then shear the rotated
    # tangents onto the x and y axes.
    t1, t2 = jac[:, 0], jac[:, 1]
    nvec = np.cross(t1, t2)
    r1 = _rotation_normal_to_z(nvec)
    a = np.column_stack([r1 @ t1, r1 @ t2, np.array([0.0, 0.0, 1.0])])
    if abs(np.linalg.det(a)) < 1e-14:
        raise SingularTransformError("degenerate tangent frame")
    rot = np.linalg.inv(a) @ r1
    return x_c, np.linalg.inv(rot)


def element_obb(geom: ElementGeometry, envelope: BasisEnvelope,
                expansion: float = DEFAULT_EXPANSION) -> Obb:
    """Oriented bounding box from the center-Jacobian (or tangent) frame.

    The element is pulled back through the frame at its center, boxed
    with the AABB machinery there, and the box is pushed forward again.
    """
    basis = envelope.basis
    x_c, m = _center_frame(geom, basis)
    m_inv = np.linalg.inv(m)
    local = ElementGeometry(geom.phys_dim, geom.ref_dim, geom.order,
                            m_inv @ (geom.nodes - x_c[:, None]))
    lo, hi = _coordinate_bounds(local, envelope)
    lo, hi = _expand_box(lo, hi, expansion)
    half = 0.5 * (hi - lo)
    box_c = 0.5 * (hi + lo)
    center = x_c + m @ box_c
    inv_transform = (m_inv / half[:, None])  # diag(1/half) @ m_inv
    return Obb(center, inv_transform)


def aabb_contains(box: Aabb, x) -> bool:
    """Inclusive product test on every axis."""
    x = np.asarray(x, dtype=float)
    return bool(np.all((x - box.lo) * (box.hi - x) >= 0.0))


def obb_contains(box: Obb, x) -> bool:
    """Membership of the mapped point in the unit cube (inclusive)."""
    y = box.inv_transform @ (np.asarray(x, dtype=float) - box.center)
    return bool(np.all(np.abs(y) <= 1.0))
