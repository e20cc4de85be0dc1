"""Reference-space machinery on [-1, 1].

Provides Gauss-Lobatto-Legendre (GLL) nodes, stable evaluation of the
Lagrange interpolants built on them (values plus first and second
derivatives), low-order Legendre projections, Chebyshev-spaced interval
points, and piecewise-linear envelopes that bound every basis function
from above and below.  Everything downstream (function bounds, bounding
boxes, map inversion, interpolation) is built on these primitives.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BasisError",
    "EnvelopeError",
    "ReferenceBasis",
    "BasisEnvelope",
    "legendre_eval",
    "gll_nodes",
    "chebyshev_interval_points",
    "lagrange_eval",
    "legendre_coeffs",
    "build_basis_envelope",
    "eval_tensor_product",
]

MAX_ORDER = 29


class BasisError(ValueError):
    """Invalid basis construction parameters."""


class EnvelopeError(RuntimeError):
    """Envelope construction produced bounds that do not contain a basis."""


def legendre_eval(p: int, x):
    """Evaluate the Legendre polynomial P_p with two derivatives.

    Uses the three-term recurrence; `x` may be a scalar or ndarray.

    Returns:
        (P_p(x), P_p'(x), P_p''(x))
    """
    x = np.asarray(x, dtype=float)
    v0 = np.ones_like(x)
    d0 = np.zeros_like(x)
    s0 = np.zeros_like(x)
    if p == 0:
        return v0, d0, s0
    v1, d1, s1 = v0, d0, s0
    v0, d0, s0 = x.copy(), np.ones_like(x), np.zeros_like(x)
    for k in range(2, p + 1):
        a = (2 * k - 1) / k
        b = (k - 1) / k
        v2, d2, s2 = v1, d1, s1
        v1, d1, s1 = v0, d0, s0
        v0 = a * x * v1 - b * v2
        d0 = a * (v1 + x * d1) - b * d2
        s0 = a * (2 * d1 + x * s1) - b * s2
    return v0, d0, s0


def gll_nodes(p: int) -> np.ndarray:
    """Gauss-Lobatto-Legendre nodes for polynomial order `p`.

    The p+1 nodes are -1, +1 and the interior roots of P_p'.  Interior
    roots come from Newton iteration on P_p' seeded with Chebyshev-Lobatto
    points; the set is symmetrized about 0 to remove one-sided rounding.
    """
    if not 1 <= p <= MAX_ORDER:
        raise BasisError(f"order must be in [1, {MAX_ORDER}], got {p}")
    nodes = np.empty(p + 1)
    nodes[0], nodes[-1] = -1.0, 1.0
    if p >= 2:
        x = -np.cos(np.pi * np.arange(1, p) / p)
        for _ in range(100):
            _, d, s = legendre_eval(p, x)
            dx = d / s
            x -= dx
            if np.max(np.abs(dx)) < 1e-15:
                break
        x = 0.5 * (x - x[::-1])
        nodes[1:-1] = x
    return nodes


def chebyshev_interval_points(m: int) -> np.ndarray:
    """Cosine-spaced interval points eta_j = -cos((j-1) pi / (M-1))."""
    if m < 2:
        raise BasisError(f"need at least 2 interval points, got {m}")
    return -np.cos(np.arange(m) * np.pi / (m - 1))


@dataclass
class ReferenceBasis:
    """Lagrange basis of order `p` on the GLL nodes of [-1, 1].

    `interval_count` (M, default 2N) sets the resolution of the Chebyshev
    interval grid used by the piecewise-linear envelopes.
    """

    order: int
    interval_count: int | None = None
    nodes: np.ndarray = field(init=False, repr=False)
    interval_points: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.nodes = gll_nodes(self.order)
        n = self.node_count
        if self.interval_count is None:
            self.interval_count = 2 * n
        if self.interval_count < n:
            raise BasisError(
                f"interval count {self.interval_count} < node count {n}")
        self.interval_points = chebyshev_interval_points(self.interval_count)
        # Normalization so the running products below hit exactly 1 at the
        # owning node (barycentric-equivalent scaling).
        raw = self._raw_products(self.nodes)[0]
        self._scale = 1.0 / np.diagonal(raw)
        # Gauss rule exact for the degree p+1 integrands of the l=0,1
        # Legendre projections.
        nq = (self.order + 3) // 2 + 1
        qx, qw = np.polynomial.legendre.leggauss(nq)
        phi = lagrange_eval(self, qx, second=False)[0]
        self._proj0 = 0.5 * phi.T @ qw
        self._proj1 = 1.5 * phi.T @ (qw * qx)

    @property
    def node_count(self) -> int:
        return self.order + 1

    def _raw_products(self, r, second=True):
        """Unscaled products prod_{j != i}(r - zeta_j) with derivatives.

        Prefix/suffix running products keep every intermediate a plain
        polynomial value: no divisions, hence no spurious singularities
        at the nodes.  Shapes: r (n,) -> (n, N) per output.
        """
        z = self.nodes
        n = z.size
        u = np.asarray(r, dtype=float)[:, None] - z[None, :]
        npts = u.shape[0]
        shape = (npts, n + 1)
        pv = np.empty(shape)
        pd = np.empty(shape)
        ps = np.empty(shape) if second else None
        pv[:, 0], pd[:, 0] = 1.0, 0.0
        sv = np.empty(shape)
        sd = np.empty(shape)
        ss = np.empty(shape) if second else None
        sv[:, n], sd[:, n] = 1.0, 0.0
        if second:
            ps[:, 0] = 0.0
            ss[:, n] = 0.0
        for k in range(n):
            uk = u[:, k]
            if second:
                ps[:, k + 1] = ps[:, k] * uk + 2.0 * pd[:, k]
            pd[:, k + 1] = pd[:, k] * uk + pv[:, k]
            pv[:, k + 1] = pv[:, k] * uk
        for k in range(n - 1, -1, -1):
            uk = u[:, k]
            if second:
                ss[:, k] = ss[:, k + 1] * uk + 2.0 * sd[:, k + 1]
            sd[:, k] = sd[:, k + 1] * uk + sv[:, k + 1]
            sv[:, k] = sv[:, k + 1] * uk
        a, b = pv[:, :n], sv[:, 1:]
        da, db = pd[:, :n], sd[:, 1:]
        val = a * b
        d1 = da * b + a * db
        if not second:
            return val, d1, None
        d2 = ps[:, :n] * b + 2.0 * da * db + a * ss[:, 1:]
        return val, d1, d2


def lagrange_eval(basis: ReferenceBasis, r, second=True):
    """All N Lagrange interpolants of `basis` at `r`.

    `r` may be a scalar or a 1-D array of points.  Returns (values,
    first derivatives, second derivatives) each of shape (N,) for scalar
    input or (n, N) otherwise; the last entry is None when `second` is
    False.
    """
    scalar = np.isscalar(r) or np.ndim(r) == 0
    rr = np.atleast_1d(np.asarray(r, dtype=float))
    val, d1, d2 = basis._raw_products(rr, second=second)
    w = basis._scale
    out = (val * w, d1 * w, d2 * w if second else None)
    if scalar:
        out = tuple(o[0] if o is not None else None for o in out)
    return out


def legendre_coeffs(basis: ReferenceBasis, values) -> tuple[float, float]:
    """First two Legendre expansion coefficients of the interpolant.

    a_l = (2l+1)/2 * integral of u(r) P_l(r), l = 0, 1, computed with a
    Gauss rule exact for the degree p+1 integrand.  Linear data returns
    its own coefficients exactly (up to roundoff).
    """
    u = np.asarray(values, dtype=float)
    if u.shape[-1] != basis.node_count:
        raise BasisError(
            f"expected {basis.node_count} nodal values, got {u.shape[-1]}")
    return u @ basis._proj0, u @ basis._proj1


@dataclass
class BasisEnvelope:
    """Piecewise-linear lower/upper bounds of every basis function.

    `lower[i, j]` and `upper[i, j]` anchor the bound of basis i at
    interval point eta_j; linear interpolation between consecutive
    anchors bounds phi_i everywhere on [-1, 1].
    """

    basis: ReferenceBasis
    interval_points: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def sample(self, r):
        """Envelope values at points `r` -> (lower, upper), shape (N, n)."""
        eta = self.interval_points
        rr = np.atleast_1d(np.asarray(r, dtype=float))
        idx = np.clip(np.searchsorted(eta, rr, side="right") - 1,
                      0, eta.size - 2)
        t = (rr - eta[idx]) / (eta[idx + 1] - eta[idx])
        lo = self.lower[:, idx] * (1.0 - t) + self.lower[:, idx + 1] * t
        hi = self.upper[:, idx] * (1.0 - t) + self.upper[:, idx + 1] * t
        return lo, hi


def build_basis_envelope(basis: ReferenceBasis,
                         validate_samples: int = 10_000,
                         validate_tol: float = 1e-12) -> BasisEnvelope:
    """Construct piecewise-linear envelopes of all basis functions.

    At each interior interval point the candidate values are the basis
    value itself and the two midpoint tangent lines of the adjacent
    intervals extended to that point; the envelope takes the most
    conservative candidate on each side.  Endpoint anchors are the exact
    cardinal values.  Containment is an empirical property for finitely
    many interval points, so construction always self-checks by dense
    sampling and refuses to return an invalid envelope.
    """
    eta = basis.interval_points
    n, m = basis.node_count, eta.size
    phi_e = lagrange_eval(basis, eta, second=False)[0].T          # (N, M)
    mid_lo = 0.5 * (eta[:-1] + eta[1:])                            # eta_{j-}
    pm, dpm = lagrange_eval(basis, mid_lo, second=False)[:2]
    pm, dpm = pm.T, dpm.T                                          # (N, M-1)
    gap = eta[1:] - eta[:-1]
    # Tangent at the midpoint of each interval, extended half a gap to
    # reach the interval's two end points.
    at_right = pm + 0.5 * gap * dpm
    at_left = pm - 0.5 * gap * dpm
    lower = np.empty((n, m))
    upper = np.empty((n, m))
    cand = np.stack([phi_e[:, 1:-1], at_right[:, :-1], at_left[:, 1:]])
    lower[:, 1:-1] = cand.min(axis=0)
    upper[:, 1:-1] = cand.max(axis=0)
    lower[:, 0] = upper[:, 0] = np.eye(n)[:, 0]
    lower[:, -1] = upper[:, -1] = np.eye(n)[:, -1]

    env = BasisEnvelope(basis, eta, lower, upper)
    r = np.linspace(-1.0, 1.0, validate_samples)
    phi = lagrange_eval(basis, r, second=False)[0].T
    lo, hi = env.sample(r)
    worst = max(np.max(lo - phi), np.max(phi - hi))
    if worst > validate_tol:
        raise EnvelopeError(
            f"envelope violated by {worst:.3e} for N={n}, M={m}; "
            "increase the interval count")
    return env


def eval_tensor_product(blocks: np.ndarray, factors) -> np.ndarray:
    """Contract lexicographic coefficient blocks with per-axis factors.

    blocks: (P, C, N_0 * N_1 * ...) with the axis-0 index fastest, or
    (C, flat) for a single shared block.  factors: sequence over axes of
    (P, N_axis) matrices (e.g. basis values at each point's coordinate).
    Contracts one axis at a time (sum factorization).  Returns (P, C).
    """
    sizes = [f.shape[1] for f in factors]
    p = factors[0].shape[0]
    if blocks.ndim == 2:
        blocks = np.broadcast_to(blocks, (p,) + blocks.shape)
    c = blocks.shape[1]
    # Lexicographic flat index: axis 0 fastest => C-order shape reversed.
    t = blocks.reshape(blocks.shape[0], c, *sizes[::-1])
    t = np.broadcast_to(t, (p, c) + tuple(sizes[::-1]))
    for f in factors:
        t = np.einsum("pc...i,pi->pc...", t, f, optimize=True)
    return t
