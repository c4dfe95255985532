"""Reproducing kernel shape functions on scattered nodes.

Shape functions are kernel functions corrected pointwise so that polynomials
up to a requested order are reproduced exactly.  Construction is pure numpy;
tables are immutable after construction and safe to share between threads.
"""

from dataclasses import dataclass
from math import comb

import numpy as np

__all__ = [
    "CoverageError",
    "RKNodeSet",
    "KernelSpec",
    "BasisSpec",
    "ShapeTable",
    "cubic_bspline",
    "cubic_bspline_deriv",
    "monomial_exponents",
    "build_basis",
    "moment_matrix",
    "shape_functions",
    "build_shape_table",
    "rk_evaluate",
    "rk_filter",
]

COND_LIMIT = 1e12


class CoverageError(RuntimeError):
    """Moment matrix is singular or ill-conditioned at an evaluation point."""


def cubic_bspline(r):
    """C2 cubic B-spline on normalized support [0, 1].

    Value 2/3 at r=0, 1/6 at r=1/2, 0 for r >= 1.  Negative arguments are a
    domain error.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("normalized distance must be non-negative")
    inner = 2.0 / 3.0 - 4.0 * r**2 + 4.0 * r**3
    outer = (4.0 / 3.0) * (1.0 - r) ** 3
    out = np.where(r <= 0.5, inner, np.where(r < 1.0, outer, 0.0))
    return out if out.ndim else float(out)


def cubic_bspline_deriv(r):
    """Derivative of :func:`cubic_bspline` with respect to r."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("normalized distance must be non-negative")
    inner = -8.0 * r + 12.0 * r**2
    outer = -4.0 * (1.0 - r) ** 2
    out = np.where(r <= 0.5, inner, np.where(r < 1.0, outer, 0.0))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class RKNodeSet:
    """Node positions plus a characteristic spacing per dimension."""

    coords: np.ndarray  # (NP, d)
    spacing: np.ndarray  # (d,)

    def __post_init__(self):
        coords = np.atleast_2d(np.asarray(self.coords, dtype=float))
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "spacing", np.asarray(self.spacing, dtype=float))
        if not np.all(np.isfinite(self.coords)):
            raise ValueError("node coordinates must be finite")
        if self.dim not in (1, 2):
            raise ValueError("only 1-D and 2-D node sets are supported")

    @property
    def n_nodes(self):
        return self.coords.shape[0]

    @property
    def dim(self):
        return self.coords.shape[1]

    @staticmethod
    def line(lo, hi, n):
        """Uniform 1-D node set on [lo, hi]."""
        x = np.linspace(lo, hi, n)
        return RKNodeSet(x[:, None], np.array([(hi - lo) / (n - 1)]))

    @staticmethod
    def grid(box, counts, keep=None):
        """Uniform tensor-product node set on a 2-D box.

        ``keep`` is an optional predicate on (n, 2) coordinates used to drop
        nodes outside non-rectangular domains.
        """
        (x0, x1), (y0, y1) = box
        nx, ny = counts
        xs = np.linspace(x0, x1, nx)
        ys = np.linspace(y0, y1, ny)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
        if keep is not None:
            pts = pts[keep(pts)]
        spacing = np.array([(x1 - x0) / (nx - 1), (y1 - y0) / (ny - 1)])
        return RKNodeSet(pts, spacing)


@dataclass(frozen=True)
class KernelSpec:
    """Cubic B-spline kernel with box support, sized in multiples of spacing."""

    normalized_support: float = 2.0

    def __post_init__(self):
        if self.normalized_support <= 0:
            raise ValueError("support size must be positive")

    def support(self, nodes: RKNodeSet) -> np.ndarray:
        """Physical support half-width per direction."""
        return self.normalized_support * nodes.spacing


@dataclass(frozen=True)
class BasisSpec:
    """Complete monomial basis of total order ``order`` in ``dim`` variables."""

    order: int
    dim: int

    def __post_init__(self):
        if self.order < 0 or self.dim not in (1, 2):
            raise ValueError("invalid basis specification")

    @property
    def n_monomials(self):
        return comb(self.order + self.dim, self.dim)


def monomial_exponents(order, dim):
    """Graded lexicographic exponent list, e.g. 1, x1, x2, x1^2, x1 x2, x2^2."""
    if dim == 1:
        return [(k,) for k in range(order + 1)]
    exps = []
    for total in range(order + 1):
        for j in range(total + 1):
            exps.append((total - j, j))
    return exps


def build_basis(delta, spec: BasisSpec):
    """Shifted monomial vector H(delta); first entry is always 1."""
    delta = np.atleast_2d(np.asarray(delta, dtype=float))
    exps = monomial_exponents(spec.order, spec.dim)
    cols = [np.prod([delta[:, i] ** e[i] for i in range(spec.dim)], axis=0) for e in exps]
    H = np.column_stack(cols)
    return H[0] if H.shape[0] == 1 else H


def _basis_and_grad(delta, exps, dim):
    """Monomial values and their derivatives w.r.t. delta, vectorized."""
    n = delta.shape[0]
    m = len(exps)
    H = np.ones((n, m))
    dH = np.zeros((n, m, dim))
    for j, e in enumerate(exps):
        for i in range(dim):
            if e[i]:
                H[:, j] *= delta[:, i] ** e[i]
        for i in range(dim):
            if e[i] == 0:
                continue
            term = float(e[i]) * np.ones(n)
            for k in range(dim):
                p = e[k] - 1 if k == i else e[k]
                if p:
                    term = term * delta[:, k] ** p
            dH[:, j, i] = term
    return H, dH


def _kernel_and_grad(delta, support):
    """Tensor-product cubic B-spline and gradient over node offsets delta."""
    dim = delta.shape[1]
    r = np.abs(delta) / support  # (n, d)
    vals = np.empty_like(r)
    dvals = np.empty_like(r)
    for i in range(dim):
        vals[:, i] = cubic_bspline(r[:, i])
        dvals[:, i] = cubic_bspline_deriv(r[:, i]) * np.sign(delta[:, i]) / support[i]
    phi = np.prod(vals, axis=1)
    grad = np.empty_like(r)
    for i in range(dim):
        others = np.prod(np.delete(vals, i, axis=1), axis=1) if dim > 1 else 1.0
        grad[:, i] = dvals[:, i] * others
    return phi, grad


def moment_matrix(x, nodes: RKNodeSet, kernel: KernelSpec, basis: BasisSpec):
    """Kernel-weighted Gram matrix of the shifted basis at point x.

    Raises :class:`CoverageError` when too few nodes cover x or the matrix is
    ill-conditioned (insufficient support overlap).
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    support = kernel.support(nodes)
    delta = x[None, :] - nodes.coords
    mask = np.all(np.abs(delta) < support, axis=1)
    if mask.sum() < basis.n_monomials:
        raise CoverageError(f"only {int(mask.sum())} nodes cover point {x}")
    exps = monomial_exponents(basis.order, basis.dim)
    H, _ = _basis_and_grad(delta[mask], exps, nodes.dim)
    phi, _ = _kernel_and_grad(delta[mask], support)
    M = (H * phi[:, None]).T @ H
    if np.linalg.cond(M) > COND_LIMIT:
        raise CoverageError(f"ill-conditioned moment matrix at point {x}")
    return M


def _point_shape(x, nodes, support, exps, scale, n_mono):
    """Shape-function values/gradients of every covering node at one point."""
    delta = x[None, :] - nodes.coords
    mask = np.all(np.abs(delta) < support, axis=1)
    idx = np.nonzero(mask)[0]
    if idx.size < n_mono:
        raise CoverageError(f"only {idx.size} nodes cover point {x}")
    d = delta[idx]
    dim = x.size
    H, dHs = _basis_and_grad(d * scale, exps, dim)
    dH = dHs * scale  # chain rule through the conditioning scale
    phi, dphi = _kernel_and_grad(d, support)

    M = (H * phi[:, None]).T @ H
    if np.linalg.cond(M) > COND_LIMIT:
        raise CoverageError(f"ill-conditioned moment matrix at point {x}")
    h0 = np.zeros(n_mono)
    h0[0] = 1.0
    b = np.linalg.solve(M, h0)

    vals = (H @ b) * phi
    grads = np.empty((idx.size, dim))
    for i in range(dim):
        dM = (dH[:, :, i] * phi[:, None]).T @ H
        dM = dM + dM.T + (H * dphi[:, i][:, None]).T @ H
        db = -np.linalg.solve(M, dM @ b)
        grads[:, i] = (H @ db + dH[:, :, i] @ b) * phi + (H @ b) * dphi[:, i]
    return idx, vals, grads


def shape_functions(x, nodes: RKNodeSet, kernel: KernelSpec, basis: BasisSpec):
    """Sparse shape-function values and gradients at a single point.

    Returns (node indices, values, gradients).  The values satisfy the
    polynomial reproducing conditions up to ``basis.order``.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    support = kernel.support(nodes)
    exps = monomial_exponents(basis.order, basis.dim)
    scale = 1.0 / np.max(support)
    return _point_shape(x, nodes, support, exps, scale, basis.n_monomials)


@dataclass(frozen=True)
class ShapeTable:
    """Precomputed shape functions over a fixed point set (padded sparse rows)."""

    points: np.ndarray  # (Q, d)
    idx: np.ndarray  # (Q, K) node indices, padded with 0
    vals: np.ndarray  # (Q, K) values, padded with 0
    grads: np.ndarray  # (Q, K, d)
    n_nodes: int

    @property
    def n_points(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]


def build_shape_table(points, nodes: RKNodeSet, kernel: KernelSpec, basis: BasisSpec) -> ShapeTable:
    """Evaluate shape functions and gradients over a point set.

    Rows hold exactly the nodes whose kernel support covers the point; padding
    entries carry zero value so downstream contractions ignore them.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != nodes.dim:
        raise ValueError("point dimension does not match node set")
    support = kernel.support(nodes)
    exps = monomial_exponents(basis.order, basis.dim)
    scale = 1.0 / np.max(support)
    n_mono = basis.n_monomials

    rows = [_point_shape(x, nodes, support, exps, scale, n_mono) for x in points]
    kmax = max(r[0].size for r in rows)
    Q, dim = points.shape
    idx = np.zeros((Q, kmax), dtype=np.int64)
    vals = np.zeros((Q, kmax))
    grads = np.zeros((Q, kmax, dim))
    for q, (ii, vv, gg) in enumerate(rows):
        k = ii.size
        idx[q, :k] = ii
        vals[q, :k] = vv
        grads[q, :k] = gg
    return ShapeTable(points, idx, vals, grads, nodes.n_nodes)


def rk_evaluate(table: ShapeTable, coeffs):
    """Field values and gradients from nodal coefficients.

    ``coeffs`` has shape (NP,) or (NP, n_comp); returns values (Q, n_comp)
    and gradients (Q, n_comp, d).
    """
    coeffs = np.asarray(coeffs, dtype=float)
    squeeze = coeffs.ndim == 1
    if squeeze:
        coeffs = coeffs[:, None]
    if coeffs.shape[0] != table.n_nodes:
        raise ValueError("coefficient length does not match node count")
    gathered = coeffs[table.idx]  # (Q, K, C)
    u = np.einsum("qk,qkc->qc", table.vals, gathered)
    du = np.einsum("qkd,qkc->qcd", table.grads, gathered)
    if squeeze:
        return u[:, 0], du[:, 0]
    return u, du


def rk_filter(node_table: ShapeTable, coeffs):
    """Smooth nodal coefficients by re-evaluating them through shape functions.

    ``node_table`` must be evaluated at the node coordinates themselves; the
    map is an averaging operator that keeps constants and reproduced
    polynomials fixed.
    """
    out, _ = rk_evaluate(node_table, coeffs)
    return out
