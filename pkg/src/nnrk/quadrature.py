"""Background Gauss quadrature over unions of axis-aligned boxes.

Cell layout is deterministic (cell-major, point-minor).  A grid also carries
per-point irreversible history state for the damage laws.
"""

from dataclasses import dataclass, field

import numpy as np


class ResolutionError(RuntimeError):
    """Cell-size rules violated in strict mode."""


def gauss_rule(order):
    """Gauss-Legendre points and weights on [-1, 1]."""
    return np.polynomial.legendre.leggauss(order)


def _cells_1d(lo, hi, n):
    edges = np.linspace(lo, hi, n + 1)
    return edges[:-1], edges[1:]


@dataclass
class BoundarySet:
    """Quadrature points along one boundary piece (or discrete end points)."""

    points: np.ndarray  # (Qb, d)
    weights: np.ndarray  # (Qb,)


@dataclass
class QuadratureGrid:
    """Domain Gauss points, weights, and history state."""

    points: np.ndarray  # (Q, d)
    weights: np.ndarray  # (Q,)
    dim: int
    cell_size: np.ndarray  # (d,)
    boundaries: dict = field(default_factory=dict)
    history: np.ndarray = None
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        if self.history is None:
            self.history = np.zeros(self.points.shape[0])

    @property
    def n_points(self):
        return self.points.shape[0]

    @property
    def measure(self):
        return float(self.weights.sum())


def check_resolution(cell_size, length_scale=None, node_spacing=None, strict=False):
    """Cell-size rules: at least three cells across the localization length
    and between adjacent nodes.  Returns warning strings (raises in strict
    mode)."""
    msgs = []
    cell = float(np.max(cell_size))
    if length_scale is not None and length_scale > 0 and cell > length_scale / 3.0:
        msgs.append(
            f"cell size {cell:g} exceeds a third of the localization length {length_scale:g}"
        )
    if node_spacing is not None:
        h = float(np.min(node_spacing))
        if cell > h / 3.0:
            msgs.append(f"cell size {cell:g} exceeds a third of the nodal spacing {h:g}")
    if strict and msgs:
        raise ResolutionError("; ".join(msgs))
    return msgs


def build_grid(
    patches,
    cells,
    gauss_order=2,
    boundaries=None,
    length_scale=None,
    node_spacing=None,
    strict=False,
):
    """Tensor-product Gauss grid over a union of boxes.

    ``patches``: 1-D -> [(lo, hi), ...]; 2-D -> [((x0, x1), (y0, y1)), ...].
    ``cells`` counts refer to the bounding box; each patch is tiled with cells
    of that size (patch extents must be integer multiples).  ``boundaries``
    maps names to edge/point specifications, each integrated with a matching
    1-D rule.
    """
    patches = list(patches)
    dim = 1 if np.ndim(patches[0]) == 1 else 2
    gp, gw = gauss_rule(gauss_order)

    if dim == 1:
        lo = min(p[0] for p in patches)
        hi = max(p[1] for p in patches)
        n = int(cells)
        size = (hi - lo) / n
        pts, wts = [], []
        for (a, b) in patches:
            na = int(round((b - a) / size))
            los, his = _cells_1d(a, b, na)
            mid = 0.5 * (los + his)
            half = 0.5 * (his - los)
            pts.append((mid[:, None] + np.outer(half, gp)).ravel())
            wts.append(np.outer(half, gw).ravel())
        points = np.concatenate(pts)[:, None]
        weights = np.concatenate(wts)
        cell_size = np.array([size])
    else:
        xs = [p[0] for p in patches]
        ys = [p[1] for p in patches]
        lo = np.array([min(a for a, _ in xs), min(a for a, _ in ys)])
        hi = np.array([max(b for _, b in xs), max(b for _, b in ys)])
        nx, ny = (int(cells[0]), int(cells[1])) if np.ndim(cells) else (int(cells), int(cells))
        size = np.array([(hi[0] - lo[0]) / nx, (hi[1] - lo[1]) / ny])
        pts, wts = [], []
        for (x0, x1), (y0, y1) in patches:
            mx = int(round((x1 - x0) / size[0]))
            my = int(round((y1 - y0) / size[1]))
            xl, xh = _cells_1d(x0, x1, mx)
            yl, yh = _cells_1d(y0, y1, my)
            xm, xr = 0.5 * (xl + xh), 0.5 * (xh - xl)
            ym, yr = 0.5 * (yl + yh), 0.5 * (yh - yl)
            px = (xm[:, None] + np.outer(xr, gp)).reshape(mx, gauss_order)
            py = (ym[:, None] + np.outer(yr, gp)).reshape(my, gauss_order)
            wx = np.outer(xr, gw).reshape(mx, gauss_order)
            wy = np.outer(yr, gw).reshape(my, gauss_order)
            # cell-major (x cell, y cell), point-minor ordering
            P = np.stack(
                [
                    np.broadcast_to(px[:, None, :, None], (mx, my, gauss_order, gauss_order)),
                    np.broadcast_to(py[None, :, None, :], (mx, my, gauss_order, gauss_order)),
                ],
                axis=-1,
            ).reshape(-1, 2)
            W = (wx[:, None, :, None] * wy[None, :, None, :]).reshape(-1)
            pts.append(P)
            wts.append(W)
        points = np.concatenate(pts, axis=0)
        weights = np.concatenate(wts)
        cell_size = size

    grid = QuadratureGrid(points, weights, dim, cell_size)
    grid.warnings = check_resolution(cell_size, length_scale, node_spacing, strict)

    for name, spec in (boundaries or {}).items():
        grid.boundaries[name] = _boundary_set(spec, dim, cell_size, gauss_order)
    return grid


def _boundary_set(spec, dim, cell_size, gauss_order):
    """Boundary quadrature: 1-D domains get discrete end points (unit
    weight); 2-D edges get a matching 1-D Gauss rule along the edge."""
    if "point" in spec:
        p = np.atleast_1d(np.asarray(spec["point"], dtype=float))
        return BoundarySet(p[None, :], np.ones(1))
    edge = spec["edge"]
    axis, value = int(edge["axis"]), float(edge["value"])
    lo, hi = map(float, edge["span"])
    n = max(1, int(round((hi - lo) / cell_size[1 - axis])))
    gp, gw = gauss_rule(gauss_order)
    los, his = _cells_1d(lo, hi, n)
    mid, half = 0.5 * (los + his), 0.5 * (his - los)
    s = (mid[:, None] + np.outer(half, gp)).ravel()
    w = np.outer(half, gw).ravel()
    pts = np.empty((s.size, dim))
    pts[:, axis] = value
    pts[:, 1 - axis] = s
    return BoundarySet(pts, w)
