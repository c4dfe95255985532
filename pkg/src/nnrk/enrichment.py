"""Localized neural kernel enrichment of the reproducing kernel field.

Each block maps physical points through a small tanh parametrization network,
places a grid of plateau kernels (products of regularized step functions) in
the parametric coordinate, and multiplies them with per-kernel monomials.
Evaluation is pure given a parameter snapshot; parameter updates happen
exclusively between evaluation passes.
"""

from dataclasses import dataclass
from math import comb

import numpy as np
import torch

from .rk import monomial_exponents

DT = torch.float64

# Pointwise inverse-Jacobian scaling is capped here when a parametrization row
# degenerates, preventing division blow-up in untrained networks.
HSCALE_CAP = 1e6


class ParameterError(ValueError):
    """Invalid kernel-grid or network parameters."""


def softplus(z, beta):
    """Numerically stable softplus with sharpness beta (> 0).

    Evaluates max(z, 0) + log1p(exp(-beta*|z|)) / beta, which neither
    overflows for large beta*z nor loses the exact linear asymptote.
    """
    z = torch.as_tensor(z, dtype=DT)
    beta = torch.as_tensor(beta, dtype=DT)
    return torch.relu(z) + torch.log1p(torch.exp(-beta * torch.abs(z))) / beta


def inv_softplus(v):
    """Inverse of softplus(., beta=1) for positive v."""
    v = np.asarray(v, dtype=float)
    out = np.where(v > 30.0, v, np.log(np.expm1(np.maximum(v, 1e-300))))
    return out if out.ndim else float(out)


def regularized_step(y, ybar, c, beta, hscale=1.0, orientation=1):
    """Smooth unit step built from two shifted softplus evaluations.

    Returns (value, d/dy).  The transition is centered at ``ybar`` with width
    ``c`` (divided by the pointwise scaling ``hscale`` in physical space);
    ``beta`` sharpens the derivative transition and ``orientation`` +1/-1
    selects a rising/falling step.  Value is exactly 1/2 at the center.
    """
    y = torch.as_tensor(y, dtype=DT)
    c = torch.as_tensor(c, dtype=DT)
    beta = torch.as_tensor(beta, dtype=DT)
    hs = torch.as_tensor(hscale, dtype=DT)
    z = orientation * (y - torch.as_tensor(ybar, dtype=DT)) * hs / c
    val = softplus(z + 0.5, beta) - softplus(z - 0.5, beta)
    dz = torch.sigmoid(beta * (z + 0.5)) - torch.sigmoid(beta * (z - 0.5))
    return val, dz * orientation * hs / c


def kernel_weights_1d(y, ybar, c, beta, hscale=1.0):
    """Plateau weights of all grid cells along one parametric direction.

    ``ybar, c, beta`` hold one entry per transition; adjacent cells share
    their common transition.  Returns (Q, n_cells) with values in (0, 1).
    """
    y = torch.as_tensor(y, dtype=DT).reshape(-1, 1)
    z = (y - torch.as_tensor(ybar, dtype=DT)) * torch.as_tensor(hscale, dtype=DT).reshape(-1, 1) / torch.as_tensor(c, dtype=DT)
    beta = torch.as_tensor(beta, dtype=DT)
    rising = softplus(z + 0.5, beta) - softplus(z - 0.5, beta)
    falling = softplus(-z + 0.5, beta) - softplus(-z - 0.5, beta)
    return rising[:, :-1] * falling[:, 1:]


def normalize_kernels(phis, epsilon):
    """Shared normalization of all kernel values at each point.

    The small constant keeps sparsely covered regions from acquiring a large
    domain of influence: the normalized values always sum below one, and
    approach one only where coverage is strong.
    """
    phis = torch.as_tensor(phis, dtype=DT)
    denom = phis.sum(dim=-1, keepdim=True) + epsilon
    return phis / denom


def param_map(x, layers):
    """Parametrization network with analytic input Jacobian.

    ``layers`` is a sequence of (weight, bias) tensors; hidden layers use
    tanh, the final layer is linear.  Returns (y, jac) with jac[q, i, j] =
    d y_i / d x_j, exact by the chain rule.
    """
    x = torch.as_tensor(x, dtype=DT)
    if x.ndim == 1:
        x = x.unsqueeze(0)
    Q, d = x.shape
    xi = x
    jac = torch.eye(d, dtype=DT).expand(Q, d, d)
    n = len(layers)
    for i, (W, b) in enumerate(layers):
        W = torch.as_tensor(W, dtype=DT)
        b = torch.as_tensor(b, dtype=DT)
        if W.shape[1] != xi.shape[1]:
            raise ParameterError("layer width does not match input dimension")
        z = xi @ W.T + b
        jz = torch.einsum("oi,qid->qod", W, jac)
        if i < n - 1:
            xi = torch.tanh(z)
            jac = (1.0 - xi**2).unsqueeze(-1) * jz
        else:
            xi, jac = z, jz
    return xi, jac


def h_scale(jac_row):
    """Inverse Euclidean norm of a parametrization Jacobian row.

    Makes the physical transition width of a kernel depend only on its
    sharpness parameter, not on the scaling of the parametric map.  Capped
    when the row norm vanishes.
    """
    norm = torch.as_tensor(jac_row, dtype=DT).norm(dim=-1)
    return 1.0 / torch.clamp(norm, min=1.0 / HSCALE_CAP)


@dataclass(frozen=True)
class GridSpec:
    """Shared transition grid along one parametric direction.

    ``n_cells`` kernels share ``n_cells + 1`` transitions, each carrying a
    position, a width and a sharpness; boolean masks select which entries the
    optimizer owns.
    """

    y0: np.ndarray
    c0: np.ndarray
    beta0: np.ndarray
    train_y: np.ndarray
    train_c: np.ndarray
    train_beta: np.ndarray

    def __post_init__(self):
        for name in ("y0", "c0", "beta0"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        for name in ("train_y", "train_c", "train_beta"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=bool))
        if not (self.y0.shape == self.c0.shape == self.beta0.shape):
            raise ParameterError("transition arrays must share a shape")
        if np.any(np.diff(self.y0) <= 0):
            raise ParameterError("transition positions must be strictly increasing")
        if np.any(self.c0 <= 0) or np.any(self.beta0 <= 0):
            raise ParameterError("widths and sharpness values must be positive")

    @property
    def n_cells(self):
        return self.y0.size - 1

    @staticmethod
    def uniform(lo, hi, n_cells, c, beta, train=(True, True, True), inner_only=False):
        """Transitions uniformly spaced on [lo, hi].

        With ``inner_only`` the outer transitions are frozen, leaving only the
        interior ones (and their width/sharpness) to the optimizer.
        """
        T = n_cells + 1
        y0 = np.linspace(lo, hi, T)
        mask = np.full(T, True)
        if inner_only:
            mask[0] = mask[-1] = False
        return GridSpec(
            y0=y0,
            c0=np.full(T, float(c)),
            beta0=np.full(T, float(beta)),
            train_y=mask & train[0],
            train_c=mask & train[1],
            train_beta=mask & train[2],
        )


@dataclass(frozen=True)
class NetSpec:
    """Initial weights of a parametrization network (None bias not allowed)."""

    layers0: tuple

    @property
    def widths(self):
        return tuple(W.shape[0] for W, _ in self.layers0)

    @property
    def n_params(self):
        return sum(W.size + b.size for W, b in self.layers0)


@dataclass(frozen=True)
class BlockSpec:
    """One enrichment block: parametrization, kernel grids, monomials."""

    grids: tuple
    monomial_order: int
    n_comp: int
    net: NetSpec = None
    net_shared_from: int = None  # index of the block owning the shared net
    wp0: np.ndarray = None

    def __post_init__(self):
        if self.wp0 is None:
            object.__setattr__(
                self, "wp0", np.zeros((self.n_kernels, self.n_monomials, self.n_comp))
            )
        if self.wp0.shape != (self.n_kernels, self.n_monomials, self.n_comp):
            raise ParameterError("monomial weight shape mismatch")

    @property
    def dim(self):
        return len(self.grids)

    @property
    def n_kernels(self):
        out = 1
        for g in self.grids:
            out *= g.n_cells
        return out

    @property
    def n_monomials(self):
        return comb(self.monomial_order + self.dim, self.dim)


@dataclass(frozen=True)
class NNStructure:
    """All blocks plus evaluation-wide settings.

    ``epsilon`` is fixed (never trained).  In regularized mode the pointwise
    inverse-Jacobian scaling is applied and kernel widths are bounded below by
    ``length_scale`` through optimizer projection.
    """

    blocks: tuple
    dim: int
    n_comp: int
    epsilon: float = 1e-3
    regularized: bool = False
    length_scale: float = 0.0
    beta_min: float = 0.5

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ParameterError("epsilon must be positive")
        if self.regularized and self.length_scale <= 0:
            raise ParameterError("regularized mode needs a positive length scale")
        for b in self.blocks:
            if b.dim != self.dim or b.n_comp != self.n_comp:
                raise ParameterError("block dimensions are inconsistent")


class NNLayout:
    """Stable flattening of all trainable parameters to one ordered vector.

    Order per block: parametrization layers (weight then bias, layer-major),
    kernel grids (positions, widths, sharpness per direction), monomial
    weights (component-major).  Shared networks are stored once, under the
    owning block.
    """

    def __init__(self, structure: NNStructure):
        self.structure = structure
        self.slices = []  # (block, kind, detail, slice)
        self.groups = {"nn_param_net": [], "nn_shape": [], "nn_monomials": []}
        pos = 0

        def add(block, kind, detail, size, group):
            nonlocal pos
            sl = slice(pos, pos + size)
            self.slices.append((block, kind, detail, sl))
            self.groups[group].append(sl)
            pos += size
            return sl

        self._net_slices = {}
        self._grid_slices = {}
        self._wp_slices = {}
        for bi, blk in enumerate(structure.blocks):
            if blk.net is not None and blk.net_shared_from is None:
                ls = []
                for li, (W, b) in enumerate(blk.net.layers0):
                    ws = add(bi, "net_w", li, W.size, "nn_param_net")
                    bs = add(bi, "net_b", li, b.size, "nn_param_net")
                    ls.append((ws, bs, W.shape))
                self._net_slices[bi] = ls
            for gi, grid in enumerate(blk.grids):
                ys = add(bi, "grid_y", gi, int(grid.train_y.sum()), "nn_shape")
                cs = add(bi, "grid_c", gi, int(grid.train_c.sum()), "nn_shape")
                bs = add(bi, "grid_beta", gi, int(grid.train_beta.sum()), "nn_shape")
                self._grid_slices[(bi, gi)] = (ys, cs, bs)
            wp = add(bi, "wp", None, blk.wp0.size, "nn_monomials")
            self._wp_slices[bi] = wp
        self.n_params = pos

    def initial_vector(self):
        """Initial values for every trainable entry, in flattening order."""
        s = self.structure
        out = np.zeros(self.n_params)
        for bi, blk in enumerate(s.blocks):
            if bi in self._net_slices:
                for (ws, bs, _), (W, b) in zip(self._net_slices[bi], blk.net.layers0):
                    out[ws] = np.asarray(W, dtype=float).ravel()
                    out[bs] = np.asarray(b, dtype=float).ravel()
            for gi, grid in enumerate(blk.grids):
                ys, cs, bsl = self._grid_slices[(bi, gi)]
                out[ys] = grid.y0[grid.train_y]
                out[cs] = grid.c0[grid.train_c]
                out[bsl] = inv_softplus(grid.beta0[grid.train_beta] - s.beta_min)
            out[self._wp_slices[bi]] = np.transpose(blk.wp0, (2, 0, 1)).ravel()
        return out

    def group_indices(self):
        """Index arrays per named parameter group."""
        out = {}
        for name, sls in self.groups.items():
            idx = [np.arange(sl.start, sl.stop) for sl in sls]
            out[name] = np.concatenate(idx) if idx else np.zeros(0, dtype=int)
        return out

    def width_indices(self):
        """Indices of all trainable kernel widths (projection targets)."""
        idx = []
        for (bi, gi), (_, cs, _) in self._grid_slices.items():
            idx.append(np.arange(cs.start, cs.stop))
        return np.concatenate(idx) if idx else np.zeros(0, dtype=int)

    # -- reconstruction helpers ------------------------------------------

    def net_layers(self, params, bi):
        blk = self.structure.blocks[bi]
        if blk.net is None and blk.net_shared_from is None:
            return None
        owner = bi if blk.net_shared_from is None else blk.net_shared_from
        src = self.structure.blocks[owner]
        out = []
        for (ws, bs, shape), (_, b0) in zip(self._net_slices[owner], src.net.layers0):
            out.append((params[ws].reshape(shape), params[bs]))
        return out

    def grid_arrays(self, params, bi, gi):
        """Full (ybar, c, beta) tensors with frozen entries filled in."""
        grid = self.structure.blocks[bi].grids[gi]
        ys, cs, bs = self._grid_slices[(bi, gi)]

        def fill(base, mask, sl):
            full = torch.as_tensor(base, dtype=DT).clone()
            if mask.any():
                full = full.index_put((torch.as_tensor(np.nonzero(mask)[0]),), params[sl])
            return full

        ybar = fill(grid.y0, grid.train_y, ys)
        c = fill(grid.c0, grid.train_c, cs)
        raw = fill(inv_softplus(grid.beta0 - self.structure.beta_min), grid.train_beta, bs)
        beta = self.structure.beta_min + softplus(raw, 1.0)
        return ybar, c, beta

    def wp(self, params, bi):
        blk = self.structure.blocks[bi]
        flat = params[self._wp_slices[bi]]
        return flat.reshape(blk.n_comp, blk.n_kernels, blk.n_monomials).permute(1, 2, 0)


def _monomial_matrix(x, order, dim):
    exps = monomial_exponents(order, dim)
    cols = []
    for e in exps:
        col = torch.ones(x.shape[0], dtype=DT)
        for i in range(dim):
            if e[i]:
                col = col * x[:, i] ** e[i]
        cols.append(col)
    return torch.stack(cols, dim=1)


def block_kernels(structure, layout, params, x, bi):
    """Raw (unnormalized) kernel values of one block at points x."""
    blk = structure.blocks[bi]
    layers = layout.net_layers(params, bi)
    if layers is None:
        y, jac = x, None
    else:
        y, jac = param_map(x, layers)
    weights = []
    for gi in range(blk.dim):
        ybar, c, beta = layout.grid_arrays(params, bi, gi)
        if structure.regularized and jac is not None:
            hs = h_scale(jac[:, gi, :])
        elif structure.regularized:
            hs = torch.ones(x.shape[0], dtype=DT)
        else:
            hs = torch.ones(1, dtype=DT)
        weights.append(kernel_weights_1d(y[:, gi], ybar, c, beta, hs))
    if blk.dim == 1:
        return weights[0]
    phi = torch.einsum("qa,qb->qab", weights[0], weights[1])
    return phi.reshape(x.shape[0], -1)


def nn_evaluate(structure: NNStructure, layout: NNLayout, params, x):
    """Superposed block contributions with one shared normalization.

    ``params`` is the flat trainable vector (torch), ``x`` the physical
    points (Q, d).  Returns (Q, n_comp).
    """
    x = torch.as_tensor(x, dtype=DT)
    if x.ndim == 1:
        x = x.unsqueeze(-1)
    Q = x.shape[0]
    if not structure.blocks:
        return torch.zeros(Q, structure.n_comp, dtype=DT)
    phis = [block_kernels(structure, layout, params, x, bi) for bi in range(len(structure.blocks))]
    phi_all = torch.cat(phis, dim=1)
    phi_hat = normalize_kernels(phi_all, structure.epsilon)
    out = torch.zeros(Q, structure.n_comp, dtype=DT)
    col = 0
    for bi, blk in enumerate(structure.blocks):
        nk = blk.n_kernels
        ph = phi_hat[:, col : col + nk]
        col += nk
        H = _monomial_matrix(x, blk.monomial_order, blk.dim)
        wp = layout.wp(params, bi)  # (nk, m, comp)
        p = torch.einsum("qm,kmc->qkc", H, wp)
        out = out + torch.einsum("qk,qkc->qc", ph, p)
    return out


def count_parameters(structure: NNStructure):
    """Per-group trainable parameter counts (identity check helper)."""
    layout = NNLayout(structure)
    groups = layout.group_indices()
    return {k: int(v.size) for k, v in groups.items()} | {"total": layout.n_params}
