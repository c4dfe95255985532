"""Combined field model: coarse RK part plus localized NN enrichment.

Holds precomputed shape-function tables for every registered point set and
evaluates the total field and its spatial gradient from one flat parameter
vector (RK coefficients first, then NN parameters).
"""

import numpy as np
import torch

from . import rk
from .enrichment import DT, NNLayout, NNStructure, nn_evaluate


class FieldModel:
    def __init__(self, nodes, kernel, basis, structure: NNStructure, n_comp=1):
        self.nodes = nodes
        self.kernel = kernel
        self.basis = basis
        self.structure = structure
        self.n_comp = n_comp
        self.layout = NNLayout(structure)
        self.n_rk = nodes.n_nodes * n_comp
        self.n_params = self.n_rk + self.layout.n_params
        self.tables = {}
        self._torch_tables = {}

    # -- point sets -------------------------------------------------------

    def add_point_set(self, name, points):
        """Precompute shape functions for a named evaluation point set."""
        table = rk.build_shape_table(points, self.nodes, self.kernel, self.basis)
        self.tables[name] = table
        self._torch_tables[name] = (
            torch.as_tensor(table.points, dtype=DT),
            torch.as_tensor(table.idx),
            torch.as_tensor(table.vals, dtype=DT),
            torch.as_tensor(table.grads, dtype=DT),
        )
        return table

    # -- parameter vector -------------------------------------------------

    def initial_parameters(self, d0=None):
        p = np.zeros(self.n_params)
        if d0 is not None:
            p[: self.n_rk] = np.asarray(d0, dtype=float).ravel()
        p[self.n_rk :] = self.layout.initial_vector()
        return p

    def group_indices(self):
        """Disjoint, exhaustive parameter groups for the optimizer."""
        groups = {"rk_coefficients": np.arange(self.n_rk)}
        for name, idx in self.layout.group_indices().items():
            groups[name] = idx + self.n_rk
        return groups

    def width_constraint_indices(self):
        return self.layout.width_indices() + self.n_rk

    def rk_coeffs(self, params):
        """RK coefficients as (NP, n_comp), component-major storage."""
        d = params[: self.n_rk]
        if isinstance(d, torch.Tensor):
            return d.reshape(self.n_comp, -1).T
        return np.asarray(d).reshape(self.n_comp, -1).T

    # -- evaluation -------------------------------------------------------

    def evaluate(self, params, name, need_grad=True, with_nn=True, with_rk=True):
        """Field values (Q, C) and gradients (Q, C, d) at a registered set.

        ``params`` is a torch tensor (kept in the autograd graph).  NN spatial
        gradients are exact; RK gradients come from the precomputed tables.
        """
        x_np, idx, vals, grads = self._torch_tables[name]
        Q = x_np.shape[0]
        u = torch.zeros(Q, self.n_comp, dtype=DT)
        du = torch.zeros(Q, self.n_comp, self.nodes.dim, dtype=DT) if need_grad else None

        if with_rk:
            d = params[: self.n_rk].reshape(self.n_comp, -1)
            gathered = d[:, idx]  # (C, Q, K)
            u = u + (gathered * vals).sum(-1).T
            if need_grad:
                du = du + torch.einsum("cqk,qkd->qcd", gathered, grads)

        if with_nn and self.layout.n_params:
            nn_params = params[self.n_rk :]
            if need_grad:
                x = x_np.clone().requires_grad_(True)
                u_nn = nn_evaluate(self.structure, self.layout, nn_params, x)
                gs = [
                    torch.autograd.grad(u_nn[:, c].sum(), x, create_graph=True, retain_graph=True)[0]
                    for c in range(self.n_comp)
                ]
                du = du + torch.stack(gs, dim=1)
                u = u + u_nn
            else:
                u = u + nn_evaluate(self.structure, self.layout, nn_params, x_np)
        return (u, du) if need_grad else u

    def evaluate_numpy(self, params_np, name, with_nn=True, with_rk=True):
        """Detached evaluation for reports and error norms."""
        p = torch.as_tensor(np.asarray(params_np, dtype=float), dtype=DT)
        u, du = self.evaluate(p, name, need_grad=True, with_nn=with_nn, with_rk=with_rk)
        return u.detach().numpy(), du.detach().numpy()
