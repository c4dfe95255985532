"""Loss functionals over the combined field: potential energy and L2 fitting.

Summation order is fixed (cell-major, point-minor, as laid out by the grid)
and evaluation is single-threaded, so identical inputs give bit-identical
losses.  History state is read-only during a pass.
"""

from dataclasses import dataclass, field

import numpy as np
import torch

from .enrichment import DT
from .materials import ElasticConstants, strain_split, elastic_energy


class DivergenceError(RuntimeError):
    """Non-finite value encountered during loss evaluation."""


@dataclass
class DirichletEntry:
    """Penalty-imposed boundary value on one component of one boundary set."""

    set_name: str
    comp: int
    value: float = 0.0
    drive: float = 0.0  # multiplies the schedule's prescribed displacement
    alpha: float = 0.0
    reaction: bool = False  # include in the reported reaction force

    def target(self, ubar):
        return self.value + self.drive * ubar


@dataclass
class NeumannEntry:
    set_name: str
    traction: np.ndarray  # (n_comp,)


@dataclass
class ProblemState:
    """Everything the energy functional needs besides the parameters."""

    grid: object
    law: object = None  # None -> linear elastic
    constants: ElasticConstants = None
    E_field: np.ndarray = None  # optional per-point modulus
    body: np.ndarray = None  # (Q, n_comp) body force values
    dirichlet: list = field(default_factory=list)
    neumann: list = field(default_factory=list)
    area: float = 1.0  # cross-section factor for 1-D domains
    ubar: float = 0.0  # current prescribed displacement amplitude

    def __post_init__(self):
        self.history_t = torch.as_tensor(np.asarray(self.grid.history, dtype=float), dtype=DT)
        self.weights_t = torch.as_tensor(self.grid.weights, dtype=DT)
        self.E_field_t = None if self.E_field is None else torch.as_tensor(self.E_field, dtype=DT)
        self.body_t = None if self.body is None else torch.as_tensor(self.body, dtype=DT)

    def commit_history(self, kappa_new):
        """Kuhn-Tucker commit after a converged load step (non-decreasing)."""
        updated = np.maximum(self.grid.history, kappa_new)
        self.grid.history = updated
        self.history_t = torch.as_tensor(updated, dtype=DT)


@dataclass
class LossBreakdown:
    strain_energy: float
    external_work: float
    penalty: float
    total: float
    dissipation: float = 0.0


def strain_components(du, dim):
    """Small-strain components from the displacement gradient (Q, C, d)."""
    if dim == 1:
        return du[:, 0, 0]
    e11 = du[:, 0, 0]
    e22 = du[:, 1, 1]
    e12 = 0.5 * (du[:, 0, 1] + du[:, 1, 0])
    return e11, e22, e12


def energy_density(strain, state: ProblemState):
    """Pointwise energy density with the damage state held irreversible.

    The internal variable is evaluated from the current tensile energy but
    detached from the graph: along active loading the dissipation term's
    variation cancels the degradation term's variation exactly, and during
    unloading the state is frozen, so the detached form has the exact
    gradient while avoiding spurious non-smoothness.
    """
    cst = state.constants
    if state.law is None:
        psi = elastic_energy(strain, cst, state.E_field_t)
        return psi, None
    psi_p, psi_m = strain_split(strain, cst, state.E_field_t)
    kappa_trial = state.law.equivalent(psi_p.detach())
    kappa = torch.maximum(state.history_t, kappa_trial)
    eta, _ = state.law.eta(kappa)
    g, _ = state.law.degradation(eta)
    psi_bar = state.law.psi_bar(eta)
    return g * psi_p + psi_m + psi_bar, psi_bar


def kappa_trial_from(params, model, state: ProblemState):
    """Trial internal variable at every grid point (for history commits)."""
    with torch.no_grad():
        _, du = model.evaluate(torch.as_tensor(params, dtype=DT), "domain")
        strain = strain_components(du, model.nodes.dim)
        psi_p, _ = strain_split(strain, state.constants, state.E_field_t)
        return state.law.equivalent(psi_p).numpy()


def potential_energy(model, params, state: ProblemState):
    """Total potential energy and its pieces.

    Returns (LossBreakdown of floats, total torch scalar).  Non-finite
    contributions raise :class:`DivergenceError` naming the first offending
    point.
    """
    u, du = model.evaluate(params, "domain")
    strain = strain_components(du, model.nodes.dim)
    psi, psi_bar = energy_density(strain, state)
    if not torch.isfinite(psi).all():
        bad = int(torch.nonzero(~torch.isfinite(psi))[0])
        raise DivergenceError(f"non-finite energy density at quadrature point {bad}")
    se = state.area * (state.weights_t * psi).sum()
    diss = 0.0 if psi_bar is None else float(state.area * (state.weights_t * psi_bar).sum())

    ew = torch.zeros((), dtype=DT)
    if state.body_t is not None:
        ew = ew + state.area * (state.weights_t * (u * state.body_t).sum(dim=1)).sum()
    for entry in state.neumann:
        ub = model.evaluate(params, entry.set_name, need_grad=False)
        wb = torch.as_tensor(state.grid.boundaries[entry.set_name].weights, dtype=DT)
        trac = torch.as_tensor(np.asarray(entry.traction, dtype=float), dtype=DT)
        ew = ew + (wb * (ub * trac).sum(dim=1)).sum()

    pen = torch.zeros((), dtype=DT)
    for entry in state.dirichlet:
        ub = model.evaluate(params, entry.set_name, need_grad=False)
        wb = torch.as_tensor(state.grid.boundaries[entry.set_name].weights, dtype=DT)
        diff = ub[:, entry.comp] - entry.target(state.ubar)
        pen = pen + 0.5 * entry.alpha * (wb * diff**2).sum()

    total = se - ew + pen
    if not torch.isfinite(total):
        raise DivergenceError("non-finite total potential energy")
    breakdown = LossBreakdown(float(se), float(ew), float(pen), float(total), diss)
    return breakdown, total


def reaction_force(model, params, state: ProblemState):
    """Penalty reaction on the driven boundary entries marked ``reaction``.

    Equals minus the derivative of the potential energy with respect to the
    prescribed displacement amplitude.
    """
    with torch.no_grad():
        p = torch.as_tensor(np.asarray(params, dtype=float), dtype=DT)
        out = 0.0
        for entry in state.dirichlet:
            if not entry.reaction:
                continue
            ub = model.evaluate(p, entry.set_name, need_grad=False)
            wb = torch.as_tensor(state.grid.boundaries[entry.set_name].weights, dtype=DT)
            diff = entry.target(state.ubar) - ub[:, entry.comp]
            out += float(entry.alpha * (wb * diff).sum() * entry.drive)
    return out


def l2_loss(model, params, target, set_name="domain", weights=None):
    """Integrated squared misfit against target samples (torch scalar)."""
    u = model.evaluate(params, set_name, need_grad=False)
    t = torch.as_tensor(np.asarray(target, dtype=float), dtype=DT)
    if t.ndim == 1:
        t = t[:, None]
    w = torch.as_tensor(weights, dtype=DT) if weights is not None else None
    sq = ((u - t) ** 2).sum(dim=1)
    loss = (w * sq).sum() if w is not None else sq.sum()
    if not torch.isfinite(loss):
        raise DivergenceError("non-finite fitting loss")
    return loss


def l2_error_norm(model, params_np, target, set_name, weights):
    """Root integrated squared error with the set's own (refined) weights."""
    with torch.no_grad():
        p = torch.as_tensor(np.asarray(params_np, dtype=float), dtype=DT)
        u = model.evaluate(p, set_name, need_grad=False).numpy()
    t = np.asarray(target, dtype=float)
    if t.ndim == 1:
        t = t[:, None]
    return float(np.sqrt(np.sum(weights * ((u - t) ** 2).sum(axis=1))))


def assemble_elastic_system(model, state: ProblemState):
    """Direct Galerkin assembly of the linear-elastic system (numpy).

    Independent of the autograd path; returns (K, f) over the RK coefficient
    vector so that the energy is 0.5 d'Kd - f'd + const.  Valid only while no
    damage has accumulated.
    """
    table = model.tables["domain"]
    dim = model.nodes.dim
    NP = model.nodes.n_nodes
    C = model.n_comp
    n = NP * C
    K = np.zeros((n, n))
    f = np.zeros(n)
    w = state.grid.weights

    if dim == 1:
        E = state.E_field if state.E_field is not None else np.full(table.n_points, state.constants.E)
        coefs = state.area * w * E
        for q in range(table.n_points):
            ii = table.idx[q]
            g = table.grads[q, :, 0]
            K[np.ix_(ii, ii)] += coefs[q] * np.outer(g, g)
        if state.body is not None:
            b = state.body[:, 0]
            for q in range(table.n_points):
                f[table.idx[q]] += state.area * w[q] * b[q] * table.vals[q]
    else:
        mu, lam = state.constants.mu, state.constants.lam
        scale = np.ones(table.n_points) if state.E_field is None else state.E_field / state.constants.E
        D0 = np.array(
            [[lam + 2 * mu, lam, 0.0], [lam, lam + 2 * mu, 0.0], [0.0, 0.0, mu]]
        )
        for q in range(table.n_points):
            ii = table.idx[q]
            k = ii.size
            g = table.grads[q]  # (k, 2)
            B = np.zeros((3, 2 * k))
            B[0, 0::2] = g[:, 0]
            B[1, 1::2] = g[:, 1]
            B[2, 0::2] = g[:, 1]
            B[2, 1::2] = g[:, 0]
            ke = w[q] * scale[q] * (B.T @ D0 @ B)
            dof = np.empty(2 * k, dtype=int)
            dof[0::2] = ii  # component 0 block comes first
            dof[1::2] = ii + NP
            K[np.ix_(dof, dof)] += ke
            if state.body is not None:
                for c in range(C):
                    f[ii + c * NP] += w[q] * state.body[q, c] * table.vals[q]

    for entry in state.neumann:
        bset = state.grid.boundaries[entry.set_name]
        bt = model.tables[entry.set_name]
        for q in range(bt.n_points):
            for c in range(C):
                f[bt.idx[q] + c * NP] += bset.weights[q] * entry.traction[c] * bt.vals[q]

    for entry in state.dirichlet:
        bset = state.grid.boundaries[entry.set_name]
        bt = model.tables[entry.set_name]
        val = entry.target(state.ubar)
        for q in range(bt.n_points):
            dof = bt.idx[q] + entry.comp * NP
            aw = entry.alpha * bset.weights[q]
            K[np.ix_(dof, dof)] += aw * np.outer(bt.vals[q], bt.vals[q])
            f[dof] += aw * val * bt.vals[q]
    return K, f


def solve_elastic_direct(model, state: ProblemState):
    """Minimize the quadratic elastic energy exactly (with one refinement
    pass to hold accuracy on penalty-dominated systems)."""
    K, f = assemble_elastic_system(model, state)
    try:
        d = np.linalg.solve(K, f)
    except np.linalg.LinAlgError as exc:
        raise DivergenceError(f"singular stiffness system: {exc}") from None
    d = d + np.linalg.solve(K, f - K @ d)
    return d
