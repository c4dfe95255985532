"""First-order optimizer with per-group step caps, projection, and
finite-difference gradient verification.

The gradient contract everywhere in this package: analytic gradients must
match central finite differences to a relative error below 1e-4.
"""

from dataclasses import dataclass, field

import numpy as np
import torch

from .enrichment import DT


class GradientError(RuntimeError):
    """Non-finite gradient entries, attributed to parameter groups."""


@dataclass
class AdamState:
    """Moment estimates and step counter of the Adam update."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    b1: float = 0.9
    b2: float = 0.999
    eps: float = 1e-8

    @staticmethod
    def zeros(n, **kw):
        return AdamState(np.zeros(n), np.zeros(n), **kw)


@dataclass
class LRSchedule:
    """Per-group learning-rate caps with multiplicative decay events.

    ``events`` is a list of (epoch, multiplier); every event at or before the
    current epoch applies once.
    """

    caps: dict
    events: list = field(default_factory=list)

    def factor(self, epoch):
        f = 1.0
        for e, m in self.events:
            if epoch >= e:
                f *= m
        return f

    def rates(self, epoch):
        f = self.factor(epoch)
        return {g: c * f for g, c in self.caps.items()}

    @staticmethod
    def stepped(caps, start, every, factor, horizon=10**9):
        """Decay by ``factor`` at ``start`` and every ``every`` epochs after."""
        events = []
        if every and factor != 1.0:
            e = start
            while e < horizon:
                events.append((e, factor))
                e += every
        return LRSchedule(dict(caps), events)


def lr_vector(groups, rates, n):
    """Expand per-group rates to a per-parameter vector (groups must be
    disjoint and exhaustive)."""
    lr = np.full(n, np.nan)
    for name, idx in groups.items():
        lr[idx] = rates[name]
    if np.any(np.isnan(lr)):
        raise ValueError("parameter groups are not exhaustive")
    return lr


def adam_step(params, grad, state: AdamState, lr):
    """Standard bias-corrected Adam update; deterministic given inputs.

    ``lr`` may be a scalar or per-parameter vector of step caps.  Returns the
    updated parameter vector; the state is updated in place.
    """
    g = np.asarray(grad, dtype=float)
    state.t += 1
    state.m = state.b1 * state.m + (1.0 - state.b1) * g
    state.v = state.b2 * state.v + (1.0 - state.b2) * g * g
    mhat = state.m / (1.0 - state.b1**state.t)
    vhat = state.v / (1.0 - state.b2**state.t)
    return params - lr * mhat / (np.sqrt(vhat) + state.eps)


def project_constraints(params, constraints):
    """Clamp selected entries to lower bounds; idempotent.

    ``constraints`` is a list of (index_array, lower_bound).
    """
    out = np.array(params, dtype=float, copy=True)
    for idx, bound in constraints:
        if len(idx):
            out[idx] = np.maximum(out[idx], bound)
    return out


def compute_gradient(loss_fn, params):
    """Gradient of a scalar torch loss at a parameter snapshot.

    ``loss_fn`` maps a torch tensor to a scalar tensor; the returned gradient
    is a numpy vector of the same length.  Non-finite entries raise with the
    offending groups named when ``loss_fn.groups`` is available.
    """
    p = torch.as_tensor(np.asarray(params, dtype=float), dtype=DT).clone().requires_grad_(True)
    loss = loss_fn(p)
    if not torch.isfinite(loss):
        raise GradientError("loss is not finite at the evaluation point")
    (g,) = torch.autograd.grad(loss, p)
    g = g.detach().numpy()
    if not np.all(np.isfinite(g)):
        msg = "non-finite gradient entries"
        groups = getattr(loss_fn, "groups", None)
        if groups:
            bad = np.nonzero(~np.isfinite(g))[0]
            names = sorted({n for n, idx in groups.items() if np.intersect1d(bad, idx).size})
            msg += f" in groups {names}"
        raise GradientError(msg)
    return g, float(loss)


def fd_check(loss_fn, params, groups=None, n_samples=50, step=1e-6, seed=0):
    """Compare the analytic gradient against central finite differences.

    Samples ``n_samples`` coordinates (all of them if the vector is short),
    perturbs each by ``step * (1 + |p_i|)``, and reports the worst relative
    error per group plus the global worst offenders.  Errors are measured
    against the entry magnitude with a floor at 1e-3 of the gradient's own
    scale, so near-zero entries are not flagged on finite-difference noise.
    """
    params = np.asarray(params, dtype=float)
    n = params.size
    g, _ = compute_gradient(loss_fn, params)

    rng = np.random.default_rng(seed)
    if n_samples >= n:
        sample = np.arange(n)
    else:
        sample = np.sort(rng.choice(n, size=n_samples, replace=False))

    def loss_at(p):
        with torch.no_grad():
            return float(loss_fn(torch.as_tensor(p, dtype=DT)))

    scale = np.max(np.abs(g)) if n else 0.0
    floor = 1e-3 * scale + 1e-300
    records = []
    for i in sample:
        h = step * (1.0 + abs(params[i]))
        pp, pm = params.copy(), params.copy()
        pp[i] += h
        pm[i] -= h
        fd = (loss_at(pp) - loss_at(pm)) / (2.0 * h)
        denom = max(abs(g[i]), abs(fd), floor)
        records.append((i, abs(g[i] - fd) / denom, g[i], fd))

    records.sort(key=lambda r: -r[1])
    report = {
        "max_rel_error": records[0][1] if records else 0.0,
        "worst": records[:10],
        "by_group": {},
    }
    if groups:
        for name, idx in groups.items():
            sel = [r for r in records if r[0] in set(idx.tolist())]
            if sel:
                report["by_group"][name] = max(r[1] for r in sel)
    return report
