"""Strain energies, tension-compression split, and damage laws.

All functions are pure in (strain, history, constants) and broadcast over
torch tensors so they can sit inside the loss graph; history commits happen
once per load step outside of these functions.
"""

from dataclasses import dataclass, field

import numpy as np
import torch

DT = torch.float64

# Guard added under the eigenvalue-gap square root; keeps the spectral split
# differentiable at repeated principal strains without visible bias.
EIG_GUARD = 1e-30


def _t(x):
    return torch.as_tensor(x, dtype=DT)


@dataclass(frozen=True)
class ElasticConstants:
    """Isotropic elasticity; 2-D uses the stated plane assumption."""

    E: float
    nu: float = 0.0
    dim: int = 2
    plane: str = "strain"

    def __post_init__(self):
        if self.E <= 0:
            raise ValueError("Young's modulus must be positive")
        if not -1.0 < self.nu < 0.5:
            raise ValueError("Poisson ratio out of range")
        if self.plane not in ("strain", "stress"):
            raise ValueError("plane assumption must be 'strain' or 'stress'")

    @property
    def mu(self):
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def lam(self):
        if self.plane == "strain":
            return self.E * self.nu / ((1.0 + self.nu) * (1.0 - 2.0 * self.nu))
        return self.E * self.nu / (1.0 - self.nu**2)


def principal_strains_2d(e11, e22, e12):
    """In-plane principal strains (descending) of a symmetric 2x2 tensor."""
    mean = 0.5 * (e11 + e22)
    rad = torch.sqrt((0.5 * (e11 - e22)) ** 2 + e12**2 + EIG_GUARD)
    return mean + rad, mean - rad


def elastic_energy(strain, constants: ElasticConstants, E_field=None):
    """Elastic strain energy density, quadratic in the strain.

    1-D strain is a tensor of values; 2-D strain is a tuple (e11, e22, e12).
    ``E_field`` optionally replaces the scalar modulus pointwise.
    """
    if constants.dim == 1:
        e = _t(strain)
        E = _t(E_field) if E_field is not None else constants.E
        return 0.5 * E * e**2
    e11, e22, e12 = map(_t, strain)
    scale = _t(E_field) / constants.E if E_field is not None else 1.0
    mu, lam = constants.mu * scale, constants.lam * scale
    tr = e11 + e22
    return mu * (e11**2 + e22**2 + 2.0 * e12**2) + 0.5 * lam * tr**2


def strain_split(strain, constants: ElasticConstants, E_field=None):
    """Tensile/compressive split of the elastic energy.

    Returns (psi_plus, psi_minus); the two parts sum to the elastic energy
    exactly.  Only positive principal strains and positive volumetric strain
    contribute to the tensile part.
    """
    if constants.dim == 1:
        e = _t(strain)
        E = _t(E_field) if E_field is not None else _t(constants.E)
        psi_p = 0.5 * E * torch.relu(e) ** 2
        psi_m = 0.5 * E * torch.relu(-e) ** 2
        return psi_p, psi_m
    e11, e22, e12 = map(_t, strain)
    scale = _t(E_field) / constants.E if E_field is not None else 1.0
    mu, lam = constants.mu * scale, constants.lam * scale
    l1, l2 = principal_strains_2d(e11, e22, e12)
    tr = e11 + e22
    psi_p = mu * (torch.relu(l1) ** 2 + torch.relu(l2) ** 2) + 0.5 * lam * torch.relu(tr) ** 2
    psi_m = elastic_energy(strain, constants, E_field) - psi_p
    return psi_p, psi_m


def strain_split_stress(strain, constants: ElasticConstants):
    """Analytic derivatives of the split energies w.r.t. the strain tensor.

    Returns (dpsi_plus, dpsi_minus) with 2-D entries ordered (e11, e22, e12);
    the e12 slot is the derivative w.r.t. the tensor component (both
    off-diagonal entries varied together).  Independent of the autograd path,
    used for verification and stress reporting.
    """
    if constants.dim == 1:
        e = _t(strain)
        E = _t(constants.E)
        return E * torch.relu(e), -E * torch.relu(-e)
    e11, e22, e12 = map(_t, strain)
    mu, lam = constants.mu, constants.lam
    mean = 0.5 * (e11 + e22)
    rad = torch.sqrt((0.5 * (e11 - e22)) ** 2 + e12**2 + EIG_GUARD)
    l1, l2 = mean + rad, mean - rad
    # eigen-projections: dl1/de = n1 n1^T, dl2/de = n2 n2^T
    dl1 = (
        0.5 + 0.25 * (e11 - e22) / rad,
        0.5 - 0.25 * (e11 - e22) / rad,
        e12 / rad,
    )
    dl2 = (
        0.5 - 0.25 * (e11 - e22) / rad,
        0.5 + 0.25 * (e11 - e22) / rad,
        -e12 / rad,
    )
    tr = e11 + e22
    htr = (tr > 0).to(DT)
    comps_p, comps_m = [], []
    for k, (a1, a2) in enumerate(zip(dl1, dl2)):
        dtr = 1.0 if k < 2 else 0.0
        dp = 2.0 * mu * (torch.relu(l1) * a1 + torch.relu(l2) * a2) + lam * tr * htr * dtr
        dfull = 2.0 * mu * (l1 * a1 + l2 * a2) + lam * tr * dtr
        comps_p.append(dp)
        comps_m.append(dfull - dp)
    return tuple(comps_p), tuple(comps_m)


@dataclass(frozen=True)
class DamageLawI:
    """Rational damage evolution between a limit and a critical strain.

    ``kappa0``/``kappa_c`` may be per-point arrays to model imperfections.
    Kuhn-Tucker history carries strain units.
    """

    kappa0: object
    kappa_c: object
    E: float
    units: str = field(default="strain", init=False)

    def __post_init__(self):
        k0 = np.asarray(self.kappa0, dtype=float)
        kc = np.asarray(self.kappa_c, dtype=float)
        if np.any(k0 <= 0) or np.any(kc <= k0):
            raise ValueError("need 0 < kappa0 < kappa_c")

    @property
    def q(self):
        k0, kc = _t(self.kappa0), _t(self.kappa_c)
        return kc / (kc - k0)

    @property
    def p(self):
        return 0.5 * self.E * (_t(self.kappa0) * self.q) ** 2

    def eta(self, kappa):
        """Damage and its kappa-derivative; clamped to [0, 1]."""
        kappa = _t(kappa)
        k0, kc = torch.broadcast_tensors(_t(self.kappa0), _t(self.kappa_c))
        k0, kc, kappa = torch.broadcast_tensors(k0, kc, kappa)
        safe = torch.clamp(kappa, min=1e-300)
        raw = (1.0 - k0 / safe) / (1.0 - k0 / kc)
        eta = torch.clamp(raw, 0.0, 1.0)
        active = (raw > 0.0) & (raw < 1.0)
        deta = torch.where(active, (k0 / safe**2) / (1.0 - k0 / kc), torch.zeros_like(safe))
        return eta, deta

    def degradation(self, eta):
        eta = _t(eta)
        return 1.0 - eta, -torch.ones_like(eta)

    def psi_bar(self, eta):
        """Dissipation density; matches the integral of the tensile energy
        along the uniaxial softening path."""
        eta = _t(eta)
        q, p = torch.broadcast_tensors(self.q, self.p)
        if torch.any(_t(eta) >= q):
            raise ValueError("damage exceeds the admissible range of the law")
        return p * (1.0 / (q - eta) - 1.0 / q)

    def equivalent(self, psi_plus):
        return torch.sqrt(torch.clamp(2.0 * _t(psi_plus) / self.E, min=0.0))


@dataclass(frozen=True)
class DamageLawII:
    """Hyperbolic damage evolution driven by tensile energy directly.

    Kuhn-Tucker history carries energy units.
    """

    p_bar: float
    units: str = field(default="energy", init=False)

    def __post_init__(self):
        if self.p_bar <= 0:
            raise ValueError("p_bar must be positive")

    def eta(self, kappa):
        kappa = _t(kappa)
        eta = 2.0 * kappa / (2.0 * kappa + self.p_bar)
        deta = 2.0 * self.p_bar / (2.0 * kappa + self.p_bar) ** 2
        return eta, deta

    def degradation(self, eta):
        eta = _t(eta)
        return (1.0 - eta) ** 2, -2.0 * (1.0 - eta)

    def psi_bar(self, eta):
        return 0.5 * self.p_bar * _t(eta) ** 2

    def equivalent(self, psi_plus):
        return _t(psi_plus)


def kuhn_tucker_update(kappa_history, kappa_trial):
    """Irreversible history update: keep the larger of history and trial."""
    return torch.maximum(_t(kappa_history), _t(kappa_trial))


def kappa_c_from_fracture_energy(G_F, E, kappa0, length):
    """Critical equivalent strain giving band dissipation G_F per unit area.

    Larger localization length means a smaller critical strain; configurations
    where it would not exceed ``kappa0`` are rejected.
    """
    if min(G_F, E, length) <= 0 or np.any(np.asarray(kappa0) <= 0):
        raise ValueError("all inputs must be positive")
    kc = 2.0 * G_F / (E * np.asarray(kappa0, dtype=float) * length)
    if np.any(kc <= np.asarray(kappa0)):
        raise ValueError(
            "critical strain does not exceed the elastic limit; "
            "localization length too large for the given fracture energy"
        )
    return kc if kc.ndim else float(kc)


def damage_energy_density(strain, kappa, law, constants: ElasticConstants, E_field=None):
    """Degraded energy density and stress at fixed internal state.

    Returns (psi, stress) where stress applies the law's own degradation to
    the tensile part only.  With eta = 0 both reduce to linear elasticity.
    """
    psi_p, psi_m = strain_split(strain, constants, E_field)
    eta, _ = law.eta(kappa)
    g, _ = law.degradation(eta)
    psi = g * psi_p + psi_m + law.psi_bar(eta)
    dp, dm = strain_split_stress(strain, constants)
    if constants.dim == 1:
        stress = g * dp + dm
    else:
        stress = tuple(g * a + b for a, b in zip(dp, dm))
    return psi, stress
