import numpy as np
import pytest
import torch

from nnrk import materials as mat


def t(x):
    return torch.as_tensor(x, dtype=torch.float64)


class TestElasticEnergy:
    def test_zero_strain(self):
        cst = mat.ElasticConstants(E=2e6, dim=1)
        assert float(mat.elastic_energy(t(0.0), cst)) == 0.0

    def test_1d_value(self):
        cst = mat.ElasticConstants(E=2e6, dim=1)
        assert float(mat.elastic_energy(t(1e-4), cst)) == pytest.approx(1e-2, rel=1e-14)

    def test_quadratic_homogeneity(self, rng):
        cst = mat.ElasticConstants(E=100.0, nu=0.3, dim=2)
        for _ in range(5):
            e = tuple(t(v) for v in rng.normal(size=3))
            e2 = tuple(2.0 * v for v in e)
            assert float(mat.elastic_energy(e2, cst)) == pytest.approx(
                4.0 * float(mat.elastic_energy(e, cst)), rel=1e-13
            )

    def test_invalid_constants(self):
        with pytest.raises(ValueError):
            mat.ElasticConstants(E=-1.0)
        with pytest.raises(ValueError):
            mat.ElasticConstants(E=1.0, nu=0.6)


class TestStrainSplit:
    def test_uniaxial_tension_1d(self):
        cst = mat.ElasticConstants(E=2e6, dim=1)
        e = 3e-4
        psi_p, psi_m = mat.strain_split(t(e), cst)
        assert float(psi_p) == pytest.approx(0.5 * 2e6 * e**2, rel=1e-14)
        assert float(psi_m) == 0.0
        law = mat.DamageLawI(kappa0=1e-4, kappa_c=1.885e-2, E=2e6)
        assert float(law.equivalent(psi_p)) == pytest.approx(e, rel=1e-12)

    def test_full_compression_has_no_tensile_part(self):
        cst = mat.ElasticConstants(E=10.0, nu=0.2, dim=2)
        psi_p, psi_m = mat.strain_split((t(-1e-3), t(-2e-3), t(0.0)), cst)
        assert float(psi_p) == pytest.approx(0.0, abs=1e-18)
        assert float(psi_m) > 0

    def test_pure_shear(self):
        cst = mat.ElasticConstants(E=10.0, nu=0.25, dim=2)
        gamma = 4e-3
        psi_p, psi_m = mat.strain_split((t(0.0), t(0.0), t(gamma / 2)), cst)
        assert float(psi_p) == pytest.approx(cst.mu * gamma**2 / 4.0, rel=1e-12)
        assert float(psi_m) == pytest.approx(cst.mu * gamma**2 / 4.0, rel=1e-12)

    def test_split_sums_to_elastic_energy(self, rng):
        for nu in (0.0, 0.18, 0.3):
            cst = mat.ElasticConstants(E=7.3, nu=nu, dim=2)
            e = rng.normal(size=(200, 3)) * 1e-3
            comps = tuple(t(e[:, i]) for i in range(3))
            psi_p, psi_m = mat.strain_split(comps, cst)
            psi = mat.elastic_energy(comps, cst)
            assert torch.max(torch.abs(psi_p + psi_m - psi)) < 1e-12

    def test_split_nonnegative(self, rng):
        cst = mat.ElasticConstants(E=1.0, nu=0.3, dim=2)
        e = rng.normal(size=(500, 3))
        psi_p, psi_m = mat.strain_split(tuple(t(e[:, i]) for i in range(3)), cst)
        assert torch.all(psi_p >= -1e-15)
        assert torch.all(psi_m >= -1e-15)

    def test_analytic_stress_matches_fd(self, rng):
        cst = mat.ElasticConstants(E=3.0, nu=0.28, dim=2)
        h = 1e-7
        for _ in range(20):
            e = rng.normal(size=3) * 1e-2
            if abs(e[0] - e[1]) < 1e-4 and abs(e[2]) < 1e-4:
                continue  # keep away from the repeated-eigenvalue point
            dp, dm = mat.strain_split_stress(tuple(t(v) for v in e), cst)
            for k in range(3):
                ep, em = e.copy(), e.copy()
                ep[k] += h
                em[k] -= h
                pp, _ = mat.strain_split(tuple(t(v) for v in ep), cst)
                pm, _ = mat.strain_split(tuple(t(v) for v in em), cst)
                fd = (float(pp) - float(pm)) / (2 * h)
                assert float(dp[k]) == pytest.approx(fd, rel=1e-6, abs=1e-9)


class TestDamageLawI:
    law = mat.DamageLawI(kappa0=1e-4, kappa_c=1.885e-2, E=2e6)

    def test_eta_endpoints(self):
        eta0, _ = self.law.eta(t(1e-4))
        eta1, _ = self.law.eta(t(1.885e-2))
        assert float(eta0) == pytest.approx(0.0, abs=1e-15)
        assert float(eta1) == pytest.approx(1.0, abs=1e-15)

    def test_eta_value(self):
        eta, _ = self.law.eta(t(2e-4))
        assert float(eta) == pytest.approx(0.50267, abs=5e-6)

    def test_eta_clamped(self):
        eta_lo, d_lo = self.law.eta(t(0.0))
        eta_hi, d_hi = self.law.eta(t(1.0))
        assert float(eta_lo) == 0.0 and float(d_lo) == 0.0
        assert float(eta_hi) == 1.0 and float(d_hi) == 0.0

    def test_eta_strictly_increasing_between_limits(self):
        ks = np.linspace(1.1e-4, 1.8e-2, 50)
        etas = [float(self.law.eta(t(k))[0]) for k in ks]
        assert np.all(np.diff(etas) > 0)

    def test_degradation(self):
        g0, _ = self.law.degradation(t(0.0))
        g1, _ = self.law.degradation(t(1.0))
        assert float(g0) == 1.0 and float(g1) == 0.0

    def test_dissipation_zero_at_zero(self):
        assert float(self.law.psi_bar(t(0.0))) == 0.0

    def test_dissipation_matches_quadrature_of_tensile_energy(self):
        # integrate the tensile energy along the uniaxial softening path
        law = self.law
        q = float(law.q)
        kappa0 = 1e-4
        for eta_end in (0.3, 0.7, 0.99):
            gp, gw = np.polynomial.legendre.leggauss(64)
            s = 0.5 * eta_end * (gp + 1.0)
            w = 0.5 * eta_end * gw
            kappa = kappa0 * q / (q - s)
            psi_plus = 0.5 * 2e6 * kappa**2
            integral = float(np.sum(w * psi_plus))
            closed = float(law.psi_bar(t(eta_end)))
            assert closed == pytest.approx(integral, rel=1e-6)

    def test_dissipation_domain_error(self):
        with pytest.raises(ValueError):
            self.law.psi_bar(t(float(self.law.q) + 0.1))

    def test_invalid_constants(self):
        with pytest.raises(ValueError):
            mat.DamageLawI(kappa0=1e-2, kappa_c=1e-3, E=1.0)


class TestDamageLawII:
    law = mat.DamageLawII(p_bar=308.5714285714286)

    def test_eta_midpoint(self):
        eta, _ = self.law.eta(t(self.law.p_bar / 2))
        assert float(eta) == pytest.approx(0.5, rel=1e-14)

    def test_degradation_square(self):
        g, _ = self.law.degradation(t(0.5))
        assert float(g) == pytest.approx(0.25, rel=1e-14)

    def test_dissipation_at_full_damage(self):
        assert float(self.law.psi_bar(t(1.0))) == pytest.approx(self.law.p_bar / 2, rel=1e-14)

    def test_equivalent_is_identity(self):
        assert float(self.law.equivalent(t(3.7))) == 3.7


class TestKuhnTucker:
    def test_unloading_keeps_history(self):
        assert float(mat.kuhn_tucker_update(t(2e-4), t(1e-4))) == 2e-4

    def test_virgin_loading(self):
        assert float(mat.kuhn_tucker_update(t(0.0), t(5e-4))) == 5e-4

    def test_neutral(self):
        assert float(mat.kuhn_tucker_update(t(3e-4), t(3e-4))) == 3e-4


class TestKappaCFromFractureEnergy:
    def test_reference_case(self):
        kc = mat.kappa_c_from_fracture_energy(1.885, 2e6, 1e-4, 1.0)
        assert kc == pytest.approx(1.885e-2, rel=1e-14)

    def test_inverse_proportionality(self):
        a = mat.kappa_c_from_fracture_energy(1.885, 2e6, 1e-4, 1.0)
        b = mat.kappa_c_from_fracture_energy(1.885, 2e6, 1e-4, 2.0)
        assert b == pytest.approx(a / 2, rel=1e-14)

    def test_panel_material_values(self):
        kc = mat.kappa_c_from_fracture_energy(0.065, 16000.0, 2.34e-4, 3.125)
        assert kc == pytest.approx(1.111e-2, rel=1e-3)

    def test_rejects_too_large_length(self):
        with pytest.raises(ValueError):
            mat.kappa_c_from_fracture_energy(1.885, 2e6, 1e-4, 2e4)


class TestDamageEnergyDensity:
    def test_undamaged_is_elastic(self, rng):
        cst = mat.ElasticConstants(E=5.0, nu=0.2, dim=2)
        law = mat.DamageLawI(kappa0=1.0, kappa_c=10.0, E=5.0)  # thresholds never reached
        e = tuple(t(v) for v in rng.normal(size=3) * 1e-3)
        psi, stress = mat.damage_energy_density(e, t(0.0), law, cst)
        assert float(psi) == pytest.approx(float(mat.elastic_energy(e, cst)), rel=1e-12)
        dp, dm = mat.strain_split_stress(e, cst)
        for k in range(3):
            assert float(stress[k]) == pytest.approx(float(dp[k] + dm[k]), rel=1e-12)

    def test_softening_branch_peak_stress(self):
        # peak of (1 - eta(e)) E e over the loading path sits at the elastic limit
        E, k0, kc = 2e6, 1e-4, 1.885e-2
        law = mat.DamageLawI(kappa0=k0, kappa_c=kc, E=E)
        es = np.linspace(1e-6, 5e-3, 20000)
        etas = law.eta(t(es))[0].numpy()
        sig = (1.0 - etas) * E * es
        i = int(np.argmax(sig))
        assert sig[i] == pytest.approx(E * k0, rel=1e-4)
        assert es[i] == pytest.approx(k0, rel=1e-2)

    def test_compression_unaffected_by_damage(self):
        cst = mat.ElasticConstants(E=4.0, nu=0.0, dim=2)
        law = mat.DamageLawI(kappa0=1e-4, kappa_c=1e-2, E=4.0)
        e = (t(-2e-3), t(-1e-3), t(0.0))
        _, s_damaged = mat.damage_energy_density(e, t(5e-3), law, cst)
        _, s_virgin = mat.damage_energy_density(e, t(0.0), law, cst)
        for a, b in zip(s_damaged, s_virgin):
            assert float(a) == pytest.approx(float(b), rel=1e-12)

    def test_1d_energy_balance(self):
        # work along the full uniaxial softening path equals the closed-form
        # dissipation at full damage, which is G_F per band volume
        E, k0, GF, ell = 2e6, 1e-4, 1.885, 1.0
        kc = mat.kappa_c_from_fracture_energy(GF, E, k0, ell)
        law = mat.DamageLawI(kappa0=k0, kappa_c=kc, E=E)
        es = np.linspace(0, kc, 200001)
        etas = law.eta(t(es))[0].numpy()
        sig = (1.0 - etas) * E * es
        work = float(np.trapezoid(sig, es))
        assert sig[-1] == pytest.approx(0.0, abs=1e-8)
        assert work == pytest.approx(GF / ell, rel=1e-4)
        assert float(law.psi_bar(t(1.0))) == pytest.approx(GF / ell, rel=1e-12)

    def test_history_monotone_over_load_cycle(self, rng):
        law = mat.DamageLawI(kappa0=1e-4, kappa_c=1e-2, E=1.0)
        kappa = t(0.0)
        trials = np.abs(rng.normal(size=30)) * 1e-3
        prev = 0.0
        for tr in trials:
            kappa = mat.kuhn_tucker_update(kappa, t(tr))
            assert float(kappa) >= prev
            prev = float(kappa)
