import numpy as np
import pytest

from borpulse.mie import (
    SphereSpec,
    pec_sphere_fsr,
    coated_sphere_fsr,
    mie_table,
    n_terms,
    spherical_jn_seq,
    spherical_yn_seq,
)


def jn_series(n, x, terms=120):
    """Power-series oracle: sum_k (-1)^k x^(n+2k) / (2^k k! (2n+2k+1)!!).

    Alternating with huge terms at x ~ 30, so summed in extended precision.
    """
    import mpmath as mp

    with mp.workdps(60):
        xm = mp.mpf(x)
        total = mp.mpf(0)
        for k in range(terms):
            num = (-1) ** k * xm ** (n + 2 * k)
            den = mp.mpf(1)
            for i in range(1, k + 1):
                den *= 2 * i
            for i in range(2 * n + 2 * k + 1, 0, -2):
                den *= i
            total += num / den
        return float(total)


class TestSphericalBessel:
    @pytest.mark.parametrize("x", [0.05, 0.7, 3.1, 11.0, 30.0])
    def test_jn_matches_power_series(self, x):
        j = spherical_jn_seq(30, x)
        for n in range(0, 31, 5):
            ref = jn_series(n, x, terms=80)
            assert j[n] == pytest.approx(ref, rel=1e-12, abs=1e-12)

    @pytest.mark.parametrize("x", [0.05, 0.7, 3.1, 11.0, 30.0])
    def test_yn_matches_wronskian(self, x):
        # j_n y_(n-1) - j_(n-1) y_n = 1/x^2 pins y against the j oracle
        j = spherical_jn_seq(30, x)
        y = spherical_yn_seq(30, x)
        for n in range(1, 31, 4):
            wron = j[n] * y[n - 1] - j[n - 1] * y[n]
            assert wron == pytest.approx(1.0 / x ** 2, rel=1e-10)

    def test_x_zero(self):
        j = spherical_jn_seq(5, 0.0)
        assert j[0] == 1.0
        assert np.all(j[1:] == 0.0)


class TestPecSphere:
    def test_rejects_nonpositive_kappa(self):
        with pytest.raises(ValueError):
            pec_sphere_fsr(0.0)
        with pytest.raises(ValueError):
            pec_sphere_fsr(-1.0)

    def test_rayleigh_quadratic_amplitude(self):
        ratio = abs(pec_sphere_fsr(0.01)) / abs(pec_sphere_fsr(0.02))
        assert ratio == pytest.approx(0.25, rel=0.01)

    def test_geometric_optics_limit(self):
        ks = np.linspace(20.0, 30.0, 60)
        mean_sq = np.mean([abs(pec_sphere_fsr(k)) ** 2 for k in ks])
        assert mean_sq == pytest.approx(1.0, rel=0.05)

    def test_geometric_optics_phase(self):
        # specular return of a conducting mirror is inverted: e -> -exp(2jk)
        for k in (25.0, 30.0, 40.0):
            ratio = pec_sphere_fsr(k) / -np.exp(2j * k)
            assert abs(ratio - 1.0) < 0.1

    def test_series_truncation_converged(self):
        n = n_terms(2.25)
        e1 = pec_sphere_fsr(2.25, nmax=n)
        e2 = pec_sphere_fsr(2.25, nmax=n + 10)
        assert abs(e1 - e2) < 1e-10


class TestCoatedSphere:
    def test_eps_one_reduces_to_bare(self):
        for thickness in (0.1, 0.5, 1.0):
            spec = SphereSpec(1.0, thickness, 1.0)
            assert abs(coated_sphere_fsr(1.0, spec) - pec_sphere_fsr(1.0)) < 1e-10

    def test_zero_thickness_reduces_to_bare(self):
        spec = SphereSpec(1.0, 0.0, 2.0)
        assert abs(coated_sphere_fsr(1.0, spec) - pec_sphere_fsr(1.0)) < 1e-10

    def test_frozen_regression_value(self):
        # frozen after dual-route verification (layered series here, and the
        # integral-equation solver cross-check in test_solver.py)
        spec = SphereSpec(1.0, 0.3, 2.0)
        value = coated_sphere_fsr(1.0, spec)
        assert value == pytest.approx(1.7031285172432318 - 1.556252273299899j, rel=1e-12)

    def test_finite_and_continuous(self):
        spec = SphereSpec(1.0, 0.3, 2.0)
        rng = np.random.default_rng(7)
        for k in rng.uniform(0.05, 3.0, size=20):
            e0 = coated_sphere_fsr(k, spec)
            e1 = coated_sphere_fsr(k + 1e-4, spec)
            assert np.isfinite(e0)
            assert abs(e1 - e0) < 1e-2

    def test_table_helper(self):
        ks = np.linspace(0.5, 2.0, 4)
        bare = mie_table(ks)
        assert np.allclose(bare, [pec_sphere_fsr(k) for k in ks])
        spec = SphereSpec(1.0, 0.3, 2.0)
        coated = mie_table(ks, spec)
        assert np.allclose(coated, [coated_sphere_fsr(k, spec) for k in ks])
