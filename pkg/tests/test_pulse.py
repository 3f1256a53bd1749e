import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from borpulse.pulse import PulseSpec, pulse_value, spectrum_value, truncation_fraction


def reference_pulse():
    # c*tau/a = 4, band truncated at omega_max*a/c = 2.25
    return PulseSpec.from_duration(4.0, 2.25)


class TestPulseValue:
    def test_peak_at_origin(self):
        assert pulse_value(0.0, 0.0, reference_pulse()) == 1.0

    def test_one_over_e_at_half_duration(self):
        spec = reference_pulse()
        t = spec.c_tau_over_a / 2.0
        assert pulse_value(t, 0.0, spec) == pytest.approx(1.0 / math.e, rel=1e-14)

    @given(
        s=st.floats(-10, 10),
        t=st.floats(-5, 5),
        z=st.floats(-5, 5),
    )
    def test_propagation_invariance(self, s, t, z):
        spec = reference_pulse()
        assert pulse_value(t, z, spec) == pytest.approx(
            pulse_value(t + s, z + s, spec), rel=1e-12, abs=1e-300
        )


class TestSpectrum:
    def test_dc_value(self):
        spec = reference_pulse()
        assert spectrum_value(0.0, spec) == pytest.approx(
            math.sqrt(math.pi) / spec.g_norm
        )

    def test_one_over_e_point(self):
        spec = reference_pulse()
        ratio = spectrum_value(2.0 * spec.g_norm, spec) / spectrum_value(0.0, spec)
        assert ratio == pytest.approx(1.0 / math.e, rel=1e-14)

    def test_even(self):
        spec = reference_pulse()
        k = np.linspace(0.1, 5, 7)
        assert np.allclose(spectrum_value(k, spec), spectrum_value(-k, spec))


class TestTruncationFraction:
    def test_reference_value(self):
        # the closed form gives ~0.00146 against the published 0.00152;
        # the tolerance band is +-10% around the published number
        frac = truncation_fraction(reference_pulse())
        assert frac == pytest.approx(0.00146, abs=2e-5)
        assert abs(frac - 0.00152) / 0.00152 < 0.10

    def test_zero_band_keeps_nothing(self):
        assert truncation_fraction(PulseSpec(g_norm=0.5, kappa_max=0.0)) == 1.0

    def test_wide_band_tail_is_negligible(self):
        spec = PulseSpec(g_norm=0.5, kappa_max=20 * 0.5)
        assert truncation_fraction(spec) < 1e-20
        spec = PulseSpec(g_norm=0.5, kappa_max=40 * 0.5)
        assert truncation_fraction(spec) < 1e-80

    @given(
        g=st.floats(0.05, 5.0),
        kmax=st.floats(0.01, 10.0),
    )
    @settings(max_examples=50, deadline=None)
    def test_routes_agree(self, g, kmax):
        # truncation_fraction raises internally if closed form and adaptive
        # quadrature disagree beyond 1e-10
        frac = truncation_fraction(PulseSpec(g_norm=g, kappa_max=kmax))
        assert 0.0 <= frac <= 1.0

    def test_monotone_in_kappa_max(self):
        fracs = [
            truncation_fraction(PulseSpec(g_norm=0.5, kappa_max=k))
            for k in np.linspace(0.2, 4.0, 12)
        ]
        assert all(a > b for a, b in zip(fracs[:-1], fracs[1:]))

    def test_monotone_in_duration(self):
        # longer pulse -> narrower spectrum -> smaller neglected fraction
        fracs = [
            truncation_fraction(PulseSpec.from_duration(ct, 2.25))
            for ct in np.linspace(1.0, 8.0, 8)
        ]
        assert all(a > b for a, b in zip(fracs[:-1], fracs[1:]))
