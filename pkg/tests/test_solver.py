import math

import numpy as np
import pytest

from borpulse.geometry import (
    GeometrySpec,
    build_profiles,
    mesh_profile,
    sphere_profile,
)
from borpulse.mie import SphereSpec, pec_sphere_fsr, coated_sphere_fsr
from borpulse.solver import SolverError, modal_green, solve_frequency, sweep


def brute_modal_green(m, src, obs, k, n=100_000):
    """Plain trapezoid oracle for the azimuthal Green's coefficient."""
    psi = np.linspace(0.0, 2.0 * np.pi, n + 1)[:-1]
    rho_s, z_s = src
    rho_o, z_o = obs
    R = np.sqrt(
        (rho_o - rho_s) ** 2 + (z_o - z_s) ** 2
        + 4.0 * rho_o * rho_s * np.sin(psi / 2.0) ** 2
    )
    vals = np.exp(-1j * k * R) / (4.0 * np.pi * R) * np.exp(-1j * m * psi)
    return complex(np.mean(vals))


class TestModalGreen:
    @pytest.mark.parametrize("m", [0, 1, 2])
    @pytest.mark.parametrize(
        "src,obs,k",
        [
            ((0.7, 0.1), (1.2, 0.9), 1.3),
            ((0.9, -0.4), (0.95, -0.35), 2.25),
            ((0.05, 0.0), (1.5, 2.0), 0.4),
        ],
    )
    def test_matches_trapezoid_oracle(self, m, src, obs, k):
        ref = brute_modal_green(m, src, obs, k)
        val = modal_green(m, src, obs, k)
        assert val == pytest.approx(ref, rel=1e-10, abs=1e-12)

    def test_on_axis_source_kills_m1(self):
        # R loses its psi dependence on the axis, so the m = 1 moment vanishes
        val = modal_green(1, (0.0, 0.3), (1.1, 0.8), 1.7)
        assert abs(val) < 1e-14

    def test_static_limit(self):
        # real part tends to the electrostatic ring potential; the imaginary
        # part is the O(k) radiation term, linear in k
        a = modal_green(0, (0.8, 0.0), (1.0, 0.5), 1e-4)
        b = modal_green(0, (0.8, 0.0), (1.0, 0.5), 1e-5)
        assert a.real == pytest.approx(b.real, rel=1e-6)
        assert a.imag / b.imag == pytest.approx(10.0, rel=1e-4)
        assert abs(a.imag) < 1e-3 * abs(a.real)

    def test_near_singular_pair_stable(self):
        # almost-touching rings: the analytic extraction keeps a fixed psi
        # resolution accurate where the raw integrand is sharply peaked
        src, obs = (1.0, 0.0), (1.0 + 7e-4, 7e-4)
        ref = brute_modal_green(0, src, obs, 1.0, n=2_000_000)
        val = modal_green(0, src, obs, 1.0)
        assert val == pytest.approx(ref, rel=1e-10)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            modal_green(3, (1.0, 0.0), (1.0, 1.0), 1.0)
        with pytest.raises(ValueError):
            modal_green(1, (-0.1, 0.0), (1.0, 1.0), 1.0)
        with pytest.raises(ValueError):
            modal_green(1, (1.0, 0.5), (1.0, 0.5), 1.0)


@pytest.fixture(scope="module")
def sphere_meshes():
    prof = sphere_profile(1.0)
    return {ppw: mesh_profile(prof, 2.25, ppw) for ppw in (15, 30)}


class TestPecSphere:
    def test_matches_mie_and_converges(self, sphere_meshes):
        # phase origin at the sphere center to match the series convention
        errors = {}
        for ppw, mesh in sphere_meshes.items():
            for kappa in (0.5, 1.0, 2.0):
                s = solve_frequency(mesh, None, 1.0, kappa, phase_origin_z=1.0)
                ref = pec_sphere_fsr(kappa)
                errors[ppw, kappa] = abs(s.e_complex - ref) / abs(ref)
        for kappa in (0.5, 1.0, 2.0):
            assert errors[15, kappa] < 0.02
            assert errors[15, kappa] < 2e-3  # regression margin
            assert errors[30, kappa] < errors[15, kappa]

    def test_rejects_kappa_beyond_mesh(self, sphere_meshes):
        with pytest.raises(ValueError):
            solve_frequency(sphere_meshes[15], None, 1.0, 3.0)
        with pytest.raises(ValueError):
            solve_frequency(sphere_meshes[15], None, 1.0, 0.0)

    def test_condition_guard(self, sphere_meshes):
        with pytest.raises(SolverError, match="kappa"):
            solve_frequency(sphere_meshes[15], None, 1.0, 1.0, cond_limit=1.0)


@pytest.fixture(scope="module")
def coated_meshes():
    eps = 2.0
    ri = math.sqrt(eps)
    core = mesh_profile(sphere_profile(1.0), 2.25, 15, refractive_index=ri)
    outer = mesh_profile(
        sphere_profile(1.3, center_z=1.0), 2.25, 15, refractive_index=ri
    )
    return core, outer


class TestCoatedSphere:
    def test_matches_layered_series(self, coated_meshes):
        core, outer = coated_meshes
        spec = SphereSpec(1.0, 0.3, 2.0)
        for kappa in (0.5, 1.0, 2.0):
            s = solve_frequency(core, outer, 2.0, kappa, phase_origin_z=1.0)
            ref = coated_sphere_fsr(kappa, spec)
            rel = abs(s.e_complex - ref) / abs(ref)
            assert rel < 0.05
            assert rel < 5e-3  # regression margin

    def test_confirms_frozen_series_value(self, coated_meshes):
        # independent route to the constant frozen in test_mie.py
        core, outer = coated_meshes
        s = solve_frequency(core, outer, 2.0, 1.0, phase_origin_z=1.0)
        frozen = 1.7031285172432318 - 1.556252273299899j
        assert abs(s.e_complex - frozen) / abs(frozen) < 1e-3


@pytest.fixture(scope="module")
def cone_mesh():
    spec = GeometrySpec(math.radians(11.5), 1.0, 0.32, 0.0, 1.0)
    pec, _ = build_profiles(spec)
    return pec, mesh_profile(pec, 2.25, 15)


class TestConeInvariants:
    def test_translation_phase(self, cone_mesh):
        _, mesh = cone_mesh
        base = solve_frequency(mesh, None, 1.0, 1.7)
        moved = solve_frequency(mesh, None, 1.0, 1.7, phase_origin_z=0.4)
        assert abs(abs(moved.e_complex) - abs(base.e_complex)) < 1e-10
        pred = base.e_complex * np.exp(2j * 1.7 * 0.4)
        assert abs(moved.e_complex - pred) < 1e-10

    def test_unit_permittivity_layer_is_transparent(self, cone_mesh):
        pec, mesh = cone_mesh
        coat = mesh_profile(pec.offset(0.15), 2.25, 15)
        bare = solve_frequency(mesh, None, 1.0, 1.7)
        layered = solve_frequency(mesh, coat, 1.0, 1.7)
        rel = abs(layered.e_complex - bare.e_complex) / abs(bare.e_complex)
        assert rel < 0.01

    def test_mesh_convergence_at_band_edge(self, cone_mesh):
        pec, mesh15 = cone_mesh
        mesh30 = mesh_profile(pec, 2.25, 30)
        a15 = abs(solve_frequency(mesh15, None, 1.0, 2.25).e_complex)
        a30 = abs(solve_frequency(mesh30, None, 1.0, 2.25).e_complex)
        assert abs(a30 - a15) / a30 < 0.01


class TestSweep:
    def test_deterministic_across_workers(self):
        mesh = mesh_profile(sphere_profile(1.0), 1.0, 10)
        grid = np.linspace(0.25, 1.0, 4)
        one = sweep((mesh, None), 1.0, grid, worker_count=1)
        many = sweep((mesh, None), 1.0, grid, worker_count=3)
        assert one.to_csv() == many.to_csv()

    def test_metadata_provenance(self):
        mesh = mesh_profile(sphere_profile(1.0), 1.0, 10)
        table = sweep((mesh, None), 1.0, np.array([0.5, 1.0]))
        for key in ("geometry_hash", "eps", "ppw", "solver_version"):
            assert key in table.metadata

    def test_rejects_bad_grid(self):
        mesh = mesh_profile(sphere_profile(1.0), 1.0, 10)
        with pytest.raises(ValueError):
            sweep((mesh, None), 1.0, np.array([1.0, 0.5]))
        with pytest.raises(ValueError):
            sweep((mesh, None), 1.0, np.array([0.5, 1.0]), worker_count=0)

    def test_rayleigh_scaling(self):
        mesh = mesh_profile(sphere_profile(1.0), 1.0, 10)
        table = sweep((mesh, None), 1.0, np.array([0.05, 0.1]))
        ratio = np.abs(table.e_complex[0]) / np.abs(table.e_complex[1])
        assert ratio == pytest.approx(0.25, rel=0.05)
