"""Exact series backscatter for a PEC sphere and a PEC sphere with a
concentric dielectric shell.

This is the independent correctness oracle for the integral-equation solver.
Conventions match the solver: time dependence exp(+j omega t), outgoing waves
h_n^(2), incident plane wave travelling in +z, and the normalization
sigma_back/(pi a^2) = |e|^2 with the phase referenced at the sphere center.
"""

from dataclasses import dataclass
import math

import numpy as np

__all__ = [
    "SphereSpec",
    "pec_sphere_fsr",
    "coated_sphere_fsr",
    "mie_table",
    "spherical_jn_seq",
    "spherical_yn_seq",
]


@dataclass(frozen=True)
class SphereSpec:
    """PEC core of radius a with an optional concentric dielectric shell."""

    core_radius: float = 1.0
    shell_thickness: float = 0.0
    permittivity_eps: float = 1.0

    def __post_init__(self):
        if self.core_radius <= 0.0:
            raise ValueError("core_radius must be positive")
        if self.shell_thickness < 0.0:
            raise ValueError("shell_thickness must be >= 0")
        if self.permittivity_eps < 1.0:
            raise ValueError("permittivity_eps must be >= 1")


def n_terms(x_outer):
    """Series truncation order for outer size parameter x_outer."""
    return int(math.ceil(x_outer + 4.0 * x_outer ** (1.0 / 3.0) + 10.0))


def spherical_jn_seq(nmax, x):
    """j_n(x) for n = 0..nmax by normalized downward recurrence."""
    if x < 0:
        raise ValueError("x must be >= 0")
    out = np.zeros(nmax + 1)
    if x == 0.0:
        out[0] = 1.0
        return out
    m = nmax + int(x) + 25
    fp, f = 0.0, 1e-30
    tail = np.zeros(nmax + 2)
    for n in range(m, 0, -1):
        fm = (2 * n + 1) / x * f - fp
        fp, f = f, fm
        if n - 1 <= nmax + 1:
            tail[n - 1] = f
        if abs(f) > 1e250:  # rescale to avoid overflow on the way down
            fp /= 1e250
            f /= 1e250
            tail /= 1e250
    scale = (math.sin(x) / x) / tail[0]
    out[:] = tail[:nmax + 1] * scale
    return out


def spherical_yn_seq(nmax, x):
    """y_n(x) for n = 0..nmax by upward recurrence."""
    if x <= 0:
        raise ValueError("x must be positive")
    out = np.zeros(nmax + 1)
    out[0] = -math.cos(x) / x
    if nmax >= 1:
        out[1] = -math.cos(x) / x ** 2 - math.sin(x) / x
    for n in range(1, nmax):
        out[n + 1] = (2 * n + 1) / x * out[n] - out[n - 1]
    return out


def _riccati(nmax, x):
    """Riccati-Bessel psi, psi', zeta2, zeta2' at x, for n = 1..nmax.

    psi_n = x j_n, zeta2_n = x h2_n with h2 = j - i y; primes are d/dx,
    psi_n' = x j_(n-1) - n j_n.
    """
    j = spherical_jn_seq(nmax, x)
    y = spherical_yn_seq(nmax, x)
    n = np.arange(1, nmax + 1)
    psi = x * j[1:]
    dpsi = x * j[:-1] - n * j[1:]
    zy = x * y[1:]
    dzy = x * y[:-1] - n * y[1:]
    zeta = psi - 1j * zy
    dzeta = dpsi - 1j * dzy
    return psi, dpsi, zy, dzy, zeta, dzeta


def _backscatter_sum(kappa, a_coef, b_coef):
    n = np.arange(1, a_coef.size + 1)
    signs = (-1.0) ** n
    # sign fixed by the geometric-optics limit e -> -exp(2j kappa): the
    # specular return of a PEC mirror is inverted (reflection coefficient -1)
    total = np.sum((2 * n + 1) * signs * (a_coef - b_coef))
    return -1j / kappa * total


def pec_sphere_fsr(kappa, nmax=None):
    """Normalized complex backscatter of a bare PEC sphere at kappa = ka."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if nmax is None:
        nmax = n_terms(kappa)
    psi, dpsi, _, _, zeta, dzeta = _riccati(nmax, kappa)
    a_coef = psi / zeta
    b_coef = dpsi / dzeta
    return complex(_backscatter_sum(kappa, a_coef, b_coef))


def coated_sphere_fsr(kappa, spec, nmax=None):
    """Normalized complex backscatter of a coated PEC sphere.

    kappa = omega * core_radius / c and the normalization radius is the core
    radius, so eps = 1 or zero thickness reduce exactly to the bare sphere.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    eps = spec.permittivity_eps
    ratio = 1.0 + spec.shell_thickness / spec.core_radius
    if spec.shell_thickness == 0.0:
        return pec_sphere_fsr(kappa, nmax=nmax)
    m1 = math.sqrt(eps)
    x0 = kappa * ratio          # free-space size parameter at the outer surface
    x1a = m1 * kappa            # shell argument at the core
    x1b = m1 * x0               # shell argument at the outer surface
    if nmax is None:
        nmax = n_terms(x1b)

    psi0, dpsi0, _, _, zeta0, dzeta0 = _riccati(nmax, x0)
    u1a, du1a, u2a, du2a, _, _ = _riccati(nmax, x1a)
    u1b, du1b, u2b, du2b, _, _ = _riccati(nmax, x1b)

    # Shell radial functions with the PEC condition at the core, written in
    # cross-product form so zeros of individual Bessel functions are harmless.
    # TE (a-type): tangential E vanishes at the core; match F, F' at r = b.
    d_te = m1 * kappa * (du1b * u2a - du2b * u1a) / (u1b * u2a - u2b * u1a)
    # TM (b-type): radial derivative vanishes at the core; match F, F'/eps.
    d_tm = (kappa / m1) * (du1b * du2a - du2b * du1a) / (u1b * du2a - u2b * du1a)

    # Exterior matching at r = b, everything normalized by the core radius:
    # k0 (psi' - a xi')(x0) = D (psi - a xi)(x0) with D scaled by core_radius.
    a_coef = (kappa * dpsi0 - d_te * psi0) / (kappa * dzeta0 - d_te * zeta0)
    b_coef = (kappa * dpsi0 - d_tm * psi0) / (kappa * dzeta0 - d_tm * zeta0)
    return complex(_backscatter_sum(kappa, a_coef, b_coef))


def mie_table(kappas, spec=None):
    """Backscatter samples over a kappa grid (bare PEC when spec is None)."""
    kappas = np.asarray(kappas, dtype=float)
    if spec is None or (spec.shell_thickness == 0.0 or spec.permittivity_eps == 1.0):
        values = [pec_sphere_fsr(float(k)) for k in kappas]
    else:
        values = [coated_sphere_fsr(float(k), spec) for k in kappas]
    return np.array(values)
