"""Azimuthal modal kernels of the free-space Green's function.

For a body of revolution the surface integral equations reduce to line
integrals along the generatrix with kernels

    g_m(a, b) = int_0^{2pi} exp(-jkR)/(4 pi R) cos(m psi) dpsi
    p_m(a, b) = int_0^{2pi} -(1 + jkR) exp(-jkR)/(4 pi R^3) cos(m psi) dpsi

with R^2 = (rho_a - rho_b)^2 + (z_a - z_b)^2 + 4 rho_a rho_b sin^2(psi/2)
(time convention exp(+j omega t), outgoing Green's function exp(-jkR)).
p_m arises from the gradient of the Green's function (the K operator).

The azimuthal integrand peaks sharply when the points are close; the static
parts 1/R, R, 1/R^3 are integrated in closed form with complete elliptic
integrals and only a smooth remainder goes through the periodic trapezoid
rule, so a fixed psi resolution is accurate uniformly in the separation.
"""

import numpy as np
from scipy import special

__all__ = ["modal_kernels", "modal_green"]

_TRAP_N = 48


def _elliptic_statics(d2, B, need_p):
    """Closed-form integrals int cos(m psi) {1/R, R, 1/R^3} dpsi, m = 0..2.

    Valid (and used) only where kap2 = B/A is not small; substitution
    psi = pi - 2 theta maps them onto complete elliptic integrals with
    parameter kap2, R^2 = A (1 - kap2 sin^2 theta).
    """
    A = d2 + B
    kap2 = B / A
    k2c = d2 / A  # complementary parameter
    K = special.ellipkm1(np.maximum(k2c, 1e-300))
    E = special.ellipe(kap2)
    sA = np.sqrt(A)

    # int_0^{pi/2} powers of Delta = sqrt(1 - kap2 sin^2 t)
    i_m1 = K                                  # Delta^-1
    i_p1 = E                                  # Delta^1
    i_p3 = (2.0 * (2.0 - kap2) * E - (1.0 - kap2) * K) / 3.0
    i_p5 = (4.0 * (2.0 - kap2) * i_p3 - 3.0 * (1.0 - kap2) * E) / 5.0
    s2_m1 = (K - E) / kap2                    # sin^2 / Delta
    s4_m1 = ((2.0 + kap2) * K - 2.0 * (1.0 + kap2) * E) / (3.0 * kap2 ** 2)
    s2_p1 = (E - i_p3) / kap2                 # sin^2 * Delta
    s4_p1 = (s2_p1 - (i_p3 - i_p5) / kap2) / kap2

    # cos(2mt) moments: cos2t = 1 - 2 sin^2, cos4t = 1 - 8 sin^2 + 8 sin^4
    def moments(base, s2, s4):
        m0 = base
        m1 = base - 2.0 * s2
        m2 = base - 8.0 * s2 + 8.0 * s4
        return m0, m1, m2

    inv_m = moments(i_m1, s2_m1, s4_m1)
    lin_m = moments(i_p1, s2_p1, s4_p1)

    # int cos(m psi)/R dpsi = (4/sqrt(A)) (-1)^m int cos(2mt)/Delta dt
    inv = [4.0 / sA * v * s for v, s in zip(inv_m, (1.0, -1.0, 1.0))]
    lin = [4.0 * sA * v * s for v, s in zip(lin_m, (1.0, -1.0, 1.0))]

    cub = None
    if need_p:
        j0 = E / k2c                          # Delta^-3
        j1 = (E / k2c - K) / kap2             # sin^2 / Delta^3
        j2 = (E / k2c - 2.0 * K + E) / kap2 ** 2
        cub_m = moments(j0, j1, j2)
        cub = [4.0 / A / sA * v * s for v, s in zip(cub_m, (1.0, -1.0, 1.0))]
    return inv, lin, cub


def _g_remainder(x, k, R, ex):
    """(exp(-jkR) - 1 + k^2 R^2 / 2) / R: smooth through O(R^2)."""
    out = np.empty(x.shape, dtype=complex)
    small = np.abs(x) < 0.2
    xs = x[small]
    y = 1j * xs
    # exp(-y) - 1 - y^2/2 summed from the linear term
    series = -y - y ** 3 / 6 + y ** 4 / 24 - y ** 5 / 120 + y ** 6 / 720 \
        - y ** 7 / 5040 + y ** 8 / 40320
    out[small] = series * np.where(xs != 0, k / np.maximum(xs, 1e-300), 0.0)
    big = ~small
    xl = x[big]
    out[big] = (ex[big] - 1.0 + xl ** 2 / 2.0) / R[big]
    return out


def _p_remainder(x, k, R, ex):
    """-(1+jkR)exp(-jkR)/R^3 + 1/R^3 + k^2/(2R) - k^4 R/8: smooth to O(R^2)."""
    out = np.empty(x.shape, dtype=complex)
    small = np.abs(x) < 0.2
    y = 1j * x[small]
    # -( (1+y)exp(-y) - 1 + y^2/2 + y^4/8 ) / R^3, series from y^3
    series = -(y ** 3 / 3 + y ** 5 / 30 - y ** 6 / 144 + y ** 7 / 840
               - y ** 8 / 5760)
    r3 = np.maximum(R[small] ** 3, 1e-300)
    out[small] = series / r3
    big = ~small
    xl = x[big]
    rl = R[big]
    out[big] = (
        -(1.0 + 1j * xl) * ex[big] + 1.0 + xl ** 2 / 2.0 - xl ** 4 / 8.0
    ) / rl ** 3
    return out


def modal_kernels(rho_a, z_a, rho_b, z_b, k, need_p=False, n_psi=_TRAP_N,
                  chunk=2_000_000, pairwise=False):
    """g_m (and optionally p_m) for m = 0, 1, 2 between two point sets.

    Returns dict {"g": [g0, g1, g2], "p": [p0, p1, p2] or None}.  By default
    all cross pairs are evaluated, each entry a (len(a), len(b)) complex
    array; with pairwise=True the inputs must have equal length n and each
    entry is the (n,) elementwise-paired kernel.
    """
    rho_a = np.atleast_1d(np.asarray(rho_a, dtype=float))
    rho_b = np.atleast_1d(np.asarray(rho_b, dtype=float))
    z_a = np.atleast_1d(np.asarray(z_a, dtype=float))
    z_b = np.atleast_1d(np.asarray(z_b, dtype=float))
    na, nb = rho_a.size, rho_b.size

    if pairwise:
        if not (na == nb == z_a.size == z_b.size):
            raise ValueError("pairwise mode needs equal-length point lists")
        d2 = (rho_a - rho_b) ** 2 + (z_a - z_b) ** 2
        B = 4.0 * rho_a * rho_b
        shape = (na,)
    else:
        d2 = (rho_a[:, None] - rho_b) ** 2 + (z_a[:, None] - z_b) ** 2
        B = 4.0 * rho_a[:, None] * rho_b
        shape = (na, nb)
    A = d2 + B
    kap2 = B / np.maximum(A, 1e-300)
    extract = kap2 > 0.5  # sharp azimuthal peak: use analytic statics

    psi = np.linspace(0.0, np.pi, n_psi + 1)
    w = np.full(n_psi + 1, np.pi / n_psi)
    w[0] *= 0.5
    w[-1] *= 0.5
    w *= 2.0  # even integrand on [0, 2pi]
    cosm = np.stack([np.cos(m * psi) for m in range(3)])  # (3, npsi)
    sin_half2 = np.sin(psi / 2.0) ** 2

    g = [np.empty(shape, dtype=complex) for _ in range(3)]
    p = [np.empty(shape, dtype=complex) for _ in range(3)] if need_p else None

    flat_d2 = d2.ravel()
    flat_B = B.ravel()
    flat_ex = extract.ravel()
    n_pairs = flat_d2.size
    rows = max(1, chunk // (n_psi + 1))

    for start in range(0, n_pairs, rows):
        sl = slice(start, min(start + rows, n_pairs))
        cd2 = flat_d2[sl][:, None]
        cB = flat_B[sl][:, None]
        ex = flat_ex[sl]
        # ring-coincident pairs are truly singular; emit 0 for them (they
        # only arise as assembler self terms whose naive contribution the
        # near-pair correction cancels exactly)
        coincident = flat_d2[sl] == 0.0
        R = np.sqrt(cd2 + cB * sin_half2)
        x = k * R
        Rsafe = np.maximum(R, 1e-300)
        phase = np.exp(-1j * x)

        with np.errstate(divide="ignore", invalid="ignore"):
            g_int = np.empty(x.shape, dtype=complex)
            nx = ~ex
            g_int[nx] = phase[nx] / Rsafe[nx]
            g_int[ex] = _g_remainder(x[ex], k, Rsafe[ex], phase[ex])
            gm = (g_int * w) @ cosm.T / (4.0 * np.pi)  # (rows, 3)
            if need_p:
                p_int = np.empty(x.shape, dtype=complex)
                p_int[nx] = -(1.0 + 1j * x[nx]) * phase[nx] / Rsafe[nx] ** 3
                p_int[ex] = _p_remainder(x[ex], k, Rsafe[ex], phase[ex])
                pm = (p_int * w) @ cosm.T / (4.0 * np.pi)

            if np.any(ex):
                inv, lin, cub = _elliptic_statics(
                    flat_d2[sl][ex], flat_B[sl][ex], need_p
                )
                for m in range(3):
                    add = (inv[m] - k ** 2 / 2.0 * lin[m]) / (4.0 * np.pi)
                    col = gm[:, m]
                    col[ex] += add
                    if need_p:
                        addp = (
                            -cub[m] - k ** 2 / 2.0 * inv[m]
                            + k ** 4 / 8.0 * lin[m]
                        ) / (4.0 * np.pi)
                        pcol = pm[:, m]
                        pcol[ex] += addp

        gm[coincident] = 0.0
        if need_p:
            pm[coincident] = 0.0
        for m in range(3):
            g[m].ravel()[sl] = gm[:, m]
            if need_p:
                p[m].ravel()[sl] = pm[:, m]

    return {"g": g, "p": p}


def modal_green(m, src, obs, k, n_psi=2048):
    """Azimuthal Fourier coefficient of the free-space Green's function.

    (1/2pi) int_0^{2pi} exp(-jkR)/(4 pi R) exp(-j m psi) dpsi for a source
    ring point (rho, z) and an observation point (rho, z).  Coincident points
    are rejected; assembler self terms use the extracted statics instead.
    """
    if m not in (0, 1, 2):
        raise ValueError("modal index m must be 0, 1 or 2")
    rho_s, z_s = src
    rho_o, z_o = obs
    if rho_s < 0 or rho_o < 0:
        raise ValueError("rho coordinates must be >= 0")
    if rho_s == rho_o and z_s == z_o:
        raise ValueError("coincident source and observation points")
    out = modal_kernels(
        [rho_o], [z_o], [rho_s], [z_s], k, need_p=False, n_psi=n_psi
    )
    return complex(out["g"][m][0, 0]) / (2.0 * np.pi)
