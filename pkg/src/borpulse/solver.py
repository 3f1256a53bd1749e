"""Frequency-domain surface-integral-equation solver for the coated BOR.

Axial plane-wave incidence (x-polarized, travelling +z) excites only the
azimuthal mode m = 1.  The PEC surface carries an electric current solved
from the EFIE; with a dielectric layer, equivalent electric and magnetic
currents on the outer surface satisfy PMCHWT continuity equations coupled to
the interior EFIE on the conductor.  Galerkin testing with triangle functions
along the generatrix times exp(j m phi) azimuthally, plus one combined
half-triangle unknown per on-axis endpoint carrying the circular polarization
J_phi = j sigma J_s that keeps the m = 1 current finite over the pole; time
convention exp(+j omega t).

All operators reduce to 1-D double integrals along the generatrix with the
modal kernels of kernels.py.  Element pairs that are close compared with
their size get a corrected quadrature: the source element is re-integrated
on panels graded geometrically toward the nearest point, which resolves the
logarithmic (and odd principal-value) behaviour of the kernels.
"""

from concurrent.futures import ProcessPoolExecutor
import functools
import hashlib
import math

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import linalg

from .fsr import FsrSample, FsrTable
from .kernels import modal_kernels, modal_green  # noqa: F401  (re-export)

__all__ = ["SolverError", "solve_frequency", "sweep", "modal_green",
           "SOLVER_VERSION"]

SOLVER_VERSION = "1.0.0"

_ORDER = 8          # Gauss points per element (and per graded panel)
_NEAR = 1.5         # pairs closer than _NEAR*(h_a+h_b) get corrected
_RATIO = 0.2        # geometric grading ratio of the panel widths
_CUT = 2e-4         # innermost panel width / source element length
_M = 1              # azimuthal mode


class SolverError(RuntimeError):
    pass


@functools.lru_cache(maxsize=None)
def _gauss(order=_ORDER):
    x, w = leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _basis_rows(nodes, s):
    """Meridian function values and d/ds at points s.

    Row 0 / row n-1 are the half-triangles at the on-axis endpoints (used
    only inside the combined pole functions); rows 1..n-2 are the triangles
    on the interior nodes.
    """
    nf = nodes.size  # = triangles + 2 halves
    F = np.zeros((nf, s.size))
    Fp = np.zeros((nf, s.size))
    for i in range(nodes.size - 1):
        h = nodes[i + 1] - nodes[i]
        last = i == nodes.size - 2
        on = (s >= nodes[i]) & ((s <= nodes[i + 1]) if last else
                                (s < nodes[i + 1]))
        # falling function of node i and rising function of node i+1
        F[i, on] = (nodes[i + 1] - s[on]) / h
        Fp[i, on] = -1.0 / h
        F[i + 1, on] = (s[on] - nodes[i]) / h
        Fp[i + 1, on] = 1.0 / h
    return F, Fp


class _Quad:
    """Gauss quadrature points and basis values on a meshed generatrix."""

    def __init__(self, mesh, order=_ORDER):
        self.mesh = mesh
        nodes = mesh.nodes_s
        x, w = _gauss(order)
        h = np.diff(nodes)
        mid = 0.5 * (nodes[:-1] + nodes[1:])
        self.s = (mid[:, None] + 0.5 * h[:, None] * x).ravel()
        self.w = (0.5 * h[:, None] * w).ravel()
        pos = mesh.profile.point(self.s)
        tan = mesh.profile.tangent(self.s)
        self.rho, self.z = pos[0], pos[1]
        self.drho, self.dz = tan[0], tan[1]
        self.F, self.Fp = _basis_rows(nodes, self.s)
        self.order = order
        self.n_funcs = nodes.size
        self.C = self._combination()
        self.n_unknowns = self.C.shape[1]

    def _combination(self):
        """Map unknowns to (s, phi) meridian-function coefficients.

        Interior triangles carry independent s and phi coefficients.  At an
        on-axis endpoint the m = 1 current stays finite only in the circular
        combination J_phi = j sigma J_s (sigma the sign of drho/ds there), so
        each such endpoint contributes one combined half-triangle unknown
        instead of pinning the current to zero.
        """
        nodes = self.mesh.nodes_s
        nf = self.n_funcs
        n_tri = nf - 2
        ends = np.array([nodes[0], nodes[-1]])
        rho_end = self.mesh.profile.point(ends)[0]
        drho_end = self.mesh.profile.tangent(ends)[0]
        scale = nodes[-1] - nodes[0]
        poles = [
            (row, 1.0 if drho > 0 else -1.0)
            for row, rho, drho in ((0, rho_end[0], drho_end[0]),
                                   (nf - 1, rho_end[1], drho_end[1]))
            if rho < 1e-12 * scale
        ]
        C = np.zeros((2 * nf, 2 * n_tri + len(poles)), dtype=complex)
        C[1:nf - 1, :n_tri] = np.eye(n_tri)
        C[nf + 1:2 * nf - 1, n_tri:2 * n_tri] = np.eye(n_tri)
        for col, (row, sigma) in enumerate(poles, start=2 * n_tri):
            C[row, col] = 1.0
            C[nf + row, col] = 1j * sigma
        return C

    def group(self):
        return {
            "w": self.w, "rho": self.rho, "z": self.z,
            "drho": self.drho, "dz": self.dz, "F": self.F, "Fp": self.Fp,
        }


def _wt(q, extra=None):
    wgt = q["w"] * q["rho"]
    if extra is not None:
        wgt = wgt * extra
    return q["F"] * wgt


def _con(A, g, B):
    """Contraction A g B^T; for a paired 1-D kernel the per-entry products
    are kept unsummed, (n_a, n_b, n) shaped, for scattered accumulation."""
    if g.ndim == 2:
        return A @ g @ B.T
    return A[:, None, :] * g * B[None, :, :]


def _t_blocks(qa, qb, ker, k):
    """Galerkin EFIE operator T = k (f, f' G) - (1/k) (div f, div f' G)."""
    g0, g1, g2 = ker["g"]
    gc = 0.5 * (g0 + g2)
    gs = 0.5j * (g0 - g2)
    g = g1
    div_a = (qa["drho"] * qa["F"] + qa["rho"] * qa["Fp"]) * qa["w"]
    div_b = (qb["drho"] * qb["F"] + qb["rho"] * qb["Fp"]) * qb["w"]
    w0_a = qa["F"] * qa["w"]
    w0_b = qb["F"] * qb["w"]
    ur_a, ur_b = _wt(qa), _wt(qb)
    urd_a, urd_b = _wt(qa, qa["drho"]), _wt(qb, qb["drho"])
    uz_a, uz_b = _wt(qa, qa["dz"]), _wt(qb, qb["dz"])
    two_pi = 2.0 * np.pi
    return {
        "ss": two_pi * (k * (_con(urd_a, gc, urd_b) + _con(uz_a, g, uz_b))
                        - _con(div_a, g, div_b) / k),
        "sf": two_pi * (-k * _con(urd_a, gs, ur_b)
                        - 1j * _M / k * _con(div_a, g, w0_b)),
        "fs": two_pi * (k * _con(ur_a, gs, urd_b)
                        + 1j * _M / k * _con(w0_a, g, div_b)),
        "ff": two_pi * (k * _con(ur_a, gc, ur_b)
                        - _M * _M / k * _con(w0_a, g, w0_b)),
    }


def _k_blocks(qa, qb, ker):
    """Galerkin K operator (f, grad G x f'), reduced to modal p kernels."""
    p0, p1, p2 = ker["p"]
    pc = 0.5 * (p0 + p2)
    ps = 0.5j * (p0 - p2)
    p = p1
    a = {name: _wt(qa, extra) for name, extra in (
        ("1", None), ("rd", qa["drho"]), ("rz", qa["rho"] * qa["dz"]),
        ("zrd", qa["z"] * qa["drho"]), ("z", qa["z"]), ("dz", qa["dz"]),
        ("r", qa["rho"]),
        ("mix", qa["rho"] * qa["dz"] - qa["z"] * qa["drho"]),
    )}
    b = {name: _wt(qb, extra) for name, extra in (
        ("1", None), ("rd", qb["drho"]), ("rz", qb["rho"] * qb["dz"]),
        ("zrd", qb["z"] * qb["drho"]), ("z", qb["z"]), ("dz", qb["dz"]),
        ("r", qb["rho"]),
        ("mix", qb["rho"] * qb["dz"] - qb["z"] * qb["drho"]),
    )}
    two_pi = 2.0 * np.pi
    k_ss = two_pi * (
        -_con(a["rd"], ps, b["rz"]) - _con(a["zrd"], ps, b["rd"])
        + _con(a["rd"], ps, b["zrd"]) + _con(a["rz"], ps, b["rd"])
    )
    k_sf = two_pi * (
        _con(a["mix"], pc, b["1"]) + _con(a["rd"], pc, b["z"])
        - _con(a["dz"], p, b["r"])
    )
    k_fs = two_pi * (
        -_con(a["r"], p, b["dz"]) + _con(a["1"], pc, b["mix"])
        + _con(a["z"], pc, b["rd"])
    )
    k_ff = two_pi * (-_con(a["z"], ps, b["1"]) + _con(a["1"], ps, b["z"]))
    return {"ss": k_ss, "sf": k_sf, "fs": k_fs, "ff": k_ff}


def _element_geometry(quad):
    order = quad.order
    rho = quad.rho.reshape(-1, order)
    z = quad.z.reshape(-1, order)
    mid = np.stack([rho.mean(axis=1), z.mean(axis=1)])
    h = np.diff(quad.mesh.nodes_s)
    return mid, h


def _near_pairs(qa, qb):
    mid_a, h_a = _element_geometry(qa)
    mid_b, h_b = _element_geometry(qb)
    dist = np.hypot(mid_a[0][:, None] - mid_b[0], mid_a[1][:, None] - mid_b[1])
    mask = dist < _NEAR * (h_a[:, None] + h_b)
    ea, eb = np.nonzero(mask)
    return list(zip(ea.tolist(), eb.tolist()))


def _graded_points(sa, sb, s_star, order):
    """Panel quadrature on [sa, sb] refined geometrically toward s_star."""
    x, w = _gauss(order)
    cut = _CUT * (sb - sa)
    pts, wts = [], []
    for lo, hi, sign in ((s_star, sb, 1.0), (sa, s_star, -1.0)):
        length = hi - lo if sign > 0 else s_star - sa
        if length <= 0:
            continue
        edges = [0.0, min(cut, length)]
        while edges[-1] < length:
            edges.append(min(length, edges[-1] / _RATIO))
        for d0, d1 in zip(edges[:-1], edges[1:]):
            mid, half = 0.5 * (d0 + d1), 0.5 * (d1 - d0)
            pts.append(s_star + sign * (mid + half * x))
            wts.append(np.full(order, 0.0) + half * w)
    return np.concatenate(pts), np.concatenate(wts)


def _nearest_on_element(qb, eb, point):
    s0, s1 = qb.mesh.nodes_s[eb], qb.mesh.nodes_s[eb + 1]
    cand = np.linspace(s0, s1, 33)
    pos = qb.mesh.profile.point(cand)
    d = np.hypot(pos[0] - point[0], pos[1] - point[1])
    return float(cand[np.argmin(d)])


def _pair_entries(qa, qb, ea, eb, same):
    """Flattened (test point, source point) list for one near element pair.

    Each test Gauss point is paired with graded panels toward its nearest
    source point, plus the element's standard Gauss points with negated
    weights so the pair's naive fast-path contribution cancels.
    """
    order = qa.order
    nodes_b = qb.mesh.nodes_s
    cols = slice(ea * order, (ea + 1) * order)
    s_t = qa.s[cols]
    sa, sb = float(nodes_b[eb]), float(nodes_b[eb + 1])
    src_s, src_w, t_of = [], [], []
    for i, st in enumerate(s_t):
        if same:
            s_star = min(max(float(st), sa), sb)
        else:
            s_star = _nearest_on_element(
                qb, eb, (qa.rho[cols][i], qa.z[cols][i])
            )
        ps, ws = _graded_points(sa, sb, s_star, order)
        src_s.append(ps)
        src_w.append(ws)
        t_of.append(np.full(ps.size, i))
    colb = slice(eb * order, (eb + 1) * order)
    src_s.append(np.tile(qb.s[colb], order))
    src_w.append(np.tile(-qb.w[colb], order))
    t_of.append(np.repeat(np.arange(order), order))
    src_s = np.concatenate(src_s)
    src_w = np.concatenate(src_w)
    t_idx = cols.start + np.concatenate(t_of)
    return t_idx, src_s, src_w


def _side_group(quad, point_idx, local_e):
    """Per-entry test-side attributes taken from the precomputed quadrature."""
    F = np.stack([quad.F[local_e, point_idx], quad.F[local_e + 1, point_idx]])
    Fp = np.stack([quad.Fp[local_e, point_idx],
                   quad.Fp[local_e + 1, point_idx]])
    return {
        "w": quad.w[point_idx], "rho": quad.rho[point_idx],
        "z": quad.z[point_idx], "drho": quad.drho[point_idx],
        "dz": quad.dz[point_idx], "F": F, "Fp": Fp,
    }


def _scatter(dst, vals, ia, ib):
    n = ia.shape[1]
    IA = np.broadcast_to(ia[:, None, :], (2, 2, n))
    IB = np.broadcast_to(ib[None, :, :], (2, 2, n))
    for key in dst:
        np.add.at(dst[key], (IA, IB), vals[key])


_BATCH_ENTRIES = 200_000


def _corrections(T, K, qa, qb, k, need_kop):
    """Replace the naive Gauss product with graded panels for near pairs."""
    pairs = _near_pairs(qa, qb)
    if not pairs:
        return
    same = qa.mesh is qb.mesh
    batch, count = [], 0
    for ea, eb in pairs:
        t_idx, src_s, src_w = _pair_entries(qa, qb, ea, eb, same)
        batch.append((ea, eb, t_idx, src_s, src_w))
        count += t_idx.size
        if count >= _BATCH_ENTRIES:
            _apply_batch(T, K, qa, qb, k, need_kop, batch)
            batch, count = [], 0
    if batch:
        _apply_batch(T, K, qa, qb, k, need_kop, batch)


def _apply_batch(T, K, qa, qb, k, need_kop, batch):
    t_idx = np.concatenate([b[2] for b in batch])
    src_s = np.concatenate([b[3] for b in batch])
    src_w = np.concatenate([b[4] for b in batch])
    ea = np.concatenate([np.full(b[2].size, b[0]) for b in batch])
    eb = np.concatenate([np.full(b[2].size, b[1]) for b in batch])

    grp_a = _side_group(qa, t_idx, ea)
    pos = qb.mesh.profile.point(src_s)
    tan = qb.mesh.profile.tangent(src_s)
    nodes_b = qb.mesh.nodes_s
    h_b = nodes_b[eb + 1] - nodes_b[eb]
    Fb1 = (src_s - nodes_b[eb]) / h_b
    grp_b = {
        "w": src_w, "rho": pos[0], "z": pos[1], "drho": tan[0], "dz": tan[1],
        "F": np.stack([1.0 - Fb1, Fb1]),
        "Fp": np.stack([-1.0 / h_b, 1.0 / h_b]),
    }
    ker = modal_kernels(grp_a["rho"], grp_a["z"], grp_b["rho"], grp_b["z"],
                        k, need_p=need_kop, pairwise=True)
    ia = np.stack([ea, ea + 1])
    ib = np.stack([eb, eb + 1])
    _scatter(T, _t_blocks(grp_a, grp_b, ker, k), ia, ib)
    if need_kop:
        _scatter(K, _k_blocks(grp_a, grp_b, ker), ia, ib)


def _pair_operator(qa, qb, k, need_kop, ker=None):
    if ker is None:
        ker = modal_kernels(qa.rho, qa.z, qb.rho, qb.z, k, need_p=need_kop)
    ga, gb = qa.group(), qb.group()
    T = _t_blocks(ga, gb, ker, k)
    K = _k_blocks(ga, gb, ker) if need_kop else None
    _corrections(T, K, qa, qb, k, need_kop)
    return T, K


def _transpose_kernels(ker):
    out = {"g": [m.T for m in ker["g"]]}
    out["p"] = [m.T for m in ker["p"]] if ker["p"] is not None else None
    return out


def _stack(blocks, sign=1.0):
    return sign * np.block([[blocks["ss"], blocks["sf"]],
                            [blocks["fs"], blocks["ff"]]])


def _excitation(quad, k):
    """Galerkin projections of E_inc = x exp(-jkz) on the m = 1 testers."""
    ph = np.exp(-1j * k * quad.z) * quad.w * quad.rho
    v_s = np.pi * (quad.F @ (ph * quad.drho))
    v_f = 1j * np.pi * (quad.F @ ph)
    return quad.C.conj().T @ np.concatenate([v_s, v_f])


def _reduce(quad_a, blocks, quad_b):
    """Project stacked (s, phi) operator blocks onto the unknown spaces."""
    return quad_a.C.conj().T @ _stack(blocks) @ quad_b.C


def _farfield(quad, x_j, x_m, k, base_radius):
    """Backscatter amplitude e from currents: sigma/(pi a^2) = |e|^2."""
    nf = quad.n_funcs
    cj = quad.C @ x_j
    js = quad.F.T @ cj[:nf]
    jf = quad.F.T @ cj[nf:]
    if x_m is not None:
        cm = quad.C @ x_m
        ms = quad.F.T @ cm[:nf]
        mf = quad.F.T @ cm[nf:]
    else:
        ms = mf = 0.0
    integ = quad.w * quad.rho * np.exp(-1j * k * quad.z) * (
        quad.drho * js - 1j * jf - 1j * quad.drho * ms - mf
    )
    return -1j * k * integ.sum() / base_radius


def _solve_dense(Z, b, kappa, cond_limit):
    lu, piv = linalg.lu_factor(Z)
    gecon, = linalg.get_lapack_funcs(("gecon",), (Z,))
    rcond, info = gecon(lu, np.linalg.norm(Z, 1))
    if info != 0 or not np.isfinite(rcond) or rcond == 0.0 \
            or 1.0 / rcond > cond_limit:
        est = np.inf if rcond == 0.0 else 1.0 / rcond
        raise SolverError(
            f"system badly conditioned at kappa={kappa:.6g}: condition "
            f"estimate {est:.3e} exceeds {cond_limit:.1e}; perturb kappa"
        )
    return linalg.lu_solve((lu, piv), b)


def solve_frequency(pec_mesh, coat_mesh, eps, kappa, base_radius=1.0,
                    phase_origin_z=0.0, cond_limit=1e12):
    """Solve the m = 1 system at one frequency; returns an FsrSample.

    pec_mesh/coat_mesh are BorMesh generatrices of the conductor and of the
    dielectric outer surface (coat_mesh None for a bare body); eps is the
    layer permittivity; kappa = omega a / c.  The returned amplitude is
    normalized so sigma_back/(pi a^2) = |e|^2, with the phase referenced at
    z = phase_origin_z.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    for mesh in (pec_mesh,) + ((coat_mesh,) if coat_mesh is not None else ()):
        if kappa > mesh.kappa_max * (1 + 1e-12):
            raise ValueError(
                f"mesh built for kappa_max={mesh.kappa_max} cannot be used "
                f"at kappa={kappa}"
            )
    k0 = kappa / base_radius
    qc = _Quad(pec_mesh)

    if coat_mesh is None:
        T, _ = _pair_operator(qc, qc, k0, need_kop=False)
        Z = -1j * _reduce(qc, T, qc)
        b = -_excitation(qc, k0)
        x = _solve_dense(Z, b, kappa, cond_limit)
        e = _farfield(qc, x, None, k0, base_radius)
    else:
        k1 = math.sqrt(eps) * k0
        eta1 = 1.0 / math.sqrt(eps)
        qd = _Quad(coat_mesh)
        T0dd, K0dd = _pair_operator(qd, qd, k0, need_kop=True)
        T1dd, K1dd = _pair_operator(qd, qd, k1, need_kop=True)
        ker_dc = modal_kernels(qd.rho, qd.z, qc.rho, qc.z, k1, need_p=True)
        T1dc, K1dc = _pair_operator(qd, qc, k1, need_kop=True, ker=ker_dc)
        T1cd, K1cd = _pair_operator(
            qc, qd, k1, need_kop=True, ker=_transpose_kernels(ker_dc)
        )
        T1cc, _ = _pair_operator(qc, qc, k1, need_kop=False)

        Ksum = _reduce(qd, K0dd, qd) + _reduce(qd, K1dd, qd)
        Z = np.block([
            [-1j * (_reduce(qd, T0dd, qd) + eta1 * _reduce(qd, T1dd, qd)),
             -Ksum, 1j * eta1 * _reduce(qd, T1dc, qc)],
            [Ksum, -1j * (_reduce(qd, T0dd, qd) + _reduce(qd, T1dd, qd) / eta1),
             -_reduce(qd, K1dc, qc)],
            [1j * eta1 * _reduce(qc, T1cd, qd), _reduce(qc, K1cd, qd),
             -1j * eta1 * _reduce(qc, T1cc, qc)],
        ])
        v = _excitation(qd, k0)
        nd, nc = qd.n_unknowns, qc.n_unknowns
        b = np.concatenate([-v, 1j * v, np.zeros(nc, dtype=complex)])
        x = _solve_dense(Z, b, kappa, cond_limit)
        e = _farfield(qd, x[:nd], x[nd:2 * nd], k0, base_radius)

    e *= np.exp(2j * k0 * phase_origin_z)
    return FsrSample(float(kappa), complex(e))


def _sweep_task(args):
    pec_mesh, coat_mesh, eps, kappa, base_radius, phase_origin_z = args
    return solve_frequency(pec_mesh, coat_mesh, eps, kappa,
                           base_radius=base_radius,
                           phase_origin_z=phase_origin_z)


def _geometry_hash(pec_mesh, coat_mesh, eps):
    h = hashlib.sha256()
    for mesh in (pec_mesh, coat_mesh):
        if mesh is None:
            h.update(b"none")
            continue
        h.update(np.ascontiguousarray(mesh.node_pos).tobytes())
    h.update(repr(float(eps)).encode())
    return h.hexdigest()[:16]


def sweep(meshes, eps, kappa_grid, worker_count=1, base_radius=1.0,
          phase_origin_z=0.0, metadata=None):
    """solve_frequency over a grid; deterministic for any worker_count."""
    pec_mesh, coat_mesh = meshes
    kappa_grid = np.asarray(kappa_grid, dtype=float)
    if kappa_grid.size == 0 or not np.all(np.diff(kappa_grid) > 0):
        raise ValueError("kappa_grid must be non-empty, strictly increasing")
    if worker_count < 1:
        raise ValueError("worker_count must be >= 1")
    tasks = [
        (pec_mesh, coat_mesh, eps, float(k), base_radius, phase_origin_z)
        for k in kappa_grid
    ]
    if worker_count == 1:
        samples = [_sweep_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=worker_count) as pool:
            samples = list(pool.map(_sweep_task, tasks))
    meta = {
        "geometry_hash": _geometry_hash(pec_mesh, coat_mesh, eps),
        "eps": repr(float(eps)),
        "ppw": repr(int(pec_mesh.points_per_wavelength)),
        "solver_version": SOLVER_VERSION,
    }
    if metadata:
        meta.update(metadata)
    e = np.array([s.e_complex for s in samples])
    return FsrTable(kappa_grid, e, meta)
