"""Truncated Fourier synthesis of the transient backscattered field.

The time response is the band-limited cosine transform of the product of the
frequency response and the pulse spectrum,

    Adot(t) = (1/pi) int_0^omega_max A(w) S_f(w) cos[w t + phi(w)] dw,

the one-sided equivalent of the two-sided form for a real response (A even,
phi odd).  The sampled response is interpolated in Re/Im (phase wrapping makes
A/phi interpolation unreliable) and integrated by composite Gauss-Legendre.
"""

from dataclasses import dataclass, field
import io

import numpy as np
from scipy.interpolate import CubicSpline

from .fsr import FsrTable
from .pulse import spectrum_value

__all__ = ["TimeSeries", "synthesize", "extend_low_frequency"]

_FMT = "{:.17g}"


@dataclass
class TimeSeries:
    """Real transient response on a uniform ct/2a grid, with provenance."""

    t: np.ndarray
    values: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.t.ndim != 1 or self.t.size < 2:
            raise ValueError("time grid must have at least 2 points")
        steps = np.diff(self.t)
        if not np.all(steps > 0) or not np.allclose(steps, steps[0], rtol=1e-9):
            raise ValueError("time grid must be uniform and increasing")
        if self.values.shape != self.t.shape:
            raise ValueError("values must match the time grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite values in time series")

    def to_csv(self):
        buf = io.StringIO()
        for key in sorted(self.provenance):
            buf.write(f"# {key} = {self.provenance[key]}\n")
        buf.write("# columns: ct_over_2a, amplitude\n")
        for ti, vi in zip(self.t, self.values):
            buf.write(_FMT.format(ti) + "," + _FMT.format(vi) + "\n")
        return buf.getvalue()

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text):
        provenance = {}
        t, v = [], []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    provenance[key.strip()] = value.strip()
                continue
            cells = line.split(",")
            t.append(float(cells[0]))
            v.append(float(cells[1]))
        return cls(np.array(t), np.array(v), provenance)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_csv(fh.read())


def _gauss_composite(edges, n_per_interval):
    """Gauss-Legendre nodes/weights on each interval between edges."""
    xg, wg = np.polynomial.legendre.leggauss(n_per_interval)
    lo = edges[:-1][:, None]
    hi = edges[1:][:, None]
    half = 0.5 * (hi - lo)
    nodes = (0.5 * (hi + lo) + half * xg[None, :]).ravel()
    weights = (half * wg[None, :]).ravel()
    return nodes, weights


def synthesize(fsr, pulse, t_grid, n_per_interval=12, check_tol=1e-7):
    """Evaluate the band-limited transient response on a ct/2a grid.

    Integrates over [kappa_min of the table, pulse.kappa_max].  Rejects grids
    reaching beyond the aliasing horizon pi/(max kappa spacing) and raises if
    a refined quadrature disagrees by more than check_tol of the peak.
    """
    if len(fsr) < 2:
        raise ValueError("frequency table too short to interpolate")
    if pulse.kappa_max > fsr.kappa[-1] * (1 + 1e-12):
        raise ValueError(
            f"pulse.kappa_max={pulse.kappa_max} exceeds the table band "
            f"(max kappa {fsr.kappa[-1]})"
        )
    t_grid = np.asarray(t_grid, dtype=float)
    dk = float(np.max(np.diff(fsr.kappa)))
    horizon = np.pi / dk
    if np.max(np.abs(t_grid)) >= horizon:
        raise ValueError(
            f"time grid reaches |ct/2a| >= pi/dkappa = {horizon:.3g}; "
            "refine the frequency grid or shorten the time grid"
        )

    spline = CubicSpline(fsr.kappa, fsr.e_complex)
    edges = fsr.kappa[fsr.kappa < pulse.kappa_max]
    edges = np.append(edges, pulse.kappa_max)

    def evaluate(npts):
        nodes, weights = _gauss_composite(edges, npts)
        e_vals = spline(nodes)
        s_vals = spectrum_value(nodes, pulse)
        # A cos(2 kappa T + phi) = Re[E exp(2j kappa T)]
        phase = np.exp(2j * np.outer(nodes, t_grid))
        integrand = (weights * s_vals * e_vals)[:, None] * phase
        return integrand.real.sum(axis=0) / np.pi

    coarse = evaluate(n_per_interval)
    refined = evaluate(n_per_interval + 6)
    peak = max(np.max(np.abs(refined)), 1e-300)
    if np.max(np.abs(refined - coarse)) > check_tol * peak:
        raise ValueError(
            "frequency grid too coarse for the requested synthesis accuracy"
        )
    provenance = dict(fsr.metadata)
    provenance.update(
        {
            "pulse_g_norm": repr(pulse.g_norm),
            "pulse_kappa_max": repr(pulse.kappa_max),
            "c_tau_over_a": repr(pulse.c_tau_over_a),
        }
    )
    return TimeSeries(t_grid, refined, provenance)


def extend_low_frequency(fsr, n_extra=32, max_residual=0.2):
    """Prepend Rayleigh-law samples on (0, kappa_min).

    Amplitude follows |E| = |E(k_min)| (k/k_min)^2 and the phase is continued
    linearly in kappa, both fitted on the lowest native samples.  Refuses to
    extrapolate when the lowest samples do not follow the quadratic law.
    """
    low = fsr.kappa < 0.5
    if np.count_nonzero(low) < 3:
        raise ValueError("need at least 3 samples below kappa = 0.5 to extend")
    k3 = fsr.kappa[:3]
    e3 = fsr.e_complex[:3]
    coef = np.abs(e3) / k3 ** 2
    mean = float(np.mean(coef))
    residual = float(np.max(np.abs(coef - mean)) / mean)
    if residual > max_residual:
        raise ValueError(
            f"lowest samples deviate from the kappa^2 law by {residual:.1%}; "
            "the geometry is not in the Rayleigh regime at kappa_min -- "
            "lower the minimum frequency of the sweep"
        )
    phi3 = np.unwrap(np.angle(e3))
    slope = np.polyfit(k3, phi3, 1)[0]

    k1 = float(fsr.kappa[0])
    k_new = np.linspace(k1 / (n_extra + 1), k1, n_extra + 1)[:-1]
    amp_new = np.abs(e3[0]) * (k_new / k1) ** 2
    phi_new = phi3[0] + slope * (k_new - k1)  # anchored at the first sample
    e_new = amp_new * np.exp(1j * phi_new)

    metadata = dict(fsr.metadata)
    metadata["low_frequency_extended"] = "true"
    metadata["rayleigh_fit_residual"] = f"{residual:.3e}"
    return FsrTable(
        np.concatenate([k_new, fsr.kappa]),
        np.concatenate([e_new, fsr.e_complex]),
        metadata,
    )
