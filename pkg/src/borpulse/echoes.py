"""Extremum detection and diffraction-order bookkeeping for transient
responses.

Echoes are signed local extrema of the synthesized field above a relative
threshold, separated by at least a quarter pulse duration; order labels are
assigned purely by time order.  Geometric delay predictions: the creeping
wave crosses the shadowed base (path 2a at speed c, so 1 on the ct/2a axis)
and waves in the layer travel at v with c/sqrt(eps) <= v < c.
"""

from dataclasses import dataclass, field, asdict
import json
import math

import numpy as np

__all__ = [
    "Echo",
    "EchoReport",
    "DelayPredictions",
    "detect_echoes",
    "relative_metrics",
    "predicted_delays",
]


@dataclass(frozen=True)
class Echo:
    time: float          # ct/2a
    amplitude: float     # signed
    order_label: int


@dataclass
class EchoReport:
    echoes: list
    delays: list = field(default_factory=list)          # consecutive d(ct/2a)
    amplitude_ratios: list = field(default_factory=list)
    alternating_signs: list = field(default_factory=list)
    threshold_fraction: float = 0.05
    min_separation: float = 0.0

    def to_json(self):
        payload = {
            "echoes": [asdict(e) for e in self.echoes],
            "delays": self.delays,
            "amplitude_ratios": self.amplitude_ratios,
            "alternating_signs": self.alternating_signs,
            "threshold_fraction": self.threshold_fraction,
            "min_separation": self.min_separation,
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json() + "\n")

    @classmethod
    def from_json(cls, text):
        payload = json.loads(text)
        return cls(
            echoes=[Echo(**e) for e in payload["echoes"]],
            delays=payload["delays"],
            amplitude_ratios=payload["amplitude_ratios"],
            alternating_signs=payload["alternating_signs"],
            threshold_fraction=payload["threshold_fraction"],
            min_separation=payload["min_separation"],
        )


@dataclass(frozen=True)
class DelayPredictions:
    creeping_delay: float                 # c*dt/2a for the base transit
    dielectric_speed_bounds: tuple        # (v_min, v_max) in units of c


def _local_extrema(values):
    """Indices of strict sign extrema (local maxima or minima)."""
    v = values
    left = v[1:-1] - v[:-2]
    right = v[1:-1] - v[2:]
    is_max = (left > 0) & (right > 0)
    is_min = (left < 0) & (right < 0)
    return np.nonzero(is_max | is_min)[0] + 1


def detect_echoes(series, threshold_fraction=0.05, min_separation=None):
    """Detect signed extrema above the threshold and label them in time order.

    min_separation defaults to a quarter pulse duration on the ct/2a axis,
    read from the series provenance; stronger extrema win inside a separation
    window.
    """
    if not 0.0 < threshold_fraction < 1.0:
        raise ValueError("threshold_fraction must lie in (0, 1)")
    if series.values.size == 0 or not np.any(series.values):
        raise ValueError("empty time series")
    if min_separation is None:
        c_tau = float(series.provenance.get("c_tau_over_a", 0.0))
        min_separation = c_tau / 8.0  # tau/4 expressed on the ct/2a axis

    peak = float(np.max(np.abs(series.values)))
    idx = _local_extrema(series.values)
    idx = idx[np.abs(series.values[idx]) >= threshold_fraction * peak]

    # greedy suppression: keep the strongest extremum in each window
    order = idx[np.argsort(-np.abs(series.values[idx]), kind="stable")]
    kept = []
    for i in order:
        if all(abs(series.t[i] - series.t[j]) >= min_separation for j in kept):
            kept.append(i)
    kept.sort()

    echoes = [
        Echo(float(series.t[i]), float(series.values[i]), label)
        for label, i in enumerate(kept, start=1)
    ]
    report = EchoReport(
        echoes=echoes,
        threshold_fraction=float(threshold_fraction),
        min_separation=float(min_separation),
    )
    if len(echoes) >= 2:
        delays, ratios = relative_metrics(report)
        report.delays = delays
        report.amplitude_ratios = ratios
        report.alternating_signs = [
            e1.amplitude * e2.amplitude < 0
            for e1, e2 in zip(echoes[:-1], echoes[1:])
        ]
    return report


def relative_metrics(report):
    """Consecutive delays d(ct/2a) and |amp_{k+1}/amp_k| ratios."""
    if len(report.echoes) < 2:
        raise ValueError("need at least 2 echoes for relative metrics")
    times = [e.time for e in report.echoes]
    amps = [e.amplitude for e in report.echoes]
    delays = [t2 - t1 for t1, t2 in zip(times[:-1], times[1:])]
    ratios = [abs(a2 / a1) for a1, a2 in zip(amps[:-1], amps[1:])]
    return delays, ratios


def predicted_delays(spec):
    """Geometric predictions: base-transit creeping delay and layer speeds."""
    v_min = 1.0 / math.sqrt(spec.permittivity_eps)
    return DelayPredictions(
        creeping_delay=1.0,
        dielectric_speed_bounds=(v_min, 1.0),
    )
