"""Transient backscatter workbench for coated rounded cones.

Pipeline: meridian geometry -> body-of-revolution integral-equation sweep
over a normalized frequency band -> truncated Fourier synthesis against a
Gaussian video pulse -> echo detection and classification.
"""

from .geometry import (
    GeometrySpec,
    GeneratrixProfile,
    BorMesh,
    build_profiles,
    sphere_profile,
    curvature_discontinuities,
    mesh_profile,
)
from .pulse import PulseSpec, pulse_value, spectrum_value, truncation_fraction
from .mie import SphereSpec, pec_sphere_fsr, coated_sphere_fsr
from .fsr import FsrSample, FsrTable
from .solver import SolverError, modal_green, solve_frequency, sweep
from .synthesis import TimeSeries, synthesize, extend_low_frequency
from .echoes import (
    Echo,
    EchoReport,
    DelayPredictions,
    detect_echoes,
    relative_metrics,
    predicted_delays,
)

__version__ = "0.1.0"
