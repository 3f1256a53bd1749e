"""Meridian-plane geometry of the coated rounded cone.

The scatterer is a body of revolution: a perfectly conducting cone with a
spherical vertex cap, a rounded base edge and a flat base, optionally covered
by a uniform dielectric layer.  Everything here lives in the (rho, z)
half-plane; the symmetry axis is z, the vertex points toward -z and the
incident pulse travels in +z.
"""

from dataclasses import dataclass, field
import math

import numpy as np

__all__ = [
    "GeometrySpec",
    "Line",
    "Arc",
    "GeneratrixProfile",
    "BorMesh",
    "build_profiles",
    "sphere_profile",
    "curvature_discontinuities",
    "mesh_profile",
]


@dataclass(frozen=True)
class GeometrySpec:
    """The five scalars defining the coated rounded cone.

    half_angle_alpha : half of the vertex angle, radians
    base_radius_a    : radius of the metal base (the normalization unit)
    rounding_r       : radius of the vertex cap and of the base-edge rounding
    coating_d        : dielectric layer thickness (0 = bare conductor)
    permittivity_eps : relative permittivity of the layer (1 = no coating)
    """

    half_angle_alpha: float
    base_radius_a: float = 1.0
    rounding_r: float = 0.32
    coating_d: float = 0.0
    permittivity_eps: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.half_angle_alpha < math.pi / 2:
            raise ValueError("half_angle_alpha must lie in (0, pi/2)")
        if self.base_radius_a <= 0.0:
            raise ValueError("base_radius_a must be positive")
        if not 0.0 < self.rounding_r < self.base_radius_a:
            raise ValueError("rounding_r must lie in (0, base_radius_a)")
        if self.coating_d < 0.0:
            raise ValueError("coating_d must be >= 0")
        if self.permittivity_eps < 1.0:
            raise ValueError("permittivity_eps must be >= 1")

    @property
    def has_coating(self):
        return self.coating_d > 0.0 and self.permittivity_eps > 1.0


class Line:
    """Straight segment from p0 to p1 in the (rho, z) plane."""

    def __init__(self, p0, p1):
        self.p0 = np.asarray(p0, dtype=float)
        self.p1 = np.asarray(p1, dtype=float)
        self.length = float(np.hypot(*(self.p1 - self.p0)))
        if self.length <= 0.0:
            raise ValueError("degenerate line segment")
        self._dir = (self.p1 - self.p0) / self.length

    curvature = 0.0

    def point(self, s):
        s = np.asarray(s, dtype=float)
        if s.ndim:
            return self.p0[:, None] + self._dir[:, None] * s
        return self.p0 + self._dir * s

    def tangent(self, s):
        s = np.asarray(s, dtype=float)
        if s.ndim:
            return np.repeat(self._dir[:, None], s.size, axis=1)
        return self._dir.copy()

    def offset(self, d):
        # outward normal of a ccw-traversed boundary: (t_z, -t_rho)
        n = np.array([self._dir[1], -self._dir[0]])
        return Line(self.p0 + d * n, self.p1 + d * n)

    def distance_to_point(self, p):
        v = np.asarray(p, dtype=float) - self.p0
        t = float(np.clip(v @ self._dir, 0.0, self.length))
        return float(np.hypot(*(v - t * self._dir)))


class Arc:
    """Circular arc, center + radius*(cos phi, sin phi), phi in [phi0, phi1].

    Traversed with increasing phi (counterclockwise); the body interior is on
    the left, so the outward normal is the radial direction.
    """

    def __init__(self, center, radius, phi0, phi1):
        if radius <= 0.0 or phi1 <= phi0:
            raise ValueError("degenerate arc")
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.phi0 = float(phi0)
        self.phi1 = float(phi1)
        self.length = self.radius * (self.phi1 - self.phi0)

    @property
    def curvature(self):
        return 1.0 / self.radius

    @property
    def p0(self):
        return self.point(0.0)

    @property
    def p1(self):
        return self.point(self.length)

    def _phi(self, s):
        return self.phi0 + np.asarray(s, dtype=float) / self.radius

    def point(self, s):
        phi = self._phi(s)
        if np.ndim(phi):
            return self.center[:, None] + self.radius * np.stack(
                [np.cos(phi), np.sin(phi)]
            )
        return self.center + self.radius * np.array([math.cos(phi), math.sin(phi)])

    def tangent(self, s):
        phi = self._phi(s)
        if np.ndim(phi):
            return np.stack([-np.sin(phi), np.cos(phi)])
        return np.array([-math.sin(phi), math.cos(phi)])

    def offset(self, d):
        return Arc(self.center, self.radius + d, self.phi0, self.phi1)

    def distance_to_point(self, p):
        v = np.asarray(p, dtype=float) - self.center
        phi = math.atan2(v[1], v[0])
        # bring phi into [phi0, phi0 + 2pi)
        while phi < self.phi0:
            phi += 2 * math.pi
        if phi <= self.phi1:
            return abs(float(np.hypot(*v)) - self.radius)
        d0 = float(np.hypot(*(np.asarray(p) - self.p0)))
        d1 = float(np.hypot(*(np.asarray(p) - self.p1)))
        return min(d0, d1)


@dataclass
class GeneratrixProfile:
    """Ordered, tangent-continuous meridian curve from axis to axis."""

    segments: list
    axis_tol: float = 1e-9

    def __post_init__(self):
        self._starts = np.concatenate(
            [[0.0], np.cumsum([seg.length for seg in self.segments])]
        )
        for a, b in zip(self.segments[:-1], self.segments[1:]):
            if np.hypot(*(a.p1 - b.p0)) > 1e-9 * self.total_length:
                raise ValueError("profile segments are not contiguous")
            ta = a.tangent(a.length)
            tb = b.tangent(0.0)
            if ta @ tb < 1.0 - 1e-9:
                raise ValueError("profile segments are not tangent-continuous")
        if abs(self.segments[0].p0[0]) > self.axis_tol * self.total_length:
            raise ValueError("profile must start on the symmetry axis")
        if abs(self.segments[-1].p1[0]) > self.axis_tol * self.total_length:
            raise ValueError("profile must end on the symmetry axis")

    @property
    def total_length(self):
        return float(self._starts[-1])

    def _locate(self, s):
        i = int(np.searchsorted(self._starts, s, side="right")) - 1
        i = min(max(i, 0), len(self.segments) - 1)
        return i, s - self._starts[i]

    def _segment_index(self, s):
        idx = np.searchsorted(self._starts, s, side="right") - 1
        return np.clip(idx, 0, len(self.segments) - 1)

    def _evaluate(self, s, attr):
        s = np.asarray(s, dtype=float)
        if s.ndim == 0:
            i, local = self._locate(float(s))
            return getattr(self.segments[i], attr)(local)
        out = np.empty((2, s.size))
        idx = self._segment_index(s)
        for i, seg in enumerate(self.segments):
            on = idx == i
            if np.any(on):
                out[:, on] = getattr(seg, attr)(s[on] - self._starts[i])
        return out

    def point(self, s):
        return self._evaluate(s, "point")

    def tangent(self, s):
        return self._evaluate(s, "tangent")

    def offset(self, d):
        return GeneratrixProfile([seg.offset(d) for seg in self.segments])

    def distance_to_point(self, p):
        return min(seg.distance_to_point(p) for seg in self.segments)

    def junctions(self):
        """Arc positions of the interior segment boundaries."""
        return [float(s) for s in self._starts[1:-1]]


def build_profiles(spec):
    """Construct the PEC meridian and, when coated, the outer-surface meridian.

    The PEC curve runs tip -> vertex cap -> lateral line -> base-edge rounding
    -> flat base -> rear axis point.  The coating is the outward normal offset
    by the layer thickness; it covers the whole body including the base.
    Returns (pec, coat) with coat = None for a bare conductor.
    """
    alpha = spec.half_angle_alpha
    a = spec.base_radius_a
    r = spec.rounding_r
    sa, ca = math.sin(alpha), math.cos(alpha)

    cap = Arc((0.0, r), r, -math.pi / 2, -alpha)
    p1 = cap.p1  # cap / lateral tangency

    # base-edge circle: center on rho = a - r, tangent to the lateral line
    # (signed distance -r on the interior side) and to the base plane
    rho_c = a - r
    z_c = r * (1.0 - sa) + (ca * (rho_c - r * ca) + r) / sa
    edge = Arc((rho_c, z_c), r, -alpha, math.pi / 2)
    t2 = edge.p0  # lateral / edge tangency

    lateral_len = (t2 - p1) @ np.array([sa, ca])
    if lateral_len <= 1e-12 * a:
        raise ValueError(
            "rounding_r too large for this cone: the vertex cap and the "
            "base-edge rounding leave no lateral surface"
        )
    z_base = z_c + r

    pec = GeneratrixProfile(
        [
            cap,
            Line(p1, t2),
            edge,
            Line((a - r, z_base), (0.0, z_base)),
        ]
    )
    if not spec.has_coating:
        return pec, None
    coat = pec.offset(spec.coating_d)
    return pec, coat


def sphere_profile(radius, center_z=None):
    """Half-circle meridian of a sphere (single constant-curvature arc)."""
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    if center_z is None:
        center_z = radius
    return GeneratrixProfile(
        [Arc((0.0, center_z), radius, -math.pi / 2, math.pi / 2)]
    )


def curvature_discontinuities(profile, rel_tol=1e-6):
    """Segment junctions where the meridian curvature jumps.

    Each entry is (arc position, z coordinate of the junction circle's plane).
    """
    out = []
    for s, left, right in zip(
        profile.junctions(), profile.segments[:-1], profile.segments[1:]
    ):
        k1, k2 = left.curvature, right.curvature
        if abs(k1 - k2) > rel_tol * max(abs(k1), abs(k2)):
            out.append((s, float(left.p1[1])))
    return out


@dataclass
class BorMesh:
    """Discretized generatrix: nodes by arc length on the exact curve.

    Solver basis functions are the triangle functions on interior nodes plus
    one combined half-triangle at each on-axis endpoint.
    """

    profile: GeneratrixProfile
    nodes_s: np.ndarray
    kappa_max: float
    points_per_wavelength: int
    refractive_index: float = 1.0
    node_pos: np.ndarray = field(init=False)
    node_tan: np.ndarray = field(init=False)

    def __post_init__(self):
        self.nodes_s = np.asarray(self.nodes_s, dtype=float)
        if not np.all(np.diff(self.nodes_s) > 0):
            raise ValueError("mesh nodes must be strictly increasing")
        self.node_pos = self.profile.point(self.nodes_s)
        self.node_tan = self.profile.tangent(self.nodes_s)

    @property
    def n_nodes(self):
        return self.nodes_s.size

    @property
    def n_elements(self):
        return self.nodes_s.size - 1

    @property
    def n_basis(self):
        """Triangle functions per current component (interior nodes)."""
        return self.nodes_s.size - 2

    def element_lengths(self):
        return np.diff(self.nodes_s)


def mesh_profile(profile, kappa_max, points_per_wavelength,
                 base_radius=1.0, refractive_index=1.0):
    """Mesh a generatrix for use up to kappa_max = omega*a/c.

    Element length <= wavelength in the densest touching medium over
    points_per_wavelength; segment boundaries (all curvature-discontinuity
    circles) land exactly on nodes.
    """
    if kappa_max <= 0.0:
        raise ValueError("kappa_max must be positive")
    if points_per_wavelength < 10:
        raise ValueError("points_per_wavelength must be >= 10")
    if profile.total_length <= 0.0:
        raise ValueError("degenerate profile")
    wavelength = 2.0 * math.pi * base_radius / (kappa_max * refractive_index)
    h_max = wavelength / points_per_wavelength
    nodes = [0.0]
    s0 = 0.0
    for seg in profile.segments:
        n = max(1, math.ceil(seg.length / h_max))
        nodes.extend(s0 + seg.length * (i + 1) / n for i in range(n))
        s0 += seg.length
    return BorMesh(
        profile=profile,
        nodes_s=np.array(nodes),
        kappa_max=float(kappa_max),
        points_per_wavelength=int(points_per_wavelength),
        refractive_index=float(refractive_index),
    )
