"""
Geometry - coordinates, angle conventions and unit-speed kinematics.

Defenders live on a hemispherical dome of radius R and are described by
(azimuth psi, elevation phi). Intruders live on the ground plane and are
described by (azimuth psi, radius r). All angles are stored wrapped to
(-pi, pi]; every operation that produces an azimuth re-wraps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

import numpy as np

from perimeter_defense.errors import DomainError

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi

# Below this cos(phi) the azimuth of a defender is undefined (pole).
_POLE_COS = 1e-12
_ANTIPODAL_GAP = 1e-9


# ============================================================================
# Types
# ============================================================================

class IntruderStatus(str, Enum):
    """Lifecycle of an intruder. Only ACTIVE -> CAPTURED or ACTIVE -> INTRUDED."""

    ACTIVE = "active"
    CAPTURED = "captured"
    INTRUDED = "intruded"


@dataclass(frozen=True)
class Point3:
    """Cartesian point in meters."""

    x: float
    y: float
    z: float

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def distance_to(self, other: "Point3") -> float:
        return math.sqrt(
            (self.x - other.x) ** 2 + (self.y - other.y) ** 2 + (self.z - other.z) ** 2
        )

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class DefenderPose:
    """Defender on the dome: azimuth psi in (-pi, pi], elevation phi in [0, pi/2]."""

    psi: float
    phi: float
    alive: bool = True


@dataclass(frozen=True)
class IntruderPose:
    """Intruder on the ground plane: azimuth psi, radial distance r (meters)."""

    psi: float
    r: float
    status: IntruderStatus = IntruderStatus.ACTIVE

    @property
    def active(self) -> bool:
        return self.status is IntruderStatus.ACTIVE


@dataclass(frozen=True)
class RelativeCoord:
    """Intruder relative to a defender: psi = psi_A - psi_D, phi = phi_D, r = r_A / R."""

    psi: float
    phi: float
    r: float


# ============================================================================
# Angles
# ============================================================================

def wrap_angle(a: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    if not math.isfinite(a):
        raise DomainError(f"cannot wrap non-finite angle {a!r}")
    w = math.remainder(a, TWO_PI)
    if w <= -math.pi:
        w += TWO_PI
    return w


def central_angle(phi1: float, psi1: float, phi2: float, psi2: float) -> float:
    """Great-circle angle between two points given as (elevation, azimuth)."""
    c = math.cos(phi1) * math.cos(phi2) * math.cos(psi1 - psi2) + math.sin(phi1) * math.sin(phi2)
    return math.acos(min(1.0, max(-1.0, c)))


# ============================================================================
# Cartesian conversions
# ============================================================================

def defender_cartesian(p: DefenderPose, R: float) -> Point3:
    """Position of a defender on the dome of radius R."""
    if not R > 0:
        raise DomainError(f"dome radius must be positive, got {R!r}")
    cphi = math.cos(p.phi)
    return Point3(R * cphi * math.cos(p.psi), R * cphi * math.sin(p.psi), R * math.sin(p.phi))


def intruder_cartesian(p: IntruderPose) -> Point3:
    """Position of an intruder on the ground plane."""
    return Point3(p.r * math.cos(p.psi), p.r * math.sin(p.psi), 0.0)


def perimeter_point(psi: float, R: float) -> Point3:
    """Point of the perimeter ring (dome base) at azimuth psi."""
    return Point3(R * math.cos(psi), R * math.sin(psi), 0.0)


def chord_matrix(defenders: Sequence[DefenderPose], R: float) -> np.ndarray:
    """Pairwise Euclidean (chord) distances between defenders on the dome."""
    psi = np.array([d.psi for d in defenders], dtype=np.float64)
    phi = np.array([d.phi for d in defenders], dtype=np.float64)
    pos = np.stack(
        [R * np.cos(phi) * np.cos(psi), R * np.cos(phi) * np.sin(psi), R * np.sin(phi)],
        axis=-1,
    ).reshape(-1, 3)
    diff = pos[:, None, :] - pos[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def capture_distance(d: DefenderPose, a: IntruderPose, R: float) -> float:
    """3D distance between a defender on the dome and an intruder on the plane."""
    return defender_cartesian(d, R).distance_to(intruder_cartesian(a))


# ============================================================================
# Kinematics
# ============================================================================

def _unit(psi: float, phi: float) -> tuple[float, float, float]:
    cphi = math.cos(phi)
    return (cphi * math.cos(psi), cphi * math.sin(psi), math.sin(phi))


def step_defender(
    p: DefenderPose,
    target_psi: float,
    target_phi: float,
    arc: float,
    R: float,
) -> DefenderPose:
    """
    Advance a defender along the great circle toward a target by `arc` meters.

    Motion is a slerp between the two unit vectors. When the remaining
    central angle is at most arc/R the defender lands exactly on the target.
    At the pole the azimuth is undefined and the previous one is kept.
    """
    if not R > 0:
        raise DomainError(f"dome radius must be positive, got {R!r}")
    if not arc >= 0:
        raise DomainError(f"arc length must be non-negative, got {arc!r}")
    if not p.alive:
        return p

    a = _unit(p.psi, p.phi)
    b = _unit(target_psi, target_phi)
    dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    cross = (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )
    omega = math.atan2(math.sqrt(cross[0] ** 2 + cross[1] ** 2 + cross[2] ** 2), dot)

    step = arc / R
    if step >= omega:
        return replace(p, psi=wrap_angle(target_psi), phi=target_phi)

    if omega > math.pi - _ANTIPODAL_GAP:
        # Antipodal points on the ring: travel along the ring in +psi.
        u = (-math.sin(p.psi), math.cos(p.psi), 0.0)
    else:
        w = (b[0] - dot * a[0], b[1] - dot * a[1], b[2] - dot * a[2])
        wn = math.sqrt(w[0] ** 2 + w[1] ** 2 + w[2] ** 2)
        u = (w[0] / wn, w[1] / wn, w[2] / wn)

    cs, sn = math.cos(step), math.sin(step)
    x = cs * a[0] + sn * u[0]
    y = cs * a[1] + sn * u[1]
    z = cs * a[2] + sn * u[2]

    phi = min(HALF_PI, max(0.0, math.asin(min(1.0, max(-1.0, z)))))
    if math.cos(phi) < _POLE_COS:
        psi = p.psi
    else:
        psi = wrap_angle(math.atan2(y, x))
    return replace(p, psi=psi, phi=phi)


def step_intruder(p: IntruderPose, target: Point3, dist: float) -> IntruderPose:
    """Straight-line step of length min(dist, distance-to-target) on the ground plane."""
    if not dist >= 0:
        raise DomainError(f"step length must be non-negative, got {dist!r}")
    if not p.active or dist == 0.0:
        return p

    x, y = p.r * math.cos(p.psi), p.r * math.sin(p.psi)
    dx, dy = target.x - x, target.y - y
    sep = math.hypot(dx, dy)
    if dist >= sep:
        nx, ny = target.x, target.y
    else:
        nx, ny = x + dx / sep * dist, y + dy / sep * dist

    r = math.hypot(nx, ny)
    psi = wrap_angle(math.atan2(ny, nx)) if r > 0.0 else p.psi
    return replace(p, psi=psi, r=r)


__all__ = [
    "IntruderStatus",
    "Point3",
    "DefenderPose",
    "IntruderPose",
    "RelativeCoord",
    "wrap_angle",
    "central_angle",
    "defender_cartesian",
    "intruder_cartesian",
    "perimeter_point",
    "chord_matrix",
    "capture_distance",
    "step_defender",
    "step_intruder",
]
