"""Crank kinematics of the elastic element.

The crank turns about P with radius R; the elastic element runs from the
fixed anchor O (at distance w from P) to the crank tip. The crank angle
``theta`` is zero at B, the tip position collinear with O and P on the far
side of P, so the element is longest there.

Angles are radians, lengths metres, forces newtons and torques N*m.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError

__all__ = [
    "CrankGeometry",
    "AngleSchedule",
    "elastic_length",
    "crank_torque",
    "element_deflection",
    "target_force_profile",
    "relax_angle",
]


@dataclass(frozen=True)
class CrankGeometry:
    """Anchor offset ``w`` (= |OP|) and crank radius ``R``."""

    w: float
    R: float

    def __post_init__(self):
        if not (self.w > 0 and self.R > 0):
            raise ValueError("w and R must be positive")
        if not self.w > self.R:
            raise ValueError("the anchor must lie outside the crank circle (w > R)")

    @property
    def min_length(self):
        return self.w - self.R

    @property
    def max_length(self):
        return self.w + self.R


@dataclass(frozen=True)
class AngleSchedule:
    """Inclusive, evenly spaced sampling grid between two angles."""

    start: float
    end: float
    steps: int

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 2:
            raise ValueError("steps must be an integer >= 2")
        if self.start == self.end:
            raise ValueError("start and end must differ")

    @classmethod
    def from_degrees(cls, start, end, step):
        n = int(round(abs(end - start) / step)) + 1
        return cls(np.radians(start), np.radians(end), n)

    @property
    def angles(self):
        return np.linspace(self.start, self.end, int(self.steps))


def elastic_length(geom, theta):
    """Element length L_S(theta) by the law of cosines."""
    theta = np.asarray(theta, dtype=float)
    out = np.sqrt(geom.w**2 + geom.R**2 + 2.0 * geom.w * geom.R * np.cos(theta))
    return out if out.ndim else float(out)


def crank_torque(geom, force, theta):
    """Torque on the crank from an axial element force (tension positive).

    T = F * w * sin(theta) * R / L_S(theta). A tension pulls the tip towards O,
    i.e. away from B, so positive torque acts towards increasing ``theta``.
    """
    theta = np.asarray(theta, dtype=float)
    out = np.asarray(force, dtype=float) * geom.w * geom.R * np.sin(theta) / elastic_length(geom, theta)
    return out if np.ndim(out) else float(out)


def element_deflection(geom, L0, theta):
    """Stretch of an element with relaxed chord ``L0`` (positive = stretched)."""
    return elastic_length(geom, theta) - L0


def target_force_profile(geom, T_target, angles):
    """Axial force that makes ``crank_torque`` equal ``T_target`` at each angle.

    Raises
    ------
    DomainError
        If any angle has sin(theta) <= 0, where no finite force can do it.
    """
    theta = np.asarray(angles.angles if isinstance(angles, AngleSchedule) else angles, dtype=float)
    s = np.sin(theta)
    if np.any(s <= 0.0):
        raise DomainError("target force profile needs sin(theta) > 0 at every sample")
    return T_target * elastic_length(geom, theta) / (geom.w * geom.R * s)


def relax_angle(geom, L0):
    """Crank angle in [0, pi] where an element of relaxed chord ``L0`` is unstretched.

    The second relax position is the mirror angle ``-relax_angle``.
    """
    if not geom.min_length <= L0 <= geom.max_length:
        raise DomainError(f"relaxed chord {L0!r} is outside [w - R, w + R]")
    c = (L0 * L0 - geom.w**2 - geom.R**2) / (2.0 * geom.w * geom.R)
    return float(np.arccos(np.clip(c, -1.0, 1.0)))
