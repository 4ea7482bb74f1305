"""Superposition of the positive spring and the NSM into a constant torque.

Torques here live on the *operating angle* ``psi``: crank rotation measured
from the relax position A towards B, so that ``theta = relax_angle - psi``.
A torque is positive when it drives ``psi`` forward, which is the direction
that closes the jaw. With that convention

* the tendon-loaded positive spring gives ``k * (preload - psi)`` (stiffness +k),
* the NSM gives ``-crank_torque(F(L_S(theta)), theta)``, whose slope is
  positive wherever the element has negative stiffness,

and the grasping torque is their sum.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_finite_array, check_positive
from .exceptions import GridMismatch, Infeasible, RangeError
from .fem import CrossSection, sweep_chords
from .geometry import CrankGeometry, crank_torque, elastic_length, relax_angle

__all__ = [
    "PositiveSpring",
    "SynthesisConfig",
    "TorqueCurve",
    "StressReport",
    "JAW_OPENS",
    "spring_torque",
    "nsm_torque_curve",
    "nsm_force_curve",
    "net_torque_curve",
    "preload_for_target",
    "scale_section",
    "stress_check",
    "handle_map",
    "TorqueSynthesizer",
]

JAW_OPENS = "JawOpens"


@dataclass(frozen=True)
class PositiveSpring:
    """Torsional spring; ``k`` in N*m/rad, ``preload_angle`` in rad."""

    k: float
    preload_angle: float = 0.0

    def __post_init__(self):
        check_positive(self.k, "k")
        if self.preload_angle < 0:
            raise ValueError("preload_angle must be >= 0")

    @classmethod
    def from_mNm_per_deg(cls, k, preload_deg=0.0):
        return cls(float(k * 1e-3 / np.radians(1.0)), float(np.radians(preload_deg)))

    def with_preload(self, preload_angle):
        return replace(self, preload_angle=preload_angle)


@dataclass(frozen=True)
class SynthesisConfig:
    """Mechanism parameters; angles in rad, lengths in m.

    ``relaxed_chord`` defaults to the chord at crank angle theta1 + theta2/2,
    which puts the operating window symmetric about the dead centre B after a
    pre-load period of theta1 measured from A.
    """

    geometry: CrankGeometry
    spring: PositiveSpring
    theta1: float = np.radians(45.0)
    theta2: float = np.radians(90.0)
    relaxed_chord: float = None
    jaw_limits: tuple = (0.0, np.radians(90.0))
    jaw_length: float = 0.020
    handle_ratio: float = 1.0

    def __post_init__(self):
        if not self.theta2 > 0:
            raise ValueError("theta2 must be positive")
        if self.theta1 < 0:
            raise ValueError("theta1 must be >= 0")
        if self.relaxed_chord is None:
            object.__setattr__(
                self, "relaxed_chord", elastic_length(self.geometry, self.theta1 + 0.5 * self.theta2)
            )
        if self.theta1 + self.theta2 > 2.0 * self.relax_angle:
            raise ValueError("theta1 + theta2 exceeds the sweep between relax positions A and C")

    @property
    def relax_angle(self):
        """Crank angle of relax position A (C is its mirror image)."""
        return relax_angle(self.geometry, self.relaxed_chord)

    @property
    def window(self):
        return (self.theta1, self.theta1 + self.theta2)

    def crank_angle(self, psi):
        return self.relax_angle - np.asarray(psi, dtype=float)

    def operating_angles(self, step):
        lo, hi = self.window
        n = int(round((hi - lo) / step)) + 1
        return np.linspace(lo, hi, n)


@dataclass(frozen=True, eq=False)
class TorqueCurve:
    """Torque samples over operating angle with statistics over ``window``.

    All statistics are computed from the samples on access.
    """

    theta: np.ndarray
    torque: np.ndarray
    window: tuple = None

    def __post_init__(self):
        theta = check_finite_array(self.theta, "theta")
        torque = check_finite_array(self.torque, "torque")
        if theta.shape != torque.shape or theta.ndim != 1:
            raise ValueError("theta and torque must be 1D arrays of equal length")
        order = np.argsort(theta, kind="stable")
        object.__setattr__(self, "theta", theta[order])
        object.__setattr__(self, "torque", torque[order])
        if self.window is None:
            object.__setattr__(self, "window", (float(theta.min()), float(theta.max())))

    def __len__(self):
        return len(self.theta)

    def __add__(self, other):
        if not isinstance(other, TorqueCurve):
            return NotImplemented
        if self.theta.shape != other.theta.shape or not np.allclose(self.theta, other.theta, rtol=0, atol=1e-12):
            raise GridMismatch("torque curves are sampled on different angle grids")
        return TorqueCurve(self.theta, self.torque + other.torque, self.window)

    def _in_window(self):
        lo, hi = self.window
        tol = 1e-9 * max(1.0, abs(hi))
        mask = (self.theta >= lo - tol) & (self.theta <= hi + tol)
        return self.theta[mask], self.torque[mask]

    def _fit(self):
        x, y = self._in_window()
        A = np.column_stack([x, np.ones_like(x)])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        return coef, y - A @ coef

    @property
    def slope(self):
        """Least-squares slope over the window, N*m/rad."""
        return float(self._fit()[0][0])

    @property
    def intercept(self):
        return float(self._fit()[0][1])

    @property
    def rms_residual(self):
        """Root-mean-square residual about the least-squares line."""
        return float(np.sqrt(np.mean(self._fit()[1] ** 2)))

    @property
    def mean(self):
        return float(np.mean(self._in_window()[1]))

    @property
    def std(self):
        """Population standard deviation over the window (RMS about the mean)."""
        return float(np.std(self._in_window()[1]))

    @property
    def cv(self):
        m = self.mean
        return float(self.std / abs(m)) if m != 0 else float("inf")

    def to_csv(self, path):
        """Write ``theta_deg, torque_mNm`` rows."""
        with open(path, "w") as fh:
            fh.write("theta_deg,torque_mNm\n")
            for t, q in zip(np.degrees(self.theta).tolist(), (self.torque * 1e3).tolist()):
                fh.write(f"{t!r},{q!r}\n")


@dataclass(frozen=True)
class StressReport:
    peak: float
    yield_strength: float

    @property
    def margin(self):
        return self.yield_strength - self.peak

    @property
    def passed(self):
        return bool(self.peak < self.yield_strength)


def spring_torque(spring, psi):
    """Positive-spring torque ``k * (preload - psi)``."""
    return spring.k * (spring.preload_angle - np.asarray(psi, dtype=float))


def nsm_force_curve(model, config, psi, **solver_options):
    """FEM samples covering every chord visited at the operating angles ``psi``."""
    chords = elastic_length(config.geometry, config.crank_angle(psi))
    return sweep_chords(model, np.atleast_1d(chords), **solver_options)


def nsm_torque_curve(curve, geom, L0, psi, window=None):
    """Map a force-deflection curve through the crank into NSM torque.

    Parameters
    ----------
    curve : ForceDeflectionCurve
    geom : CrankGeometry
    L0 : float
        Relaxed chord of the element; fixes the relax angle A.
    psi : array_like
        Operating angles (rad from A).

    Raises
    ------
    RangeError
        If a requested chord lies outside the sampled chord range.
    """
    psi = np.atleast_1d(np.asarray(psi, dtype=float))
    theta = relax_angle(geom, L0) - psi
    chords = elastic_length(geom, theta)
    order = np.argsort(curve.chord)
    xs, fs = np.asarray(curve.chord)[order], np.asarray(curve.force)[order]
    tol = 1e-9 * xs.max()
    if np.any(chords < xs[0] - tol) or np.any(chords > xs[-1] + tol):
        raise RangeError("operating angles map outside the force-deflection curve")
    force = np.interp(chords, xs, fs)
    return TorqueCurve(psi, -crank_torque(geom, force, theta), window)


def net_torque_curve(nsm, spring):
    """Pointwise sum of NSM and spring torque on the NSM grid."""
    return nsm + TorqueCurve(nsm.theta, spring_torque(spring, nsm.theta), nsm.window)


def preload_for_target(k, nsm, T_target):
    """Spring pre-load angle making the window-mean net torque equal ``T_target``.

    Raises
    ------
    Infeasible
        If the required pre-load is negative.
    """
    psi, torque = nsm._in_window()
    preload = (T_target - float(np.mean(torque))) / k + float(np.mean(psi))
    if preload < 0:
        raise Infeasible(f"target {T_target!r} N*m needs a negative pre-load ({np.degrees(preload):.3f} deg)")
    return float(preload)


def scale_section(design, force_scale):
    """Scale the out-of-plane width; forces scale by exactly ``force_scale``."""
    check_positive(force_scale, "force_scale")
    s = design.section
    return design.with_section(CrossSection(s.in_plane_thickness, s.out_of_plane_width * force_scale))


def stress_check(curve, material):
    peak = float(np.max(curve.max_von_mises)) if len(curve) else 0.0
    return StressReport(peak, material.yield_strength)


def handle_map(handle_angle, config, nsm):
    """Mean grasping torque for a handle closure angle (rad from fully open).

    The tendon winds the spring by ``config.handle_ratio * handle_angle``.
    Returns :data:`JAW_OPENS` when the mean net torque is not positive.
    """
    spring = config.spring.with_preload(config.handle_ratio * handle_angle)
    mean = net_torque_curve(nsm, spring).mean
    return mean if mean > 0 else JAW_OPENS


class TorqueSynthesizer(BaseEstimator):
    """Calibrate spring pre-loads against a fitted NSM torque curve.

    Parameters
    ----------
    k_mNm_per_deg : float
        Positive spring stiffness.
    handle_ratio : float
        Pre-load angle per unit of handle closure.
    """

    def __init__(self, k_mNm_per_deg=0.3, handle_ratio=1.0):
        self.k_mNm_per_deg = k_mNm_per_deg
        self.handle_ratio = handle_ratio

    def fit(self, nsm, y=None):
        self.spring_ = PositiveSpring.from_mNm_per_deg(self.k_mNm_per_deg)
        self.nsm_ = nsm
        return self

    def _check_fitted(self):
        if not hasattr(self, "nsm_"):
            from sklearn.exceptions import NotFittedError

            raise NotFittedError("call fit() with an NSM torque curve first")

    def preload(self, targets):
        """Pre-load angles (rad) for torque targets (N*m)."""
        self._check_fitted()
        return np.array([preload_for_target(self.spring_.k, self.nsm_, t) for t in np.atleast_1d(targets)])

    def transform(self, targets):
        """Net torque curves, one per target."""
        return [net_torque_curve(self.nsm_, self.spring_.with_preload(p)) for p in self.preload(targets)]

    def predict(self, handle_angles):
        """Mean grasping torque per handle closure angle; NaN where the jaw opens."""
        self._check_fitted()
        out = []
        for h in np.atleast_1d(handle_angles):
            spring = self.spring_.with_preload(self.handle_ratio * h)
            out.append(net_torque_curve(self.nsm_, spring).mean)
        out = np.array(out)
        return np.where(out > 0, out, np.nan)
