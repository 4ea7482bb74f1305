"""Analytic and self-consistency checks for the beam solver.

Each check returns a :class:`Check` row; :func:`validate_fem` runs the whole
suite used by ``actm validate-fem``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_bvp

from .fem import (
    PLA,
    BeamDesign,
    BeamModel,
    CrossSection,
    build_model,
    natural_chord,
    solve_cantilever,
    solve_force_deflection,
)

__all__ = [
    "Check",
    "elastica_tip",
    "shallow_arch",
    "check_axial_bar",
    "check_cantilever",
    "check_energy",
    "check_mesh_convergence",
    "check_frame_indifference",
    "check_pin_equilibrium",
    "negative_stiffness_fraction",
    "validate_fem",
    "format_report",
]

DEFAULT_SECTION = CrossSection(0.002, 0.006)


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    reference: float
    tolerance: float

    @property
    def error(self):
        if self.reference == 0:
            return abs(self.value)
        return abs(self.value - self.reference) / abs(self.reference)

    @property
    def passed(self):
        return bool(np.isfinite(self.error) and self.error <= self.tolerance)


def elastica_tip(load_parameter):
    """Tip displacement of the inextensible elastica under a dead tip load.

    Solves theta'' = -a cos(theta), theta(0) = 0, theta'(1) = 0 on the unit
    arc length, with ``a = P L^2 / (E I)``. Returns ``(axial, transverse)``
    tip displacement divided by L (axial is negative: the tip moves back).
    """
    a = float(load_parameter)

    def rhs(s, y):
        return np.vstack([y[1], -a * np.cos(y[0]), np.cos(y[0]), np.sin(y[0])])

    def bc(ya, yb):
        return np.array([ya[0], yb[1], ya[2], ya[3]])

    s = np.linspace(0.0, 1.0, 201)
    guess = np.zeros((4, s.size))
    guess[0] = a * (s - 0.5 * s * s)
    guess[2] = s
    sol = solve_bvp(rhs, bc, s, guess, tol=1e-10, max_nodes=100000)
    if not sol.success:
        raise RuntimeError(f"elastica BVP failed: {sol.message}")
    x, y = sol.sol(1.0)[2:]
    return float(x - 1.0), float(y)


def shallow_arch(span=0.0144222, rise=0.002, section=DEFAULT_SECTION, material=PLA, box=(0.030, 0.012)):
    """Half-sine arch through five key points with pins on the box's bottom edge."""
    x0 = 0.5 * (box[0] - span)
    t = np.linspace(0.0, 1.0, 5)
    points = np.column_stack([x0 + span * t, rise * np.sin(np.pi * t)])
    points[[0, -1], 1] = 0.0
    return BeamDesign(points, section, material, box)


def _arch_sweep(n_elements, compression=0.2, n_samples=41):
    model = build_model(shallow_arch(), n_elements)
    c0 = natural_chord(model)
    return solve_force_deflection(model, np.linspace(c0, (1.0 - compression) * c0, n_samples))


def negative_stiffness_fraction(curve):
    """Fraction of the sweep where the resisting force falls as deflection grows.

    The resisting force is the force opposing the pin motion; the fraction is
    the share of finite-difference intervals with a strictly negative slope.
    """
    d = np.abs(curve.chord - curve.chord[0])
    sign = -1.0 if curve.chord[-1] < curve.chord[0] else 1.0
    resisting = sign * np.asarray(curve.force)
    slope = np.diff(resisting) / np.diff(d)
    return float(np.mean(slope < 0))


def check_axial_bar(n_elements=40, strain=1e-4, section=DEFAULT_SECTION, material=PLA):
    L0 = 0.02
    nodes = np.column_stack([np.linspace(0.0, L0, n_elements + 1), np.zeros(n_elements + 1)])
    model = BeamModel.from_nodes(nodes, section, material)
    curve = solve_force_deflection(model, [L0, L0 * (1 + strain)])
    expected = material.youngs_modulus * section.area * strain
    return Check("axial bar force", float(curve.force[-1]), expected, 0.01)


def check_cantilever(n_elements=40, load_parameter=2.0, section=DEFAULT_SECTION, material=PLA):
    L = 0.02
    _, v = solve_cantilever(L, section, material, load_parameter, n_elements=n_elements)
    _, v_ref = elastica_tip(load_parameter)
    return Check("elastica cantilever tip deflection", v / L, v_ref, 0.02)


def check_energy(n_elements=40):
    """Work done by the pin force (trapezoid) against stored strain energy."""
    model = build_model(shallow_arch(), n_elements)
    c0 = natural_chord(model)
    curve = solve_force_deflection(model, np.linspace(c0, 0.9 * c0, 201))
    work = float(np.trapezoid(curve.force, curve.chord))
    return Check("energy consistency", work, float(curve.strain_energy[-1]), 0.01)


def check_mesh_convergence(n_elements=40):
    """Peak resisting force of the reference arch at n vs 2n elements."""
    coarse = np.max(np.abs(_arch_sweep(n_elements).force))
    fine = np.max(np.abs(_arch_sweep(2 * n_elements).force))
    return Check(f"mesh convergence {n_elements}->{2 * n_elements}", float(coarse), float(fine), 0.01)


def check_frame_indifference(n_elements=40, angle=0.7):
    """A rigidly rotated arch must give the same chord force."""
    model = build_model(shallow_arch(), n_elements)
    c, s = np.cos(angle), np.sin(angle)
    rotated = BeamModel.from_nodes(model.nodes @ np.array([[c, s], [-s, c]]), model.section, model.material)
    c0 = natural_chord(model)
    schedule = np.linspace(c0, 0.9 * c0, 11)
    a = solve_force_deflection(model, schedule).force[-1]
    b = solve_force_deflection(rotated, schedule).force[-1]
    return Check("frame indifference", float(b), float(a), 1e-6)


def check_pin_equilibrium(n_elements=40):
    """Pin reactions must cancel (no external load between the pins)."""
    model = build_model(shallow_arch(), n_elements)
    c0 = natural_chord(model)
    curve = solve_force_deflection(model, np.linspace(c0, 0.9 * c0, 11))
    imbalance = np.max(np.hypot(*(curve.reaction_start + curve.reaction_end).T))
    scale = np.max(np.hypot(*curve.reaction_end.T))
    return Check("pin equilibrium", float(imbalance / scale), 0.0, 1e-6)


def validate_fem(n_elements=40):
    """Run every check with the given mesh density."""
    return [
        check_axial_bar(n_elements),
        check_cantilever(n_elements),
        check_energy(n_elements),
        check_mesh_convergence(n_elements),
        check_frame_indifference(n_elements),
        check_pin_equilibrium(n_elements),
    ]


def format_report(checks):
    rows = ["check,value,reference,rel_error,tolerance,passed"]
    for c in checks:
        rows.append(f"{c.name},{c.value!r},{c.reference!r},{c.error:.3e},{c.tolerance:g},{str(c.passed).lower()}")
    return "\n".join(rows) + "\n"
