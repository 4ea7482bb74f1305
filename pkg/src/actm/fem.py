"""Geometrically nonlinear planar beam FEM for compliant beams.

The beam centreline is a natural cubic spline through five key points,
resampled into equal-arc-length two-node corotational Euler-Bernoulli
elements. The force-deflection curve is traced under displacement control:
one pin is fixed at the first key point, the other pin is driven along the
chord, and Newton-Raphson with step bisection restores equilibrium at every
increment. Rotations at both pins are free.

All quantities are SI (m, N, Pa).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .exceptions import NonConvergence, ShapeError

__all__ = [
    "Material",
    "CrossSection",
    "BeamDesign",
    "BeamModel",
    "ForceDeflectionCurve",
    "build_model",
    "natural_chord",
    "solve_force_deflection",
    "solve_cantilever",
    "sweep_chords",
    "PLA",
]

_BOX_SLACK = 1e-12


@dataclass(frozen=True)
class Material:
    """Linear-elastic isotropic material card.

    ``poisson_ratio`` is kept so the card matches the data sheet; Euler-Bernoulli
    beams never use it.
    """

    youngs_modulus: float
    poisson_ratio: float
    yield_strength: float

    def __post_init__(self):
        if not self.youngs_modulus > 0:
            raise ValueError("youngs_modulus must be positive")
        if not 0.0 <= self.poisson_ratio < 0.5:
            raise ValueError("poisson_ratio must lie in [0, 0.5)")
        if not self.yield_strength > 0:
            raise ValueError("yield_strength must be positive")


PLA = Material(youngs_modulus=3.45e9, poisson_ratio=0.39, yield_strength=106e6)


@dataclass(frozen=True)
class CrossSection:
    """Rectangular section; bending happens about the out-of-plane axis."""

    in_plane_thickness: float
    out_of_plane_width: float

    def __post_init__(self):
        if not (self.in_plane_thickness > 0 and self.out_of_plane_width > 0):
            raise ValueError("section dimensions must be positive")

    @property
    def area(self):
        return self.in_plane_thickness * self.out_of_plane_width

    @property
    def inertia(self):
        return self.out_of_plane_width * self.in_plane_thickness**3 / 12.0

    @property
    def fiber_distance(self):
        return 0.5 * self.in_plane_thickness


def _validate_key_points(points, box):
    points = np.asarray(points, dtype=float)
    if points.shape != (5, 2):
        raise ShapeError(f"expected 5 key points of shape (5, 2), got {points.shape}")
    if not np.all(np.isfinite(points)):
        raise ShapeError("key points must be finite")
    width, height = box
    lo = -_BOX_SLACK
    if (
        np.any(points[:, 0] < lo)
        or np.any(points[:, 0] > width + _BOX_SLACK)
        or np.any(points[:, 1] < lo)
        or np.any(points[:, 1] > height + _BOX_SLACK)
    ):
        raise ShapeError("key points must lie inside the design box")
    seg = np.hypot(*np.diff(points, axis=0).T)
    if np.any(seg <= 0.0):
        raise ShapeError("consecutive key points must be distinct")
    if np.hypot(*(points[-1] - points[0])) <= 0.0:
        raise ShapeError("pin locations must be distinct")
    return points


@dataclass(frozen=True, eq=False)
class BeamDesign:
    """Five key points (box frame, origin at the box corner) plus section data.

    The first and last key points are the pin locations.
    """

    key_points: np.ndarray
    section: CrossSection
    material: Material
    design_box: tuple

    def __post_init__(self):
        box = tuple(float(v) for v in self.design_box)
        if len(box) != 2 or min(box) <= 0:
            raise ShapeError("design_box must be (width, height) with positive sides")
        pts = _validate_key_points(self.key_points, box).copy()
        pts.setflags(write=False)
        object.__setattr__(self, "key_points", pts)
        object.__setattr__(self, "design_box", box)

    def with_key_points(self, key_points):
        return BeamDesign(key_points, self.section, self.material, self.design_box)

    def with_section(self, section):
        return BeamDesign(self.key_points, section, self.material, self.design_box)


@dataclass(frozen=True, eq=False)
class BeamModel:
    """Discretised reference configuration of a beam design."""

    nodes: np.ndarray
    section: CrossSection
    material: Material
    connectivity: np.ndarray = field(repr=False)
    lengths: np.ndarray = field(repr=False)
    angles: np.ndarray = field(repr=False)

    @property
    def n_elements(self):
        return len(self.lengths)

    @property
    def arc_length(self):
        return float(self.lengths.sum())

    @classmethod
    def from_nodes(cls, nodes, section, material):
        nodes = np.array(nodes, dtype=float)
        d = np.diff(nodes, axis=0)
        lengths = np.hypot(d[:, 0], d[:, 1])
        if np.any(lengths <= 0):
            raise ShapeError("element reference lengths must be positive")
        n = len(lengths)
        conn = np.column_stack([np.arange(n), np.arange(1, n + 1)])
        return cls(nodes, section, material, conn, lengths, np.arctan2(d[:, 1], d[:, 0]))


def _spline_nodes(points, n_elements, samples_per_segment=400):
    knots = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(points, axis=0).T))])
    spline = CubicSpline(knots, points, bc_type="natural", axis=0)
    t = np.linspace(0.0, knots[-1], samples_per_segment * (len(points) - 1) + 1)
    xy = spline(t)
    s = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(xy, axis=0).T))])
    t_nodes = np.interp(np.linspace(0.0, s[-1], n_elements + 1), s, t)
    nodes = spline(t_nodes)
    nodes[0], nodes[-1] = points[0], points[-1]
    return nodes


def build_model(design, n_elements=40):
    """Interpolate the key points and mesh the centreline.

    Parameters
    ----------
    design : BeamDesign
    n_elements : int
        Number of equal-arc-length elements, at least 2.
    """
    if int(n_elements) != n_elements or n_elements < 2:
        raise ValueError("n_elements must be an integer >= 2")
    nodes = _spline_nodes(np.asarray(design.key_points), int(n_elements))
    return BeamModel.from_nodes(nodes, design.section, design.material)


def natural_chord(model):
    """Pin-to-pin distance of the stress-free configuration."""
    return float(np.hypot(*(model.nodes[-1] - model.nodes[0])))


@dataclass(frozen=True, eq=False)
class ForceDeflectionCurve:
    """Chord-controlled response of a pinned-pinned beam.

    ``force`` is the axial reaction along the chord, tension positive.
    """

    chord: np.ndarray
    force: np.ndarray
    max_von_mises: np.ndarray
    converged: np.ndarray
    strain_energy: np.ndarray = field(repr=False, default=None)
    reaction_start: np.ndarray = field(repr=False, default=None)
    reaction_end: np.ndarray = field(repr=False, default=None)

    def __len__(self):
        return len(self.chord)

    def to_csv(self, path):
        """Write ``chord_m, force_N, max_von_mises_Pa, converged`` rows."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["chord_m", "force_N", "max_von_mises_Pa", "converged"])
            for row in zip(self.chord, self.force, self.max_von_mises, self.converged):
                writer.writerow([repr(float(row[0])), repr(float(row[1])), repr(float(row[2])), str(bool(row[3])).lower()])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls(
            chord=np.array([float(r["chord_m"]) for r in rows]),
            force=np.array([float(r["force_N"]) for r in rows]),
            max_von_mises=np.array([float(r["max_von_mises_Pa"]) for r in rows]),
            converged=np.array([r["converged"].strip().lower() == "true" for r in rows]),
        )


class _Corotational:
    """Vectorised 2D corotational beam assembly (Crisfield/Battini formulation)."""

    def __init__(self, model):
        self.X = model.nodes
        self.L0 = model.lengths
        self.c0 = np.cos(model.angles)
        self.s0 = np.sin(model.angles)
        self.EA = model.material.youngs_modulus * model.section.area
        self.EI = model.material.youngs_modulus * model.section.inertia
        self.A = model.section.area
        self.I = model.section.inertia
        self.fiber = model.section.fiber_distance
        ne = len(self.L0)
        self.ndof = 3 * (ne + 1)
        first = 3 * np.arange(ne)
        self.edofs = np.column_stack([first + k for k in range(6)])
        self._rows = np.repeat(self.edofs, 6, axis=1).ravel()
        self._cols = np.tile(self.edofs, (1, 6)).ravel()

    def _local(self, u):
        U = u.reshape(-1, 3)
        x = self.X + U[:, :2]
        d = x[1:] - x[:-1]
        L = np.hypot(d[:, 0], d[:, 1])
        c, s = d[:, 0] / L, d[:, 1] / L
        alpha = np.arctan2(self.c0 * s - self.s0 * c, self.c0 * c + self.s0 * s)
        mean_rot = 0.5 * (U[:-1, 2] + U[1:, 2])
        alpha = alpha + 2.0 * np.pi * np.round((mean_rot - alpha) / (2.0 * np.pi))
        th1 = U[:-1, 2] - alpha
        th2 = U[1:, 2] - alpha
        ul = (L * L - self.L0 * self.L0) / (L + self.L0)
        k = self.EI / self.L0
        N = self.EA * ul / self.L0
        M1 = k * (4.0 * th1 + 2.0 * th2)
        M2 = k * (2.0 * th1 + 4.0 * th2)
        return L, c, s, ul, th1, th2, N, M1, M2

    def internal(self, u, tangent=True):
        L, c, s, _, _, _, N, M1, M2 = self._local(u)
        ne = len(L)
        zero = np.zeros(ne)
        r = np.column_stack([-c, -s, zero, c, s, zero])
        z = np.column_stack([s, -c, zero, -s, c, zero])
        B = np.empty((ne, 3, 6))
        B[:, 0] = r
        B[:, 1] = -z / L[:, None]
        B[:, 2] = -z / L[:, None]
        B[:, 1, 2] += 1.0
        B[:, 2, 5] += 1.0
        q = np.column_stack([N, M1, M2])
        fe = np.einsum("eij,ei->ej", B, q)
        f = np.zeros(self.ndof)
        np.add.at(f, self.edofs, fe)
        if not tangent:
            return f, None
        k = self.EI / self.L0
        Kl = np.zeros((ne, 3, 3))
        Kl[:, 0, 0] = self.EA / self.L0
        Kl[:, 1, 1] = Kl[:, 2, 2] = 4.0 * k
        Kl[:, 1, 2] = Kl[:, 2, 1] = 2.0 * k
        Ke = np.einsum("eki,ekl,elj->eij", B, Kl, B)
        Ke += (N / L)[:, None, None] * np.einsum("ei,ej->eij", z, z)
        rz = np.einsum("ei,ej->eij", r, z)
        Ke += ((M1 + M2) / L**2)[:, None, None] * (rz + rz.transpose(0, 2, 1))
        K = np.zeros((self.ndof, self.ndof))
        np.add.at(K, (self._rows, self._cols), Ke.ravel())
        return f, K

    def stress_and_energy(self, u):
        _, _, _, ul, th1, th2, N, M1, M2 = self._local(u)
        sigma = np.abs(N) / self.A + np.maximum(np.abs(M1), np.abs(M2)) * self.fiber / self.I
        energy = 0.5 * self.EA / self.L0 * ul**2 + self.EI / self.L0 * 2.0 * (th1**2 + th1 * th2 + th2**2)
        return float(sigma.max()), float(energy.sum())


def _newton(asm, u, free, tol, max_iter):
    """Iterate on the free DOFs; return (u, K, ok)."""
    for _ in range(max_iter + 1):
        f, K = asm.internal(u)
        r = f[free]
        if not np.all(np.isfinite(r)):
            return u, K, False
        if np.linalg.norm(r) <= tol:
            return u, K, True
        try:
            du = np.linalg.solve(K[np.ix_(free, free)], -r)
        except np.linalg.LinAlgError:
            return u, K, False
        u = u.copy()
        u[free] += du
    return u, K, False


def solve_force_deflection(
    model,
    chord_schedule,
    *,
    max_increment=None,
    tol=1e-8,
    max_iter=50,
    max_bisections=5,
):
    """Trace the chord-controlled equilibrium path of a pinned-pinned beam.

    The first pin stays at the first node; the second pin is moved along the
    reference chord direction so the pin-to-pin distance follows
    ``chord_schedule``. Between schedule points the path is advanced in
    increments no larger than ``max_increment`` (default 1% of the natural
    chord), each bisected up to ``max_bisections`` times if Newton fails.

    Parameters
    ----------
    model : BeamModel
    chord_schedule : sequence of float
        Chord lengths in m; must start at the natural chord and be strictly
        monotone.
    tol : float
        Residual tolerance as a fraction of the axial rigidity E*A.

    Returns
    -------
    ForceDeflectionCurve

    Raises
    ------
    NonConvergence
        If an increment cannot be completed after all bisections.
    """
    schedule = np.asarray(chord_schedule, dtype=float)
    c0 = natural_chord(model)
    if schedule.ndim != 1 or len(schedule) < 1:
        raise ValueError("chord_schedule must be a non-empty 1D sequence")
    if not np.isclose(schedule[0], c0, rtol=1e-9, atol=0.0):
        raise ValueError(f"chord schedule must start at the natural chord {c0!r}")
    steps = np.diff(schedule)
    if len(steps) and not (np.all(steps > 0) or np.all(steps < 0)):
        raise ValueError("chord schedule must be strictly monotone")
    if max_increment is None:
        max_increment = 0.01 * c0

    asm = _Corotational(model)
    e = (model.nodes[-1] - model.nodes[0]) / c0
    last = asm.ndof - 3
    fixed = np.array([0, 1, last, last + 1])
    free = np.setdiff1d(np.arange(asm.ndof), fixed)
    prescribed = np.array([last, last + 1])
    abs_tol = tol * asm.EA

    u = np.zeros(asm.ndof)
    _, K = asm.internal(u)

    def advance(u, K, target, depth):
        u_new = u.copy()
        dp = (target - c0) * e - u[prescribed]
        u_new[prescribed] += dp
        Kff = K[np.ix_(free, free)]
        try:
            u_new[free] += np.linalg.solve(Kff, -K[np.ix_(free, prescribed)] @ dp)
        except np.linalg.LinAlgError:
            pass
        u_new, K_new, ok = _newton(asm, u_new, free, abs_tol, max_iter)
        if ok:
            return u_new, K_new
        if depth >= max_bisections:
            return None
        current = c0 + float(u[prescribed] @ e)
        mid = 0.5 * (current + target)
        half = advance(u, K, mid, depth + 1)
        if half is None:
            return None
        return advance(*half, target, depth + 1)

    n = len(schedule)
    force = np.zeros(n)
    stress = np.zeros(n)
    energy = np.zeros(n)
    reac0 = np.zeros((n, 2))
    reac1 = np.zeros((n, 2))
    f, _ = asm.internal(u, tangent=False)
    stress[0], energy[0] = asm.stress_and_energy(u)
    reac0[0], reac1[0] = f[0:2], f[last : last + 2]
    for i in range(1, n):
        current = schedule[i - 1]
        n_sub = max(1, int(np.ceil(abs(schedule[i] - current) / max_increment - 1e-9)))
        for target in np.linspace(current, schedule[i], n_sub + 1)[1:]:
            result = advance(u, K, target, 0)
            if result is None:
                raise NonConvergence(i)
            u, K = result
        f, _ = asm.internal(u, tangent=False)
        x0 = model.nodes[0] + u[0:2]
        x1 = model.nodes[-1] + u[last : last + 2]
        chord_dir = (x1 - x0) / np.hypot(*(x1 - x0))
        reac0[i], reac1[i] = f[0:2], f[last : last + 2]
        force[i] = float(reac1[i] @ chord_dir)
        stress[i], energy[i] = asm.stress_and_energy(u)
    return ForceDeflectionCurve(
        chord=schedule.copy(),
        force=force,
        max_von_mises=stress,
        converged=np.ones(n, dtype=bool),
        strain_energy=energy,
        reaction_start=reac0,
        reaction_end=reac1,
    )


def sweep_chords(model, chords, **solver_options):
    """Force-deflection samples at arbitrary chords, merged in ascending order.

    Chords above and below the natural chord are traced as separate branches
    from the stress-free state; duplicates are dropped.
    """
    c0 = natural_chord(model)
    chords = np.unique(np.asarray(chords, dtype=float))
    longer = chords[chords > c0 * (1 + 1e-12)]
    shorter = chords[chords < c0 * (1 - 1e-12)][::-1]
    parts = []
    for branch in (shorter, longer):
        if len(branch):
            curve = solve_force_deflection(model, np.concatenate([[c0], branch]), **solver_options)
            parts.append(curve)
    if not parts:
        parts.append(solve_force_deflection(model, [c0], **solver_options))
    keys = ("chord", "force", "max_von_mises", "converged", "strain_energy")
    merged = {}
    for key in keys:
        if len(parts) == 2:
            a, b = parts
            merged[key] = np.concatenate([getattr(a, key)[1:][::-1], getattr(b, key)])
        else:
            curve = parts[0]
            values = getattr(curve, key)
            merged[key] = values if curve.chord[-1] >= c0 else values[::-1]
    return ForceDeflectionCurve(**merged)


def solve_cantilever(length, section, material, load_parameter, n_elements=40, n_increments=20, tol=1e-8, max_iter=50):
    """Tip deflection of a clamped straight cantilever under a transverse tip load.

    ``load_parameter`` is the dimensionless load P L^2 / (E I). The load keeps
    its original direction (dead load). Returns ``(axial, transverse)`` tip
    displacements in m; transverse is positive in the load direction.
    """
    nodes = np.column_stack([np.linspace(0.0, length, n_elements + 1), np.zeros(n_elements + 1)])
    model = BeamModel.from_nodes(nodes, section, material)
    asm = _Corotational(model)
    P = load_parameter * asm.EI / length**2
    free = np.arange(3, asm.ndof)
    u = np.zeros(asm.ndof)
    for lam in np.linspace(0.0, 1.0, n_increments + 1)[1:]:
        fext = np.zeros(asm.ndof)
        fext[asm.ndof - 2] = -lam * P
        for _ in range(max_iter + 1):
            f, K = asm.internal(u)
            r = (f - fext)[free]
            if np.linalg.norm(r) <= tol * max(P, asm.EI / length**2):
                break
            u[free] += np.linalg.solve(K[np.ix_(free, free)], -r)
        else:
            raise NonConvergence(0, "cantilever load step failed")
    return float(u[asm.ndof - 3]), float(-u[asm.ndof - 2])
