"""Synthesis of constant-torque compliant mechanisms for surgical graspers.

A positive torsional spring in parallel with a negative-stiffness mechanism
(a pre-shaped compliant beam driven through a crank) produces a grasping
torque that stays flat over the jaw's operating window.
"""

from .exceptions import (
    ACTMError,
    DomainError,
    GridMismatch,
    Infeasible,
    InvalidOffspring,
    NoFeasibleCandidate,
    NonConvergence,
    RangeError,
    ShapeError,
)
from .fem import (
    PLA,
    BeamDesign,
    BeamModel,
    CrossSection,
    ForceDeflectionCurve,
    Material,
    build_model,
    natural_chord,
    solve_cantilever,
    solve_force_deflection,
    sweep_chords,
)
from .geometry import (
    AngleSchedule,
    CrankGeometry,
    crank_torque,
    element_deflection,
    elastic_length,
    relax_angle,
    target_force_profile,
)
from .ga import GAConfig, NSMOptimizer, NSMProblem, SurrogateProblem
from .synthesis import (
    JAW_OPENS,
    PositiveSpring,
    StressReport,
    SynthesisConfig,
    TorqueCurve,
    TorqueSynthesizer,
)

__version__ = "0.1.0"
