"""Exception hierarchy shared by the actm modules."""


class ACTMError(Exception):
    """Base class for all domain errors raised by this package."""


class DomainError(ACTMError, ValueError):
    """An angle or parameter lies outside the domain of a kinematic formula."""


class ShapeError(ACTMError, ValueError):
    """Key points of a beam design violate the design invariants."""


class NonConvergence(ACTMError, RuntimeError):
    """Newton iterations failed after exhausting step bisection.

    Attributes
    ----------
    step : int
        Index into the chord schedule where the solver gave up.
    """

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"Newton-Raphson failed at schedule step {step}")


class InvalidOffspring(ACTMError, ValueError):
    """A GA operator produced a chromosome violating the key-point ordering."""


class NoFeasibleCandidate(ACTMError, RuntimeError):
    """Every evaluated chromosome was infeasible (or no search was performed)."""


class RangeError(ACTMError, ValueError):
    """A requested chord length falls outside a sampled force-deflection curve."""


class GridMismatch(ACTMError, ValueError):
    """Two torque curves are sampled on different angle grids."""


class Infeasible(ACTMError, ValueError):
    """A torque target needs a negative spring pre-load."""
