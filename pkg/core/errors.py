"""Exception hierarchy for the Lyapunov toolkit"""


class ToolkitError(Exception):
    """Base class for every error raised by the toolkit"""


class InvalidInput(ToolkitError, ValueError):
    """A value does not satisfy the invariants of its type"""


class InvalidParameters(ToolkitError, ValueError):
    """Model or analysis parameters are out of range"""


class ExpressionError(InvalidParameters):
    """A closed-form expression could not be parsed or evaluated"""


class GradientMismatch(InvalidParameters):
    """An analytic gradient disagrees with its finite-difference check"""


class BoundaryProximity(ToolkitError):
    """A point is too close to the boundary of the simplex"""


class NotIrreducible(ToolkitError):
    """A rate matrix or lattice chain is not irreducible"""


class SolverSingular(ToolkitError):
    """A linear solve produced a numerically defective result"""


class StepTooLarge(ToolkitError):
    """The integration step is too coarse for the dynamics"""


class NoConvergence(ToolkitError):
    """An iterative search failed to converge"""


class SupportViolation(ToolkitError):
    """A measure charges a state that the reference measure does not"""


class QuadratureFailure(ToolkitError):
    """Adaptive quadrature did not reach the requested tolerance"""


class NotFixedPoint(ToolkitError):
    """The supplied point is not a fixed point of the forward equation"""


class OverflowGuard(ToolkitError):
    """An exponent exceeded the overflow guard"""


class Infeasible(ToolkitError):
    """The flux lies outside the effective domain of the Lagrangian"""


class MaxIterations(ToolkitError):
    """An optimizer hit its iteration cap"""


class NotStationary(ToolkitError):
    """The supplied law is not stationary for the rate matrix"""


class NotReversible(ToolkitError):
    """The rate matrix violates detailed balance"""


class TooLarge(ToolkitError):
    """The lattice state space exceeds the memory guard"""


class ZeroMass(ToolkitError):
    """A lattice law assigns zero mass where a logarithm is needed"""
