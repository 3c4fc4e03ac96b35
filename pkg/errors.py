"""Error hierarchy shared by every galinv component."""


class GalinvError(Exception):
    """Base class of all library errors; the CLI maps it to exit code 2."""


class InvalidElement(GalinvError):
    """A group element, rotation or algebra vector has the wrong shape or is not in SGal(3)."""


class GimbalLock(GalinvError):
    """The Euler-angle chart is degenerate (cos θ2 = 0)."""


class IndexOutOfRange(GalinvError):
    """A generator index outside 1..10."""


class DecompositionFailure(GalinvError):
    """A bracket does not lie in the span of the generators."""


class SingularJacobian(GalinvError):
    """H_z could not be inverted while evaluating Maurer-Cartan forms directly."""


class DegenerateAcceleration(GalinvError):
    """‖x_tt‖ is at or below tol_a, so the second-order normalization is undefined."""


class DegenerateTorsion(GalinvError):
    """x_tt and x_ttt are parallel, so θ3 and the frame vectors e2, e3 are undefined."""


class DegenerateFrame(GalinvError):
    """No regular frame exists at a requested anchor."""


class GridTooSmall(GalinvError):
    """Too few samples for the requested differentiation scheme."""


class NonMonotoneGrid(GalinvError):
    """Sample times are not strictly increasing."""


class NonUniformGrid(GalinvError):
    """Smoothing was requested on a grid whose spacing is not constant."""


class OffGrid(GalinvError):
    """A sampled motion was evaluated outside its time domain."""


class InvalidOrder(GalinvError):
    """A jet order or invariant-family order is out of range."""


class NoRegularWindow(GalinvError):
    """No usable regular sub-window is left after masking or shifting."""


class AmbiguousShift(GalinvError):
    """The time shift cannot be identified from the signature."""


class TrajectoryFormatError(GalinvError):
    """A trajectory file failed parsing or validation."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
