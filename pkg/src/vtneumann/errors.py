"""Exception hierarchy shared by every module of the package."""


class VTNeumannError(Exception):
    """Base class for all package errors."""


class ParameterError(VTNeumannError, ValueError):
    """A parameter lies outside its admissible domain."""


class GridMismatchError(VTNeumannError, ValueError):
    """Two objects that must live on the same grid do not."""


class DivergentIntegralError(VTNeumannError, ArithmeticError):
    """An integral over an unbounded region does not converge."""


class SingularResolventError(VTNeumannError, ArithmeticError):
    """A resolvent denominator is non-positive (mu too small)."""


class IncompatibleProblemError(VTNeumannError):
    """The data violate the compatibility condition int f = -int g."""

    def __init__(self, defect: float, message: str | None = None):
        self.defect = defect
        super().__init__(
            message
            or f"compatibility condition int_Omega f + int_Omega^c g = 0 violated: defect = {defect!r}"
        )


class CapExceededError(VTNeumannError):
    """A dense computation would exceed its configured size cap."""
