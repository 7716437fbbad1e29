"""Error hierarchy.

Every error carries the process exit code the command line reports for it:
2 for configuration and argument problems, 3 for numerical failures.
"""
import math


class LabError(Exception):
    exit_code: int = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ConfigError(LabError):
    """Experiment file or settings could not be parsed or validated"""

    exit_code = 2


class DomainValueError(LabError, ValueError):
    """An argument lies outside the operation's domain"""

    exit_code = 2


class NumericalError(LabError):
    exit_code = 3


class StabilityError(NumericalError):
    """Explicit time step violates dt < h^2/4"""


class NonPositiveError(NumericalError):
    """An interior zeta value is not positive before the zeta^(4/3) evaluation"""


class BudgetExceededError(NumericalError):
    """A run used its whole step budget without quenching or settling"""


class SingularBeforeBoundary(NumericalError):
    """The shooting trajectory reached u = 1 inside the domain"""


class GradientBlowUp(SingularBeforeBoundary):
    """The shooting trajectory's slope diverged at `radius`, inside the domain"""

    def __init__(self, detail: str, radius: float = math.nan):
        super().__init__(detail)
        self.radius = radius


class NoBracketError(NumericalError):
    """No sign change of the shooting residual was found"""


class InsufficientSpanError(NumericalError):
    """A rate fit window holds too few samples or too narrow a range"""


class TooFewNodesError(NumericalError):
    """Not enough similarity-frame nodes for a quadrature"""


class NegativeBracketError(NumericalError):
    """The local expansion bracket is negative (outside its validity window)"""


class InsufficientRangeError(NumericalError):
    """A similarity frame covers too small a range of s or y"""
