"""
irrsum Exceptions
Every error is a ValueError so callers catching the built-in category keep working
"""

from typing import Optional


class IrrsumError(ValueError):
    """Base class for all irrsum errors"""


class ConfigurationError(IrrsumError):
    """Malformed configuration file or environment override"""


class InvalidParameter(IrrsumError):
    """A numeric argument is outside the range an operation accepts"""


class PrecisionExhausted(IrrsumError):
    """Adaptive precision reached its ceiling without meeting the tolerance"""

    def __init__(self, message: str, bits: Optional[int] = None):
        super().__init__(message)
        self.bits = bits


class RootIsolationError(IrrsumError):
    """Real roots of a polynomial piece could not be separated at the working precision"""


class DuplicateNodesError(IrrsumError):
    """Vandermonde nodes must be distinct"""


class OrderDeficiencyError(IrrsumError):
    """A distribution has a nonvanishing moment where the requested order demands zero"""

    def __init__(self, moment_index: int, value, required_order: int):
        super().__init__(
            f"moment {moment_index} = {value} does not vanish; order {required_order} required"
        )
        self.moment_index = moment_index
        self.value = value
        self.required_order = required_order


class PoleError(IrrsumError):
    """Evaluation point lies on the support of a distribution"""


class DomainViolation(IrrsumError):
    """Evaluation point or parameters outside the domain an operation is defined on"""


class SeriesFileError(IrrsumError):
    """Series description could not be parsed or validated"""


class CutPointCollision(IrrsumError):
    """A DIPP cut point coincides with a support point"""


class LinearProgramError(IrrsumError):
    """The norm linear program did not reach an optimum"""
