"""Exception hierarchy shared by every layer.

The CLI maps ``ParameterError`` to exit code 1 and ``NumericalError`` to 2.
"""


class CavcoolError(Exception):
    """Base class for all package errors."""


class ParameterError(CavcoolError, ValueError):
    """Invalid physical parameters or configuration."""


class NumericalError(CavcoolError, ArithmeticError):
    """A solve or integration could not produce a trustworthy result."""


class SingularSystemError(NumericalError):
    pass


class ResonancePoleError(NumericalError):
    pass


class IntegrationUnstableError(NumericalError):
    pass


class StepTooLargeError(ParameterError):
    pass
