"""Exception hierarchy shared by all jrsp modules."""


class JrspError(Exception):
    """Base class for every error raised by this package."""


class InstanceError(JrspError, ValueError):
    """Invalid network, mode or instance-file content.

    ``path`` names the offending field (e.g. ``network.power_levels``) when
    the error originates from a file or a structured generator description.
    """

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


class ConditioningError(JrspError, ArithmeticError):
    """A noise covariance is not numerically positive definite."""


class SolverError(JrspError, RuntimeError):
    """The LP solver broke down or returned an inconsistent result."""


class EnumerationCapError(JrspError):
    """Exact enumeration refused because the mode universe is too large."""

    def __init__(self, estimate: int | None, cap: int):
        self.estimate = estimate
        self.cap = cap
        shown = "more than %d" % cap if estimate is None else str(estimate)
        super().__init__(f"mode universe has {shown} modes, cap is {cap}")
