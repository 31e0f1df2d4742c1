"""Exception hierarchy shared by every gekrig module."""


class GekrigError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(GekrigError, ValueError):
    pass


class DegenerateResponseError(GekrigError, ValueError):
    """The response carries no variance (constant y)."""


class SingularRotationError(GekrigError, ArithmeticError):
    def __init__(self, message, condition=float("inf")):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


class InvalidKernelError(GekrigError, ValueError):
    pass


class UnsupportedKernelError(GekrigError, TypeError):
    pass


class IllConditionedError(GekrigError, ArithmeticError):
    def __init__(self, message, condition=float("inf"), nugget=None):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition
        self.nugget = nugget


class NumericalBreakdownError(GekrigError, ArithmeticError):
    pass


class OptimizationFailedError(GekrigError, RuntimeError):
    def __init__(self, message, last_error=None):
        super().__init__(message if last_error is None else f"{message}: {last_error}")
        self.last_error = last_error


class TooLargeError(GekrigError, MemoryError):
    """Augmented correlation system exceeds the configured row cap."""


class DomainError(GekrigError, ArithmeticError):
    pass
