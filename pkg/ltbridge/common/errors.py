class LtBridgeError(Exception):
    """Base class for all errors raised by ltbridge."""

    exit_code = 2


class InvalidSpecError(LtBridgeError):
    def __init__(self, message: str, location: float | None = None):
        super().__init__(message if location is None else f"{message} (at x={location!r})")
        self.location = location


class NotTransientError(LtBridgeError):
    pass


class DomainError(LtBridgeError, ValueError):
    pass


class ConfigError(LtBridgeError):
    pass


class NumericError(LtBridgeError, ArithmeticError):
    def __init__(self, message: str, location: float | None = None):
        super().__init__(message if location is None else f"{message} (at x={location!r})")
        self.location = location


class IndeterminateClassificationError(LtBridgeError):
    def __init__(self, message: str, partial: dict | None = None):
        super().__init__(message)
        self.partial = partial or {}


class InversionError(LtBridgeError):
    def __init__(self, message: str, bracket: tuple[float, float] | None = None, target: float | None = None):
        super().__init__(f"{message} (target={target!r}, bracket={bracket!r})")
        self.bracket = bracket
        self.target = target


class IncompleteBridgeError(LtBridgeError):
    """Phase 1 did not reach the local-time target within the (extended) horizon."""

    exit_code = 1

    def __init__(self, message: str, n_incomplete: int = 0):
        super().__init__(message)
        self.n_incomplete = n_incomplete


class DegenerateBatchError(LtBridgeError):
    exit_code = 1


class SampleSizeError(LtBridgeError, ValueError):
    pass
