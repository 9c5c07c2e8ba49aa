"""Exception hierarchy shared by all realfield modules."""


class RealFieldError(Exception):
    """Base class for every error raised by this package."""


class ZeroStateError(RealFieldError, ValueError):
    pass


class LabelMismatchError(RealFieldError, ValueError):
    pass


class BasisError(RealFieldError, ValueError):
    pass


class ZeroProbabilityError(RealFieldError, ValueError):
    pass


class BadParamsError(RealFieldError, ValueError):
    pass


class ConfigError(RealFieldError, ValueError):
    pass


class ChoiceTimingError(RealFieldError, ValueError):
    pass


class TopologyError(RealFieldError, ValueError):
    pass


class InsufficientDataError(RealFieldError, ValueError):
    pass


class GridTooCoarseError(RealFieldError, ValueError):
    pass


class AllClosedError(RealFieldError, ValueError):
    pass


class ZeroFieldError(RealFieldError, ValueError):
    pass


class BinningMismatchError(RealFieldError, ValueError):
    pass


class ParseError(RealFieldError, ValueError):
    pass


class SchemaError(RealFieldError, ValueError):
    """Scenario validation failure; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")
