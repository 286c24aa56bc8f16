"""Exception hierarchy shared by all modules."""


class YdynError(Exception):
    """Base class for every error raised by the package."""


class DomainError(YdynError, ValueError):
    """A point, time or weight lies outside the domain where it is meaningful."""


class EmptySetError(YdynError, ValueError):
    pass


class CapacityError(YdynError, ValueError):
    pass


class GridAlignmentError(YdynError, ValueError):
    """A time or shift is not an integer multiple of the step."""


class SwitchingError(YdynError, ValueError):
    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


class AmbiguityError(YdynError, RuntimeError):
    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class ConstructionError(YdynError, ValueError):
    pass


class EmptySolutionError(YdynError, ValueError):
    """No complete trajectory passes through the requested state."""


class ConvergenceError(YdynError, RuntimeError):
    pass


class HorizonError(YdynError, ValueError):
    pass


class PlotError(YdynError, ValueError):
    pass


class ConfigError(YdynError, ValueError):
    pass
