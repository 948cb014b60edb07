"""Exception hierarchy shared by every stage of the pipeline."""


class SchedulerError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(SchedulerError):
    pass


class QuantizationError(SchedulerError):
    """A duration does not land on the slot grid."""


class IntegrityError(SchedulerError):
    """Dangling or duplicated references inside an instance."""

    def __init__(self, message, offenders=()):
        super().__init__(message)
        self.offenders = tuple(offenders)


class ParseError(SchedulerError):
    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class GenerationError(SchedulerError):
    pass


class ModelError(SchedulerError):
    pass


class DecodeError(SchedulerError):
    """A solver assignment violates the model it claims to solve."""

    def __init__(self, message, tag=None):
        super().__init__(message)
        self.tag = tag


class SolverError(SchedulerError):
    pass


class BalancerError(SchedulerError):
    """The re-weighting loop could not finish; ``partial_log`` keeps what it did."""

    def __init__(self, message, partial_log=()):
        super().__init__(message)
        self.partial_log = tuple(partial_log)
