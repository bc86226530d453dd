"""Exception hierarchy shared by all hardylab modules."""


class HardyLabError(Exception):
    """Base class for every error raised by the package."""


class InvalidField(HardyLabError):
    pass


class GridMismatch(HardyLabError):
    pass


class ParameterOutOfRange(HardyLabError):
    """A parameter violates its declared range.

    ``name`` is a dotted path (e.g. ``weight.gamma``) so that config errors
    can point at the offending key.
    """

    def __init__(self, name, message=""):
        self.name = name
        super().__init__(f"{name}: {message}" if message else name)


class WeightedNormDivergent(HardyLabError):
    pass


class BackwardDissipative(HardyLabError):
    pass


class UnstableStep(HardyLabError):
    pass


class NonUniformTimeGrid(HardyLabError):
    pass


class GridOverflow(HardyLabError):
    pass


class InterpolationUnderresolved(HardyLabError):
    pass


class SupportOutOfDomain(HardyLabError):
    pass


class StepTooLarge(HardyLabError):
    pass


class TrajectoryTooShort(HardyLabError):
    pass


class BranchOrDecayLoss(HardyLabError):
    pass


class InsufficientSamples(HardyLabError):
    pass


class ConfigError(HardyLabError):
    pass
