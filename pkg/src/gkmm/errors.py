"""Exception hierarchy. Every error carries a short ``code`` used by the CLI."""


class GkmmError(ValueError):
    @property
    def code(self):
        return type(self).__name__


class WeightSumError(GkmmError):
    pass


class DimensionMismatch(GkmmError):
    pass


class EmptyBlock(GkmmError):
    pass


class NonPositiveSigma(GkmmError):
    pass


class InfeasibleProblem(GkmmError):
    pass


class SingularSystem(GkmmError):
    pass


class DegenerateDesign(GkmmError):
    pass


class AllZeroWeights(GkmmError):
    pass


class ConfigError(GkmmError):
    pass
