"""Exception hierarchy shared by all modules."""


class JostkitError(Exception):
    """Base class; the CLI maps subclasses to exit codes."""


class InvalidParameter(JostkitError, ValueError):
    pass


class UnsupportedPotential(JostkitError):
    pass


class ResolutionError(JostkitError):
    pass


class BranchAmbiguity(JostkitError):
    pass


class AtPole(JostkitError):
    def __init__(self, z, message=None):
        self.z = z
        super().__init__(message or f"Green kernel evaluated at a zero of the Jost determinant, z={z!r}")


class NumericalFailure(JostkitError):
    pass


class BelowThreshold(JostkitError):
    pass


class GridTooCoarse(JostkitError):
    pass


class ContourFailure(JostkitError):
    pass


class UnsupportedMultiplicity(JostkitError):
    pass


class GeometryError(JostkitError):
    pass


class InvalidBarrier(JostkitError):
    pass


class DegeneratePeak(JostkitError):
    pass


class PoleError(JostkitError):
    pass


class DependencyError(JostkitError):
    pass


class DegenerateFit(JostkitError):
    pass


class ConfigurationError(JostkitError):
    pass


class SchemaError(JostkitError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")
