"""Exception and warning types raised across the package."""


class CoherentGraphsError(Exception):
    """Base class for all errors raised by this package."""


class IndexOutOfRange(CoherentGraphsError, IndexError):
    pass


class NegativeWeight(CoherentGraphsError, ValueError):
    pass


class ParseError(CoherentGraphsError, ValueError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class UnsupportedField(ParseError):
    pass


class InconsistentVertexCount(CoherentGraphsError, ValueError):
    pass


class EmptyDirectory(CoherentGraphsError, FileNotFoundError):
    pass


class DanglingVertex(CoherentGraphsError, ValueError):
    def __init__(self, vertex, snapshot=None):
        self.vertex = vertex
        self.snapshot = snapshot
        msg = f"vertex {vertex} has zero out-degree"
        if snapshot is not None:
            msg = f"snapshot {snapshot}: " + msg
        super().__init__(msg + " (add self-loops or enable teleportation)")


class SingularNu(CoherentGraphsError, ValueError):
    def __init__(self, vertex):
        self.vertex = vertex
        super().__init__(
            f"vertex {vertex} receives no probability mass (nu = 0); "
            "add self-loops so every vertex has an incoming edge"
        )


class KindMismatch(CoherentGraphsError, TypeError):
    pass


class NotSymmetric(CoherentGraphsError, ValueError):
    pass


class NotSymmetrizable(CoherentGraphsError, ValueError):
    pass


class ZeroDegree(CoherentGraphsError, ValueError):
    pass


class NoConvergence(CoherentGraphsError, RuntimeError):
    def __init__(self, message, residuals=None):
        self.residuals = residuals
        super().__init__(message)


class InvalidDistribution(CoherentGraphsError, ValueError):
    pass


class NonpositiveEpsilon(CoherentGraphsError, ValueError):
    pass


class KTooLarge(CoherentGraphsError, ValueError):
    pass


class TooFewEigenvalues(CoherentGraphsError, ValueError):
    pass


class InvalidConfig(CoherentGraphsError, ValueError):
    pass


class EmptyCluster(CoherentGraphsError, ValueError):
    pass


class LengthMismatch(CoherentGraphsError, ValueError):
    pass


class EmptyDayWarning(UserWarning):
    """A contact-data day produced a snapshot without edges."""


class AsymmetryWarning(RuntimeWarning):
    """A matrix expected to be symmetric was not, beyond tolerance."""


class ConvergenceWarning(RuntimeWarning):
    """An iterative routine stopped at its iteration cap."""
