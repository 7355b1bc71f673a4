"""Exception types shared across the package.

Every error maps to one CLI exit code; see ``vmolab.cli``.
"""


class VmolabError(Exception):
    """Base class for all package errors."""


class PreconditionError(VmolabError, ValueError):
    pass


class NotStraddling(PreconditionError):
    """Cube lies entirely in one closed half-space."""


class AsymmetricGrid(PreconditionError):
    """Grid is not symmetric about the hyperplane x_n = 0."""


class EmptyRegion(PreconditionError):
    """Region contains too few cell centers."""


class DomainViolation(PreconditionError):
    """Kernel arguments lie outside the operator's half-space."""


class DomainTooSmall(PreconditionError):
    pass


class ConstantSymbol(PreconditionError):
    pass


class ShapeMismatch(PreconditionError):
    pass


class SingularPoint(PreconditionError):
    """Kernel evaluated on its singular set."""


class NumericError(VmolabError, ArithmeticError):
    pass


class NonFinite(NumericError):
    pass


class TruncationError(NumericError):
    """Heat kernel mass leaks past the truncated box."""


class NoConvergence(NumericError):
    def __init__(self, message, estimate=None, iterations=None):
        super().__init__(message)
        self.estimate = estimate
        self.iterations = iterations


class ResourceCap(VmolabError):
    pass


class SizeCap(ResourceCap):
    pass


class SchemaError(VmolabError):
    pass


class UnknownId(SchemaError, KeyError):
    pass


class TruncationWarning(UserWarning):
    """Region sticks out of the sampled domain; average uses the overlap."""
