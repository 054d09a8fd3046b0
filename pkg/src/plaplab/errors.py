"""Exception types shared across the package."""


class PlaplabError(Exception):
    """Base class for all package errors."""


class InvalidGeometry(PlaplabError, ValueError):
    pass


class NonFiniteField(PlaplabError, ValueError):
    pass


class InvalidProblem(PlaplabError, ValueError):
    pass


class SingularLinearSystem(PlaplabError, RuntimeError):
    """Inner linear solve produced a non-finite or failed factorization."""


class DidNotConverge(PlaplabError, RuntimeError):
    """Raised only when the solver is configured to be strict.

    The best iterate is attached as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class EmptyRegion(PlaplabError, ValueError):
    pass


class RegionOutsideMask(PlaplabError, ValueError):
    pass


class DegenerateStep(PlaplabError, ArithmeticError):
    pass


class InvalidConfig(PlaplabError, ValueError):
    pass


class EmptyWindow(PlaplabError, ValueError):
    pass


class InvalidNu(PlaplabError, ValueError):
    pass


class ModelRangeError(PlaplabError, ValueError):
    pass


class DegeneratePoint(PlaplabError, ValueError):
    pass


class DegenerateGradient(PlaplabError, ValueError):
    pass
