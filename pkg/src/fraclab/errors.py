"""Exception hierarchy.

Every error raised by the library derives from :class:`FraclabError`. The
CLI maps :class:`UsageError` to exit code 2 and :class:`NumericalFailure`
to exit code 3.
"""


class FraclabError(Exception):
    """Base class for all library errors."""


class UsageError(FraclabError, ValueError):
    """Invalid arguments, configuration or battery name."""


class NumericalFailure(FraclabError, ArithmeticError):
    """An iterative method or quadrature did not meet its tolerance."""


class ZeroLeadingCoefficient(FraclabError, ZeroDivisionError):
    """A sequence with ``seq[0] == 0`` has no convolution inverse."""


class TableTooShort(FraclabError, IndexError):
    """A coefficient table does not cover the requested number of steps."""


class GridMismatch(FraclabError, ValueError):
    """Paths compared against each other live on different grids."""


class StabilityViolation(FraclabError, ValueError):
    """The step size violates the stability window of an implicit scheme."""


class NotConverged(NumericalFailure):
    """Mittag-Leffler evaluation did not reach the requested tolerance."""


class NewtonDiverged(NumericalFailure):
    """The per-step nonlinear solve failed, including all fallbacks."""


class ProxFailure(NumericalFailure):
    """A proximal map's inner solver did not meet its tolerance."""


class EmbeddingFailure(NumericalFailure):
    """Both circulant embedding and the Cholesky fallback failed."""
