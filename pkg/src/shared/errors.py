"""Exception types shared across the toolkit.

Each error also derives from the closest builtin so callers can catch
either the domain type or the familiar one.
"""


class ArgminError(Exception):
    """Base class for every error raised by this package."""


class PreconditionError(ArgminError, ValueError):
    """An argument violates an operation's precondition."""


class LevelOverflowError(ArgminError, OverflowError):
    """A dyadic level beyond the configured maximum was requested."""


class LengthMismatchError(ArgminError, ValueError):
    """An array does not have the length the operation requires."""


class EmptyInputError(ArgminError, ValueError):
    """An operation that needs at least one value got none."""


class GridIndexError(ArgminError, IndexError):
    """A grid index lies outside 0..2^d."""


class InsufficientEstimatesError(ArgminError, ValueError):
    """Fewer starred times than the requested accumulation depth."""


class EndpointMismatchError(ArgminError, ValueError):
    """A path passed as a loop does not close (first and last values differ)."""


class CouplingError(ArgminError, RuntimeError):
    """A coupled run disagrees with the bridge store it was read from."""


class TrialFailedError(ArgminError, RuntimeError):
    """A Monte Carlo trial raised; carries the trial identity."""

    def __init__(self, d: int, N: int, trial: int, cause: BaseException):
        self.d = d
        self.N = N
        self.trial = trial
        super().__init__(
            f"trial failed | d={d} | N={N} | trial={trial} | {type(cause).__name__}: {cause}"
        )
