"""Exception types shared across the package."""


class BlockqueueError(Exception):
    """Base class for errors raised by this package."""


class InstabilityError(BlockqueueError):
    """Offered load reaches or exceeds the batch capacity.

    Raised by the analytic solver, which has no stationary answer for an
    unstable queue. The simulator does not raise this; it runs unstable
    traffic and reports an overflow flag instead.
    """


class NumericalError(BlockqueueError):
    """A numerical procedure failed a mandatory accuracy check."""


class PrecisionError(NumericalError):
    """Double precision was not enough for the linear solve.

    Retry with ``extended=True`` to use a 128-bit significand.
    """


class SimulationError(BlockqueueError):
    """The simulator could not produce a usable estimate."""
