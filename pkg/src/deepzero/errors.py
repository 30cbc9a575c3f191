"""Exception types raised across the package."""


class BandExceededError(ValueError):
    """A frequency lies outside the range the quadrature step can resolve.

    Rebuild the generator pair with a smaller step to widen the band.
    """


class UnsupportedOrderError(ValueError):
    """Derivative order above the configured maximum."""


class DegenerateDataError(ValueError):
    """Not enough usable samples to fit."""


class CheckFailed(RuntimeError):
    """A numerical verification did not pass."""
