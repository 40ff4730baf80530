"""Exception hierarchy shared by every module of the package."""


class LayerMieError(Exception):
    """Base class for all errors raised by :mod:`layermie`."""


class InvalidArgumentError(LayerMieError, ValueError):
    """An argument is malformed, out of its domain, or NaN."""


class UnsupportedOrderError(InvalidArgumentError):
    """Requested multipole order exceeds :data:`layermie.specfun.N_CAP`."""


class SingularArgumentError(InvalidArgumentError):
    """A function was evaluated at its singular point (``z == 0``)."""


class PreconditionError(InvalidArgumentError):
    """The inputs are individually valid but unsuitable for the operation."""


class AmbiguousRegionError(InvalidArgumentError):
    """An evaluation point lies on (or numerically at) a material interface."""


class NumericalFailure(LayerMieError, ArithmeticError):
    """Base class for failures of the numerics rather than of the inputs."""


class NumericalResonanceError(NumericalFailure):
    """A per-mode system is too ill-conditioned to be trusted.

    Attributes
    ----------
    n, parity : the offending multipole degree and ``"TE"``/``"TM"``.
    condition : the estimated condition number.
    """

    def __init__(self, n, parity, condition):
        self.n = n
        self.parity = parity
        self.condition = condition
        super().__init__(
            f"numerical resonance in mode n={n} ({parity}): "
            f"condition number {condition:.3e}"
        )


class RangeError(NumericalFailure, OverflowError):
    """A value left the representable or stable range (overflow, tiny delta)."""
