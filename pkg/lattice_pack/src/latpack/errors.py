"""Exception types raised by latpack.

Each error derives from LatpackError plus the closest builtin, so callers can
catch either ``LatpackError`` or e.g. ``ValueError``.
"""
from __future__ import annotations


class LatpackError(Exception):
    """Base class for every latpack error."""


# ----- input errors -----


class AsymmetricCoefficients(LatpackError, ValueError):
    pass


class EmptyCoefficients(LatpackError, ValueError):
    pass


class NotMorse(LatpackError, ValueError):
    pass


class NegativeValue(LatpackError, ValueError):
    pass


class BadParameter(LatpackError, ValueError):
    pass


class NonpositiveAlpha(LatpackError, ValueError):
    pass


class TailedPotential(LatpackError, ValueError):
    pass


class BadLambdas(LatpackError, ValueError):
    pass


class WindowTooSmall(LatpackError, ValueError):
    pass


class BoxTooSmall(LatpackError, ValueError):
    pass


class ZeroRhoLowDimension(LatpackError, ValueError):
    pass


class ChainCollision(LatpackError, ValueError):
    pass


class CoordinateOverflow(LatpackError, OverflowError):
    pass


# ----- numerical failures -----


class QuadratureNotConverged(LatpackError, RuntimeError):
    def __init__(self, message: str, err: float = float("nan"), grid_m: int = 0):
        super().__init__(message)
        self.err = err
        self.grid_m = grid_m


class SingularShift(LatpackError, RuntimeError):
    """The shift t sits within pivot tolerance of an eigenvalue."""

    def __init__(self, message: str, suggested_t: float):
        super().__init__(message)
        self.suggested_t = suggested_t


class ThresholdAmbiguous(LatpackError, RuntimeError):
    """A Birman-Schwinger eigenvalue falls inside the margin band around 1."""

    def __init__(self, message: str, eigenvalues_in_band: tuple[float, ...] = ()):
        super().__init__(message)
        self.eigenvalues_in_band = eigenvalues_in_band


class SpacingOverflow(LatpackError, RuntimeError):
    pass
