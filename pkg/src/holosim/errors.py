"""Typed error hierarchy.

Every guard in the library raises a subclass of HolosimError so callers
(and the CLI, which maps config problems to exit code 2) can distinguish
bad inputs from genuine bugs.
"""


class HolosimError(Exception):
    """Base class for all errors raised by holosim."""


class CutoffTooSmall(HolosimError):
    """Truncated construction would discard more norm than tail_tol allows."""


class AmplitudeTooLarge(HolosimError):
    """Coherent amplitude incompatible with the requested cutoff (|mu|^2 > n_max/4)."""


class InvalidModeIndex(HolosimError):
    """Mode index out of range or repeated where distinct modes are required."""


class DegreeTooHigh(HolosimError):
    """Operator monomial exceeds the supported total degree."""


class UnsupportedPhase(HolosimError):
    """Gaussian backend only covers real squeezing (theta = 0)."""


class NegativeParameter(HolosimError):
    """A rate, occupation or time that must be >= 0 was negative."""


class QuadratureUnderResolved(HolosimError):
    """Quadrature rule too coarse for the requested integrand."""


class NonPositiveExponent(HolosimError):
    """beta*omega must be > 0 for the Bose occupation factor."""


class NonPositiveLength(HolosimError):
    """Arm length must be > 0."""


class DegenerateDenominator(HolosimError):
    """Correlation-estimate denominator below the degeneracy floor."""


class StepTooLarge(HolosimError):
    """Finite-difference step outside the validated window."""


class ZeroAmplitude(HolosimError):
    """Classical baseline needs a nonzero coherent amplitude."""


class ConfigError(HolosimError):
    """Run-configuration file failed validation; message carries the line number."""
