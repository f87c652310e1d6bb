"""Exception types for numerical-quality failures.

Every routine that truncates an infinite object (a quadrature window, a
lattice sum, an oscillator ladder, a time grid) raises one of these instead
of silently returning a degraded value.
"""


class CcgravError(Exception):
    """Base class for package-specific failures."""


class QuadratureError(CcgravError):
    """An adaptive quadrature did not reach its convergence target."""


class LatticeSumError(CcgravError):
    """A truncated lattice sum's tail estimate exceeded the tolerance."""


class TruncationOverflowError(CcgravError):
    """Ancilla population leaked into the top levels of the truncation."""


class PositivityError(CcgravError):
    """An input expected to be a density matrix is not one."""


class StepSizeError(CcgravError):
    """Time integration failed its step-halving convergence check."""
