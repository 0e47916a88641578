"""Exception types raised across the package."""


class StochnetError(Exception):
    """Base class for all errors raised by this package."""


class AsymmetricMatrixError(StochnetError):
    """A coupling or noise matrix is not symmetric; message names the offending pair."""


class NonzeroDiagonalError(StochnetError):
    """Coupling/noise matrices must carry zeros on the diagonal."""


class NegativeNoiseError(StochnetError):
    """A noise intensity entry is negative."""


class TooFewSitesError(StochnetError):
    """Networks need at least two sites."""


class DimensionMismatchError(StochnetError):
    """Array dimensions are inconsistent with the network or with each other."""


class ConfigParseError(StochnetError):
    """A configuration document could not be parsed; message carries the field path."""


class NonFiniteStateError(StochnetError):
    """An integrator produced NaN or Inf entries."""


class StepUnderflowError(StochnetError):
    """The adaptive step size shrank below the hard floor (1e-12 ps)."""


class InvariantViolationError(StochnetError):
    """A state violated a structural invariant (Hermiticity, trace, positivity, symmetry)."""

    def __init__(self, message, time=None):
        if time is not None:
            message = f"{message} (at t = {time:g} ps)"
        super().__init__(message)
        self.time = time


class ZeroAmplitudeError(StochnetError):
    """Symmetrization annihilated the two-particle amplitude (e.g. fermions on one site)."""


class BadSitePairError(StochnetError):
    """A site pair (a, b) must satisfy a < b and lie inside the network."""


class SameSiteError(StochnetError):
    """Coherences are defined between two distinct sites."""


class UnitarityLostError(StochnetError):
    """A propagated unitary exceeded the allowed unitarity defect; the step is too large."""


class NoConvergenceError(StochnetError):
    """Relaxation did not converge within the time cap (e.g. noise-free dynamics)."""


class DegenerateNullSpaceError(StochnetError):
    """The Liouvillian has more than one stationary state; reported, not resolved."""


class NonPositiveInputError(StochnetError):
    """Argument must be strictly positive."""
