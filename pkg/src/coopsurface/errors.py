"""Exception hierarchy.

Three top-level families map onto the CLI exit-code contract: bad input
(exit 2), failed computation (exit 3), and refused oversize jobs (exit 4).
"""


class CoopSurfaceError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(CoopSurfaceError, ValueError):
    """A caller-supplied parameter is outside the operation's domain."""


class ComputeError(CoopSurfaceError):
    """A computation could not produce a valid result."""


class SingularLatticeError(ComputeError):
    """Primitive vectors are (numerically) linearly dependent."""


class SingularArgumentError(ComputeError):
    """A Green's tensor was requested at the singular point R = 0."""


class BranchSingularityError(ComputeError):
    """Evaluation exactly on the light-cone branch point |q| = k0."""


class OutsideLightConeError(ComputeError):
    """An operation restricted to the radiative zone got |q| >= k0."""


class ConvergenceError(ComputeError):
    """An iterative sum or solver did not converge to tolerance."""

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic


class SingularResponseError(ComputeError):
    """The Bloch or coupling matrix is singular at the requested point."""


class UndefinedVisibilityError(ComputeError):
    """Visibility requested for a field with zero transverse intensity."""


class ResourceLimitError(CoopSurfaceError):
    """The requested job exceeds a configured size cap."""
