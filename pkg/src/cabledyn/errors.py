"""Exception types shared across the package."""


class CabledynError(Exception):
    """Base class for all package-specific errors."""


class ConfigInvalid(CabledynError):
    """A run configuration failed validation. CLI exit code 2."""


class DegenerateSegment(CabledynError):
    """Two adjacent cable nodes are closer than the length epsilon."""


class GimbalSingularity(CabledynError):
    """Euler-rate kinematics undefined: |cos(pitch)| below threshold."""


class SingularMassMatrix(CabledynError):
    """A nodal or vehicle mass matrix is not positive definite."""


class UnknownProfile(CabledynError):
    """Boundary motion profile name not registered."""


class DivergedState(CabledynError):
    """Integration produced non-finite state. CLI exit code 3.

    Carries the partial record (everything written before the failure
    step) as ``.record`` and the failing time as ``.time``.
    """

    def __init__(self, message, record=None, time=None):
        super().__init__(message)
        self.record = record
        self.time = time


class NotReached(CabledynError):
    """Steady-state condition never satisfied within the record."""


class EmptyDataset(CabledynError):
    """An identification dataset contains no usable samples."""


class EigenNoConvergence(CabledynError):
    """Eigenvalue iteration failed to converge."""
