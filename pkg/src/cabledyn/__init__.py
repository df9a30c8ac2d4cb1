"""cabledyn: lumped-mass dynamics of a cable towed between two
underwater vehicles, plus drag/stiffness parameter identification.

Units are SI throughout: metres, seconds, kilograms, newtons, pascals,
radians. The Earth frame is right-handed with z up; gravity is
(0, 0, -9.81) m/s^2.
"""

__version__ = "1.0.0"

from .errors import (
    CabledynError,
    ConfigInvalid,
    DegenerateSegment,
    DivergedState,
    EigenNoConvergence,
    EmptyDataset,
    GimbalSingularity,
    NotReached,
    SingularMassMatrix,
    UnknownProfile,
)

__all__ = [
    "__version__",
    "CabledynError",
    "ConfigInvalid",
    "DegenerateSegment",
    "DivergedState",
    "EigenNoConvergence",
    "EmptyDataset",
    "GimbalSingularity",
    "NotReached",
    "SingularMassMatrix",
    "UnknownProfile",
]
