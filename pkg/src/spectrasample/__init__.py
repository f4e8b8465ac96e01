"""Random walks, volume and optimization over spectrahedra."""

from .lmi import (
    LMI,
    DegenerateNormalError,
    LmiFormatError,
    Membership,
    Status,
    boundary_normal,
    canonical_ball,
    canonical_cube,
    generate_random,
    membership,
    read_lmi,
    write_lmi,
)
from .pep import PepSolution, SolverFailure, solve_definite_linear, solve_real
from .trajectory import (
    PolyCurve,
    PreconditionError,
    ReflectionError,
    UnboundedDirectionError,
    intersection,
    reflection,
)
from .walks import Ball, Walker, WalkerConfig, WalkKind, estimate_diameter, sample
from .volume import VolumeConfig, VolumeReport, estimate_volume
from .apps import AnnealConfig, AnnealReport, IndicatorSpec, expectation, sdp_minimize

__version__ = "0.1.0"


def example2d() -> LMI:
    """The two-variable 6x6 example spectrahedron shipped with the package."""
    from importlib.resources import files

    return read_lmi(files(__package__) / "data" / "paper2d.json")
