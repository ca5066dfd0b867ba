"""Conebreak, symmetry breaking of semilinear problems on annuli"""

from .core import LogEvent, SolverBase  # noqa
from .exceptions import ConebreakException, ConfigError, InvariantViolationError, SolverError  # noqa
from .geometry import AnnulusSpec, Field2D, Grid2D, build_grid, integrate, sphere_surface  # noqa
from .nonlinearity import ExponentialNonlinearity, PowerNonlinearity, assumption_report, threshold_check  # noqa
from .orlicz import LuxemburgNorm, luxemburg_norm, modulus, tm_probe  # noqa
from .radial import RadialOptions, RadialProfile, RadialSolver, solve_radial  # noqa
from .stability import StabilityReport, StabilityVerdict, hardy_constant, symmetry_breaking_report  # noqa
