"""Cone-constrained variational engine on the reduced (r, θ) grid"""

from .energy import Preconditioner, discrete_energy, discrete_gradient  # noqa
from .fibering import BreakingPathResult, FiberingResult, breaking_path_test, fibering_max  # noqa
from .mountain_pass import MountainPassOptions, MountainPassResult, MountainPassSolver, mountain_pass  # noqa
from .projection import ConeField, project_cone  # noqa
