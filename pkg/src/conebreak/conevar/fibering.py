import math
from typing import Optional

import numpy as np
from pydantic import BaseModel
from scipy.optimize import brentq

from ..config import settings
from ..exceptions import DomainError, NoSignChangeError, RangeError, SaturationError
from ..geometry import AnnulusSpec, Field2D, Grid2D
from ..nonlinearity import Nonlinearity
from ..radial import RadialProfile, lift_profile
from ..stability import angular_mode_on
from .energy import check_boundary, discrete_energy, gradient_values
from .projection import ConeField


class FiberingResult(BaseModel):
    t_star: float
    g_max: float
    bracket: tuple[float, float]
    derivative_at_t_star: float


class BreakingPathResult(BaseModel):
    tau: float
    t_star: float
    level_perturbed: float
    level_radial: float
    margin: float


class Fiber:
    """The ray ``t ↦ J_h(t d)`` through a fixed cone direction."""

    def __init__(self, direction: ConeField, grid: Grid2D, nonlin: Nonlinearity, annulus: AnnulusSpec):
        self.direction = check_boundary(direction.field, grid)
        if not np.any(self.direction):
            raise DomainError(detail="fibering needs a nonzero direction")
        self.grid = grid
        self.nonlin = nonlin
        self.annulus = annulus

    def energy(self, t: float) -> float:
        return discrete_energy(Field2D(t * self.direction), self.grid, self.nonlin, self.annulus)

    def slope(self, t: float) -> float:
        """``g'(t) = ⟨∇J_h(t d), d⟩``."""
        grad = gradient_values(t * self.direction, self.grid, self.nonlin, self.annulus)
        return math.fsum((grad * self.direction).ravel())

    def _safe_slope(self, t: float) -> Optional[float]:
        try:
            return self.slope(t)
        except SaturationError:
            return None

    def bracket(self, t0: float = 1.0, growth: float = 2.0) -> tuple[float, float]:
        """Find ``t_low < t_high`` with ``g'(t_low) > 0 > g'(t_high)``."""
        steps = settings.conebreak_fibering_max_steps
        t_low, t_high = None, None
        t = t0
        value = self._safe_slope(t)
        for _ in range(steps):
            if value is not None and value > 0:
                break
            # g' <= 0 or saturated at t: move toward the origin
            t_high = t if value is not None else t_high
            t = t / growth
            value = self._safe_slope(t)
        else:
            raise NoSignChangeError(detail="g' never positive near the origin", t=t)
        t_low = t
        if t_high is not None:
            return t_low, t_high

        factor = growth
        for _ in range(steps):
            t = t_low * factor
            value = self._safe_slope(t)
            if value is None:
                factor = math.sqrt(factor)
                if factor - 1.0 < 1e-12:
                    break
                continue
            if value <= 0:
                return t_low, t
            t_low = t
        raise NoSignChangeError(detail="g' > 0 over the whole sweep", t_last=t_low)

    def maximize(self, t0: float = 1.0, growth: float = 2.0, rtol: Optional[float] = None) -> FiberingResult:
        rtol = settings.conebreak_fibering_rtol if rtol is None else rtol
        t_low, t_high = self.bracket(t0, growth)
        t_star = brentq(self.slope, t_low, t_high, rtol=max(rtol, 4 * np.finfo(float).eps), xtol=1e-300)
        return FiberingResult(
            t_star=t_star,
            g_max=self.energy(t_star),
            bracket=(t_low, t_high),
            derivative_at_t_star=self.slope(t_star),
        )


def fibering_max(
    direction: ConeField,
    grid: Grid2D,
    nonlin: Nonlinearity,
    annulus: AnnulusSpec,
    t0: float = 1.0,
) -> FiberingResult:
    """Maximize ``g(t) = J_h(t d)`` over ``t > 0`` by bracketing ``g'`` and Brent's method."""
    return Fiber(direction, grid, nonlin, annulus).maximize(t0=t0)


def breaking_path_test(
    profile: RadialProfile,
    tau: float,
    grid: Grid2D,
    nonlin: Nonlinearity,
    annulus: AnnulusSpec,
) -> BreakingPathResult:
    """Compare ``J_h(u_rad)`` with the fiber maximum through ``u_rad (1 + τ y)``."""
    n = annulus.N
    if not 0 <= tau < 1.0 / (n - 1):
        raise RangeError(detail=f"tau must lie in [0, 1/(N-1)) = [0, {1.0 / (n - 1):.6g}), got {tau}", tau=tau)
    lifted = lift_profile(profile, grid)
    mode = angular_mode_on(grid)
    perturbed = ConeField(Field2D(lifted.values * (1.0 + tau * mode.y)[None, :]))
    level_radial = discrete_energy(lifted, grid, nonlin, annulus)
    fiber = fibering_max(perturbed, grid, nonlin, annulus)
    return BreakingPathResult(
        tau=tau,
        t_star=fiber.t_star,
        level_perturbed=fiber.g_max,
        level_radial=level_radial,
        margin=level_radial - fiber.g_max,
    )
