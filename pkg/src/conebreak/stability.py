"""Symmetry breaking of radial solutions along the angular mode ``y(θ) = 1 - N sin²θ``.

For ``v = u_rad y`` the second variation factors as

    J''(u_rad)[v, v] = 2 ω_{N-2} D ∫ y² (cos θ)^{N-2} dθ

with the radial stability integral

    D = ∫ {[f(r, u) - u ∂_s f(r, u)] u + 2N u²/r²} r^{N-1} dr.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel

from .config import settings
from .exceptions import DomainError, InvariantViolationError
from .geometry import AnnulusSpec, Field2D, Grid2D, PanelLine, build_grid_on, build_line, cos_power
from .nonlinearity import Nonlinearity, threshold_check
from .radial import RadialProfile, lift_profile


class StabilityVerdict(str, Enum):
    BREAKING = "Breaking"
    INCONCLUSIVE = "Inconclusive"


def hardy_constant(annulus: AnnulusSpec) -> float:
    return ((annulus.N - 2) / 2.0) ** 2 + annulus.lam * annulus.R0**2


@dataclass(frozen=True, eq=False)
class AngularMode:
    N: int
    theta_nodes: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    line: PanelLine = field(repr=False)

    @property
    def density(self) -> np.ndarray:
        return cos_power(self.theta_nodes, self.N - 2)

    def integrate(self, values: np.ndarray) -> float:
        """``∫_0^{π/2} values (cos θ)^{N-2} dθ`` on the mode's θ-rule."""
        return math.fsum(self.line.weights * self.density * values)


def _mode_on_line(n: int, line: PanelLine) -> AngularMode:
    if n < 3:
        raise DomainError(detail=f"N must be >= 3, got {n}", N=n)
    theta = line.nodes
    dy = -n * np.sin(2.0 * theta)
    dy[np.isclose(theta, math.pi / 2, rtol=0.0, atol=1e-15)] = 0.0
    return AngularMode(
        N=n,
        theta_nodes=theta,
        y=1.0 - n * np.sin(theta) ** 2,
        dy=dy,
        line=line,
    )


def angular_mode(N: int, ntheta: int, rule: Optional[str] = None) -> AngularMode:  # noqa: N803
    line = build_line(0.0, math.pi / 2, ntheta, rule or settings.conebreak_quadrature_rule)
    return _mode_on_line(N, line)


def angular_mode_on(grid: Grid2D) -> AngularMode:
    return _mode_on_line(grid.annulus.N, grid.theta_line)


def angular_factor(mode: AngularMode) -> float:
    return mode.integrate(mode.y**2)


class AngularResidual(BaseModel):
    ode_residual: float
    dy_start: float
    dy_end: float
    mean: float
    rayleigh_gap: float


def angular_residual(mode: AngularMode) -> AngularResidual:
    """Residual of ``-((cos θ)^{N-2} y')' = 2N (cos θ)^{N-2} y`` from the closed forms."""
    n = mode.N
    theta = mode.theta_nodes[1:-1]
    y = 1.0 - n * np.sin(theta) ** 2
    dy = -n * np.sin(2.0 * theta)
    d2y = -2.0 * n * np.cos(2.0 * theta)
    weight = np.cos(theta) ** (n - 2)
    flux_derivative = -(n - 2) * np.cos(theta) ** (n - 3) * np.sin(theta) * dy + weight * d2y
    residual = np.abs(-flux_derivative - 2.0 * n * weight * y)
    return AngularResidual(
        ode_residual=float(residual.max()) if residual.size else 0.0,
        dy_start=abs(float(mode.dy[0])),
        dy_end=abs(float(mode.dy[-1])),
        mean=mode.integrate(mode.y),
        rayleigh_gap=mode.integrate(mode.dy**2) - 2.0 * n * angular_factor(mode),
    )


def stability_indicator(profile: RadialProfile, nonlin: Nonlinearity, annulus: AnnulusSpec) -> float:
    """``D`` by quadrature on the profile's own nodes."""
    r, u = profile.r_nodes, profile.u
    weights = profile.line.weights
    f = np.asarray(nonlin.f(r, u))
    dfds = np.asarray(nonlin.dfds(r, u))
    n = annulus.N
    integrand = (f - u * dfds) * u * r ** (n - 1) + 2.0 * n * u**2 * r ** (n - 3)
    return math.fsum(weights * integrand)


def second_variation_2d(
    u2d: Field2D,
    v2d: Field2D,
    grid: Grid2D,
    nonlin: Nonlinearity,
    annulus: AnnulusSpec,
) -> float:
    """``∫(|∇v|² + λv² - ∂_s f(r, u) v²) dx`` on the grid."""
    grid.check(u2d.values)
    grid.check(v2d.values)
    v = v2d.values
    w = grid.quad_weights
    dfds = np.asarray(nonlin.dfds(grid.r_nodes[:, None], u2d.values))
    return grid.dirichlet_energy(v) + math.fsum((w * (annulus.lam - dfds) * v**2).ravel())


class StabilityReport(BaseModel):
    H: float
    delta_required: float
    delta_certified: float
    D: float
    angular_factor: float
    second_variation: float
    factored_variation: float
    cross_check: float
    threshold_met: bool
    verdict: StabilityVerdict


def symmetry_breaking_report(
    annulus: AnnulusSpec,
    nonlin: Nonlinearity,
    profile: RadialProfile,
    grid: Optional[Grid2D] = None,
) -> StabilityReport:
    """Both sides of the factorization, the sufficient threshold and the verdict.

    Without a grid the second variation is evaluated on the profile's own radial
    nodes, so the lift is exact.
    """
    if grid is None:
        grid = build_grid_on(annulus, profile.line, settings.conebreak_stability_ntheta, order=profile.line.order)
    h = hardy_constant(annulus)
    delta_required = 2.0 * annulus.N / h + 1.0
    if not hasattr(nonlin, "delta_max"):
        raise DomainError(detail="the nonlinearity certifies no delta")
    delta_certified = nonlin.delta_max

    mode = angular_mode_on(grid)
    factor = angular_factor(mode)
    d = stability_indicator(profile, nonlin, annulus)
    factored = 2.0 * grid.omega * d * factor

    lifted = lift_profile(profile, grid)
    direction = Field2D(lifted.values * mode.y[None, :])
    second = second_variation_2d(lifted, direction, grid, nonlin, annulus)
    cross_check = abs(second - factored) / max(abs(second), np.finfo(float).tiny)
    if cross_check > settings.conebreak_cross_check_tol:
        raise InvariantViolationError(
            detail=f"second variation {second:.12g} does not factor ({factored:.12g})",
            cross_check=cross_check,
        )
    return StabilityReport(
        H=h,
        delta_required=delta_required,
        delta_certified=delta_certified,
        D=d,
        angular_factor=factor,
        second_variation=second,
        factored_variation=factored,
        cross_check=cross_check,
        threshold_met=threshold_check(nonlin, annulus).satisfied,
        verdict=StabilityVerdict.BREAKING if second < 0 else StabilityVerdict.INCONCLUSIVE,
    )
