"""Cone-constrained mountain pass.

The path from ``0`` is the ray through the current peak ``u`` (a maximizer of
``t ↦ J_h(t u)``), closed by an endpoint ``e = T u`` with ``J_h(e) ≤ 0``. Each
iteration lowers the path maximum ``Ψ(u) = max_t J_h(t u)`` with a step

    u⁺ = Π(u - s P⁻¹ ∇J_h(u))

where ``P`` is the discrete ``-Δ + λ`` operator and ``Π`` the cone projection,
accepted by Armijo backtracking on ``Ψ``, and re-inserts the new peak
``t*(u⁺) u⁺``. The gradient mapping ``‖u - Π(u - P⁻¹∇J_h(u))‖_P`` measures
stationarity of the cone-constrained problem. A candidate where cone constraints bind
is a constrained critical point only; the free residual ``‖P⁻¹∇J_h(u)‖_P`` and its
restriction to the nodes where no constraint binds are reported next to it.

The iteration stops early once accepted steps stop moving ``u`` in the ``P`` norm.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field

from ..config import settings
from ..core import LogEvent, SolverBase
from ..exceptions import GeometryViolatedError, IterationCapError, SaturationError, SolverError, StagnationError
from ..geometry import AnnulusSpec, Field2D, Grid2D, h1_norm
from ..nonlinearity import Nonlinearity
from ..orlicz import LuxemburgNorm
from ..radial import RadialOptions, RadialProfile, RadialSolver, lift_profile
from ..stability import angular_mode_on
from .energy import Preconditioner, discrete_energy, gradient_values
from .fibering import Fiber, FiberingResult
from .projection import ConeField, ConeProjector, projection_weights, random_cone_field


class MountainPassOptions(BaseModel):
    tol: float = Field(default_factory=lambda: settings.conebreak_mp_tol, gt=0)
    max_iter: int = Field(default_factory=lambda: settings.conebreak_mp_max_iter, ge=1)
    path_size: int = Field(default_factory=lambda: settings.conebreak_mp_path_size, ge=2)
    stall_tol: float = Field(default_factory=lambda: settings.conebreak_mp_stall_tol, ge=0)
    stall_patience: int = Field(default_factory=lambda: settings.conebreak_mp_stall_patience, ge=1)
    tau0: float = Field(default_factory=lambda: settings.conebreak_mp_tau0, ge=0)
    geometry_samples: int = Field(default_factory=lambda: settings.conebreak_mp_geometry_samples, ge=0)
    rho_fraction: float = Field(default_factory=lambda: settings.conebreak_mp_rho_fraction, gt=0, lt=1)
    armijo: float = Field(default_factory=lambda: settings.conebreak_mp_armijo, gt=0, lt=1)
    min_step: float = Field(default_factory=lambda: settings.conebreak_mp_min_step, gt=0)
    seed: int = 0
    strict: bool = False


@dataclass(frozen=True, eq=False)
class MountainPassResult:
    u: ConeField
    energy: float
    grad_norm: float
    iterations: int
    path_log: list[tuple[int, float]]
    is_radial: bool
    converged: bool
    geometry_inf: float
    seed_kind: str
    path_t: np.ndarray = field(repr=False)
    path_energy: np.ndarray = field(repr=False)
    h1_norm: float = math.nan
    luxemburg_norm: Optional[float] = None
    free_residual: float = math.nan
    inactive_residual: float = math.nan
    active_count: int = 0
    stalled: bool = False


def is_radial_field(values: np.ndarray, rel_tol: float = 1e-6) -> bool:
    """θ-oscillation of every r-row below ``rel_tol ‖u‖_∞``."""
    sup = float(np.max(np.abs(values)))
    if sup == 0:
        return True
    oscillation = float(np.max(values.max(axis=1) - values.min(axis=1)))
    return oscillation < rel_tol * sup


def theta_bump(grid: Grid2D) -> Field2D:
    """``sin(π s_r) max(0, 1 - θ/(π/4))²``, a θ-localized cone field."""
    annulus = grid.annulus
    s = (grid.r_nodes - annulus.R0) / (annulus.R1 - annulus.R0)
    radial = np.sin(np.pi * s)
    radial[[0, -1]] = 0.0
    angular = np.maximum(0.0, 1.0 - grid.theta_nodes / (math.pi / 4)) ** 2
    return Field2D(np.outer(radial, angular))


class MountainPassSolver(SolverBase):
    luxemburg_class: type[LuxemburgNorm] = LuxemburgNorm
    projector_class: type[ConeProjector] = ConeProjector

    def __init__(
        self,
        grid: Grid2D,
        nonlin: Nonlinearity,
        annulus: AnnulusSpec,
        opts: Optional[MountainPassOptions] = None,
    ):
        self.grid = grid
        self.nonlin = nonlin
        self.annulus = annulus
        self.opts = opts or MountainPassOptions()
        self.preconditioner = Preconditioner(grid, annulus)
        self.weights = projection_weights(grid)
        self.projector = self.projector_class(self.weights)

    def project(self, values: np.ndarray) -> np.ndarray:
        projected = self.projector(values)
        projected[[0, -1], :] = 0.0
        return projected

    def fiber(self, values: np.ndarray, t0: float = 1.0) -> FiberingResult:
        return Fiber(ConeField(Field2D(values)), self.grid, self.nonlin, self.annulus).maximize(t0=t0, growth=1.5)

    def energy(self, values: np.ndarray) -> float:
        return discrete_energy(Field2D(values), self.grid, self.nonlin, self.annulus)

    def gradient_mapping(self, u: np.ndarray, direction: np.ndarray, step: float = 1.0) -> np.ndarray:
        return u - self.project(u - step * direction)

    def radial_seed(self) -> Optional[RadialProfile]:
        r_line = self.grid.r_line
        opts = RadialOptions(rule=self.grid.rule, order=r_line.order)
        try:
            return RadialSolver(self.annulus, self.nonlin, opts).solve(r_line.size)
        except SolverError:
            return None

    def seed(self, profile: Optional[RadialProfile]) -> tuple[np.ndarray, str]:
        profile = profile if profile is not None else self.radial_seed()
        if profile is None:
            return self.project(theta_bump(self.grid).values), "bump"
        lifted = lift_profile(profile, self.grid).values
        mode = angular_mode_on(self.grid)
        return self.project(lifted * (1.0 + self.opts.tau0 * mode.y)[None, :]), "radial"

    def endpoint_scale(self, peak: np.ndarray) -> float:
        """``T`` with ``J_h(T u) ≤ 0`` along the ray through the peak."""
        scale = 2.0
        for _ in range(settings.conebreak_fibering_max_steps):
            try:
                if self.energy(scale * peak) <= 0:
                    return scale
                scale *= 2.0
            except SaturationError:
                scale = 1.0 + (scale - 1.0) / 2.0
        raise GeometryViolatedError(detail="energy stays positive along the ray")

    def geometry_check(self, peak: np.ndarray) -> float:
        """Infimum of ``J_h`` on a small sphere ``‖v‖_P = ρ`` over sampled cone directions."""
        rho = self.opts.rho_fraction * self.preconditioner.norm(peak)
        directions = [peak]
        for child in np.random.SeedSequence(self.opts.seed).spawn(self.opts.geometry_samples):
            directions.append(random_cone_field(self.grid, np.random.default_rng(child)).values)
        infimum = math.inf
        for direction in directions:
            norm = self.preconditioner.norm(direction)
            if norm == 0:
                continue
            infimum = min(infimum, self.energy(rho / norm * direction))
        self.log(event=LogEvent.GEOMETRY_CHECK, rho=rho, infimum=infimum, samples=len(directions))
        if not infimum > 0:
            raise GeometryViolatedError(detail=f"J_h = {infimum:.6g} on the sphere of radius {rho:.6g}", rho=rho)
        return infimum

    def path(self, peak: np.ndarray, scale: float) -> tuple[np.ndarray, np.ndarray]:
        """Path parameters on ``[0, T]`` equidistributed in (t, energy) arc length."""
        size = self.opts.path_size
        fine = np.linspace(0.0, scale, 4 * size + 1)
        energies = np.array([self.energy(t * peak) for t in fine])
        spread = max(float(np.ptp(energies)), np.finfo(float).tiny)
        lengths = np.hypot(np.diff(fine) / scale, np.diff(energies) / spread)
        arc = np.concatenate(([0.0], np.cumsum(lengths)))
        t = np.interp(np.linspace(0.0, arc[-1], size + 1), arc, fine)
        return t, np.array([self.energy(value * peak) for value in t])

    def line_search(self, u: np.ndarray, direction: np.ndarray, level: float, step: float):
        """Backtrack until ``Ψ(u⁺) ≤ Ψ(u) - (c/s) ‖u - u⁺‖²_P``."""
        while step >= self.opts.min_step:
            trial = self.project(u - step * direction)
            if np.any(trial):
                try:
                    fiber = self.fiber(trial)
                except (SaturationError, SolverError):
                    fiber = None
                if fiber is not None:
                    decrease = self.opts.armijo / step * self.preconditioner.norm(u - trial) ** 2
                    if fiber.g_max <= level - decrease:
                        self.log(event=LogEvent.LINE_SEARCH, step=step, level=fiber.g_max)
                        return fiber.t_star * trial, fiber, step
            step /= 2.0
        return None, None, step

    def active_set(self, u: np.ndarray) -> np.ndarray:
        """Interior nodes where ``u = 0`` or ``u`` equals a θ-neighbour."""
        inner = u[1:-1]
        flat = np.diff(inner, axis=1) == 0
        active = inner == 0
        active[:, 1:] |= flat
        active[:, :-1] |= flat
        mask = np.zeros(u.shape, dtype=bool)
        mask[1:-1] = active
        return mask

    def free_residuals(self, u: np.ndarray, gradient: np.ndarray, direction: np.ndarray) -> tuple[float, float, int]:
        """``‖P⁻¹∇J_h‖_P`` over all nodes and over the nodes where no cone constraint binds.

        The θ = π/2 column carries no quadrature weight, so only the stiffness acts there.
        """
        active = self.active_set(u)
        inactive = np.where(active, 0.0, gradient)
        return (
            self.preconditioner.norm(direction),
            self.preconditioner.norm(self.preconditioner.solve(inactive)),
            int(active.sum()),
        )

    def run(self, profile: Optional[RadialProfile] = None) -> MountainPassResult:
        opts = self.opts
        start, seed_kind = self.seed(profile)
        fiber = self.fiber(start)
        u = fiber.t_star * start
        level = fiber.g_max
        geometry_inf = self.geometry_check(u)

        path_log = [(0, level)]
        step = 1.0
        grad_norm = math.inf
        converged = stalled = False
        still = 0
        iteration = 0
        for iteration in range(opts.max_iter + 1):
            gradient = gradient_values(u, self.grid, self.nonlin, self.annulus)
            direction = self.preconditioner.solve(gradient)
            grad_norm = self.preconditioner.norm(self.gradient_mapping(u, direction))
            if grad_norm <= opts.tol:
                converged = True
                break
            if still >= opts.stall_patience:
                stalled = True
                break
            if iteration == opts.max_iter:
                break
            candidate, candidate_fiber, used = self.line_search(u, direction, level, min(1.0, 2.0 * step))
            if candidate is None:
                stalled = True
                break
            moved = self.preconditioner.norm(candidate - u)
            still = still + 1 if moved <= opts.stall_tol * self.preconditioner.norm(candidate) else 0
            u, level, step = candidate, candidate_fiber.g_max, used
            path_log.append((iteration + 1, level))
            self.log(event=LogEvent.PATH_UPDATE, iteration=iteration + 1, level=level, grad_norm=grad_norm, moved=moved)

        if stalled:
            self.log(event=LogEvent.MOUNTAIN_PASS_STALLED, iteration=iteration, level=level, grad_norm=grad_norm)
        free_residual, inactive_residual, active_count = self.free_residuals(u, gradient, direction)
        scale = self.endpoint_scale(u)
        path_t, path_energy = self.path(u, scale)
        field_u = Field2D(u)
        try:
            orlicz = self.luxemburg_class(self.grid)(field_u).norm
        except SolverError:
            orlicz = None
        result = MountainPassResult(
            u=ConeField(field_u),
            energy=level,
            grad_norm=grad_norm,
            iterations=iteration,
            path_log=path_log,
            is_radial=is_radial_field(u),
            converged=converged,
            geometry_inf=geometry_inf,
            seed_kind=seed_kind,
            path_t=path_t,
            path_energy=path_energy,
            h1_norm=h1_norm(field_u, self.grid, self.annulus.lam),
            luxemburg_norm=orlicz,
            free_residual=free_residual,
            inactive_residual=inactive_residual,
            active_count=active_count,
            stalled=stalled,
        )
        self.log(
            event=LogEvent.MOUNTAIN_PASS_DONE,
            energy=level,
            iterations=iteration,
            converged=converged,
            free_residual=free_residual,
            active_count=active_count,
        )
        if not converged and opts.strict:
            error = StagnationError if stalled else IterationCapError
            raise error(
                detail=f"gradient mapping {grad_norm:.3e} above {opts.tol:.1e} after {iteration} steps",
                result=result,
                grad_norm=grad_norm,
            )
        return result


def mountain_pass(
    grid: Grid2D,
    nonlin: Nonlinearity,
    annulus: AnnulusSpec,
    opts: Optional[MountainPassOptions] = None,
    profile: Optional[RadialProfile] = None,
) -> MountainPassResult:
    return MountainPassSolver(grid, nonlin, annulus, opts).run(profile)
