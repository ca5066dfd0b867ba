"""Positive radial solutions of ``-u'' - (N-1)/r u' + λu = f(r, u)``, ``u(R0) = u(R1) = 0``.

The solve has two phases. Shooting integrates the initial value problem from
``(u, u') = (0, s)`` at ``R0`` and brackets the slope ``s`` on the sign of

    φ(s) = u(R1)          if u stays positive on (R0, R1]
    φ(s) = -(R1 - z)      if u first vanishes at z < R1

which is continuous and changes sign from ``+`` (small slopes) to ``-`` (overshoot).
Newton's method then refines the shot on the panel discretization of the weak form

    G(u) = (K + λM) u - M f(r, u) = 0

with ``K`` the ``r^{N-1}``-weighted stiffness matrix and ``M`` the lumped mass.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, Field
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq
from scipy.sparse.linalg import spsolve

from .config import settings
from .core import LogEvent, SolverBase
from .exceptions import (
    BoundaryViolationError,
    DomainError,
    NewtonDivergedError,
    NoBracketError,
    SaturationError,
)
from .geometry import AnnulusSpec, Field2D, Grid2D, PanelLine, QuadratureRule, build_line, sphere_surface
from .nonlinearity import Nonlinearity

BOUNDARY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class RadialProfile:
    r_nodes: np.ndarray
    u: np.ndarray
    du: np.ndarray
    residual_inf: float
    energy: float
    line: PanelLine = field(repr=False)
    slope: Optional[float] = None
    relative_residual: float = math.nan
    iterations: int = 0

    def __post_init__(self):
        if self.u.shape != self.r_nodes.shape or self.du.shape != self.r_nodes.shape:
            raise DomainError(detail="profile arrays must match the radial nodes")
        if np.any(np.diff(self.r_nodes) <= 0):
            raise DomainError(detail="radial nodes must be strictly increasing")
        edge = max(abs(float(self.u[0])), abs(float(self.u[-1])))
        if edge > BOUNDARY_TOL:
            raise BoundaryViolationError(detail=f"profile is {edge:.3e} at the boundary radii", edge=edge)

    @property
    def is_positive(self) -> bool:
        return bool(np.all(self.u[1:-1] > 0))


class RadialOptions(BaseModel):
    tol: float = Field(default_factory=lambda: settings.conebreak_newton_tol, gt=0)
    max_iter: int = Field(default_factory=lambda: settings.conebreak_newton_max_iter, ge=1)
    rule: QuadratureRule = Field(default_factory=lambda: QuadratureRule(settings.conebreak_quadrature_rule))
    order: Optional[int] = None
    slope_min: float = Field(default_factory=lambda: settings.conebreak_shooting_slope_min, gt=0)
    slope_max: float = Field(default_factory=lambda: settings.conebreak_shooting_slope_max, gt=0)
    slope_count: int = Field(default_factory=lambda: settings.conebreak_shooting_slope_count, ge=2)


def radial_operators(line: PanelLine, annulus: AnnulusSpec) -> tuple[sp.csr_matrix, np.ndarray]:
    """``K`` (``∫ u' v' r^{N-1}``) and the diagonal of ``M`` (weights times ``r^{N-1}``)."""
    stiffness = line.stiffness(line.local_points ** (annulus.N - 1))
    mass = line.weights * line.nodes ** (annulus.N - 1)
    return stiffness, mass


def stiffness_apply(stiffness: sp.csr_matrix, u: np.ndarray) -> np.ndarray:
    """``K u`` summed as ``Σ_j K_ij (u_j - u_i)``; rows of ``K`` sum to zero.

    Rounding then scales with the local variation of ``u`` instead of ``|K||u|``.
    """
    rows = np.repeat(np.arange(stiffness.shape[0]), np.diff(stiffness.indptr))
    return np.bincount(rows, weights=stiffness.data * (u[stiffness.indices] - u[rows]), minlength=stiffness.shape[0])


class RadialSolver(SolverBase):
    def __init__(self, annulus: AnnulusSpec, nonlin: Nonlinearity, opts: Optional[RadialOptions] = None):
        self.annulus = annulus
        self.nonlin = nonlin
        self.opts = opts or RadialOptions()

    def _rhs(self, r: float, y: np.ndarray) -> list[float]:
        u, du = y
        return [du, -(self.annulus.N - 1) / r * du + self.annulus.lam * u - self.nonlin.f(r, u)]

    def shoot(self, slope: float, dense: bool = False):
        def first_zero(r, y):
            return y[0]

        first_zero.terminal = True
        first_zero.direction = -1
        return solve_ivp(
            self._rhs,
            (self.annulus.R0, self.annulus.R1),
            [0.0, slope],
            method="DOP853",
            rtol=settings.conebreak_shooting_rtol,
            atol=settings.conebreak_shooting_atol,
            events=first_zero,
            dense_output=dense,
        )

    def shooting_function(self, slope: float) -> float:
        solution = self.shoot(slope)
        if solution.t_events[0].size:
            return -(self.annulus.R1 - float(solution.t_events[0][0]))
        return float(solution.y[0, -1])

    def bracket(self) -> tuple[float, float]:
        """First sign change of the shooting function along the slope ladder."""
        opts = self.opts
        slopes = np.geomspace(opts.slope_min, opts.slope_max, opts.slope_count)
        sweep = []
        previous = None
        for slope in slopes:
            try:
                phi = self.shooting_function(float(slope))
            except SaturationError:
                sweep.append({"slope": float(slope), "phi": None, "saturated": True})
                self.log(event=LogEvent.SHOOTING_SWEEP, slope=float(slope), phi=None, saturated=True)
                break
            sweep.append({"slope": float(slope), "phi": phi, "saturated": False})
            self.log(event=LogEvent.SHOOTING_SWEEP, slope=float(slope), phi=phi, saturated=False)
            if previous is not None and previous[1] > 0 >= phi:
                self.log(event=LogEvent.BRACKET_FOUND, low=previous[0], high=float(slope))
                return previous[0], float(slope)
            previous = (float(slope), phi)
        raise NoBracketError(sweep=sweep)

    def initial_guess(self, line: PanelLine) -> tuple[float, np.ndarray]:
        low, high = self.bracket()
        slope = brentq(self.shooting_function, low, high, rtol=1e-14)
        solution = self.shoot(slope, dense=True)
        guess = np.maximum(solution.sol(line.nodes)[0], 0.0)
        guess[[0, -1]] = 0.0
        return slope, guess

    def _residual(self, nodes: np.ndarray, stiffness: sp.csr_matrix, mass: np.ndarray, u: np.ndarray):
        f = np.asarray(self.nonlin.f(nodes, u))
        residual = stiffness_apply(stiffness, u) + self.annulus.lam * mass * u - mass * f
        scale = abs(stiffness) @ np.abs(u) + self.annulus.lam * mass * np.abs(u) + mass * np.abs(f)
        return residual, scale

    def newton(self, line: PanelLine, u: np.ndarray) -> tuple[np.ndarray, float, float, int]:
        """Damped Newton on interior nodes; returns ``(u, residual_inf, relative_residual, iterations)``.

        ``residual_inf`` is the pointwise ODE residual ``max |G_i| / M_i`` and decides convergence;
        at least one step is taken after shooting. ``relative_residual`` is the componentwise
        ``|G_i| / (|K||u| + λM|u| + M|f|)_i``.
        """
        stiffness, mass = radial_operators(line, self.annulus)
        inner = slice(1, -1)
        u = u.copy()
        residual_inf = relative = math.inf
        for iteration in range(self.opts.max_iter + 1):
            residual, scale = self._residual(line.nodes, stiffness, mass, u)
            g = residual[inner]
            residual_inf = float(np.max(np.abs(g) / mass[inner]))
            relative = float(np.max(np.abs(g) / np.where(scale[inner] > 0, scale[inner], 1.0)))
            self.log(event=LogEvent.NEWTON_STEP, iteration=iteration, residual=residual_inf, relative=relative)
            if iteration > 0 and residual_inf <= self.opts.tol:
                self.log(event=LogEvent.NEWTON_CONVERGED, iteration=iteration, residual=residual_inf)
                return u, residual_inf, relative, iteration
            if iteration == self.opts.max_iter:
                break

            dfds = np.asarray(self.nonlin.dfds(line.nodes, u))
            jacobian = (stiffness + sp.diags(self.annulus.lam * mass - mass * dfds)).tocsr()[inner, inner]
            step = spsolve(jacobian.tocsc(), -g)
            norm = float(np.linalg.norm(g))
            damping = 1.0
            while damping > 1e-8:
                trial = u.copy()
                trial[inner] += damping * step
                try:
                    trial_residual, _ = self._residual(line.nodes, stiffness, mass, trial)
                except SaturationError:
                    damping /= 2.0
                    continue
                trial_g = trial_residual[inner]
                if np.linalg.norm(trial_g) <= (1.0 - 1e-4 * damping) * norm:
                    break
                # rounding floor: no further decrease, but the trial is already converged
                if np.max(np.abs(trial_g) / mass[inner]) <= self.opts.tol:
                    break
                damping /= 2.0
            else:
                raise NewtonDivergedError(detail="damping collapsed", last_residual=residual_inf)
            u = trial
        raise NewtonDivergedError(
            detail=f"no convergence after {self.opts.max_iter} iterations", last_residual=residual_inf
        )

    def solve(self, n_nodes: int) -> RadialProfile:
        opts = self.opts
        line = build_line(self.annulus.R0, self.annulus.R1, n_nodes, opts.rule, opts.order)
        slope, guess = self.initial_guess(line)
        u, residual_inf, relative, iterations = self.newton(line, guess)
        if not np.all(u[1:-1] > 0):
            raise NewtonDivergedError(detail="refined profile is not positive", last_residual=residual_inf)
        return RadialProfile(
            r_nodes=line.nodes,
            u=u,
            du=line.nodal_derivative(u),
            residual_inf=residual_inf,
            energy=radial_energy(line, u, self.nonlin, self.annulus),
            line=line,
            slope=slope,
            relative_residual=relative,
            iterations=iterations,
        )


def radial_energy(line: PanelLine, u: np.ndarray, nonlin: Nonlinearity, annulus: AnnulusSpec) -> float:
    """``J`` of the radial function: ``ω_{N-1} ∫ (½u'² + ½λu² - F(r, u)) r^{N-1} dr``."""
    stiffness, mass = radial_operators(line, annulus)
    quadratic = 0.5 * float(u @ (stiffness @ u)) + 0.5 * annulus.lam * math.fsum(mass * u**2)
    potential = math.fsum(mass * np.asarray(nonlin.F(line.nodes, u)))
    return sphere_surface(annulus.N - 1) * (quadratic - potential)


def solve_radial(
    annulus: AnnulusSpec,
    nonlin: Nonlinearity,
    n_nodes: int,
    opts: Optional[RadialOptions] = None,
) -> RadialProfile:
    return RadialSolver(annulus, nonlin, opts).solve(n_nodes)


def profile_from_function(
    annulus: AnnulusSpec,
    func: Callable[[np.ndarray], np.ndarray],
    n_nodes: int,
    nonlin: Optional[Nonlinearity] = None,
    rule: Optional[QuadratureRule | str] = None,
    order: Optional[int] = None,
) -> RadialProfile:
    """Sample an analytic radial function; the energy is only filled in when ``nonlin`` is given."""
    line = build_line(annulus.R0, annulus.R1, n_nodes, rule or settings.conebreak_quadrature_rule, order)
    u = np.asarray(func(line.nodes), dtype=float)
    u[[0, -1]] = 0.0
    energy = radial_energy(line, u, nonlin, annulus) if nonlin is not None else math.nan
    return RadialProfile(
        r_nodes=line.nodes,
        u=u,
        du=line.nodal_derivative(u),
        residual_inf=math.nan,
        energy=energy,
        line=line,
    )


def _integrals(profile: RadialProfile, annulus: AnnulusSpec) -> tuple[float, float, np.ndarray]:
    line = profile.line
    stiffness, mass = radial_operators(line, annulus)
    dirichlet = float(profile.u @ (stiffness @ profile.u))
    return dirichlet, math.fsum(mass * profile.u**2), mass


def radial_identity_residual(profile: RadialProfile, nonlin: Nonlinearity, annulus: AnnulusSpec) -> float:
    """Relative defect of ``∫(u'² + λu²) r^{N-1} = ∫ u f(r, u) r^{N-1}``."""
    dirichlet, l2, mass = _integrals(profile, annulus)
    left = dirichlet + annulus.lam * l2
    right = math.fsum(mass * profile.u * np.asarray(nonlin.f(profile.r_nodes, profile.u)))
    return abs(left - right) / max(1.0, abs(right))


def hardy_ratio(profile: RadialProfile, annulus: AnnulusSpec) -> float:
    """``∫(u'² + λu²) r^{N-1} / ∫ u² r^{N-3}``, bounded below by ``H``."""
    dirichlet, l2, _ = _integrals(profile, annulus)
    denominator = math.fsum(profile.line.weights * profile.r_nodes ** (annulus.N - 3) * profile.u**2)
    if denominator <= 0:
        raise DomainError(detail="hardy ratio of the zero profile is undefined")
    return (dirichlet + annulus.lam * l2) / denominator


def lift_profile(profile: RadialProfile, grid: Grid2D) -> Field2D:
    """Extend a radial profile constantly in θ, by cubic Hermite interpolation in r."""
    nodes = grid.r_nodes
    if nodes.shape == profile.r_nodes.shape and np.array_equal(nodes, profile.r_nodes):
        values = profile.u.copy()
    else:
        values = CubicHermiteSpline(profile.r_nodes, profile.u, profile.du)(nodes)
        if np.all(profile.u >= 0):
            values = np.maximum(values, 0.0)
    values[[0, -1]] = 0.0
    return Field2D(np.repeat(values[:, None], grid.shape[1], axis=1))
