"""Discrete energy ``J_h`` on a grid and its exact coefficient gradient.

    J_h(u) = ½ a_h(u, u) + ½ λ Σ w u² − Σ w F(r, u)

where ``a_h`` is the spectral-element form of ``∫ (u_r² + u_θ²/r²) dx``.
"""

import math
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..exceptions import BoundaryViolationError
from ..geometry import AnnulusSpec, Field2D, Grid2D
from ..nonlinearity import Nonlinearity

BOUNDARY_TOL = 1e-10


def check_boundary(field: Field2D, grid: Grid2D) -> np.ndarray:
    grid.check(field.values)
    values = field.values
    edge = max(float(np.max(np.abs(values[0]))), float(np.max(np.abs(values[-1]))))
    if edge > BOUNDARY_TOL * max(1.0, float(np.max(np.abs(values)))):
        raise BoundaryViolationError(detail=f"field is {edge:.3e} on the radial boundary", edge=edge)
    return values


def discrete_energy(field: Field2D, grid: Grid2D, nonlin: Nonlinearity, annulus: AnnulusSpec) -> float:
    u = check_boundary(field, grid)
    r = grid.r_nodes[:, None]
    w = grid.quad_weights
    quadratic = 0.5 * grid.dirichlet_energy(u) + 0.5 * annulus.lam * math.fsum((w * u**2).ravel())
    return quadratic - math.fsum((w * nonlin.F(r, u)).ravel())


def gradient_values(u: np.ndarray, grid: Grid2D, nonlin: Nonlinearity, annulus: AnnulusSpec) -> np.ndarray:
    r = grid.r_nodes[:, None]
    w = grid.quad_weights
    grad = grid.gradient_apply(u) + annulus.lam * w * u - w * nonlin.f(r, u)
    grad[[0, -1], :] = 0.0
    return grad


def discrete_gradient(field: Field2D, grid: Grid2D, nonlin: Nonlinearity, annulus: AnnulusSpec) -> Field2D:
    return Field2D(gradient_values(check_boundary(field, grid), grid, nonlin, annulus))


class Preconditioner:
    """The discrete ``-Δ + λ`` operator on interior rows, factorized once."""

    def __init__(self, grid: Grid2D, annulus: AnnulusSpec):
        self.grid = grid
        self.annulus = annulus

    @cached_property
    def matrix(self) -> sp.csc_matrix:
        grid = self.grid
        radial = sp.kron(grid.stiffness_r, sp.diags(grid.theta_mass))
        angular = sp.kron(sp.diags(grid.r_mass_over_r2), grid.stiffness_theta)
        full = 2.0 * grid.omega * (radial + angular) + self.annulus.lam * sp.diags(grid.quad_weights.ravel())
        nr, ntheta = grid.shape
        interior = np.arange(ntheta, (nr - 1) * ntheta)
        return full.tocsr()[interior][:, interior].tocsc()

    @cached_property
    def factor(self):
        return splu(self.matrix)

    def solve(self, values: np.ndarray) -> np.ndarray:
        """``P⁻¹ g`` with zero radial boundary rows."""
        out = np.zeros_like(values)
        out[1:-1] = self.factor.solve(np.ascontiguousarray(values[1:-1]).ravel()).reshape(values[1:-1].shape)
        return out

    def norm(self, values: np.ndarray) -> float:
        interior = np.ascontiguousarray(values[1:-1]).ravel()
        return math.sqrt(max(float(interior @ (self.matrix @ interior)), 0.0))
