"""Metric projection onto the discrete cone ``{u ≥ 0, u nonincreasing in θ}``."""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import isotonic_regression

from ..config import settings
from ..core import LogEvent, SolverBase
from ..exceptions import DomainError, InvariantViolationError
from ..geometry import Field2D, Grid2D

WEIGHT_FLOOR = 1e-12


@dataclass(frozen=True)
class ConeField:
    field: Field2D

    def __post_init__(self):
        values = self.field.values
        if np.any(values < 0):
            raise InvariantViolationError(detail="cone field has negative entries", min=float(values.min()))
        if values.shape[1] > 1 and np.any(np.diff(values, axis=1) > 0):
            raise InvariantViolationError(detail="cone field increases in θ along some row")

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    def scaled(self, t: float) -> "ConeField":
        if t < 0:
            raise DomainError(detail=f"cone fields only scale by t >= 0, got {t}", t=t)
        return ConeField(Field2D(t * self.values))


def projection_weights(grid: Grid2D) -> np.ndarray:
    """Quadrature weights floored away from zero (the θ = π/2 column has none)."""
    weights = grid.quad_weights
    return np.maximum(weights, WEIGHT_FLOOR * float(weights.max()))


def weighted_norm(values: np.ndarray, weights: np.ndarray) -> float:
    return float(np.sqrt(np.sum(weights * values**2)))


def _nonincreasing_rows(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return np.stack(
        [isotonic_regression(row, weights=w, increasing=False).x for row, w in zip(values, weights)]
    )


class ConeProjector(SolverBase):
    """Dykstra alternation between row-wise antitonic regression and clamping at zero."""

    def __init__(self, weights: np.ndarray, tol: Optional[float] = None, max_iter: Optional[int] = None):
        self.weights = weights
        self.tol = settings.conebreak_projection_tol if tol is None else tol
        self.max_iter = settings.conebreak_projection_max_iter if max_iter is None else max_iter

    def __call__(self, values: np.ndarray) -> np.ndarray:
        weights = self.weights
        x = np.asarray(values, dtype=float).copy()
        p = np.zeros_like(x)
        q = np.zeros_like(x)
        change = math.inf
        for _ in range(self.max_iter):
            y = _nonincreasing_rows(x + p, weights)
            p = x + p - y
            x_next = np.maximum(y + q, 0.0)
            q = y + q - x_next
            change = weighted_norm(x_next - x, weights)
            x = x_next
            if change <= self.tol * max(1.0, weighted_norm(x, weights)):
                break
        else:
            self.log(event=LogEvent.PROJECTION_CAPPED, max_iter=self.max_iter, change=change)
        # both constraints exactly, not up to the alternation tolerance
        return np.minimum.accumulate(np.maximum(x, 0.0), axis=1)


def project_rows(
    values: np.ndarray,
    weights: np.ndarray,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
) -> np.ndarray:
    return ConeProjector(weights, tol, max_iter)(values)


def project_cone(
    field: Field2D,
    grid: Grid2D,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
) -> ConeField:
    grid.check(field.values)
    return ConeField(Field2D(project_rows(field.values, projection_weights(grid), tol, max_iter)))


def random_cone_field(grid: Grid2D, rng: np.random.Generator, basis_size: Optional[int] = None) -> ConeField:
    """Uniform coefficients over ``sin(kπ s) cos(2jθ)`` projected onto the cone."""
    size = settings.conebreak_probe_basis_size if basis_size is None else basis_size
    coeffs = rng.uniform(0.0, 1.0, size=(size, size))
    annulus = grid.annulus
    s = (grid.r_nodes - annulus.R0) / (annulus.R1 - annulus.R0)
    radial = np.sin(np.pi * np.outer(np.arange(1, size + 1), s))
    angular = np.cos(2.0 * np.outer(np.arange(size), grid.theta_nodes))
    values = radial.T @ coeffs @ angular
    values[[0, -1], :] = 0.0
    return project_cone(Field2D(values), grid)
