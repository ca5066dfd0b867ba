"""Annulus description, the reduced (r, θ) domain and its weighted quadrature.

Functions on the annulus that only depend on ``r = |x|`` and
``θ = arcsin(|x_N| / r)`` live on ``Q = (R0, R1) × (0, π/2)`` where

    ∫_A u dx = 2 ω_{N-2} ∫∫_Q u(r, θ) (cos θ)^{N-2} r^{N-1} dr dθ.

Both directions are discretized by composite panels (Gauss–Lobatto–Legendre
points of a fixed order, or order-1 trapezoid panels). Panels share their end
points so the boundary radii are grid nodes and Dirichlet conditions are imposed
by zeroing rows.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import gamma

from .config import settings
from .exceptions import DimensionMismatchError, DomainError

MIN_NODES = 8


class QuadratureRule(str, Enum):
    LOBATTO = "lobatto"
    TRAPEZOID = "trapezoid"


class AnnulusSpec(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    N: int = Field(ge=3)
    R0: float = Field(gt=0)
    R1: float
    lam: float = Field(default=0.0, ge=0, alias="lambda")
    truncated: bool = False

    @model_validator(mode="after")
    def _check_geometry(self) -> "AnnulusSpec":
        if not math.isfinite(self.R1):
            raise ValueError("R1 must be finite; model an exterior domain with truncated=true")
        if self.R1 <= self.R0:
            raise ValueError(f"R0 < R1 required, got R0={self.R0} R1={self.R1}")
        if self.truncated and self.lam <= 0:
            raise ValueError("lambda > 0 is required when the outer radius is a truncation")
        return self

    @property
    def volume(self) -> float:
        return sphere_surface(self.N - 1) * (self.R1**self.N - self.R0**self.N) / self.N


def sphere_surface(m: int) -> float:
    """Surface measure of the unit m-sphere in R^{m+1}."""
    if m < 1:
        raise DomainError(detail=f"sphere dimension must be >= 1, got {m}", m=m)
    return float(2.0 * math.pi ** ((m + 1) / 2) / gamma((m + 1) / 2))


def _reference_panel(order: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lobatto points, weights and differentiation matrix on [-1, 1]."""
    legendre = np.polynomial.legendre.Legendre.basis(order)
    interior = np.sort(legendre.deriv().roots().real)
    points = np.concatenate(([-1.0], interior, [1.0]))
    p_at = legendre(points)
    weights = 2.0 / (order * (order + 1) * p_at**2)

    diff = points[:, None] - points[None, :]
    np.fill_diagonal(diff, 1.0)
    derivative = (p_at[:, None] / p_at[None, :]) / diff
    np.fill_diagonal(derivative, 0.0)
    derivative[0, 0] = -order * (order + 1) / 4.0
    derivative[-1, -1] = order * (order + 1) / 4.0
    return points, weights, derivative


@dataclass(frozen=True, eq=False)
class PanelLine:
    """Composite panel rule on ``[a, b]`` with shared panel end points."""

    a: float
    b: float
    order: int
    panels: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    local_points: np.ndarray = field(repr=False)
    local_weights: np.ndarray = field(repr=False)
    local_index: np.ndarray = field(repr=False)
    derivative: sp.csr_matrix = field(repr=False)

    @classmethod
    def build(cls, a: float, b: float, n: int, order: int) -> "PanelLine":
        panels = max(1, math.ceil((n - 1) / order))
        ref_points, ref_weights, ref_derivative = _reference_panel(order)
        width = (b - a) / panels

        count = panels * order + 1
        nodes = np.empty(count)
        weights = np.zeros(count)
        local_points = np.empty(panels * (order + 1))
        local_weights = np.empty_like(local_points)
        local_index = np.empty(panels * (order + 1), dtype=np.int64)
        rows, cols, vals = [], [], []
        for k in range(panels):
            start = a + k * width
            idx = np.arange(k * order, k * order + order + 1)
            pts = start + (ref_points + 1.0) * width / 2.0
            nodes[idx] = pts
            weights[idx] += ref_weights * width / 2.0
            sl = slice(k * (order + 1), (k + 1) * (order + 1))
            local_points[sl] = pts
            local_weights[sl] = ref_weights * width / 2.0
            local_index[sl] = idx
            block_rows = np.arange(sl.start, sl.stop)
            rr, cc = np.meshgrid(block_rows, idx, indexing="ij")
            rows.append(rr.ravel())
            cols.append(cc.ravel())
            vals.append((ref_derivative * 2.0 / width).ravel())
        nodes[0], nodes[-1] = a, b
        local_points[0], local_points[-1] = a, b
        derivative = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(local_points.size, count),
        )
        return cls(
            a=a,
            b=b,
            order=order,
            panels=panels,
            nodes=nodes,
            weights=weights,
            local_points=local_points,
            local_weights=local_weights,
            local_index=local_index,
            derivative=derivative,
        )

    @property
    def size(self) -> int:
        return self.nodes.size

    def integrate(self, values: np.ndarray, density: Optional[np.ndarray] = None) -> float:
        w = self.weights if density is None else self.weights * density
        return float(np.dot(w, values))

    def stiffness(self, local_density: np.ndarray) -> sp.csr_matrix:
        """Matrix of ``∫ φ_i' φ_j' ρ`` under the panel quadrature."""
        scaled = sp.diags(self.local_weights * local_density)
        return (self.derivative.T @ scaled @ self.derivative).tocsr()

    def nodal_derivative(self, values: np.ndarray) -> np.ndarray:
        """Derivative at the nodes, averaged at shared panel end points."""
        local = self.derivative @ values
        counts = np.bincount(self.local_index, minlength=self.size)
        return np.bincount(self.local_index, weights=local, minlength=self.size) / counts

    def squared_derivative_integral(self, values: np.ndarray, local_density: np.ndarray) -> float:
        local = self.derivative @ values
        return float(np.dot(self.local_weights * local_density, local**2))


def build_line(a: float, b: float, n: int, rule: QuadratureRule, order: Optional[int] = None) -> PanelLine:
    if n < MIN_NODES:
        raise DomainError(detail=f"at least {MIN_NODES} nodes required, got {n}", n=n)
    try:
        rule = QuadratureRule(rule)
    except ValueError as exc:
        raise DomainError(detail=f"unknown quadrature rule <{rule}>", rule=str(rule)) from exc
    if rule == QuadratureRule.TRAPEZOID:
        order = 1
    elif order is None:
        order = settings.conebreak_panel_order
    if order < 1:
        raise DomainError(detail=f"panel order must be >= 1, got {order}", order=order)
    return PanelLine.build(a, b, n, order)


def cos_power(theta: np.ndarray, exponent: int) -> np.ndarray:
    values = np.cos(theta) ** exponent
    return np.where(np.isclose(theta, math.pi / 2, rtol=0.0, atol=1e-15), 0.0, values)


@dataclass(frozen=True, eq=False)
class Grid2D:
    annulus: AnnulusSpec
    rule: QuadratureRule
    r_line: PanelLine = field(repr=False)
    theta_line: PanelLine = field(repr=False)
    omega: float
    r_nodes: np.ndarray = field(repr=False)
    theta_nodes: np.ndarray = field(repr=False)
    quad_weights: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.r_nodes.size, self.theta_nodes.size

    @cached_property
    def theta_mass(self) -> np.ndarray:
        """θ-weights times (cos θ)^{N-2}."""
        return self.theta_line.weights * cos_power(self.theta_nodes, self.annulus.N - 2)

    @cached_property
    def r_mass(self) -> np.ndarray:
        return self.r_line.weights * self.r_nodes ** (self.annulus.N - 1)

    @cached_property
    def r_mass_over_r2(self) -> np.ndarray:
        return self.r_line.weights * self.r_nodes ** (self.annulus.N - 3)

    @cached_property
    def stiffness_r(self) -> sp.csr_matrix:
        return self.r_line.stiffness(self.r_line.local_points ** (self.annulus.N - 1))

    @cached_property
    def stiffness_theta(self) -> sp.csr_matrix:
        return self.theta_line.stiffness(cos_power(self.theta_line.local_points, self.annulus.N - 2))

    def check(self, values: np.ndarray) -> None:
        if values.shape != self.shape:
            raise DimensionMismatchError(
                detail=f"field shape {values.shape} does not match grid shape {self.shape}",
                field_shape=values.shape,
                grid_shape=self.shape,
            )

    def gradient_apply(self, values: np.ndarray) -> np.ndarray:
        """Coefficient gradient of ``½∫|∇u|² dx`` (``u_r² + u_θ²/r²``)."""
        radial = (self.stiffness_r @ values) * self.theta_mass[None, :]
        angular = self.r_mass_over_r2[:, None] * (self.stiffness_theta @ values.T).T
        return 2.0 * self.omega * (radial + angular)

    def dirichlet_energy(self, values: np.ndarray) -> float:
        """``∫|∇u|² dx`` under the grid quadrature."""
        return float(np.sum(self.gradient_apply(values) * values))


@dataclass(frozen=True)
class Field2D:
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise DimensionMismatchError(detail=f"a 2D array is required, got ndim={values.ndim}")
        if not np.all(np.isfinite(values)):
            raise DomainError(detail="field entries must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: Grid2D) -> "Field2D":
        return cls(np.zeros(grid.shape))

    @classmethod
    def from_function(cls, grid: Grid2D, func) -> "Field2D":
        rr, tt = np.meshgrid(grid.r_nodes, grid.theta_nodes, indexing="ij")
        return cls(np.broadcast_to(func(rr, tt), grid.shape).copy())


def build_grid(
    spec: AnnulusSpec,
    nr: int,
    ntheta: int,
    rule: Optional[QuadratureRule | str] = None,
    order: Optional[int] = None,
) -> Grid2D:
    if rule is None:
        rule = settings.conebreak_quadrature_rule
    return build_grid_on(spec, build_line(spec.R0, spec.R1, nr, rule, order), ntheta, rule, order)


def build_grid_on(
    spec: AnnulusSpec,
    r_line: PanelLine,
    ntheta: int,
    rule: Optional[QuadratureRule | str] = None,
    order: Optional[int] = None,
) -> Grid2D:
    """Tensor grid reusing an existing radial line (for example a radial solver's nodes)."""
    if rule is None:
        rule = settings.conebreak_quadrature_rule
    if not (math.isclose(r_line.a, spec.R0) and math.isclose(r_line.b, spec.R1)):
        raise DomainError(detail="radial line does not span [R0, R1]", a=r_line.a, b=r_line.b)
    theta_line = build_line(0.0, math.pi / 2, ntheta, rule, order)
    omega = sphere_surface(spec.N - 2)
    r_mass = r_line.weights * r_line.nodes ** (spec.N - 1)
    theta_mass = theta_line.weights * cos_power(theta_line.nodes, spec.N - 2)
    return Grid2D(
        annulus=spec,
        rule=QuadratureRule(rule),
        r_line=r_line,
        theta_line=theta_line,
        omega=omega,
        r_nodes=r_line.nodes,
        theta_nodes=theta_line.nodes,
        quad_weights=2.0 * omega * np.outer(r_mass, theta_mass),
    )


def integrate(field: Field2D, grid: Grid2D) -> float:
    grid.check(field.values)
    terms = (field.values * grid.quad_weights).ravel()
    return math.fsum(terms)


def l2_norm(field: Field2D, grid: Grid2D) -> float:
    return math.sqrt(integrate(Field2D(field.values**2), grid))


def h1_norm(field: Field2D, grid: Grid2D, lam: Optional[float] = None) -> float:
    """``‖u‖_{H¹_λ}``; ``lam`` defaults to the annulus parameter."""
    grid.check(field.values)
    lam = grid.annulus.lam if lam is None else lam
    value = grid.dirichlet_energy(field.values) + lam * float(np.sum(grid.quad_weights * field.values**2))
    return math.sqrt(max(value, 0.0))
