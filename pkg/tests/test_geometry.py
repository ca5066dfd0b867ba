import math

import numpy as np
import pydantic
import pytest
from benchmark import benchmark_annulus

from conebreak.exceptions import DimensionMismatchError, DomainError
from conebreak.geometry import (
    AnnulusSpec,
    Field2D,
    QuadratureRule,
    build_grid,
    build_line,
    h1_norm,
    integrate,
    l2_norm,
    sphere_surface,
)


class TestAnnulusSpec:
    def test_lambda_alias(self):
        spec = benchmark_annulus()

        assert spec.lam == 1.0
        assert spec.model_dump(by_alias=True)["lambda"] == 1.0

    def test_radii_order(self):
        with pytest.raises(pydantic.ValidationError) as exc_info:
            AnnulusSpec(N=3, R0=2.0, R1=2.0)

        assert "R0 < R1" in str(exc_info.value)

    def test_dimension_below_three(self):
        with pytest.raises(pydantic.ValidationError):
            AnnulusSpec(N=2, R0=1.0, R1=2.0)

    def test_truncated_needs_positive_lambda(self):
        with pytest.raises(pydantic.ValidationError) as exc_info:
            AnnulusSpec(N=3, R0=1.0, R1=50.0, truncated=True)

        assert "lambda > 0" in str(exc_info.value)

    def test_volume(self):
        spec = AnnulusSpec(N=3, R0=1.0, R1=2.0)

        assert spec.volume == pytest.approx(4.0 / 3.0 * math.pi * 7.0, rel=1e-14)


class TestSphereSurface:
    @pytest.mark.parametrize(
        "m, expected",
        [(1, 2 * math.pi), (2, 4 * math.pi), (3, 2 * math.pi**2), (4, 8 * math.pi**2 / 3)],
    )
    def test_known_values(self, m, expected):
        assert sphere_surface(m) == pytest.approx(expected, rel=1e-14)

    def test_rejects_zero(self):
        with pytest.raises(DomainError):
            sphere_surface(0)


class TestPanelLine:
    def test_lobatto_endpoints_and_weights(self):
        line = build_line(2.0, 3.0, 61, QuadratureRule.LOBATTO)

        assert line.nodes[0] == 2.0
        assert line.nodes[-1] == 3.0
        assert np.all(np.diff(line.nodes) > 0)
        assert line.weights.sum() == pytest.approx(1.0, rel=1e-14)

    def test_lobatto_polynomial_exactness(self):
        line = build_line(0.0, 1.0, 13, QuadratureRule.LOBATTO, order=6)

        assert line.integrate(line.nodes**11) == pytest.approx(1.0 / 12.0, rel=1e-13)

    def test_trapezoid_is_order_one(self):
        line = build_line(0.0, 1.0, 11, QuadratureRule.TRAPEZOID, order=6)

        assert line.order == 1
        assert line.size == 11
        assert line.weights[0] == pytest.approx(0.05)
        assert line.weights[1] == pytest.approx(0.1)

    def test_nodal_derivative(self):
        line = build_line(0.0, 1.0, 61, "lobatto")

        derivative = line.nodal_derivative(np.sin(line.nodes))

        assert np.max(np.abs(derivative - np.cos(line.nodes))) < 1e-7

    def test_unknown_rule(self):
        with pytest.raises(DomainError) as exc_info:
            build_line(0.0, 1.0, 11, "simpson")

        assert exc_info.value.detail == "unknown quadrature rule <simpson>"

    def test_too_few_nodes(self):
        with pytest.raises(DomainError):
            build_line(0.0, 1.0, 2, "lobatto")


class TestGrid:
    def setup_method(self):
        self.spec = benchmark_annulus()
        self.grid = build_grid(self.spec, 31, 25)

    def test_volume(self):
        ones = Field2D(np.ones(self.grid.shape))

        assert integrate(ones, self.grid) == pytest.approx(self.spec.volume, rel=1e-10)

    def test_theta_weight_vanishes_at_equator(self):
        assert self.grid.theta_nodes[-1] == pytest.approx(math.pi / 2)
        assert np.all(self.grid.quad_weights[:, -1] == 0)

    def test_dirichlet_energy_of_radial_function(self):
        r0, r1 = self.spec.R0, self.spec.R1
        field = Field2D.from_function(self.grid, lambda r, theta: (r - r0) * (r1 - r))
        derivative_sq = np.polynomial.Polynomial([r0 + r1, -2.0]) ** 2
        antiderivative = (derivative_sq * np.polynomial.Polynomial([0, 0, 0, 0, 1])).integ()
        expected = sphere_surface(4) * (antiderivative(r1) - antiderivative(r0))

        assert self.grid.dirichlet_energy(field.values) == pytest.approx(expected, rel=1e-10)

    def test_h1_norm_includes_lambda(self):
        field = Field2D.from_function(self.grid, lambda r, theta: (r - 2.0) * (3.0 - r))
        gradient = self.grid.dirichlet_energy(field.values)

        assert h1_norm(field, self.grid, lam=0.0) == pytest.approx(math.sqrt(gradient))
        assert h1_norm(field, self.grid) ** 2 == pytest.approx(gradient + l2_norm(field, self.grid) ** 2)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError) as exc_info:
            integrate(Field2D(np.ones((3, 3))), self.grid)

        assert exc_info.value.context["grid_shape"] == self.grid.shape

    def test_field_needs_two_dimensions(self):
        with pytest.raises(DimensionMismatchError):
            Field2D(np.ones(4))

    def test_field_rejects_nan(self):
        values = np.ones(self.grid.shape)
        values[3, 4] = np.nan

        with pytest.raises(DomainError):
            Field2D(values)
