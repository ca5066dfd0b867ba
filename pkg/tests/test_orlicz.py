import math

import numpy as np
import pytest
from benchmark import benchmark_annulus

from conebreak.conevar import ConeField
from conebreak.conevar.projection import random_cone_field
from conebreak.exceptions import DomainError, SaturationError
from conebreak.geometry import Field2D, build_grid, h1_norm
from conebreak.orlicz import (
    LuxemburgNorm,
    exponential_modulus,
    luxemburg_norm,
    modulus,
    modulus_ladder,
    probe_fields,
    probe_ladder,
    tm_probe,
    v_norm,
)


class TestModulus:
    def setup_method(self):
        self.annulus = benchmark_annulus()
        self.grid = build_grid(self.annulus, 19, 25)

    def test_constant_field(self):
        field = Field2D(np.full(self.grid.shape, 0.5))

        expected = math.expm1(0.25 * 2.0) * self.annulus.volume

        assert exponential_modulus(field, self.grid, 2.0).value == pytest.approx(expected, rel=1e-10)

    def test_zero_field(self):
        assert modulus(Field2D.zeros(self.grid), self.grid, 1.0) == 0.0

    def test_saturation_is_flagged(self):
        field = Field2D(np.full(self.grid.shape, 100.0))

        result = exponential_modulus(field, self.grid, 1.0)

        assert result.saturated
        assert math.isfinite(result.value)
        with pytest.raises(SaturationError):
            modulus(field, self.grid, 1.0)

    def test_ladder_is_nondecreasing(self):
        field = random_cone_field(self.grid, np.random.default_rng(3)).field

        results = modulus_ladder(field, self.grid, [1.6, 0.1, 0.4])

        assert [result.alpha for result in results] == [0.1, 0.4, 1.6]
        values = [result.value for result in results]
        assert values == sorted(values)

    def test_rejects_nonpositive_parameters(self):
        field = Field2D.zeros(self.grid)
        with pytest.raises(DomainError):
            modulus(field, self.grid, 0.0)
        with pytest.raises(DomainError):
            exponential_modulus(field, self.grid, -1.0)


class TestLuxemburgNorm:
    def setup_method(self):
        self.annulus = benchmark_annulus()
        self.grid = build_grid(self.annulus, 25, 19)
        self.rng = np.random.default_rng(20240611)

    @pytest.mark.parametrize("c", [0.3, 1.0, -2.5])
    def test_constant_field_closed_form(self, c):
        field = Field2D(np.full(self.grid.shape, c))
        expected = abs(c) / math.sqrt(math.log1p(1.0 / self.annulus.volume))

        assert luxemburg_norm(field, self.grid).norm == pytest.approx(expected, rel=1e-8)

    def test_zero_field(self):
        result = luxemburg_norm(Field2D.zeros(self.grid), self.grid)

        assert result.norm == 0.0
        assert result.bracket == (0.0, 0.0)

    def test_modulus_at_norm_is_one(self):
        field = random_cone_field(self.grid, self.rng).field

        result = luxemburg_norm(field, self.grid)

        assert result.modulus_at_norm == pytest.approx(1.0, abs=1e-8)
        assert result.bracket[0] <= result.norm <= result.bracket[1]

    def test_homogeneity_and_triangle(self):
        norm = LuxemburgNorm(self.grid)
        for _ in range(50):
            u = random_cone_field(self.grid, self.rng).field
            v = random_cone_field(self.grid, self.rng).field
            t = self.rng.uniform(0.1, 5.0)

            nu, nv = norm(u).norm, norm(v).norm
            assert norm(Field2D(t * u.values)).norm == pytest.approx(t * nu, rel=1e-9)
            assert norm(Field2D(u.values + v.values)).norm <= (nu + nv) * (1 + 1e-9)

    def test_tolerance_range(self):
        with pytest.raises(DomainError) as exc_info:
            LuxemburgNorm(self.grid, tol=0.1)

        assert exc_info.value.context == {"tol": 0.1}

    def test_log_hook_receives_bisection(self, mocker):
        norm = LuxemburgNorm(self.grid)
        log = mocker.patch.object(norm, "log")

        norm(Field2D(np.full(self.grid.shape, 0.3)))

        assert log.call_args.kwargs["event"] == "bisection"

    def test_v_norm_adds_both_parts(self):
        field = random_cone_field(self.grid, self.rng).field

        expected = h1_norm(field, self.grid) + luxemburg_norm(field, self.grid).norm

        assert v_norm(field, self.grid) == pytest.approx(expected)


class TestProbe:
    def setup_method(self):
        self.annulus = benchmark_annulus()
        self.grid = build_grid(self.annulus, 19, 13)

    def test_fields_are_normalized_cone_fields(self):
        fields = probe_fields(self.grid, 10, seed=7)

        assert len(fields) == 10
        for field in fields:
            ConeField(field)
            assert h1_norm(field, self.grid, lam=1.0) == pytest.approx(1.0)

    def test_deterministic_in_seed(self):
        first = tm_probe(self.grid, self.annulus, 0.2, 10, seed=11)
        second = tm_probe(self.grid, self.annulus, 0.2, 10, seed=11)

        assert first == second

    def test_ladder(self):
        summaries = probe_ladder(self.grid, self.annulus, [0.1, 0.2, 0.4, 0.8, 1.6], 12, seed=0)

        maxima = [summary.max_modulus for summary in summaries]
        assert all(math.isfinite(value) for value in maxima)
        assert maxima == sorted(maxima)
        assert all(summary.sample_count == 12 for summary in summaries)

    def test_rejects_small_sample(self):
        with pytest.raises(DomainError):
            tm_probe(self.grid, self.annulus, 0.2, 5, seed=0)

    def test_rejects_foreign_annulus(self):
        other = benchmark_annulus(R1=4.0)

        with pytest.raises(DomainError) as exc_info:
            tm_probe(self.grid, other, 0.2, 10, seed=0)

        assert exc_info.value.detail == "grid was built for another annulus"

    @pytest.mark.slow
    def test_stable_under_refinement(self):
        coarse = tm_probe(build_grid(self.annulus, 32, 16), self.annulus, 0.2, 64, seed=5)
        fine = tm_probe(build_grid(self.annulus, 64, 32), self.annulus, 0.2, 64, seed=5)

        assert coarse.saturated_count == 0
        assert fine.saturated_count == 0
        assert 0.5 <= fine.max_modulus / coarse.max_modulus <= 2.0
