import math

import numpy as np
import pydantic
import pytest
from benchmark import benchmark_annulus, benchmark_power, exponential

from conebreak.exceptions import DomainError, SaturationError
from conebreak.geometry import AnnulusSpec
from conebreak.nonlinearity import (
    ExponentialNonlinearity,
    NonlinearitySpec,
    PowerNonlinearity,
    RadialTabulatedWeight,
    ZeroNonlinearity,
    assumption_report,
    eval_dfds,
    eval_F,
    eval_f,
    exp_m,
    threshold_check,
)


class TestExpM:
    @pytest.mark.parametrize("s", [1e-8, 0.3, 0.99, 1.0, 3.0, 40.0])
    def test_m_one_is_expm1(self, s):
        assert exp_m(1, s) == pytest.approx(math.expm1(s), rel=1e-13)

    @pytest.mark.parametrize("s", [1e-4, 0.5, 2.0, 25.0])
    def test_m_two(self, s):
        expected = math.expm1(s) - s if s > 1 else sum(s**k / math.factorial(k) for k in range(2, 30))

        assert exp_m(2, s) == pytest.approx(expected, rel=1e-12)

    def test_m_zero_is_exp(self):
        assert exp_m(0, 1.5) == pytest.approx(math.exp(1.5))

    def test_vectorized(self):
        s = np.array([0.0, 0.5, 2.0])

        values = exp_m(1, s)

        assert isinstance(values, np.ndarray)
        assert values[0] == 0.0
        np.testing.assert_allclose(values, np.expm1(s), rtol=1e-13)

    def test_rejects_negative_arguments(self):
        with pytest.raises(DomainError):
            exp_m(-1, 1.0)
        with pytest.raises(DomainError) as exc_info:
            exp_m(1, -0.5)

        assert exc_info.value.detail == "exp_m is defined for s >= 0"


class TestFamilies:
    def test_exponential_growth_condition(self):
        with pytest.raises(pydantic.ValidationError):
            ExponentialNonlinearity(beta=0.5, m=1)
        with pytest.raises(pydantic.ValidationError):
            ExponentialNonlinearity(beta=2.0, m=1)

    def test_exponential_constants(self):
        spec = exponential(beta=1.5, m=1)

        assert spec.sigma == 3.0
        assert spec.delta_max == 2.0
        assert spec.mu == 2.0

    def test_exponential_is_odd(self):
        spec = exponential()
        s = np.array([0.3, 1.2])

        np.testing.assert_allclose(spec.f(2.5, -s), -spec.f(2.5, s))
        np.testing.assert_allclose(spec.F(2.5, -s), spec.F(2.5, s))
        assert spec.f(2.5, 0.0) == 0.0

    def test_exponential_saturates(self):
        with pytest.raises(SaturationError):
            exponential().f(2.5, 1e3)

    @pytest.mark.parametrize("spec", [exponential(beta=1.5, m=1), exponential(beta=1.0, m=2)])
    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    def test_exponential_is_subcritical(self, spec, alpha):
        s = np.array([5.0, 10.0, 20.0])

        damped = spec.f(2.5, s) * np.exp(-alpha * s**2)

        assert damped[0] > damped[1] > damped[2] >= 0

    def test_power_defaults_pfrak(self):
        spec = PowerNonlinearity(p=3.0)

        assert spec.pfrak == 3.0
        assert spec.sigma == 3.0
        assert spec.delta_max == 2.0

    def test_power_rejects_exponents(self):
        with pytest.raises(pydantic.ValidationError):
            PowerNonlinearity(p=2.0)
        with pytest.raises(pydantic.ValidationError):
            PowerNonlinearity(p=4.0, pfrak=3.0)
        with pytest.raises(pydantic.ValidationError):
            PowerNonlinearity(p=4.0, pfrak=math.inf)

    def test_power_closed_form(self):
        spec = benchmark_power()

        assert eval_f(spec, 2.5, 1.5) == pytest.approx(2 * 1.5**3)
        assert eval_F(spec, 2.5, 1.5) == pytest.approx(2 * 1.5**4 / 4)
        assert eval_dfds(spec, 2.5, 1.5) == pytest.approx(6 * 1.5**2)

    def test_broadcasting(self):
        spec = benchmark_power()
        r = np.linspace(2.0, 3.0, 5)[:, None]
        s = np.ones((1, 3))

        assert spec.f(r, s).shape == (5, 3)
        assert isinstance(spec.f(2.0, 1.0), float)

    @pytest.mark.parametrize("spec", [exponential(), benchmark_power()])
    def test_dfds_matches_finite_difference(self, spec):
        s, h = 0.8, 1e-6
        numeric = (spec.f(2.5, s + h) - spec.f(2.5, s - h)) / (2 * h)

        assert spec.dfds(2.5, s) == pytest.approx(numeric, rel=1e-7)

    @pytest.mark.parametrize("spec", [exponential(), benchmark_power(p=4.0, pfrak=6.0)])
    def test_primitive(self, spec):
        s = np.linspace(0.0, 1.2, 20001)
        values = spec.f(2.5, s)
        trapezoid = float(np.sum((values[1:] + values[:-1]) / 2 * np.diff(s)))

        assert spec.F(2.5, 1.2) == pytest.approx(trapezoid, rel=1e-6)

    def test_tabulated_weight(self):
        weight = RadialTabulatedWeight(r=[2.0, 2.5, 3.0], values=[1.0, 2.0, 1.5])
        spec = PowerNonlinearity(p=3.0, weight=weight)

        assert spec.f(2.5, 1.0) == pytest.approx(4.0)
        assert weight(10.0) == pytest.approx(1.5)

    def test_discriminated_union_from_mapping(self):
        adapter = pydantic.TypeAdapter(NonlinearitySpec)

        spec = adapter.validate_python({"family": "power", "p": 4.0})

        assert isinstance(spec, PowerNonlinearity)


class TestAssumptionReport:
    def setup_method(self):
        self.annulus = benchmark_annulus()

    @pytest.mark.parametrize(
        "spec, sigma",
        [(ExponentialNonlinearity(beta=1.5, m=1), 3.0), (PowerNonlinearity(p=4.0, pfrak=6.0), 4.0)],
    )
    def test_no_sampled_violations(self, spec, sigma):
        report = assumption_report(spec, self.annulus, sample_count=10_000)

        assert report.ok
        assert report.sigma == sigma
        assert report.sampled_sigma_inf >= sigma * (1 - 1e-10)
        assert report.sampled_delta_inf >= report.delta_max * (1 - 1e-10)

    def test_zero_family_has_no_constants(self):
        with pytest.raises(DomainError):
            assumption_report(ZeroNonlinearity(), self.annulus)

    def test_minimum_sample_count(self):
        with pytest.raises(DomainError) as exc_info:
            assumption_report(benchmark_power(), self.annulus, sample_count=50)

        assert exc_info.value.context == {"sample_count": 50}


class TestThresholdCheck:
    def test_benchmark_power(self):
        verdict = threshold_check(benchmark_power(), benchmark_annulus())

        assert verdict.H == pytest.approx(6.25)
        assert verdict.required == pytest.approx(3.6)
        assert verdict.satisfied
        assert not verdict.strict

    def test_strict_without_lambda(self):
        annulus = benchmark_annulus(**{"lambda": 0.0})
        verdict = threshold_check(benchmark_power(), annulus)

        assert verdict.strict
        assert verdict.H == pytest.approx(2.25)
        assert not verdict.satisfied
        assert "exceed" in verdict.note

    def test_exponential_beta_interval(self):
        verdict = threshold_check(exponential(beta=1.5, m=1), benchmark_annulus())

        assert not verdict.satisfied
        assert verdict.min_m == 1
        assert verdict.beta_interval == pytest.approx((1.8, 2.0))

    def test_exponential_needs_larger_m(self):
        annulus = benchmark_annulus(**{"lambda": 0.0, "R0": 1.0, "R1": 2.0})
        verdict = threshold_check(exponential(beta=1.5, m=1), annulus)

        assert verdict.beta_interval is None
        assert verdict.min_m == math.floor(verdict.required / 2 - 1) + 1
        assert verdict.min_m > 1

    def test_three_dimensions_need_thirteen_terms(self):
        annulus = AnnulusSpec.model_validate({"N": 3, "lambda": 0.0, "R0": 1.0, "R1": 2.0})

        short = threshold_check(exponential(beta=1.9, m=12), annulus)
        enough = threshold_check(exponential(beta=1.9, m=13), annulus)

        assert short.H == pytest.approx(0.25)
        assert short.required == pytest.approx(26.0)
        assert short.min_m == 13
        assert not short.satisfied
        assert "m >= 13" in short.note
        assert enough.satisfied
        assert enough.beta_interval == pytest.approx((26.0 / 14.0, 2.0))
