"""Prototype nonlinearities and numerical checks of their growth assumptions.

Two families are shipped, both odd in ``s`` and radial in ``x``:

* exponential: ``f = w(r) |s|^{β-2} s exp_m(|s|^β)`` with ``β ∈ (0, 2)``, ``β(m+1) > 2``
* power: ``f = w(r) (|s|^{p-2} s + |s|^{𝔭-2} s)`` with ``2 < p ≤ 𝔭``

plus a diagnostic ``zero`` family (``f ≡ 0``) with no superlinear growth.
"""

import math
from typing import Annotated, Literal, Optional, Protocol, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator
from scipy.interpolate import PchipInterpolator
from scipy.special import gammainc

from .config import settings
from .exceptions import DomainError, SaturationError
from .geometry import AnnulusSpec

ArrayLike = Union[float, np.ndarray]

SERIES_TERMS = 40
SAMPLE_MARGIN = 10.0


def _output(template: ArrayLike, values: np.ndarray) -> ArrayLike:
    return values if np.ndim(template) else float(values)


def exp_m(m: int, s: ArrayLike) -> ArrayLike:
    """``e^s`` minus its first ``m`` Taylor terms, for ``s >= 0``.

    Below the crossover the tail series is summed directly; above it the value is
    ``e^s P(m, s)`` with ``P`` the regularized lower incomplete gamma function,
    which equals the subtraction without its cancellation.
    """
    if m < 0:
        raise DomainError(detail=f"exp_m needs m >= 0, got {m}", m=m)
    values = np.asarray(s, dtype=float)
    if np.any(values < 0):
        raise DomainError(detail="exp_m is defined for s >= 0")
    if m == 0:
        return _output(s, np.exp(values))

    out = np.empty_like(values)
    small = values < settings.conebreak_expm_crossover
    head = values[small]
    term = head**m / math.factorial(m)
    total = term.copy()
    for i in range(m + 1, m + SERIES_TERMS):
        term = term * head / i
        total = total + term
    out[small] = total
    tail = values[~small]
    out[~small] = np.exp(tail) * gammainc(m, tail)
    return _output(s, out)


class ConstantWeight(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["constant"] = "constant"
    c: float = Field(default=1.0, gt=0)

    def __call__(self, r: ArrayLike) -> ArrayLike:
        return self.c * np.ones_like(np.asarray(r, dtype=float)) if np.ndim(r) else self.c

    @property
    def sup(self) -> float:
        return self.c


class RadialTabulatedWeight(BaseModel):
    """Positive radial weight sampled at increasing radii (θ-independent)."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["radial"] = "radial"
    r: tuple[float, ...]
    values: tuple[float, ...]
    _interpolant: PchipInterpolator = PrivateAttr()

    @model_validator(mode="after")
    def _check_samples(self) -> "RadialTabulatedWeight":
        if len(self.r) < 2 or len(self.r) != len(self.values):
            raise ValueError("at least two (r, value) samples of equal length are required")
        if np.any(np.diff(self.r) <= 0):
            raise ValueError("sample radii must be strictly increasing")
        if not all(math.isfinite(v) and v > 0 for v in self.values):
            raise ValueError("weight samples must be finite and positive")
        return self

    def model_post_init(self, __context) -> None:
        self._interpolant = PchipInterpolator(np.asarray(self.r), np.asarray(self.values), extrapolate=False)

    def __call__(self, r: ArrayLike) -> ArrayLike:
        clipped = np.clip(np.asarray(r, dtype=float), self.r[0], self.r[-1])
        return _output(r, self._interpolant(clipped))

    @property
    def sup(self) -> float:
        return max(self.values)


WeightSpec = Annotated[Union[ConstantWeight, RadialTabulatedWeight], Field(discriminator="kind")]


class Nonlinearity(Protocol):
    def f(self, r: ArrayLike, s: ArrayLike) -> ArrayLike: ...

    def F(self, r: ArrayLike, s: ArrayLike) -> ArrayLike: ...  # noqa: N802

    def dfds(self, r: ArrayLike, s: ArrayLike) -> ArrayLike: ...


def _finite(values: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise SaturationError(detail=f"{what} overflowed the floating range")
    return values


def _broadcast(r: ArrayLike, s: ArrayLike) -> tuple[np.ndarray, np.ndarray, bool]:
    """Radii and arguments broadcast together, plus whether the caller passed arrays."""
    shape = np.broadcast_shapes(np.shape(r), np.shape(s))
    radii = np.broadcast_to(np.asarray(r, dtype=float), shape)
    values = np.broadcast_to(np.asarray(s, dtype=float), shape)
    return radii, values, bool(shape)


def _shaped(values: np.ndarray, is_array: bool) -> ArrayLike:
    return values if is_array else float(values)


class ExponentialNonlinearity(BaseModel):
    model_config = ConfigDict(frozen=True)

    family: Literal["exponential"] = "exponential"
    beta: float = Field(gt=0, lt=2)
    m: int = Field(ge=1)
    weight: WeightSpec = ConstantWeight()

    @model_validator(mode="after")
    def _check_growth(self) -> "ExponentialNonlinearity":
        if self.beta * (self.m + 1) <= 2:
            raise ValueError(f"beta*(m+1) > 2 required, got {self.beta * (self.m + 1)}")
        return self

    @property
    def sigma(self) -> float:
        return self.beta * (self.m + 1)

    @property
    def delta_max(self) -> float:
        return self.sigma - 1.0

    @property
    def mu(self) -> float:
        return self.sigma - 1.0

    @property
    def growth(self) -> float:
        """The exponent compared against ``2 + 2N/H``."""
        return self.sigma

    def sample_max(self) -> float:
        return (settings.conebreak_saturation_exponent - SAMPLE_MARGIN) ** (1.0 / self.beta)

    def _exponent(self, a: np.ndarray) -> np.ndarray:
        t = a**self.beta
        if t.size and float(np.max(t)) > settings.conebreak_saturation_exponent:
            raise SaturationError(
                detail=f"|s|^beta={float(np.max(t)):.6g} exceeds the exponent range",
                limit=settings.conebreak_saturation_exponent,
            )
        return t

    def f(self, r: ArrayLike, s: ArrayLike) -> ArrayLike:
        radii, values, is_array = _broadcast(r, s)
        a = np.abs(values)
        t = self._exponent(a)
        out = np.zeros(a.shape)
        pos = a > 0
        out[pos] = a[pos] ** (self.beta - 1.0) * np.asarray(exp_m(self.m, t[pos]))
        out = np.sign(values) * self.weight(radii) * out
        return _shaped(_finite(out, "f"), is_array)

    def F(self, r: ArrayLike, s: ArrayLike) -> ArrayLike:  # noqa: N802
        radii, values, is_array = _broadcast(r, s)
        t = self._exponent(np.abs(values))
        out = self.weight(radii) / self.beta * np.asarray(exp_m(self.m + 1, t))
        return _shaped(_finite(out, "F"), is_array)

    def dfds(self, r: ArrayLike, s: ArrayLike) -> ArrayLike:
        radii, values, is_array = _broadcast(r, s)
        a = np.abs(values)
        t = self._exponent(a)
        out = np.zeros(a.shape)
        pos = a > 0
        ap, tp = a[pos], t[pos]
        out[pos] = (self.beta - 1.0) * ap ** (self.beta - 2.0) * np.asarray(exp_m(self.m, tp))
        out[pos] += self.beta * ap ** (2.0 * self.beta - 2.0) * np.asarray(exp_m(self.m - 1, tp))
        out = self.weight(radii) * out
        return _shaped(_finite(out, "dfds"), is_array)


class PowerNonlinearity(BaseModel):
    model_config = ConfigDict(frozen=True)

    family: Literal["power"] = "power"
    p: float = Field(gt=2)
    pfrak: float
    weight: WeightSpec = ConstantWeight()

    @model_validator(mode="before")
    @classmethod
    def _default_pfrak(cls, data):
        if isinstance(data, dict) and data.get("pfrak") is None:
            data = {**data, "pfrak": data.get("p")}
        return data

    @field_validator("pfrak")
    @classmethod
    def _finite_pfrak(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("pfrak must be finite")
        return value

    @model_validator(mode="after")
    def _check_exponents(self) -> "PowerNonlinearity":
        if self.pfrak < self.p:
            raise ValueError(f"2 < p <= pfrak required, got p={self.p} pfrak={self.pfrak}")
        return self

    @property
    def sigma(self) -> float:
        return self.p

    @property
    def delta_max(self) -> float:
        return self.p - 1.0

    @property
    def mu(self) -> float:
        return self.p - 1.0

    @property
    def growth(self) -> float:
        return self.p

    def sample_max(self) -> float:
        return settings.conebreak_power_sample_max

    def f(self, r: ArrayLike, s: ArrayLike) -> ArrayLike:
        radii, values, is_array = _broadcast(r, s)
        a = np.abs(values)
        out = np.sign(values) * self.weight(radii) * (a ** (self.p - 1) + a ** (self.pfrak - 1))
        return _shaped(_finite(out, "f"), is_array)

    def F(self, r: ArrayLike, s: ArrayLike) -> ArrayLike:  # noqa: N802
        radii, values, is_array = _broadcast(r, s)
        a = np.abs(values)
        out = self.weight(radii) * (a**self.p / self.p + a**self.pfrak / self.pfrak)
        return _shaped(_finite(out, "F"), is_array)

    def dfds(self, r: ArrayLike, s: ArrayLike) -> ArrayLike:
        radii, values, is_array = _broadcast(r, s)
        a = np.abs(values)
        out = self.weight(radii) * ((self.p - 1) * a ** (self.p - 2) + (self.pfrak - 1) * a ** (self.pfrak - 2))
        return _shaped(_finite(out, "dfds"), is_array)


class ZeroNonlinearity(BaseModel):
    """``f ≡ 0``: the linear problem, which has no positive solution."""

    model_config = ConfigDict(frozen=True)

    family: Literal["zero"] = "zero"

    def f(self, r: ArrayLike, s: ArrayLike) -> ArrayLike:
        _, values, is_array = _broadcast(r, s)
        return _shaped(np.zeros(values.shape), is_array)

    def F(self, r: ArrayLike, s: ArrayLike) -> ArrayLike:  # noqa: N802
        return self.f(r, s)

    def dfds(self, r: ArrayLike, s: ArrayLike) -> ArrayLike:
        return self.f(r, s)


NonlinearitySpec = Annotated[
    Union[ExponentialNonlinearity, PowerNonlinearity, ZeroNonlinearity],
    Field(discriminator="family"),
]


def eval_f(spec: Nonlinearity, r: ArrayLike, s: ArrayLike) -> ArrayLike:
    return spec.f(r, s)


def eval_F(spec: Nonlinearity, r: ArrayLike, s: ArrayLike) -> ArrayLike:  # noqa: N802
    return spec.F(r, s)


def eval_dfds(spec: Nonlinearity, r: ArrayLike, s: ArrayLike) -> ArrayLike:
    return spec.dfds(r, s)


def _require_family(spec) -> None:
    if isinstance(spec, ZeroNonlinearity) or not hasattr(spec, "sigma"):
        raise DomainError(detail=f"no growth constants for the <{getattr(spec, 'family', spec)}> family")


class AssumptionReport(BaseModel):
    family: str
    sigma: float = Field(gt=2)
    delta_max: float = Field(gt=1)
    mu: float
    sample_count: int
    s_min: float
    s_max: float
    sampled_sigma_inf: float
    sampled_delta_inf: float
    sampled_violations: list[tuple[float, float]] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.sampled_violations


def assumption_report(
    spec: Nonlinearity,
    annulus: AnnulusSpec,
    sample_count: int = 10_000,
    s_max: Optional[float] = None,
    s_min: float = 1e-6,
) -> AssumptionReport:
    """Sample the Ambrosetti–Rabinowitz bound ``s f ≥ σ F`` and ``s ∂_s f ≥ δ f``."""
    _require_family(spec)
    if sample_count < 100:
        raise DomainError(detail=f"sample_count must be >= 100, got {sample_count}", sample_count=sample_count)
    s_max = spec.sample_max() if s_max is None else s_max
    slack = settings.conebreak_assumption_slack
    s = np.geomspace(s_min, s_max, sample_count)
    r = 0.5 * (annulus.R0 + annulus.R1)

    f = np.asarray(spec.f(r, s))
    big_f = np.asarray(spec.F(r, s))
    df = np.asarray(spec.dfds(r, s))
    sf, sdf = s * f, s * df
    # F and f underflow to zero for tiny s
    valid = (big_f > 0) & (f > 0)
    s, f, big_f, sf, sdf = s[valid], f[valid], big_f[valid], sf[valid], sdf[valid]
    ar_ratio = sf / big_f
    delta_ratio = sdf / f

    violations = []
    ar_bad = sf - spec.sigma * big_f < -slack * np.abs(sf)
    violations.extend(zip(s[ar_bad].tolist(), ar_ratio[ar_bad].tolist()))
    delta_bad = sdf - spec.delta_max * f < -slack * np.abs(sdf)
    violations.extend(zip(s[delta_bad].tolist(), delta_ratio[delta_bad].tolist()))

    return AssumptionReport(
        family=spec.family,
        sigma=spec.sigma,
        delta_max=spec.delta_max,
        mu=spec.mu,
        sample_count=sample_count,
        s_min=s_min,
        s_max=s_max,
        sampled_sigma_inf=float(np.min(ar_ratio)),
        sampled_delta_inf=float(np.min(delta_ratio)),
        sampled_violations=violations,
    )


class ThresholdVerdict(BaseModel):
    H: float
    required: float
    actual: float
    strict: bool
    satisfied: bool
    beta_interval: Optional[tuple[float, float]] = None
    min_m: Optional[int] = None
    note: str = ""


def threshold_check(spec: Nonlinearity, annulus: AnnulusSpec) -> ThresholdVerdict:
    """Compare the growth exponent against ``2 + 2N/H``.

    The inequality is strict when ``λ = 0`` and non-strict when ``λ > 0``.
    """
    from .stability import hardy_constant

    _require_family(spec)
    h = hardy_constant(annulus)
    required = 2.0 + 2.0 * annulus.N / h
    actual = spec.growth
    strict = annulus.lam == 0
    satisfied = actual > required if strict else actual >= required

    beta_interval = None
    min_m = None
    note = ""
    if isinstance(spec, ExponentialNonlinearity):
        # β < 2 caps the attainable growth at 2(m+1)
        min_m = math.floor(required / 2.0 - 1.0) + 1
        low = required / (spec.m + 1)
        if low < 2.0:
            beta_interval = (low, 2.0)
        if not satisfied and beta_interval is not None:
            note = f"beta must lie in ({low:.6g}, 2) for m={spec.m}"
        elif not satisfied:
            note = f"unattainable for m={spec.m}; some beta < 2 works only with m >= {min_m}"
    elif not satisfied:
        note = f"p must {'exceed' if strict else 'reach'} {required:.6g}"
    return ThresholdVerdict(
        H=h,
        required=required,
        actual=actual,
        strict=strict,
        satisfied=satisfied,
        beta_interval=beta_interval,
        min_m=min_m,
        note=note,
    )
