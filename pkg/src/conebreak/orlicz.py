"""Exponential Orlicz modulus, Luxemburg norm and a probe of the cone Trudinger–Moser bound."""

import math
from collections.abc import Sequence
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field

from .config import settings
from .core import LogEvent, SolverBase
from .exceptions import DomainError, InvariantViolationError, LuxemburgBracketError, SaturationError
from .geometry import AnnulusSpec, Field2D, Grid2D, h1_norm


class ModulusResult(BaseModel):
    alpha: float = Field(gt=0)
    value: float = Field(ge=0)
    saturated: bool = False


class LuxemburgResult(BaseModel):
    norm: float = Field(ge=0)
    bracket: tuple[float, float]
    modulus_at_norm: float


class ProbeSummary(BaseModel):
    alpha: float
    sample_count: int
    max_modulus: float
    mean_modulus: float
    saturated_count: int


def exponential_modulus(field: Field2D, grid: Grid2D, alpha: float) -> ModulusResult:
    """``∫ (e^{α u²} - 1) dx``; exponents past the floating range are clamped and flagged."""
    if alpha <= 0:
        raise DomainError(detail=f"alpha must be positive, got {alpha}", alpha=alpha)
    grid.check(field.values)
    weights = grid.quad_weights
    exponent = alpha * field.values**2
    limit = settings.conebreak_saturation_exponent
    saturated = bool(np.any((exponent > limit) & (weights > 0)))
    terms = weights * np.expm1(np.minimum(exponent, limit))
    return ModulusResult(alpha=alpha, value=max(math.fsum(terms.ravel()), 0.0), saturated=saturated)


def modulus(field: Field2D, grid: Grid2D, k: float) -> float:
    if k <= 0:
        raise DomainError(detail=f"k must be positive, got {k}", k=k)
    result = exponential_modulus(field, grid, 1.0 / k**2)
    if result.saturated:
        raise SaturationError(detail=f"modulus saturated at k={k:.6g}", k=k)
    return result.value


def modulus_ladder(field: Field2D, grid: Grid2D, alphas: Sequence[float]) -> list[ModulusResult]:
    """Moduli on an increasing alpha ladder, checked to be nondecreasing."""
    results = [exponential_modulus(field, grid, alpha) for alpha in sorted(alphas)]
    for low, high in zip(results, results[1:]):
        if high.value < low.value:
            raise InvariantViolationError(
                detail="modulus decreased along the alpha ladder", alpha_low=low.alpha, alpha_high=high.alpha
            )
    return results


class LuxemburgNorm(SolverBase):
    """Bisection on ``k`` for ``inf{k > 0 : ∫(e^{(u/k)²} - 1) ≤ 1}``."""

    def __init__(self, grid: Grid2D, tol: Optional[float] = None):
        tol = settings.conebreak_luxemburg_tol if tol is None else tol
        if not 0 < tol <= 1e-3:
            raise DomainError(detail=f"tol must lie in (0, 1e-3], got {tol}", tol=tol)
        self.grid = grid
        self.tol = tol

    def _exceeds_one(self, field: Field2D, k: float) -> bool:
        result = exponential_modulus(field, self.grid, 1.0 / k**2)
        return result.saturated or result.value > 1.0

    def __call__(self, field: Field2D) -> LuxemburgResult:
        self.grid.check(field.values)
        sup = float(np.max(np.abs(field.values)))
        if sup == 0:
            return LuxemburgResult(norm=0.0, bracket=(0.0, 0.0), modulus_at_norm=0.0)

        volume = float(np.sum(self.grid.quad_weights))
        # the constant field |u|_∞ has modulus exactly one here
        k_high = sup / math.sqrt(math.log1p(1.0 / volume))
        k_low = k_high / 2.0
        for _ in range(settings.conebreak_luxemburg_max_halvings):
            if self._exceeds_one(field, k_low):
                break
            k_high, k_low = k_low, k_low / 2.0
        else:
            raise LuxemburgBracketError(detail="modulus stays below one for every probed k", k=k_low)

        iterations = 0
        while k_high - k_low > self.tol * k_high:
            middle = 0.5 * (k_low + k_high)
            if self._exceeds_one(field, middle):
                k_low = middle
            else:
                k_high = middle
            iterations += 1
        self.log(event=LogEvent.BISECTION, bracket=(k_low, k_high), iterations=iterations)
        return LuxemburgResult(
            norm=k_high,
            bracket=(k_low, k_high),
            modulus_at_norm=exponential_modulus(field, self.grid, 1.0 / k_high**2).value,
        )


def luxemburg_norm(field: Field2D, grid: Grid2D, tol: Optional[float] = None) -> LuxemburgResult:
    return LuxemburgNorm(grid, tol)(field)


def v_norm(field: Field2D, grid: Grid2D, lam: Optional[float] = None) -> float:
    """``‖u‖_{H¹_λ} + ‖u‖_ℒ``, for reporting."""
    return h1_norm(field, grid, lam) + luxemburg_norm(field, grid).norm


def probe_fields(grid: Grid2D, sample_count: int, seed: int) -> list[Field2D]:
    """Random cone fields normalized to unit ``H¹(A)`` norm, one derived seed per sample."""
    from .conevar.projection import random_cone_field

    fields = []
    for child in np.random.SeedSequence(seed).spawn(sample_count):
        values = random_cone_field(grid, np.random.default_rng(child)).values
        norm = h1_norm(Field2D(values), grid, lam=1.0)
        fields.append(Field2D(values / norm if norm > 0 else values))
    return fields


def _summarize(alpha: float, results: list[ModulusResult]) -> ProbeSummary:
    values = [result.value for result in results]
    return ProbeSummary(
        alpha=alpha,
        sample_count=len(results),
        max_modulus=max(values),
        mean_modulus=math.fsum(values) / len(values),
        saturated_count=sum(result.saturated for result in results),
    )


def tm_probe(grid: Grid2D, annulus: AnnulusSpec, alpha: float, sample_count: int, seed: int) -> ProbeSummary:
    return probe_ladder(grid, annulus, [alpha], sample_count, seed)[0]


def probe_ladder(
    grid: Grid2D,
    annulus: AnnulusSpec,
    alphas: Sequence[float],
    sample_count: int,
    seed: int,
) -> list[ProbeSummary]:
    """``tm_probe`` over several exponents sharing the same samples."""
    if sample_count < 10:
        raise DomainError(detail=f"sample_count must be >= 10, got {sample_count}", sample_count=sample_count)
    if not alphas or min(alphas) <= 0:
        raise DomainError(detail="alphas must be positive", alphas=list(alphas))
    if grid.annulus != annulus:
        raise DomainError(detail="grid was built for another annulus")
    ladders = [modulus_ladder(field, grid, alphas) for field in probe_fields(grid, sample_count, seed)]
    return [_summarize(alpha, [ladder[i] for ladder in ladders]) for i, alpha in enumerate(sorted(alphas))]
