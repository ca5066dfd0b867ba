import copy
import hashlib
import json
import sys
from pathlib import Path
from typing import Any, Literal, Optional, Union

import pydantic
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from ..config import settings
from ..conevar import MountainPassOptions
from ..exceptions import ConfigError
from ..geometry import AnnulusSpec, QuadratureRule
from ..nonlinearity import NonlinearitySpec
from ..radial import RadialOptions

CommandName = Literal["radial", "stability", "mp2d", "tmprobe"]


class GridConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    nr: int = Field(default=128, ge=8)
    ntheta: int = Field(default=64, ge=8)
    n_nodes: int = Field(default=2001, ge=8)
    rule: QuadratureRule = QuadratureRule.LOBATTO
    order: Optional[int] = Field(default=None, ge=1)


class SolverConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    newton_tol: float = Field(default_factory=lambda: settings.conebreak_newton_tol, gt=0)
    newton_max_iter: int = Field(default_factory=lambda: settings.conebreak_newton_max_iter, ge=1)
    mp_tol: float = Field(default_factory=lambda: settings.conebreak_mp_tol, gt=0)
    mp_max_iter: int = Field(default_factory=lambda: settings.conebreak_mp_max_iter, ge=1)
    path_size: int = Field(default_factory=lambda: settings.conebreak_mp_path_size, ge=2)
    stall_patience: int = Field(default_factory=lambda: settings.conebreak_mp_stall_patience, ge=1)
    tau0: float = Field(default_factory=lambda: settings.conebreak_mp_tau0, ge=0)
    taus: list[float] = Field(default_factory=lambda: [0.02, 0.035, 0.05])
    alphas: list[float] = Field(default_factory=lambda: [0.1, 0.2, 0.4, 0.8, 1.6], min_length=1)
    probe_samples: int = Field(default=64, ge=10)
    luxemburg_tol: float = Field(default_factory=lambda: settings.conebreak_luxemburg_tol, gt=0, le=1e-3)
    seed: int = Field(default=0, ge=0, lt=2**64)
    strict: bool = False

    @field_validator("taus", "alphas", mode="before")
    @classmethod
    def _scalar_to_list(cls, value: Any) -> Any:
        if isinstance(value, (int, float)):
            return [value]
        return value


class OutputConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: str = "out"
    formats: list[Literal["csv", "json"]] = Field(default_factory=lambda: ["csv", "json"])


class SweepConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    parameter: str
    values: list[Union[int, float, str, bool]] = Field(min_length=1)
    command: CommandName = "stability"


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    annulus: AnnulusSpec
    nonlinearity: NonlinearitySpec
    grid: GridConfig = GridConfig()
    solver: SolverConfig = SolverConfig()
    output: OutputConfig = OutputConfig()
    sweep: Optional[SweepConfig] = None
    _source: dict = PrivateAttr(default_factory=dict)

    def config_hash(self) -> str:
        """sha256 of the canonical JSON form of the validated configuration."""
        canonical = json.dumps(self.model_dump(mode="json", by_alias=True), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def with_value(self, dotted: str, value: Any) -> "RunConfig":
        """A copy with one parameter replaced, re-validated from the source mapping."""
        data = copy.deepcopy(self._source)
        *parents, leaf = dotted.split(".")
        node = data
        for key in parents:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigError(detail=f"<{dotted}> does not name a scalar parameter")
        node[leaf] = value
        return parse_config(data)

    def radial_options(self) -> RadialOptions:
        return RadialOptions(
            tol=self.solver.newton_tol,
            max_iter=self.solver.newton_max_iter,
            rule=self.grid.rule,
            order=self.grid.order,
        )

    def mountain_pass_options(self) -> MountainPassOptions:
        return MountainPassOptions(
            tol=self.solver.mp_tol,
            max_iter=self.solver.mp_max_iter,
            path_size=self.solver.path_size,
            stall_patience=self.solver.stall_patience,
            tau0=self.solver.tau0,
            seed=self.solver.seed,
            strict=self.solver.strict,
        )


def _format_errors(exc: pydantic.ValidationError) -> list[str]:
    return [f"{'.'.join(str(part) for part in error['loc'])}: {error['msg']}" for error in exc.errors()]


def parse_config(data: dict) -> RunConfig:
    try:
        config = RunConfig.model_validate(data)
    except pydantic.ValidationError as exc:
        raise ConfigError(errors=_format_errors(exc)) from exc
    config._source = copy.deepcopy(data)
    return config


def load_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(detail=f"Cannot read {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(detail=f"Cannot parse {path}") from exc
    return parse_config(data)
