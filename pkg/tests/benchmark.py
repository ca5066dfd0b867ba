from functools import cache
from pathlib import Path
from typing import Any

from conebreak.geometry import AnnulusSpec, build_grid
from conebreak.nonlinearity import ExponentialNonlinearity, PowerNonlinearity
from conebreak.radial import RadialProfile, solve_radial

BENCHMARK_NODES = 2001


def benchmark_annulus(**overrides: Any) -> AnnulusSpec:
    data = {"N": 5, "lambda": 1.0, "R0": 2.0, "R1": 3.0}
    data.update(overrides)
    return AnnulusSpec.model_validate(data)


def benchmark_power(p: float = 4.0, pfrak: float = None) -> PowerNonlinearity:
    return PowerNonlinearity(p=p, pfrak=pfrak)


def exponential(beta: float = 1.5, m: int = 1) -> ExponentialNonlinearity:
    return ExponentialNonlinearity(beta=beta, m=m)


@cache
def benchmark_profile(p: float = 4.0, n_nodes: int = BENCHMARK_NODES) -> RadialProfile:
    return solve_radial(benchmark_annulus(), benchmark_power(p), n_nodes)


@cache
def small_grid(nr: int = 17, ntheta: int = 13):
    return build_grid(benchmark_annulus(), nr, ntheta)


BENCHMARK_TOML = """
[annulus]
N = 5
lambda = 1.0
R0 = 2.0
R1 = 3.0

[nonlinearity]
family = "power"
p = 4.0
pfrak = 4.0

[grid]
nr = 25
ntheta = 13
n_nodes = 401

[solver]
taus = [0.02, 0.035, 0.05]
alphas = [0.1, 0.2, 0.4]
probe_samples = 10
"""


def write_config(directory: Path, text: str = BENCHMARK_TOML, extra: str = "") -> Path:
    path = directory / "run.toml"
    path.write_text(text + extra)
    return path
