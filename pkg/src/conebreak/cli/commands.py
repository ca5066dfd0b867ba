import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

import numpy as np

from ..conevar import MountainPassResult, MountainPassSolver, breaking_path_test, discrete_energy
from ..conevar.projection import ConeProjector
from ..core import LogEvent
from ..exceptions import ConebreakException, ConfigError, InvariantViolationError, IterationCapError
from ..geometry import Grid2D, build_grid, build_grid_on
from ..nonlinearity import threshold_check
from ..orlicz import LuxemburgNorm, probe_ladder
from ..radial import RadialProfile, RadialSolver, hardy_ratio, lift_profile, radial_identity_residual
from ..stability import hardy_constant, symmetry_breaking_report
from .schemas import RunConfig
from .writers import write_csv, write_error, write_json, write_manifest

logger = logging.getLogger("conebreak")

DEBUG_EVENTS = frozenset(
    {LogEvent.SHOOTING_SWEEP, LogEvent.NEWTON_STEP, LogEvent.BISECTION, LogEvent.LINE_SEARCH, LogEvent.PATH_UPDATE}
)
IDENTITY_TOL = 1e-6
HARDY_SLACK = 1e-8

Summary = dict[str, Any]


class LoggingHooks:
    def log(self, *, event: LogEvent, **kwargs) -> None:
        level = logging.DEBUG if event in DEBUG_EVENTS else logging.INFO
        logger.log(level, "%s %s", event.value, kwargs, extra={"event": event.value, "data": kwargs})


class LoggedRadialSolver(LoggingHooks, RadialSolver):
    pass


class LoggedLuxemburgNorm(LoggingHooks, LuxemburgNorm):
    pass


class LoggedConeProjector(LoggingHooks, ConeProjector):
    pass


class LoggedMountainPassSolver(LoggingHooks, MountainPassSolver):
    luxemburg_class = LoggedLuxemburgNorm
    projector_class = LoggedConeProjector


def _write_csv(config: RunConfig, path: Path, header: Sequence[str], rows) -> None:
    if "csv" in config.output.formats:
        write_csv(path, header, rows)


def _write_json(config: RunConfig, path: Path, data: Any) -> None:
    if "json" in config.output.formats:
        write_json(path, data)


def _grid(config: RunConfig) -> Grid2D:
    return build_grid(config.annulus, config.grid.nr, config.grid.ntheta, config.grid.rule, config.grid.order)


def _radial_profile(config: RunConfig) -> RadialProfile:
    solver = LoggedRadialSolver(config.annulus, config.nonlinearity, config.radial_options())
    return solver.solve(config.grid.n_nodes)


def cmd_radial(config: RunConfig, out_dir: Path) -> Summary:
    write_manifest(out_dir, "radial", config)
    annulus, nonlin = config.annulus, config.nonlinearity
    profile = _radial_profile(config)
    h = hardy_constant(annulus)
    ratio = hardy_ratio(profile, annulus)
    identity = radial_identity_residual(profile, nonlin, annulus)

    _write_csv(config, out_dir / "profile.csv", ("r", "u", "du"), zip(profile.r_nodes, profile.u, profile.du))
    summary = {
        "energy": profile.energy,
        "residual_inf": profile.residual_inf,
        "relative_residual": profile.relative_residual,
        "identity_residual": identity,
        "hardy_ratio": ratio,
        "H": h,
        "slope": profile.slope,
        "iterations": profile.iterations,
        "n_nodes": profile.r_nodes.size,
    }
    report = dict(summary)
    if annulus.truncated:
        report["note"] = f"outer radius R1={annulus.R1} truncates an exterior domain"
    _write_json(config, out_dir / "radial.json", report)

    if identity > IDENTITY_TOL:
        raise InvariantViolationError(
            detail=f"integrated identity residual {identity:.3e}", identity_residual=identity
        )
    if ratio < h - HARDY_SLACK * max(1.0, h):
        raise InvariantViolationError(detail=f"hardy ratio {ratio:.12g} below H = {h:.12g}", hardy_ratio=ratio)
    return summary


def cmd_stability(config: RunConfig, out_dir: Path) -> Summary:
    write_manifest(out_dir, "stability", config)
    annulus, nonlin = config.annulus, config.nonlinearity
    profile = _radial_profile(config)
    grid = build_grid_on(annulus, profile.line, config.grid.ntheta, config.grid.rule, profile.line.order)
    report = symmetry_breaking_report(annulus, nonlin, profile, grid)
    threshold = threshold_check(nonlin, annulus)
    paths = [breaking_path_test(profile, tau, grid, nonlin, annulus) for tau in config.solver.taus]

    _write_csv(
        config,
        out_dir / "path.csv",
        ("tau", "t_star", "level_perturbed", "level_radial", "margin", "margin_over_tau2"),
        (
            (p.tau, p.t_star, p.level_perturbed, p.level_radial, p.margin, p.margin / p.tau**2 if p.tau else math.nan)
            for p in paths
        ),
    )
    _write_json(
        config,
        out_dir / "stability.json",
        {
            **report.model_dump(mode="json"),
            "threshold": threshold.model_dump(mode="json"),
            "radial_energy": profile.energy,
            "path": [p.model_dump(mode="json") for p in paths],
        },
    )
    summary = {
        "D": report.D,
        "second_variation": report.second_variation,
        "cross_check": report.cross_check,
        "delta_required": report.delta_required,
        "threshold_met": report.threshold_met,
        "verdict": report.verdict,
    }
    if len(paths) == 1:
        summary["margin"] = paths[0].margin
    return summary


def _write_mountain_pass(config: RunConfig, out_dir: Path, grid: Grid2D, result: MountainPassResult, radial_energy):
    r, theta = np.meshgrid(grid.r_nodes, grid.theta_nodes, indexing="ij")
    values = result.u.values
    _write_csv(config, out_dir / "field.csv", ("r", "theta", "u"), zip(r.ravel(), theta.ravel(), values.ravel()))
    _write_csv(config, out_dir / "path_log.csv", ("iteration", "energy"), result.path_log)
    _write_csv(config, out_dir / "path.csv", ("t", "energy"), zip(result.path_t, result.path_energy))
    gap = radial_energy - result.energy if radial_energy is not None else None
    _write_json(
        config,
        out_dir / "mountain_pass.json",
        {
            "candidate_level": result.energy,
            "grad_norm": result.grad_norm,
            "free_residual": result.free_residual,
            "inactive_residual": result.inactive_residual,
            "active_count": result.active_count,
            "iterations": result.iterations,
            "converged": result.converged,
            "stalled": result.stalled,
            "is_radial": result.is_radial,
            "geometry_inf": result.geometry_inf,
            "seed_kind": result.seed_kind,
            "h1_norm": result.h1_norm,
            "luxemburg_norm": result.luxemburg_norm,
            "radial_energy": radial_energy,
            "gap": gap,
        },
    )
    return gap


def cmd_mp2d(config: RunConfig, out_dir: Path) -> Summary:
    write_manifest(out_dir, "mp2d", config)
    annulus, nonlin = config.annulus, config.nonlinearity
    grid = _grid(config)
    solver = LoggedMountainPassSolver(grid, nonlin, annulus, config.mountain_pass_options())
    profile = solver.radial_seed()
    radial_energy = None
    if profile is not None:
        radial_energy = discrete_energy(lift_profile(profile, grid), grid, nonlin, annulus)
    try:
        result = solver.run(profile)
    except IterationCapError as exc:
        _write_mountain_pass(config, out_dir, grid, exc.result, radial_energy)
        raise
    gap = _write_mountain_pass(config, out_dir, grid, result, radial_energy)
    return {
        "candidate_level": result.energy,
        "grad_norm": result.grad_norm,
        "free_residual": result.free_residual,
        "converged": result.converged,
        "is_radial": result.is_radial,
        "radial_energy": radial_energy,
        "gap": gap,
    }


def cmd_tmprobe(config: RunConfig, out_dir: Path) -> Summary:
    write_manifest(out_dir, "tmprobe", config)
    solver = config.solver
    summaries = probe_ladder(_grid(config), config.annulus, solver.alphas, solver.probe_samples, solver.seed)
    _write_csv(
        config,
        out_dir / "tmprobe.csv",
        ("alpha", "max_modulus", "mean_modulus", "saturated_count"),
        ((s.alpha, s.max_modulus, s.mean_modulus, s.saturated_count) for s in summaries),
    )
    _write_json(config, out_dir / "tmprobe.json", {"probes": [s.model_dump() for s in summaries]})
    top = summaries[-1]
    return {
        "alpha": top.alpha,
        "max_modulus": top.max_modulus,
        "saturated_count": sum(s.saturated_count for s in summaries),
    }


def as_conebreak_error(exc: Exception) -> ConebreakException:
    """Library errors pass through; anything else is reported as a violated invariant."""
    if isinstance(exc, ConebreakException):
        return exc
    logger.error("unexpected %s", exc.__class__.__name__, exc_info=exc)
    return InvariantViolationError(detail=f"unexpected {exc.__class__.__name__}: {exc}", cause=exc.__class__.__name__)


COMMANDS: dict[str, Callable[[RunConfig, Path], Summary]] = {
    "radial": cmd_radial,
    "stability": cmd_stability,
    "mp2d": cmd_mp2d,
    "tmprobe": cmd_tmprobe,
}


def _sweep_entry(config: RunConfig, index: int, value: Any, out_dir: Path) -> Summary:
    sweep = config.sweep
    entry_dir = out_dir / f"{index:03d}"
    row: Summary = {"index": index, "value": value, "status": "ok", "error": ""}
    try:
        row.update(COMMANDS[sweep.command](config.with_value(sweep.parameter, value), entry_dir))
    except Exception as exc:
        error = as_conebreak_error(exc)
        write_error(entry_dir, error)
        logger.warning("sweep entry %s failed: %s", index, error, extra={"event": "sweep_entry_failed"})
        row.update(status="error", error=error.__class__.__name__)
    return row


def cmd_sweep(config: RunConfig, out_dir: Path, jobs: int = 1) -> list[Summary]:
    """Run one command per value of a scalar parameter, one subdirectory each."""
    if config.sweep is None:
        raise ConfigError(detail="the sweep command needs a [sweep] section")
    write_manifest(out_dir, "sweep", config)
    values = config.sweep.values
    with ThreadPoolExecutor(max_workers=jobs) as executor:
        futures = [executor.submit(_sweep_entry, config, index, value, out_dir) for index, value in enumerate(values)]
        rows = [future.result() for future in futures]

    header: list[str] = []
    for row in rows:
        header.extend(key for key in row if key not in header)
    write_csv(out_dir / "index.csv", header, ([row.get(key, "") for key in header] for row in rows))
    return rows


def run_command(command: str, config: RunConfig, out_dir: Path, jobs: int = 1):
    if command == "sweep":
        return cmd_sweep(config, out_dir, jobs)
    return COMMANDS[command](config, out_dir)
