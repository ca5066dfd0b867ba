import csv
import json
import math
import platform
from collections.abc import Iterable, Sequence
from enum import Enum
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any

import numpy as np

from ..exceptions import ConebreakException

MANIFEST_PACKAGES = ("conebreak", "numpy", "scipy", "pydantic", "pydantic-settings")


def format_value(value: Any) -> str:
    """17 significant digits for floats, so values survive a CSV round trip."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.16e}"
    if isinstance(value, Enum):
        return str(value.value)
    return str(value)


def plain(value: Any) -> Any:
    """JSON-safe form: numpy scalars unwrapped, non-finite floats as null."""
    if isinstance(value, dict):
        return {str(key): plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(item) for item in value]
    if isinstance(value, np.ndarray):
        return plain(value.tolist())
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(value) for value in row])
    return path


def write_json(path: Path, data: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as handle:
        json.dump(plain(data), handle, indent=2)
        handle.write("\n")
    return path


def write_error(out_dir: Path, exc: ConebreakException) -> Path:
    return write_json(out_dir / "error.json", exc.json())


def package_versions() -> dict[str, str]:
    versions = {"python": platform.python_version()}
    for name in MANIFEST_PACKAGES:
        try:
            versions[name] = version(name)
        except PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def write_manifest(out_dir: Path, command: str, config) -> Path:
    """Reproduction record of a run; it carries no timestamp."""
    return write_json(
        out_dir / "manifest.json",
        {
            "command": command,
            "config_hash": config.config_hash(),
            "seed": config.solver.seed,
            "versions": package_versions(),
            "config": config.model_dump(mode="json", by_alias=True),
        },
    )
