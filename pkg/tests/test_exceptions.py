import json
import math

import numpy as np
import pytest

from conebreak.cli.writers import format_value, plain, write_csv, write_error
from conebreak.exceptions import (
    BoundaryViolationError,
    ConebreakException,
    ConfigError,
    DimensionMismatchError,
    DomainError,
    GeometryViolatedError,
    InvariantViolationError,
    IterationCapError,
    LuxemburgBracketError,
    NewtonDivergedError,
    NoBracketError,
    NoSignChangeError,
    RangeError,
    SaturationError,
    SolverError,
    StagnationError,
)
from conebreak.stability import StabilityVerdict


class CustomError(ConebreakException):
    detail = "Custom error"


class TestException:
    def test_default_detail(self):
        exc = CustomError()

        assert str(exc) == "Custom error"
        assert exc.exit_code == 1
        assert exc.context == {}
        assert repr(exc) == "CustomError(detail='Custom error', exit_code=1)"

    def test_json(self):
        exc = NoBracketError(sweep=[{"slope": 1.0, "phi": np.float64(2.0)}], slopes=np.array([1.0, 2.0]))

        data = exc.json()

        assert data["error"] == "NoBracketError"
        assert data["exit_code"] == 3
        assert data["context"]["sweep"] == [{"slope": 1.0, "phi": 2.0}]
        assert data["context"]["slopes"] == [1.0, 2.0]
        json.dumps(data)

    @pytest.mark.parametrize(
        "exc_class, code",
        [
            (ConfigError, 2),
            (DomainError, 2),
            (DimensionMismatchError, 2),
            (BoundaryViolationError, 2),
            (RangeError, 2),
            (SaturationError, 3),
            (NoBracketError, 3),
            (NewtonDivergedError, 3),
            (NoSignChangeError, 3),
            (GeometryViolatedError, 3),
            (LuxemburgBracketError, 3),
            (IterationCapError, 3),
            (StagnationError, 3),
            (InvariantViolationError, 4),
        ],
    )
    def test_exit_codes(self, exc_class, code):
        assert exc_class.exit_code == code

    def test_solver_failures_share_a_base(self):
        for exc_class in (SaturationError, NoBracketError, NewtonDivergedError, IterationCapError):
            assert issubclass(exc_class, SolverError)

    def test_argument_errors_are_value_errors(self):
        with pytest.raises(ValueError):
            raise DomainError(detail="outside", N=2)

    def test_config_error_shows_its_cause(self):
        try:
            try:
                raise OSError("no such file")
            except OSError as cause:
                raise ConfigError(detail="Cannot read run.toml") from cause
        except ConfigError as exc:
            assert str(exc) == "Cannot read run.toml: no such file"
            assert exc.json()["detail"] == "Cannot read run.toml: no such file"

    def test_stagnation_is_an_iteration_cap(self):
        exc = StagnationError(result="last iterate", grad_norm=1e-3)

        assert isinstance(exc, IterationCapError)
        assert exc.result == "last iterate"
        assert exc.json()["error"] == "StagnationError"

    def test_iteration_cap_carries_result(self):
        exc = IterationCapError(result="best so far", iterations=10)

        assert exc.result == "best so far"
        assert exc.context == {"iterations": 10}
        assert "result" not in exc.json()["context"]


class TestWriters:
    def test_format_value(self):
        assert format_value(None) == ""
        assert format_value(True) == "true"
        assert format_value(np.bool_(False)) == "false"
        assert format_value(0.1) == "1.0000000000000001e-01"
        assert float(format_value(math.pi)) == math.pi
        assert format_value(StabilityVerdict.BREAKING) == StabilityVerdict.BREAKING.value
        assert format_value(7) == "7"

    def test_plain(self):
        data = plain({"a": np.array([1.0, math.inf]), "b": np.int64(3), "c": (np.float32(0.5), math.nan)})

        assert data == {"a": [1.0, None], "b": 3, "c": [0.5, None]}

    def test_write_csv_creates_directories(self, tmp_path):
        path = write_csv(tmp_path / "nested" / "rows.csv", ("x", "y"), [(1.0, None)])

        assert path.read_text().splitlines() == ["x,y", "1.0000000000000000e+00,"]

    def test_write_error(self, tmp_path):
        write_error(tmp_path, RangeError(detail="tau out of range", tau=0.3))

        data = json.loads((tmp_path / "error.json").read_text())
        assert data == {"error": "RangeError", "detail": "tau out of range", "exit_code": 2, "context": {"tau": 0.3}}
