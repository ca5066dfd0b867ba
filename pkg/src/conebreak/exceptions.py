from typing import Any, Optional


class ConebreakException(Exception):
    detail: str = ""
    exit_code: int = 1

    def __init__(self, detail: Optional[str] = None, **context: Any):
        if detail is not None:
            self.detail = detail
        self.context: dict[str, Any] = context

    def __repr__(self) -> str:
        class_name = self.__class__.__name__
        return f"{class_name}(detail={self.detail!r}, exit_code={self.exit_code!r})"

    def __str__(self) -> str:
        return self.detail

    def json(self) -> dict[str, Any]:
        return {
            "error": self.__class__.__name__,
            "detail": str(self),
            "exit_code": self.exit_code,
            "context": {key: _jsonable(value) for key, value in self.context.items()},
        }


def _jsonable(value: Any) -> Any:
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "tolist"):
        return value.tolist()
    return repr(value)


class ConfigError(ConebreakException):
    detail = "Invalid configuration"
    exit_code = 2

    def __str__(self):
        if getattr(self, "__cause__", None):
            return f"{self.detail}: {self.__cause__}"
        return self.detail


class DomainError(ConebreakException, ValueError):
    detail = "Argument outside the operation domain"
    exit_code = 2


class DimensionMismatchError(ConebreakException, ValueError):
    detail = "Field dimensions do not match the grid"
    exit_code = 2


class BoundaryViolationError(ConebreakException, ValueError):
    detail = "Field does not vanish on the radial boundary"
    exit_code = 2


class RangeError(ConebreakException, ValueError):
    detail = "Parameter out of the admissible range"
    exit_code = 2


class SolverError(ConebreakException):
    detail = "Solver failure"
    exit_code = 3


class SaturationError(SolverError):
    detail = "Exponent exceeds the floating range (outside desk scale)"


class NoBracketError(SolverError):
    detail = "No sign change of the shooting function over the slope sweep"


class NewtonDivergedError(SolverError):
    detail = "Newton refinement did not converge"


class NoSignChangeError(SolverError):
    detail = "Fibering derivative stays positive over the whole sweep"


class GeometryViolatedError(SolverError):
    detail = "Mountain-pass geometry does not hold at this resolution"


class LuxemburgBracketError(SolverError):
    detail = "Modulus saturated for every probed k"


class IterationCapError(SolverError):
    detail = "Iteration cap reached before convergence"

    def __init__(self, detail: Optional[str] = None, result: Any = None, **context: Any):
        super().__init__(detail, **context)
        self.result = result


class StagnationError(IterationCapError):
    detail = "Accepted steps stopped moving the iterate"


class InvariantViolationError(ConebreakException):
    detail = "Internal invariant violated"
    exit_code = 4
