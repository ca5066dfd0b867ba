from enum import Enum


class LogEvent(str, Enum):
    SHOOTING_SWEEP = "shooting_sweep"
    BRACKET_FOUND = "bracket_found"
    NEWTON_STEP = "newton_step"
    NEWTON_CONVERGED = "newton_converged"
    BISECTION = "bisection"
    GEOMETRY_CHECK = "geometry_check"
    PATH_UPDATE = "path_update"
    LINE_SEARCH = "line_search"
    MOUNTAIN_PASS_STALLED = "mountain_pass_stalled"
    MOUNTAIN_PASS_DONE = "mountain_pass_done"
    PROJECTION_CAPPED = "projection_capped"


class SolverBase:
    def log(self, *, event: LogEvent, **kwargs) -> None:
        """
        Allow to customize logs inside the solver flow.
        :param event: Where is the log "printed"
        :param kwargs: Data to be or not to be logged
        """
        ...
