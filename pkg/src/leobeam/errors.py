"""Exception types shared across the package."""


class LeobeamError(Exception):
    """Base class for all package errors."""


class ConfigError(LeobeamError):
    """Invalid scenario or experiment configuration."""


class ConvergenceError(LeobeamError):
    """An iterative routine failed to reach its tolerance within its cap."""


class InfeasibleDesignError(LeobeamError):
    """A design problem is infeasible for the requested targets.

    ``family`` names the constraint family the infeasibility was traced to
    (e.g. "sinr", "outage", "per-feed-power").
    """

    def __init__(self, message, family="unknown"):
        super().__init__(message)
        self.family = family
