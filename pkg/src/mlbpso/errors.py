"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A scenario, surface, swarm or campaign setting is invalid."""


class InvalidInputError(ValueError):
    """A numeric argument violates an operation's preconditions."""


class SimulationError(RuntimeError):
    """The simulator produced a non-finite KPI."""
