"""Exception types raised by the simulator."""


class ConfigError(ValueError):
    """Invalid parameter, boundary-condition set, or run configuration."""


class GridSizeError(ConfigError):
    """Grid too small for the requested stencil."""


class UnsupportedOrderError(ValueError):
    """Derivative multi-index of total order above four."""


class InsufficientDataError(ValueError):
    """Too few trajectory samples for a finite-difference audit."""


class DivergenceError(RuntimeError):
    """Non-finite state encountered during time stepping."""

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"non-finite state at step {step}")
