"""Exception types shared across the package."""


class BenchError(Exception):
    """Base class for all benchmark errors."""


class BoundsError(BenchError):
    """A continuous query fell outside the world bounds."""


class ConfigError(BenchError):
    """Invalid configuration or flag values."""


class GenerationError(BenchError):
    """World generation could not satisfy its constraints."""


class PlanningError(BenchError):
    """Global path planning failed."""


class SimulationFault(BenchError):
    """Non-finite state detected during simulation; carries the last valid state."""

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class ProtocolError(BenchError):
    """RL session protocol violation (e.g. step before reset)."""


class ReplayMismatch(BenchError):
    """Replayed trajectory diverged from the logged one."""

    def __init__(self, message, step_index, divergence):
        super().__init__(message)
        self.step_index = step_index
        self.divergence = divergence
