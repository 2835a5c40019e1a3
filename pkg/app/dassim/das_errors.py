"""
Error types raised by the simulator.

Every domain error renders to the ``{"code", "message", "details"}`` dictionary
used by the command layer to pick an exit status.
"""

from typing import Any, Dict, Optional


class InvalidArgumentError(ValueError):
    """Argument outside the domain of an operation."""


class SimulationError(Exception):
    code = "SIMULATION_ERROR"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {"code": self.code, "message": self.message, "details": self.details}


class ConfigError(SimulationError):
    code = "CONFIG_ERROR"


class ResourceBudgetError(SimulationError):
    code = "RESOURCE_BUDGET"


class PartialResultsError(ResourceBudgetError):
    """Campaign stopped early; ``stats`` holds what was completed."""

    code = "PARTIAL_RESULTS"

    def __init__(self, message: str, completed: int, total: int, stats: Any = None):
        super().__init__(message, {"completed_units": completed, "total_units": total})
        self.completed = completed
        self.total = total
        self.stats = stats


class PersistenceError(SimulationError):
    code = "IO_ERROR"
