"""ATRIUM: a process engine for refining preliminary architectures under
uncertainty — CFA analysis, assumption/clarification/task ledgers,
invalidation propagation, iteration gates, and change-managed selection."""

from .engine import Engine
from .state import ProjectState

__all__ = ["Engine", "ProjectState"]
__version__ = "0.1.0"
