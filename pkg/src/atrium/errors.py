"""Domain error hierarchy.

Every error carries a stable ``name`` (the class name) and, where useful,
the ids of the offending entities.  The CLI and the HTTP service render
these names verbatim.
"""

from __future__ import annotations


class AtriumError(Exception):
    """Base class for all domain errors."""

    def __init__(self, detail: str = "", offending_ids: list[str] | None = None):
        super().__init__(detail)
        self.detail = detail
        self.offending_ids = list(offending_ids or [])

    @property
    def name(self) -> str:
        return type(self).__name__

    def to_dict(self) -> dict:
        return {
            "error_name": self.name,
            "detail": self.detail,
            "offending_ids": self.offending_ids,
        }


class IterationAlreadyOpen(AtriumError):
    pass


class NoOpenIteration(AtriumError):
    pass


class EmptyScope(AtriumError):
    pass


class UnassignedDG(AtriumError):
    pass


class ZeroDaRuleViolation(AtriumError):
    pass


class InvalidAssumptionCited(AtriumError):
    pass


class CfaArchived(AtriumError):
    pass


class UnknownElement(AtriumError):
    pass


class UnknownSegment(AtriumError):
    pass


class UnknownCfa(AtriumError):
    pass


class UnknownAssumption(AtriumError):
    pass


class UnknownClarification(AtriumError):
    pass


class UnknownTask(AtriumError):
    pass


class UnknownSelection(AtriumError):
    pass


class UnknownDesignAlternative(AtriumError):
    pass


class UnknownReviewQueue(AtriumError):
    pass


class AlreadyRetired(AtriumError):
    pass


class ElementReferencedBySelection(AtriumError):
    pass


class AlreadyInvalid(AtriumError):
    pass


class AssumptionRequired(AtriumError):
    pass


class LinkedAssumptionInvalid(AtriumError):
    pass


class NotOpen(AtriumError):
    pass


class TaskNotOpen(AtriumError):
    pass


class MissingField(AtriumError):
    def __init__(self, field_name: str):
        super().__init__(f"missing mandatory field: {field_name}")
        self.field_name = field_name


class CoverageGap(AtriumError):
    pass


class MissingRejectionRationale(AtriumError):
    pass


class UnprocessedCfasExist(AtriumError):
    pass


class SelectionAlreadyMade(AtriumError):
    pass


class NoSelectionToRevise(AtriumError):
    pass


class GateFailed(AtriumError):
    """Iteration closure gate failure; reports every failing condition at once."""

    def __init__(self, open_clarifications: list[str], unprocessed_cfas: list[str],
                 selection_missing: bool):
        parts = []
        if open_clarifications:
            parts.append(f"open clarifications: {', '.join(open_clarifications)}")
        if unprocessed_cfas:
            parts.append(f"unprocessed CFAs: {', '.join(unprocessed_cfas)}")
        if selection_missing:
            parts.append("no selection made")
        super().__init__("; ".join(parts),
                         offending_ids=open_clarifications + unprocessed_cfas)
        self.open_clarifications = open_clarifications
        self.unprocessed_cfas = unprocessed_cfas
        self.selection_missing = selection_missing

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["open_clarifications"] = self.open_clarifications
        d["unprocessed_cfas"] = self.unprocessed_cfas
        d["selection_missing"] = self.selection_missing
        return d


class IterationNotClosed(AtriumError):
    pass


class ParseError(AtriumError):
    def __init__(self, file: str, line: int, detail: str = ""):
        super().__init__(f"{file}:{line}: {detail}")
        self.file = file
        self.line = line


class IntegrityError(AtriumError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class DuplicateElementName(AtriumError):
    pass


class ConfigInfeasible(AtriumError):
    pass


class ScriptActionRejected(AtriumError):
    def __init__(self, step: int, engine_error: AtriumError):
        super().__init__(f"script step {step} rejected: {engine_error.name}: {engine_error.detail}")
        self.step = step
        self.engine_error = engine_error


class StoreLocked(AtriumError):
    pass
