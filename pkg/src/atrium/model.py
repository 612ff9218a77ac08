"""Domain entities shared by every other module.

Entities are plain dataclasses treated as immutable values once read;
all mutation happens through the process engine.  Each entity carries an
``extra`` mapping so unknown fields found in store files survive a
load/save round trip.
"""

from __future__ import annotations

import dataclasses
import types
import typing
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from enum import Enum


# ---------------------------------------------------------------------------
# Enumerations


class ElementKind(str, Enum):
    HARDWARE = "hardware"
    SOFTWARE = "software"
    FUNCTIONAL = "functional"


class ElementState(str, Enum):
    LEGACY = "Legacy"
    NEW = "New"


class ElementSource(str, Enum):
    BASELINE = "baseline"
    ROADMAP = "roadmap"
    ATRIUM_ADDED = "atrium-added"


class FailureModeScope(str, Enum):
    PER_ELEMENT = "PerElement"
    PER_SEGMENT = "PerSegment"


class CfaState(str, Enum):
    PROCESSED = "Processed"
    UNPROCESSED = "Unprocessed"


class DaStatus(str, Enum):
    CANDIDATE = "Candidate"
    SELECTED = "Selected"
    REJECTED = "Rejected"


class Validity(str, Enum):
    VALID = "Valid"
    INVALID = "Invalid"


class ClarificationStatus(str, Enum):
    OPEN = "Open"
    RESOLVED = "Resolved"
    CONVERTED_TO_TASK = "ConvertedToTask"


class TaskStatus(str, Enum):
    OPEN = "Open"
    COMPLETE = "Complete"


class LinkKind(str, Enum):
    ASSUMPTION_TO_CFA = "AssumptionToCfa"
    CFA_TO_DA = "CfaToDa"
    DA_TO_SELECTION = "DaToSelection"
    CLARIFICATION_TO_ASSUMPTION = "ClarificationToAssumption"
    TASK_TO_ASSUMPTION = "TaskToAssumption"


class Composition(str, Enum):
    TIME_BASED = "TimeBased"
    STATE_BASED = "StateBased"


class IterationStatus(str, Enum):
    OPEN = "Open"
    CLOSED = "Closed"


class Disposition(str, Enum):
    PENDING_REVIEW = "PendingReview"
    KEEP_PROCESSED = "KeepProcessed"
    MARK_UNPROCESSED = "MarkUnprocessed"


# Fixed uncertainty-source taxonomy used as optional assumption category tags.
ASSUMPTION_CATEGORIES = (
    "dynamic-constraints",
    "functional-allocation",
    "technology-immaturity",
    "variability-mapping",
    "inconsistency-in-metrics",
    "pattern-based-design",
    "strategic-relationships",
    "dependencies-on-suppliers",
    "roadmap-related",
    "rationale-management",
    "distributed-expertise",
    "failure-modes-management",
    "insufficient-change-management",
    "lack-of-details-in-requirements",
    "element-change-management",
    "incomplete-definitions",
)


# Expected id prefix per link endpoint, by link kind: (from-prefix, to-prefix).
LINK_ENDPOINT_PREFIXES: dict[LinkKind, tuple[str, str]] = {
    LinkKind.ASSUMPTION_TO_CFA: ("A-", "CFA-"),
    LinkKind.CFA_TO_DA: ("CFA-", "DA-"),
    LinkKind.DA_TO_SELECTION: ("DA-", "S-"),
    LinkKind.CLARIFICATION_TO_ASSUMPTION: ("C-", "A-"),
    LinkKind.TASK_TO_ASSUMPTION: ("T-", "A-"),
}


# ---------------------------------------------------------------------------
# Entities


@dataclass
class VariantSpec:
    variant_name: str
    qualification_notes: str = ""
    meets_lower_limit: bool | None = None


@dataclass
class Element:
    id: str
    name: str
    kind: ElementKind
    state: ElementState
    segment: str | None = None
    variants: list[VariantSpec] = field(default_factory=list)
    retired: bool = False
    source: ElementSource = ElementSource.BASELINE
    extra: dict = field(default_factory=dict)


@dataclass
class Segment:
    id: str
    name: str
    parent: str | None = None
    member_elements: set[str] = field(default_factory=set)
    extra: dict = field(default_factory=dict)


@dataclass
class FailureMode:
    id: str
    name: str
    description: str = ""
    scope: FailureModeScope = FailureModeScope.PER_ELEMENT
    extra: dict = field(default_factory=dict)


@dataclass
class AnalysisRecord:
    functional_effect: str
    baseline_fulfills_dg: bool
    design_alternatives: set[str] = field(default_factory=set)
    cited_assumptions: set[str] = field(default_factory=set)
    analyst: str = ""
    analyzed_at: datetime | None = None


@dataclass
class Cfa:
    id: str
    target: str  # element id or segment id
    failure_mode: str
    design_goal: str
    state: CfaState = CfaState.UNPROCESSED
    analysis: AnalysisRecord | None = None
    archived: bool = False
    flagged_for_review: bool = False
    extra: dict = field(default_factory=dict)


@dataclass
class SubDesignGoal:
    id: str
    description: str
    activation_condition: str = ""
    children: list["SubDesignGoal"] = field(default_factory=list)


@dataclass
class DesignGoal:
    id: str
    description: str
    sub_goals: list[SubDesignGoal] = field(default_factory=list)
    composition: Composition | None = None
    composition_notes: str = ""
    fsr_reference: str | None = None
    extra: dict = field(default_factory=dict)


@dataclass
class DesignAlternative:
    id: str
    description: str
    satisfies_cfas: set[str] = field(default_factory=set)
    status: DaStatus = DaStatus.CANDIDATE
    rejection_rationale: str | None = None
    flagged_for_review: bool = False
    extra: dict = field(default_factory=dict)


@dataclass
class Assumption:
    id: str
    text: str
    validity: Validity = Validity.VALID
    category: str | None = None
    created_in_iteration: int = 0
    superseded_by: str | None = None
    linked_cfas: set[str] = field(default_factory=set)
    extra: dict = field(default_factory=dict)


@dataclass
class Clarification:
    id: str
    question: str
    linked_assumption: str = ""
    status: ClarificationStatus = ClarificationStatus.OPEN
    resolution_notes: str | None = None
    resolved_by: str | None = None
    extra: dict = field(default_factory=dict)


@dataclass
class Task:
    id: str
    origin_clarification: str
    linked_assumption: str
    expert: str
    responsible_architect: str
    due_date: date | None = None
    status: TaskStatus = TaskStatus.OPEN
    outcome_notes: str | None = None
    extra: dict = field(default_factory=dict)


@dataclass
class Risk:
    id: str
    source_task: str
    iteration: int
    description: str
    extra: dict = field(default_factory=dict)


@dataclass
class Selection:
    id: str
    iteration: int
    chosen_das: set[str] = field(default_factory=set)
    rationale: str = ""
    method_note: str = ""
    superseded_by: str | None = None
    extra: dict = field(default_factory=dict)


@dataclass
class Link:
    id: str
    kind: LinkKind
    from_id: str
    to_id: str
    extra: dict = field(default_factory=dict)


@dataclass
class IterationRecord:
    number: int
    status: IterationStatus = IterationStatus.OPEN
    opened_at: datetime | None = None
    closed_at: datetime | None = None
    deliverables: dict | None = None
    in_scope_elements: set[str] = field(default_factory=set)
    active_failure_modes: list[str] = field(default_factory=list)
    default_dg: str | None = None
    inputs: dict | None = None
    extra: dict = field(default_factory=dict)


@dataclass
class ClassificationParameter:
    parameter_id: str
    name: str
    value: str


@dataclass
class FunctionClassification:
    parameters: list[ClassificationParameter] = field(default_factory=list)


@dataclass
class ReviewQueue:
    id: str
    trigger_assumption: str
    candidate_cfas: list[str] = field(default_factory=list)
    disposition: dict[str, Disposition] = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Record (de)serialization — stable key order, enums as values, dates as ISO.


def _encode_value(value):
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, datetime):
        return value.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")
    if isinstance(value, date):
        return value.isoformat()
    if isinstance(value, set):
        return sorted(value)
    if isinstance(value, (list, tuple)):
        return [_encode_value(v) for v in value]
    if dataclasses.is_dataclass(value):
        return to_record(value)
    if isinstance(value, dict):
        return {k: _encode_value(v) for k, v in value.items()}
    return value


def to_record(entity) -> dict:
    """Serialize an entity to a JSON-safe dict in field declaration order."""
    record = {}
    extra = {}
    for f in dataclasses.fields(entity):
        value = getattr(entity, f.name)
        if f.name == "extra":
            extra = value or {}
            continue
        record[f.name] = _encode_value(value)
    for key in sorted(extra):
        if key not in record:
            record[key] = extra[key]
    return record


def _decode_value(value, hint):
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if origin is typing.Union or origin is types.UnionType:
        non_none = [a for a in args if a is not type(None)]
        if value is None:
            return None
        return _decode_value(value, non_none[0])
    if isinstance(hint, type) and issubclass(hint, Enum):
        return hint(value)
    if hint is datetime:
        return datetime.fromisoformat(str(value).replace("Z", "+00:00"))
    if hint is date:
        return date.fromisoformat(value)
    if origin is set:
        return set(value)
    if origin is list:
        (item_hint,) = args
        return [_decode_value(v, item_hint) for v in value]
    if origin is dict:
        key_hint, val_hint = args
        return {k: _decode_value(v, val_hint) for k, v in value.items()}
    if dataclasses.is_dataclass(hint):
        return from_record(hint, value)
    return value


def from_record(cls, record: dict):
    """Rebuild an entity from a record; unknown keys land in ``extra``."""
    hints = typing.get_type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    extra = {}
    for key, value in record.items():
        if key in known and key != "extra":
            kwargs[key] = _decode_value(value, hints[key])
        else:
            extra[key] = value
    if "extra" in known:
        kwargs["extra"] = extra
    return cls(**kwargs)


# ---------------------------------------------------------------------------
# Structural validation


def validate_entity(entity) -> list[str]:
    """Check an entity's own invariants; returns one message per violation.

    Cross-entity rules (dangling references, pair uniqueness) are covered
    by the traceability integrity check, not here.
    """
    violations: list[str] = []
    eid = getattr(entity, "id", getattr(entity, "number", "?"))

    def bad(msg: str):
        violations.append(f"{eid}: {msg}")

    if isinstance(entity, Element):
        seen = set()
        for v in entity.variants:
            if v.variant_name in seen:
                bad(f"duplicate variant name {v.variant_name!r}")
            seen.add(v.variant_name)
    elif isinstance(entity, Cfa):
        if entity.state is CfaState.PROCESSED and entity.analysis is None:
            bad("Processed requires analysis")
        if (entity.state is CfaState.PROCESSED and entity.analysis is not None
                and not entity.analysis.design_alternatives
                and not entity.analysis.baseline_fulfills_dg):
            bad("Processed with zero design alternatives requires baseline-fulfills-dg")
        if not entity.design_goal:
            bad("CFA requires exactly one design goal")
        if entity.analysis is not None and not entity.analysis.functional_effect:
            bad("analysis functional-effect is empty")
    elif isinstance(entity, DesignGoal):
        if entity.composition is not None and not entity.sub_goals:
            bad("declared composition requires at least one sub-goal")
    elif isinstance(entity, DesignAlternative):
        if entity.status is DaStatus.REJECTED and not entity.rejection_rationale:
            bad("rejection requires rationale")
    elif isinstance(entity, Assumption):
        if entity.category is not None and entity.category not in ASSUMPTION_CATEGORIES:
            bad(f"unknown category tag {entity.category!r}")
    elif isinstance(entity, Clarification):
        if not entity.linked_assumption:
            bad("clarification requires a linked assumption")
        if entity.status is ClarificationStatus.RESOLVED:
            if not entity.resolution_notes:
                bad("Resolved requires resolution-notes")
            if not entity.resolved_by:
                bad("Resolved requires resolved-by")
    elif isinstance(entity, Task):
        if not entity.expert:
            bad("task requires expert")
        if not entity.responsible_architect:
            bad("task requires responsible-architect")
        if entity.due_date is None:
            bad("task requires due-date")
    elif isinstance(entity, Selection):
        if not entity.rationale:
            bad("selection rationale is empty")
    elif isinstance(entity, Link):
        prefixes = LINK_ENDPOINT_PREFIXES[entity.kind]
        if not entity.from_id.startswith(prefixes[0]):
            bad(f"link from-endpoint {entity.from_id} does not match kind {entity.kind.value}")
        if not entity.to_id.startswith(prefixes[1]):
            bad(f"link to-endpoint {entity.to_id} does not match kind {entity.kind.value}")
    elif isinstance(entity, FunctionClassification):
        seen = set()
        for p in entity.parameters:
            if p.parameter_id in seen:
                bad(f"duplicate classification parameter id {p.parameter_id!r}")
            seen.add(p.parameter_id)
    elif isinstance(entity, FailureMode):
        if not entity.name:
            bad("failure mode name is empty")

    return violations
