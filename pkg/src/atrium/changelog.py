"""Change-management ledger: one entry per mutation, audit queries, replay.

Each entry carries the four-part record (request, analysis, decision,
rationale) plus the concrete implemented changes as before/after field
diffs, so the ledger alone can rebuild the entity collections.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime

from .model import from_record, to_record


@dataclass
class FieldChange:
    entity_id: str
    field: str  # "created" marks entity creation; after holds the full record
    before: object
    after: object


@dataclass
class ChangeEntry:
    id: str
    sequence: int
    request: str
    analysis: str
    decision: str
    rationale: str
    implemented_changes: list[FieldChange] = field(default_factory=list)
    actor: str = ""
    at: datetime | None = None
    iteration: int = 0


def entry_to_record(entry: ChangeEntry) -> dict:
    return to_record(entry)


def entry_from_record(record: dict) -> ChangeEntry:
    return from_record(ChangeEntry, record)


def audit(entries: list[ChangeEntry], entity_id: str | None = None,
          actor: str | None = None,
          time_range: tuple[datetime, datetime] | None = None,
          iteration: int | None = None) -> list[ChangeEntry]:
    """Filter the ledger; all supplied filters must match. Sequence order."""
    out = []
    for entry in entries:
        if entity_id is not None and not any(
                c.entity_id == entity_id for c in entry.implemented_changes):
            continue
        if actor is not None and entry.actor != actor:
            continue
        if time_range is not None:
            start, end = time_range
            if entry.at is None or not (start <= entry.at <= end):
                continue
        if iteration is not None and entry.iteration != iteration:
            continue
        out.append(entry)
    return sorted(out, key=lambda e: e.sequence)


def check_sequence(entries: list[ChangeEntry]) -> list[str]:
    """Sequence must be strictly increasing with no gaps, starting at 1."""
    problems = []
    for i, entry in enumerate(entries, start=1):
        if entry.sequence != i:
            problems.append(f"{entry.id}: sequence {entry.sequence}, expected {i}")
        if not entry.implemented_changes:
            problems.append(f"{entry.id}: empty implemented-changes")
    return problems


def replay_changes(entries: list[ChangeEntry], state) -> None:
    """Apply every implemented change in sequence onto ``state``.

    ``state`` is a ProjectState; entity collections are resolved from the
    id prefix. Used to verify ledger replay fidelity.
    """
    import typing

    from .model import _decode_value

    hint_cache: dict[type, dict] = {}
    for entry in sorted(entries, key=lambda e: e.sequence):
        for change in entry.implemented_changes:
            cls, collection, key = state.locate(change.entity_id)
            if change.field == "created":
                collection[key] = from_record(cls, change.after)
                continue
            entity = collection[key]
            if cls not in hint_cache:
                hint_cache[cls] = typing.get_type_hints(cls)
            hint = hint_cache[cls].get(change.field)
            setattr(entity, change.field,
                    _decode_value(change.after, hint) if hint is not None else change.after)
