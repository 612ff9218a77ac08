"""Whole-project state container with canonical serialization and hashing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime

from .changelog import ChangeEntry, entry_from_record, entry_to_record
from .model import (
    Assumption,
    Cfa,
    Clarification,
    DesignAlternative,
    DesignGoal,
    Element,
    FailureMode,
    IterationRecord,
    IterationStatus,
    Link,
    ReviewQueue,
    Risk,
    Segment,
    Selection,
    Task,
    from_record,
    to_record,
)


@dataclass
class OperationLogEntry:
    seq: int
    op: str
    args: dict
    actor: str
    at: datetime
    change_entry_id: str


# id prefix -> (entity class, collection attribute)
PREFIX_MAP = {
    "E": (Element, "elements"),
    "SEG": (Segment, "segments"),
    "FM": (FailureMode, "failure_modes"),
    "CFA": (Cfa, "cfas"),
    "DG": (DesignGoal, "design_goals"),
    "DA": (DesignAlternative, "design_alternatives"),
    "A": (Assumption, "assumptions"),
    "C": (Clarification, "clarifications"),
    "T": (Task, "tasks"),
    "R": (Risk, "risks"),
    "S": (Selection, "selections"),
    "L": (Link, "links"),
    "RQ": (ReviewQueue, "review_queues"),
    "IT": (IterationRecord, "iterations"),
}


@dataclass
class ProjectState:
    elements: dict[str, Element] = field(default_factory=dict)
    segments: dict[str, Segment] = field(default_factory=dict)
    failure_modes: dict[str, FailureMode] = field(default_factory=dict)
    cfas: dict[str, Cfa] = field(default_factory=dict)
    design_goals: dict[str, DesignGoal] = field(default_factory=dict)
    design_alternatives: dict[str, DesignAlternative] = field(default_factory=dict)
    assumptions: dict[str, Assumption] = field(default_factory=dict)
    clarifications: dict[str, Clarification] = field(default_factory=dict)
    tasks: dict[str, Task] = field(default_factory=dict)
    risks: dict[str, Risk] = field(default_factory=dict)
    selections: dict[str, Selection] = field(default_factory=dict)
    links: dict[str, Link] = field(default_factory=dict)
    review_queues: dict[str, ReviewQueue] = field(default_factory=dict)
    iterations: dict[int, IterationRecord] = field(default_factory=dict)
    change_log: list[ChangeEntry] = field(default_factory=list)
    operation_log: list[OperationLogEntry] = field(default_factory=list)
    counters: dict[str, int] = field(default_factory=dict)
    config: dict = field(default_factory=lambda: {"single_point_failure_only": True})

    # -- identity -----------------------------------------------------------

    def new_id(self, prefix: str) -> str:
        n = self.counters.get(prefix, 0) + 1
        self.counters[prefix] = n
        return f"{prefix}-{n}"

    def locate(self, entity_id: str):
        """Resolve an entity id to (class, collection dict, collection key)."""
        prefix = entity_id.split("-", 1)[0]
        cls, attr = PREFIX_MAP[prefix]
        collection = getattr(self, attr)
        key: object = entity_id
        if prefix == "IT":
            key = int(entity_id.split("-", 1)[1])
        return cls, collection, key

    # -- convenience --------------------------------------------------------

    def current_iteration(self) -> IterationRecord | None:
        for it in self.iterations.values():
            if it.status is IterationStatus.OPEN:
                return it
        return None

    def links_of_kind(self, kind) -> list[Link]:
        return [l for l in self.links.values() if l.kind is kind]

    # links are append-only, so endpoint indexes only ever catch up
    def _link_index(self):
        if not hasattr(self, "_by_from"):
            self._by_from: dict[str, list[Link]] = {}
            self._by_to: dict[str, list[Link]] = {}
            self._triples: set[tuple] = set()
            self._indexed: int = 0
        if self._indexed != len(self.links):
            for link in list(self.links.values())[self._indexed:]:
                self._by_from.setdefault(link.from_id, []).append(link)
                self._by_to.setdefault(link.to_id, []).append(link)
                self._triples.add((link.kind, link.from_id, link.to_id))
            self._indexed = len(self.links)
        return self._by_from, self._by_to, self._triples

    def links_from(self, entity_id: str, kind=None) -> list[Link]:
        by_from, _, _ = self._link_index()
        return [l for l in by_from.get(entity_id, ())
                if kind is None or l.kind is kind]

    def links_to(self, entity_id: str, kind=None) -> list[Link]:
        _, by_to, _ = self._link_index()
        return [l for l in by_to.get(entity_id, ())
                if kind is None or l.kind is kind]

    def has_link(self, kind, from_id: str, to_id: str) -> bool:
        _, _, triples = self._link_index()
        return (kind, from_id, to_id) in triples

    def current_selection(self) -> Selection | None:
        """Latest non-superseded selection of the open iteration, if any."""
        it = self.current_iteration()
        if it is None:
            return None
        live = [s for s in self.selections.values()
                if s.iteration == it.number and s.superseded_by is None]
        return live[-1] if live else None

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "elements": [to_record(e) for e in self.elements.values()],
            "segments": [to_record(e) for e in self.segments.values()],
            "failure_modes": [to_record(e) for e in self.failure_modes.values()],
            "cfas": [to_record(e) for e in self.cfas.values()],
            "design_goals": [to_record(e) for e in self.design_goals.values()],
            "design_alternatives": [to_record(e) for e in self.design_alternatives.values()],
            "assumptions": [to_record(e) for e in self.assumptions.values()],
            "clarifications": [to_record(e) for e in self.clarifications.values()],
            "tasks": [to_record(e) for e in self.tasks.values()],
            "risks": [to_record(e) for e in self.risks.values()],
            "selections": [to_record(e) for e in self.selections.values()],
            "links": [to_record(e) for e in self.links.values()],
            "review_queues": [to_record(e) for e in self.review_queues.values()],
            "iterations": [to_record(e) for e in self.iterations.values()],
            "change_log": [entry_to_record(e) for e in self.change_log],
            "operation_log": [to_record(e) for e in self.operation_log],
            "counters": dict(sorted(self.counters.items())),
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProjectState":
        state = cls()
        keyed = [
            ("elements", Element), ("segments", Segment),
            ("failure_modes", FailureMode), ("cfas", Cfa),
            ("design_goals", DesignGoal),
            ("design_alternatives", DesignAlternative),
            ("assumptions", Assumption), ("clarifications", Clarification),
            ("tasks", Task), ("risks", Risk), ("selections", Selection),
            ("links", Link), ("review_queues", ReviewQueue),
        ]
        for attr, entity_cls in keyed:
            collection = getattr(state, attr)
            for record in data.get(attr, []):
                entity = from_record(entity_cls, record)
                collection[entity.id] = entity
        for record in data.get("iterations", []):
            it = from_record(IterationRecord, record)
            state.iterations[it.number] = it
        state.change_log = [entry_from_record(r) for r in data.get("change_log", [])]
        state.operation_log = [from_record(OperationLogEntry, r)
                               for r in data.get("operation_log", [])]
        state.counters = dict(data.get("counters", {}))
        state.config = dict(data.get("config", {"single_point_failure_only": True}))
        return state

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"),
                          default=str)

    def state_hash(self) -> str:
        """Hash over the full serialized project, logs included."""
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def content_hash(self) -> str:
        """Hash over entity collections only (no logs, counters, config)."""
        data = self.to_dict()
        for key in ("change_log", "operation_log", "counters", "config"):
            data.pop(key, None)
        blob = json.dumps(data, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(blob.encode()).hexdigest()
