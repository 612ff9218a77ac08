"""Process engine: iteration lifecycle, CFA generation and analysis,
assumption/clarification/task ledgers, invalidation propagation, selection,
and the iteration closure gate.

Every mutating operation appends exactly one operation-log entry and one
change entry; replaying the operation log from an empty project reproduces
the state exactly (ids are counter-based, timestamps are taken from the
log on replay).
"""

from __future__ import annotations

import inspect
import json
from datetime import date, datetime, timezone
from typing import Callable

from . import errors as err
from .changelog import ChangeEntry, FieldChange
from .model import (
    AnalysisRecord,
    Assumption,
    Cfa,
    CfaState,
    Clarification,
    ClarificationStatus,
    ClassificationParameter,
    Composition,
    DaStatus,
    DesignAlternative,
    DesignGoal,
    Disposition,
    Element,
    ElementKind,
    ElementSource,
    ElementState,
    FailureMode,
    FailureModeScope,
    FunctionClassification,
    IterationRecord,
    IterationStatus,
    Link,
    LinkKind,
    ReviewQueue,
    Risk,
    Segment,
    Selection,
    SubDesignGoal,
    Task,
    TaskStatus,
    Validity,
    VariantSpec,
    _encode_value,
    to_record,
)
from .state import OperationLogEntry, ProjectState

INTERPRETATION_NOTE = (
    "The refined preliminary architecture is valid under the assumptions "
    "listed in the assumption list and is subject to the risks in the risk list."
)


def _fc(entity_id: str, field: str, before, after) -> FieldChange:
    return FieldChange(entity_id, field, _encode_value(before), _encode_value(after))


def _created(entity, entity_id: str | None = None) -> FieldChange:
    return FieldChange(entity_id or entity.id, "created", None, to_record(entity))


def _parse_date(value) -> date | None:
    if value is None or isinstance(value, date):
        return value
    return date.fromisoformat(value)


def utc_clock() -> datetime:
    return datetime.now(timezone.utc)


def stepping_clock(start: str = "2026-01-01T00:00:00+00:00",
                   step_seconds: int = 1) -> Callable[[], datetime]:
    """Deterministic clock for scenario builds and tests."""
    from datetime import timedelta
    base = datetime.fromisoformat(start)
    counter = {"n": 0}

    def clock() -> datetime:
        t = base + timedelta(seconds=counter["n"] * step_seconds)
        counter["n"] += 1
        return t

    return clock


def state_derived_clock(state: ProjectState,
                        start: str = "2026-01-01T00:00:00+00:00") -> Callable[[], datetime]:
    """Clock keyed to the operation count, so identical operation sequences
    get identical timestamps regardless of process boundaries."""
    from datetime import timedelta
    base = datetime.fromisoformat(start)
    return lambda: base + timedelta(seconds=len(state.operation_log))


def clock_for(state: ProjectState) -> Callable[[], datetime]:
    """Wall clock by default; deterministic when ATRIUM_FAKE_TIME is set."""
    import os
    fake = os.environ.get("ATRIUM_FAKE_TIME")
    if fake:
        start = fake if fake != "1" else "2026-01-01T00:00:00+00:00"
        return state_derived_clock(state, start)
    return utc_clock


class Engine:
    """Single logical writer over a ProjectState."""

    def __init__(self, state: ProjectState | None = None,
                 clock: Callable[[], datetime] | None = None):
        self.state = state if state is not None else ProjectState()
        self.clock = clock or utc_clock

    # ------------------------------------------------------------------
    # bookkeeping

    def _now(self, at) -> datetime:
        if at is None:
            return self.clock()
        if isinstance(at, str):
            return datetime.fromisoformat(at.replace("Z", "+00:00"))
        return at

    def _commit(self, op: str, args: dict, actor: str, at: datetime,
                changes: list[FieldChange], rationale: str = "",
                request: str = "", analysis: str = "",
                decision: str = "") -> ChangeEntry:
        st = self.state
        it = st.current_iteration()
        # record the rationale in the logged arguments when the operation
        # accepts one, so replaying the log reproduces the ledger verbatim
        if rationale and "rationale" not in args:
            params = inspect.signature(getattr(self, op)).parameters
            if "rationale" in params:
                args = {**args, "rationale": rationale}
        entry = ChangeEntry(
            id=st.new_id("CE"),
            sequence=len(st.change_log) + 1,
            request=request or f"apply {op}",
            analysis=analysis or "arguments: " + json.dumps(args, sort_keys=True, default=str),
            decision=decision or f"{op} applied",
            rationale=rationale or (request or f"apply {op}"),
            implemented_changes=changes,
            actor=actor,
            at=at,
            iteration=it.number if it else 0,
        )
        st.change_log.append(entry)
        st.operation_log.append(OperationLogEntry(
            seq=len(st.operation_log) + 1, op=op, args=args, actor=actor,
            at=at, change_entry_id=entry.id))
        return entry

    def _require_open_iteration(self) -> IterationRecord:
        it = self.state.current_iteration()
        if it is None:
            raise err.NoOpenIteration("no iteration is open")
        return it

    def _add_link(self, kind: LinkKind, from_id: str, to_id: str,
                  changes: list[FieldChange]) -> Link | None:
        if self.state.has_link(kind, from_id, to_id):
            return None
        link = Link(self.state.new_id("L"), kind, from_id, to_id)
        self.state.links[link.id] = link
        changes.append(_created(link))
        return link

    def _get_cfa(self, cfa_id: str) -> Cfa:
        cfa = self.state.cfas.get(cfa_id)
        if cfa is None:
            raise err.UnknownCfa(f"unknown CFA {cfa_id}", [cfa_id])
        return cfa

    def _get_assumption(self, assumption_id: str) -> Assumption:
        a = self.state.assumptions.get(assumption_id)
        if a is None:
            raise err.UnknownAssumption(f"unknown assumption {assumption_id}",
                                        [assumption_id])
        return a

    def _segment_member_closure(self, segment_id: str) -> set[str]:
        """Element ids in a segment or any of its descendant segments."""
        members = set(self.state.segments[segment_id].member_elements)
        for seg in self.state.segments.values():
            if seg.parent == segment_id:
                members |= self._segment_member_closure(seg.id)
        return members

    def _segment_ancestry(self, segment_id: str) -> list[str]:
        chain = []
        current: str | None = segment_id
        while current is not None:
            chain.append(current)
            current = self.state.segments[current].parent
        return chain

    # ------------------------------------------------------------------
    # replay

    def replay_log(self, log: list[OperationLogEntry]) -> None:
        for entry in log:
            getattr(self, entry.op)(**entry.args, actor=entry.actor, at=entry.at)

    @classmethod
    def from_log(cls, log: list[OperationLogEntry]) -> "Engine":
        engine = cls(ProjectState())
        engine.replay_log(log)
        return engine

    # ------------------------------------------------------------------
    # setup / import

    def import_architecture(self, elements: list[dict], segments: list[dict] | None = None,
                            actor: str = "architect", rationale: str = "",
                            at=None) -> dict:
        """Populate the element inventory from an architecture description.

        Elements imported before the first iteration opens are Legacy.
        """
        at = self._now(at)
        st = self.state
        segments = segments or []
        names = [e.get("name", "") for e in elements]
        dupes = sorted({n for n in names if names.count(n) > 1})
        dupes += sorted({e["name"] for e in elements
                         if any(x.name == e.get("name") for x in st.elements.values())})
        if dupes:
            raise err.DuplicateElementName(f"duplicate element names: {', '.join(dupes)}", dupes)

        changes: list[FieldChange] = []
        legacy = len(st.iterations) == 0
        seg_ids: dict[str, str] = {s.name: s.id for s in st.segments.values()}
        created_segments = []
        for seg in segments:
            segment = Segment(id=st.new_id("SEG"), name=seg["name"], parent=None)
            st.segments[segment.id] = segment
            seg_ids[segment.name] = segment.id
            created_segments.append(segment.id)
        # parents resolve by name once every segment exists
        for seg in segments:
            if seg.get("parent"):
                st.segments[seg_ids[seg["name"]]].parent = seg_ids[seg["parent"]]

        created_elements = []
        for rec in elements:
            element = Element(
                id=st.new_id("E"),
                name=rec["name"],
                kind=ElementKind(rec.get("kind", "hardware")),
                state=ElementState.LEGACY if legacy else ElementState.NEW,
                segment=seg_ids.get(rec.get("segment")) if rec.get("segment") else None,
                variants=[VariantSpec(**v) for v in rec.get("variants", [])],
                source=ElementSource(rec.get("source", "baseline")),
            )
            st.elements[element.id] = element
            if element.segment:
                st.segments[element.segment].member_elements.add(element.id)
            created_elements.append(element.id)
            changes.append(_created(element))
        # snapshot segments last so parents and memberships are captured
        changes = [_created(st.segments[sid]) for sid in created_segments] + changes

        self._commit("import_architecture",
                     {"elements": elements, "segments": segments},
                     actor, at, changes, rationale,
                     request="import architecture description")
        return {"elements": created_elements,
                "segments": [seg_ids[s["name"]] for s in segments]}

    # ------------------------------------------------------------------
    # iteration lifecycle

    def open_iteration(self, roadmap_elements: list[dict] | None = None,
                       classification: list[dict] | None = None,
                       actor: str = "architect", rationale: str = "",
                       at=None) -> dict:
        at = self._now(at)
        st = self.state
        if st.current_iteration() is not None:
            raise err.IterationAlreadyOpen("an iteration is already open")
        number = max(st.iterations, default=0) + 1
        previous = st.iterations.get(number - 1)
        changes: list[FieldChange] = []

        created = []
        for rec in roadmap_elements or []:
            if rec.get("segment") and rec["segment"] not in st.segments:
                raise err.UnknownSegment(f"unknown segment {rec['segment']}",
                                         [rec["segment"]])
            element = Element(
                id=st.new_id("E"),
                name=rec["name"],
                kind=ElementKind(rec.get("kind", "hardware")),
                state=ElementState.LEGACY if number == 1 else ElementState.NEW,
                segment=rec.get("segment"),
                variants=[VariantSpec(**v) for v in rec.get("variants", [])],
                source=ElementSource.ROADMAP,
            )
            st.elements[element.id] = element
            if element.segment:
                st.segments[element.segment].member_elements.add(element.id)
            created.append(element.id)
            changes.append(_created(element))

        # rejected alternatives become selectable again in a new iteration
        if number > 1:
            for da in st.design_alternatives.values():
                if da.status is DaStatus.REJECTED:
                    changes.append(_fc(da.id, "status", da.status, DaStatus.CANDIDATE))
                    da.status = DaStatus.CANDIDATE

        inputs: dict = {}
        if previous is not None:
            inputs["previous_deliverables"] = previous.deliverables
            inputs["carried_open_tasks"] = [t.id for t in st.tasks.values()
                                            if t.status is TaskStatus.OPEN]
        if classification:
            fc = FunctionClassification(
                parameters=[ClassificationParameter(**p) for p in classification])
            inputs["classification"] = to_record(fc)

        iteration = IterationRecord(number=number, status=IterationStatus.OPEN,
                                    opened_at=at, inputs=inputs or None)
        st.iterations[number] = iteration
        changes.append(_created(iteration, f"IT-{number}"))

        self._commit("open_iteration",
                     {"roadmap_elements": roadmap_elements or [],
                      "classification": classification or []},
                     actor, at, changes, rationale,
                     request=f"open iteration {number}")
        return {"iteration": number, "roadmap_elements": created}

    def define_process_parameters(self, elements_in_scope: list[str],
                                  failure_modes: list[dict],
                                  design_goals: list[dict],
                                  dg_assignment: dict | None = None,
                                  default_dg: int | str | None = None,
                                  actor: str = "architect", rationale: str = "",
                                  at=None) -> dict:
        at = self._now(at)
        st = self.state
        iteration = self._require_open_iteration()
        if not elements_in_scope:
            raise err.EmptyScope("no elements in scope")
        unknown = [e for e in elements_in_scope if e not in st.elements]
        if unknown:
            raise err.UnknownElement(f"unknown elements: {', '.join(unknown)}", unknown)

        changes: list[FieldChange] = []
        dg_ids: list[str] = []
        for rec in design_goals:
            dg = self._build_design_goal(rec)
            st.design_goals[dg.id] = dg
            dg_ids.append(dg.id)
            changes.append(_created(dg))

        fm_ids: list[str] = []
        for rec in failure_modes:
            fm = FailureMode(id=st.new_id("FM"), name=rec["name"],
                             description=rec.get("description", ""),
                             scope=FailureModeScope(rec.get("scope", "PerElement")))
            st.failure_modes[fm.id] = fm
            fm_ids.append(fm.id)
            changes.append(_created(fm))

        def resolve_dg(ref) -> str | None:
            if ref is None:
                return None
            if isinstance(ref, int):
                return dg_ids[ref]
            return ref

        default_dg_id = resolve_dg(default_dg)
        assignment = {k: resolve_dg(v) for k, v in (dg_assignment or {}).items()}

        scope = set(elements_in_scope)
        targets: list[tuple[str, str]] = []  # (target id, failure-mode id)
        for fm_id in fm_ids:
            fm = st.failure_modes[fm_id]
            if fm.scope is FailureModeScope.PER_ELEMENT:
                for element_id in elements_in_scope:
                    targets.append((element_id, fm_id))
            else:
                for seg_id in st.segments:
                    if self._segment_member_closure(seg_id) & scope:
                        targets.append((seg_id, fm_id))

        unassigned = [f"{t}×{m}" for t, m in targets
                      if assignment.get(t) is None and default_dg_id is None]
        if unassigned:
            raise err.UnassignedDG(
                f"no design goal for: {', '.join(unassigned)}", unassigned)

        existing = {(c.target, c.failure_mode) for c in st.cfas.values()
                    if not c.archived}
        cfa_ids = []
        for target, fm_id in targets:
            if (target, fm_id) in existing:
                continue
            cfa = Cfa(id=st.new_id("CFA"), target=target, failure_mode=fm_id,
                      design_goal=assignment.get(target) or default_dg_id)
            st.cfas[cfa.id] = cfa
            cfa_ids.append(cfa.id)
            changes.append(_created(cfa))

        changes.append(_fc(f"IT-{iteration.number}", "in_scope_elements",
                           iteration.in_scope_elements, scope))
        iteration.in_scope_elements = scope
        changes.append(_fc(f"IT-{iteration.number}", "active_failure_modes",
                           iteration.active_failure_modes, fm_ids))
        iteration.active_failure_modes = fm_ids
        changes.append(_fc(f"IT-{iteration.number}", "default_dg",
                           iteration.default_dg, default_dg_id))
        iteration.default_dg = default_dg_id

        self._commit("define_process_parameters",
                     {"elements_in_scope": elements_in_scope,
                      "failure_modes": failure_modes,
                      "design_goals": design_goals,
                      "dg_assignment": dg_assignment or {},
                      "default_dg": default_dg},
                     actor, at, changes, rationale,
                     request="define process parameters and generate CFAs")
        return {"cfas": cfa_ids, "failure_modes": fm_ids, "design_goals": dg_ids}

    def _build_design_goal(self, rec: dict) -> DesignGoal:
        st = self.state

        def build_sdg(sub: dict) -> SubDesignGoal:
            return SubDesignGoal(
                id=st.new_id("SDG"),
                description=sub["description"],
                activation_condition=sub.get("activation_condition", ""),
                children=[build_sdg(c) for c in sub.get("children", [])])

        return DesignGoal(
            id=st.new_id("DG"),
            description=rec["description"],
            sub_goals=[build_sdg(s) for s in rec.get("sub_goals", [])],
            composition=Composition(rec["composition"]) if rec.get("composition") else None,
            composition_notes=rec.get("composition_notes", ""),
            fsr_reference=rec.get("fsr_reference"))

    # ------------------------------------------------------------------
    # elements

    def add_element(self, name: str, kind: str = "hardware",
                    segment: str | None = None, variants: list[dict] | None = None,
                    actor: str = "architect", rationale: str = "",
                    at=None) -> dict:
        at = self._now(at)
        st = self.state
        iteration = self._require_open_iteration()
        if segment is not None and segment not in st.segments:
            raise err.UnknownSegment(f"unknown segment {segment}", [segment])

        warnings = []
        if any(e.name == name and not e.retired for e in st.elements.values()):
            warnings.append(f"DuplicateName: element named {name!r} already exists")

        changes: list[FieldChange] = []
        element = Element(id=st.new_id("E"), name=name, kind=ElementKind(kind),
                          state=ElementState.NEW, segment=segment,
                          variants=[VariantSpec(**v) for v in (variants or [])],
                          source=ElementSource.ATRIUM_ADDED)
        st.elements[element.id] = element
        changes.append(_created(element))
        if segment:
            seg = st.segments[segment]
            changes.append(_fc(seg.id, "member_elements", seg.member_elements,
                               seg.member_elements | {element.id}))
            seg.member_elements.add(element.id)

        changes.append(_fc(f"IT-{iteration.number}", "in_scope_elements",
                           iteration.in_scope_elements,
                           iteration.in_scope_elements | {element.id}))
        iteration.in_scope_elements.add(element.id)

        if not iteration.active_failure_modes:
            warnings.append("no active failure modes; no CFAs generated")

        existing = {(c.target, c.failure_mode): c for c in st.cfas.values()
                    if not c.archived}
        cfa_ids = []
        for fm_id in iteration.active_failure_modes:
            fm = st.failure_modes[fm_id]
            if fm.scope is FailureModeScope.PER_ELEMENT:
                cfa = Cfa(id=st.new_id("CFA"), target=element.id,
                          failure_mode=fm_id, design_goal=iteration.default_dg)
                st.cfas[cfa.id] = cfa
                cfa_ids.append(cfa.id)
                changes.append(_created(cfa))
            elif segment:
                for seg_id in self._segment_ancestry(segment):
                    hit = existing.get((seg_id, fm_id))
                    if hit is not None:
                        if not hit.flagged_for_review:
                            changes.append(_fc(hit.id, "flagged_for_review", False, True))
                            hit.flagged_for_review = True
                    else:
                        cfa = Cfa(id=st.new_id("CFA"), target=seg_id,
                                  failure_mode=fm_id,
                                  design_goal=iteration.default_dg)
                        st.cfas[cfa.id] = cfa
                        existing[(seg_id, fm_id)] = cfa
                        cfa_ids.append(cfa.id)
                        changes.append(_created(cfa))

        self._commit("add_element",
                     {"name": name, "kind": kind, "segment": segment,
                      "variants": variants or []},
                     actor, at, changes, rationale,
                     request=f"add element {name!r}")
        return {"element": element.id, "cfas": cfa_ids, "warnings": warnings}

    def retire_element(self, element: str, rationale: str,
                       actor: str = "architect", at=None) -> dict:
        at = self._now(at)
        st = self.state
        if element not in st.elements:
            raise err.UnknownElement(f"unknown element {element}", [element])
        entity = st.elements[element]
        if entity.retired:
            raise err.AlreadyRetired(f"{element} is already retired", [element])

        element_cfas = [c for c in st.cfas.values()
                        if c.target == element and not c.archived]
        selection = st.current_selection()
        if selection is not None:
            cfa_ids = {c.id for c in element_cfas}
            blockers = [da_id for da_id in selection.chosen_das
                        if st.design_alternatives[da_id].satisfies_cfas & cfa_ids]
            if blockers:
                raise err.ElementReferencedBySelection(
                    f"selection {selection.id} depends on {element} via "
                    f"{', '.join(sorted(blockers))}", sorted(blockers))

        changes: list[FieldChange] = [_fc(element, "retired", False, True)]
        entity.retired = True
        archived_ids = []
        for cfa in element_cfas:
            changes.append(_fc(cfa.id, "archived", False, True))
            cfa.archived = True
            archived_ids.append(cfa.id)

        flagged = []
        archived_all = {c.id for c in st.cfas.values() if c.archived}
        for da in st.design_alternatives.values():
            if da.satisfies_cfas and da.satisfies_cfas <= archived_all \
                    and not da.flagged_for_review:
                changes.append(_fc(da.id, "flagged_for_review", False, True))
                da.flagged_for_review = True
                flagged.append(da.id)

        self._commit("retire_element", {"element": element, "rationale": rationale},
                     actor, at, changes, rationale,
                     request=f"retire element {element}",
                     decision=f"element {element} removed from consideration")
        return {"element": element, "archived_cfas": archived_ids,
                "flagged_das": flagged}

    # ------------------------------------------------------------------
    # CFA analysis

    def analyze_cfa(self, cfa: str, effect: str, baseline_fulfills_dg: bool,
                    das: list[str] | None = None,
                    cited_assumptions: list[str] | None = None,
                    analyst: str = "architect", actor: str = "architect",
                    rationale: str = "", at=None) -> dict:
        at = self._now(at)
        st = self.state
        self._require_open_iteration()
        target = self._get_cfa(cfa)
        if target.archived:
            raise err.CfaArchived(f"{cfa} is archived", [cfa])
        if not effect:
            raise err.MissingField("effect")
        das = das or []
        cited = cited_assumptions or []
        for a_id in cited:
            assumption = self._get_assumption(a_id)
            if assumption.validity is Validity.INVALID:
                raise err.InvalidAssumptionCited(
                    f"assumption {a_id} is Invalid", [a_id])
        if not baseline_fulfills_dg and not das:
            raise err.ZeroDaRuleViolation(
                f"{cfa}: baseline does not fulfil the design goal and no "
                "design alternatives were given", [cfa])

        changes: list[FieldChange] = []
        da_ids = []
        for description in das:
            # an existing DA id links the alternative to one more CFA
            if description in st.design_alternatives:
                da = st.design_alternatives[description]
                if cfa not in da.satisfies_cfas:
                    changes.append(_fc(da.id, "satisfies_cfas", da.satisfies_cfas,
                                       da.satisfies_cfas | {cfa}))
                    da.satisfies_cfas.add(cfa)
            else:
                da = DesignAlternative(id=st.new_id("DA"), description=description,
                                       satisfies_cfas={cfa})
                st.design_alternatives[da.id] = da
                changes.append(_created(da))
            da_ids.append(da.id)
            self._add_link(LinkKind.CFA_TO_DA, cfa, da.id, changes)
        for a_id in cited:
            assumption = st.assumptions[a_id]
            self._add_link(LinkKind.ASSUMPTION_TO_CFA, a_id, cfa, changes)
            if cfa not in assumption.linked_cfas:
                changes.append(_fc(a_id, "linked_cfas", assumption.linked_cfas,
                                   assumption.linked_cfas | {cfa}))
                assumption.linked_cfas.add(cfa)

        record = AnalysisRecord(functional_effect=effect,
                                baseline_fulfills_dg=baseline_fulfills_dg,
                                design_alternatives=set(da_ids),
                                cited_assumptions=set(cited),
                                analyst=analyst, analyzed_at=at)
        changes.append(_fc(cfa, "analysis", target.analysis, record))
        target.analysis = record
        if target.state is not CfaState.PROCESSED:
            changes.append(_fc(cfa, "state", target.state, CfaState.PROCESSED))
            target.state = CfaState.PROCESSED
        if target.flagged_for_review:
            changes.append(_fc(cfa, "flagged_for_review", True, False))
            target.flagged_for_review = False

        self._commit("analyze_cfa",
                     {"cfa": cfa, "effect": effect,
                      "baseline_fulfills_dg": baseline_fulfills_dg,
                      "das": das, "cited_assumptions": cited,
                      "analyst": analyst},
                     actor, at, changes, rationale,
                     request=f"analyze {cfa}")
        return {"cfa": cfa, "state": target.state.value, "das": da_ids}

    # ------------------------------------------------------------------
    # assumptions

    def add_assumption(self, text: str, category: str | None = None,
                       linked_cfas: list[str] | None = None,
                       actor: str = "architect", rationale: str = "",
                       at=None) -> dict:
        at = self._now(at)
        st = self.state
        iteration = self._require_open_iteration()
        linked = linked_cfas or []
        for cfa_id in linked:
            self._get_cfa(cfa_id)

        changes: list[FieldChange] = []
        assumption = Assumption(id=st.new_id("A"), text=text, category=category,
                                created_in_iteration=iteration.number,
                                linked_cfas=set(linked))
        st.assumptions[assumption.id] = assumption
        changes.append(_created(assumption))
        for cfa_id in linked:
            self._add_link(LinkKind.ASSUMPTION_TO_CFA, assumption.id, cfa_id, changes)

        candidates = [c.id for c in st.cfas.values()
                      if c.state is CfaState.PROCESSED and not c.archived]
        queue = ReviewQueue(id=st.new_id("RQ"), trigger_assumption=assumption.id,
                            candidate_cfas=candidates,
                            disposition={c: Disposition.PENDING_REVIEW
                                         for c in candidates})
        st.review_queues[queue.id] = queue
        changes.append(_created(queue))

        self._commit("add_assumption",
                     {"text": text, "category": category, "linked_cfas": linked},
                     actor, at, changes, rationale,
                     request=f"add assumption {assumption.id}")
        return {"assumption": assumption.id, "review_queue": queue.id,
                "candidate_cfas": candidates}

    def set_review_disposition(self, queue: str, cfa: str, disposition: str,
                               actor: str = "architect", rationale: str = "",
                               at=None) -> dict:
        at = self._now(at)
        st = self.state
        rq = st.review_queues.get(queue)
        if rq is None:
            raise err.UnknownReviewQueue(f"unknown review queue {queue}", [queue])
        if cfa not in rq.disposition:
            raise err.UnknownCfa(f"{cfa} is not a candidate of {queue}", [cfa])
        verdict = Disposition(disposition)

        changes: list[FieldChange] = []
        before = dict(rq.disposition)
        rq.disposition[cfa] = verdict
        changes.append(_fc(queue, "disposition", before, rq.disposition))
        reverted = False
        if verdict is Disposition.MARK_UNPROCESSED:
            target = st.cfas[cfa]
            if target.state is CfaState.PROCESSED:
                changes.append(_fc(cfa, "state", target.state, CfaState.UNPROCESSED))
                target.state = CfaState.UNPROCESSED
                reverted = True

        self._commit("set_review_disposition",
                     {"queue": queue, "cfa": cfa, "disposition": disposition},
                     actor, at, changes, rationale,
                     request=f"triage {cfa} in {queue}")
        return {"queue": queue, "cfa": cfa, "disposition": verdict.value,
                "reverted": reverted}

    def _apply_invalidation(self, assumption: Assumption, reason: str,
                            replacement: dict | None,
                            resolves_clarification: str | None,
                            changes: list[FieldChange]) -> dict:
        """Shared invalidation effects; caller owns the change entry."""
        st = self.state
        changes.append(_fc(assumption.id, "validity", assumption.validity,
                           Validity.INVALID))
        assumption.validity = Validity.INVALID

        reverted = []
        for link in st.links_from(assumption.id, LinkKind.ASSUMPTION_TO_CFA):
            cfa = st.cfas.get(link.to_id)
            if cfa is not None and not cfa.archived \
                    and cfa.state is CfaState.PROCESSED:
                changes.append(_fc(cfa.id, "state", cfa.state, CfaState.UNPROCESSED))
                cfa.state = CfaState.UNPROCESSED
                reverted.append(cfa.id)

        replacement_id = None
        if replacement is not None:
            iteration = st.current_iteration()
            created_in = iteration.number if iteration \
                else max(assumption.created_in_iteration,
                         max(st.iterations, default=0))
            linked = replacement.get("linked_cfas") or []
            new_assumption = Assumption(
                id=st.new_id("A"), text=replacement["text"],
                category=replacement.get("category"),
                created_in_iteration=created_in, linked_cfas=set(linked))
            st.assumptions[new_assumption.id] = new_assumption
            changes.append(_created(new_assumption))
            replacement_id = new_assumption.id
            for cfa_id in linked:
                self._add_link(LinkKind.ASSUMPTION_TO_CFA, new_assumption.id,
                               cfa_id, changes)
            clar = replacement.get("resolves_clarification") or resolves_clarification
            if clar:
                self._add_link(LinkKind.CLARIFICATION_TO_ASSUMPTION, clar,
                               new_assumption.id, changes)
            changes.append(_fc(assumption.id, "superseded_by", None, replacement_id))
            assumption.superseded_by = replacement_id

        return {"invalidated": assumption.id, "replacement": replacement_id,
                "reverted_cfas": reverted, "reason": reason}

    def invalidate_assumption(self, assumption: str, reason: str,
                              replacement: dict | None = None,
                              actor: str = "architect", at=None) -> dict:
        at = self._now(at)
        entity = self._get_assumption(assumption)
        if entity.validity is Validity.INVALID:
            raise err.AlreadyInvalid(f"{assumption} is already Invalid", [assumption])
        if not reason:
            raise err.MissingField("reason")
        if replacement is not None:
            for cfa_id in replacement.get("linked_cfas") or []:
                self._get_cfa(cfa_id)

        changes: list[FieldChange] = []
        result = self._apply_invalidation(entity, reason, replacement, None, changes)
        self._commit("invalidate_assumption",
                     {"assumption": assumption, "reason": reason,
                      "replacement": replacement},
                     actor, at, changes, rationale=reason,
                     request=f"invalidate assumption {assumption}",
                     analysis=f"linked CFAs reverted: {', '.join(result['reverted_cfas']) or 'none'}",
                     decision=f"assumption {assumption} marked Invalid"
                              + (f", superseded by {result['replacement']}"
                                 if result["replacement"] else ""))
        return result

    # ------------------------------------------------------------------
    # clarifications and tasks

    def raise_clarification(self, question: str,
                            assumption: str | None = None,
                            assumption_text: str | None = None,
                            linked_cfas: list[str] | None = None,
                            category: str | None = None,
                            actor: str = "architect", rationale: str = "",
                            at=None) -> dict:
        at = self._now(at)
        st = self.state
        iteration = self._require_open_iteration()
        if assumption is None and not assumption_text:
            raise err.AssumptionRequired(
                "a clarification requires an existing or new assumption")

        changes: list[FieldChange] = []
        if assumption is not None:
            linked_assumption = self._get_assumption(assumption)
            if linked_assumption.validity is Validity.INVALID:
                raise err.LinkedAssumptionInvalid(
                    f"assumption {assumption} is Invalid", [assumption])
        else:
            linked = linked_cfas or []
            for cfa_id in linked:
                self._get_cfa(cfa_id)
            linked_assumption = Assumption(
                id=st.new_id("A"), text=assumption_text, category=category,
                created_in_iteration=iteration.number, linked_cfas=set(linked))
            st.assumptions[linked_assumption.id] = linked_assumption
            changes.append(_created(linked_assumption))
            for cfa_id in linked:
                self._add_link(LinkKind.ASSUMPTION_TO_CFA, linked_assumption.id,
                               cfa_id, changes)

        clar = Clarification(id=st.new_id("C"), question=question,
                             linked_assumption=linked_assumption.id)
        st.clarifications[clar.id] = clar
        changes.append(_created(clar))
        self._add_link(LinkKind.CLARIFICATION_TO_ASSUMPTION, clar.id,
                       linked_assumption.id, changes)

        self._commit("raise_clarification",
                     {"question": question, "assumption": assumption,
                      "assumption_text": assumption_text,
                      "linked_cfas": linked_cfas or [], "category": category},
                     actor, at, changes, rationale,
                     request=f"raise clarification {clar.id}")
        return {"clarification": clar.id, "assumption": linked_assumption.id}

    def resolve_clarification(self, clarification: str, outcome: str,
                              expert: str, notes: str,
                              new_text: str | None = None,
                              new_linked_cfas: list[str] | None = None,
                              actor: str = "architect", at=None) -> dict:
        at = self._now(at)
        st = self.state
        clar = st.clarifications.get(clarification)
        if clar is None:
            raise err.UnknownClarification(f"unknown clarification {clarification}",
                                           [clarification])
        if clar.status is not ClarificationStatus.OPEN:
            raise err.NotOpen(f"{clarification} is {clar.status.value}",
                              [clarification])
        if not notes:
            raise err.MissingField("notes")
        if not expert:
            raise err.MissingField("expert")
        if outcome not in ("Confirmed", "Corrected"):
            raise err.MissingField("outcome")
        if outcome == "Corrected" and not new_text:
            raise err.MissingField("new_text")

        changes: list[FieldChange] = []
        reverted: list[str] = []
        replacement_id = None
        if outcome == "Corrected":
            assumption = self._get_assumption(clar.linked_assumption)
            if assumption.validity is Validity.VALID:
                result = self._apply_invalidation(
                    assumption, notes,
                    {"text": new_text, "linked_cfas": new_linked_cfas or []},
                    clarification, changes)
                reverted = result["reverted_cfas"]
                replacement_id = result["replacement"]

        changes.append(_fc(clarification, "status", clar.status,
                           ClarificationStatus.RESOLVED))
        clar.status = ClarificationStatus.RESOLVED
        changes.append(_fc(clarification, "resolution_notes",
                           clar.resolution_notes, notes))
        clar.resolution_notes = notes
        changes.append(_fc(clarification, "resolved_by", clar.resolved_by, expert))
        clar.resolved_by = expert

        self._commit("resolve_clarification",
                     {"clarification": clarification, "outcome": outcome,
                      "expert": expert, "notes": notes, "new_text": new_text,
                      "new_linked_cfas": new_linked_cfas or []},
                     actor, at, changes, rationale=notes,
                     request=f"resolve clarification {clarification} ({outcome})",
                     analysis=f"expert consultation by {expert}",
                     decision=f"{clarification} Resolved; "
                              f"{len(reverted)} CFA(s) reverted")
        return {"clarification": clarification, "outcome": outcome,
                "reverted_cfas": reverted, "replacement": replacement_id}

    def convert_clarification_to_task(self, clarification: str, expert: str,
                                      responsible_architect: str,
                                      due_date: str | None,
                                      actor: str = "architect",
                                      rationale: str = "", at=None) -> dict:
        at = self._now(at)
        st = self.state
        clar = st.clarifications.get(clarification)
        if clar is None:
            raise err.UnknownClarification(f"unknown clarification {clarification}",
                                           [clarification])
        if clar.status is not ClarificationStatus.OPEN:
            raise err.NotOpen(f"{clarification} is {clar.status.value}",
                              [clarification])
        for field_name, value in (("expert", expert),
                                  ("responsible_architect", responsible_architect),
                                  ("due_date", due_date)):
            if not value:
                raise err.MissingField(field_name)

        changes: list[FieldChange] = []
        task = Task(id=st.new_id("T"), origin_clarification=clarification,
                    linked_assumption=clar.linked_assumption, expert=expert,
                    responsible_architect=responsible_architect,
                    due_date=_parse_date(due_date))
        st.tasks[task.id] = task
        changes.append(_created(task))
        self._add_link(LinkKind.TASK_TO_ASSUMPTION, task.id,
                       clar.linked_assumption, changes)
        changes.append(_fc(clarification, "status", clar.status,
                           ClarificationStatus.CONVERTED_TO_TASK))
        clar.status = ClarificationStatus.CONVERTED_TO_TASK

        self._commit("convert_clarification_to_task",
                     {"clarification": clarification, "expert": expert,
                      "responsible_architect": responsible_architect,
                      "due_date": due_date},
                     actor, at, changes, rationale,
                     request=f"convert clarification {clarification} to task")
        return {"task": task.id, "clarification": clarification}

    def complete_task(self, task: str, outcome: str, notes: str,
                      new_text: str | None = None,
                      new_linked_cfas: list[str] | None = None,
                      actor: str = "architect", at=None) -> dict:
        at = self._now(at)
        st = self.state
        entity = st.tasks.get(task)
        if entity is None:
            raise err.UnknownTask(f"unknown task {task}", [task])
        if entity.status is not TaskStatus.OPEN:
            raise err.TaskNotOpen(f"{task} is {entity.status.value}", [task])
        if outcome not in ("Confirmed", "Corrected"):
            raise err.MissingField("outcome")
        if outcome == "Corrected" and not new_text:
            raise err.MissingField("new_text")

        changes: list[FieldChange] = []
        reverted: list[str] = []
        replacement_id = None
        if outcome == "Corrected":
            assumption = self._get_assumption(entity.linked_assumption)
            if assumption.validity is Validity.VALID:
                result = self._apply_invalidation(
                    assumption, notes,
                    {"text": new_text, "linked_cfas": new_linked_cfas or []},
                    entity.origin_clarification, changes)
                reverted = result["reverted_cfas"]
                replacement_id = result["replacement"]

        changes.append(_fc(task, "status", entity.status, TaskStatus.COMPLETE))
        entity.status = TaskStatus.COMPLETE
        changes.append(_fc(task, "outcome_notes", entity.outcome_notes, notes))
        entity.outcome_notes = notes

        clar = st.clarifications.get(entity.origin_clarification)
        if clar is not None:
            changes.append(_fc(clar.id, "resolution_notes",
                               clar.resolution_notes, notes))
            clar.resolution_notes = notes
            changes.append(_fc(clar.id, "resolved_by", clar.resolved_by,
                               entity.expert))
            clar.resolved_by = entity.expert

        self._commit("complete_task",
                     {"task": task, "outcome": outcome, "notes": notes,
                      "new_text": new_text,
                      "new_linked_cfas": new_linked_cfas or []},
                     actor, at, changes, rationale=notes,
                     request=f"complete task {task} ({outcome})",
                     decision=f"{task} Complete; {len(reverted)} CFA(s) reverted")
        return {"task": task, "outcome": outcome, "reverted_cfas": reverted,
                "replacement": replacement_id}

    # ------------------------------------------------------------------
    # selection and closure

    def _needy_cfas(self) -> list[Cfa]:
        return [c for c in self.state.cfas.values()
                if not c.archived and c.state is CfaState.PROCESSED
                and c.analysis is not None
                and not c.analysis.baseline_fulfills_dg]

    def _check_selection(self, chosen: set[str], rejections: dict) -> None:
        st = self.state
        unknown = sorted(chosen - set(st.design_alternatives))
        if unknown:
            raise err.UnknownDesignAlternative(
                f"unknown design alternatives: {', '.join(unknown)}", unknown)
        not_candidate = sorted(
            da_id for da_id in chosen
            if st.design_alternatives[da_id].status is not DaStatus.CANDIDATE)
        if not_candidate:
            raise err.UnknownDesignAlternative(
                f"not selectable (not Candidate): {', '.join(not_candidate)}",
                not_candidate)
        unprocessed = sorted(c.id for c in st.cfas.values()
                             if not c.archived and c.state is CfaState.UNPROCESSED)
        if unprocessed:
            raise err.UnprocessedCfasExist(
                f"unprocessed CFAs remain: {', '.join(unprocessed)}", unprocessed)
        uncovered = []
        for cfa in self._needy_cfas():
            linked = {l.to_id for l in st.links_from(cfa.id, LinkKind.CFA_TO_DA)}
            if not linked & chosen:
                uncovered.append(cfa.id)
        if uncovered:
            raise err.CoverageGap(
                f"CFAs without a chosen design alternative: {', '.join(uncovered)}",
                uncovered)
        missing = sorted(
            da.id for da in st.design_alternatives.values()
            if da.status is DaStatus.CANDIDATE and da.id not in chosen
            and not (rejections.get(da.id) or "").strip())
        if missing:
            raise err.MissingRejectionRationale(
                f"rejection rationale missing for: {', '.join(missing)}", missing)

    def _apply_selection(self, chosen: set[str], rationale: str,
                         rejections: dict, method_note: str,
                         changes: list[FieldChange]) -> Selection:
        st = self.state
        iteration = st.current_iteration()
        selection = Selection(id=st.new_id("S"), iteration=iteration.number,
                              chosen_das=set(chosen), rationale=rationale,
                              method_note=method_note)
        st.selections[selection.id] = selection
        changes.append(_created(selection))
        for da_id in sorted(chosen):
            da = st.design_alternatives[da_id]
            changes.append(_fc(da_id, "status", da.status, DaStatus.SELECTED))
            da.status = DaStatus.SELECTED
            self._add_link(LinkKind.DA_TO_SELECTION, da_id, selection.id, changes)
        for da in st.design_alternatives.values():
            if da.status is DaStatus.CANDIDATE and da.id not in chosen:
                changes.append(_fc(da.id, "status", da.status, DaStatus.REJECTED))
                da.status = DaStatus.REJECTED
                changes.append(_fc(da.id, "rejection_rationale",
                                   da.rejection_rationale, rejections[da.id]))
                da.rejection_rationale = rejections[da.id]
        return selection

    def make_selection(self, chosen_das: list[str], rationale: str,
                       rejections: dict | None = None, method_note: str = "",
                       actor: str = "architect", at=None) -> dict:
        at = self._now(at)
        self._require_open_iteration()
        if not rationale:
            raise err.MissingField("rationale")
        if self.state.current_selection() is not None:
            raise err.SelectionAlreadyMade(
                "a selection already exists for this iteration; use revise")
        chosen = set(chosen_das)
        rejections = rejections or {}
        self._check_selection(chosen, rejections)

        changes: list[FieldChange] = []
        selection = self._apply_selection(chosen, rationale, rejections,
                                          method_note, changes)
        self._commit("make_selection",
                     {"chosen_das": sorted(chosen), "rationale": rationale,
                      "rejections": rejections, "method_note": method_note},
                     actor, at, changes, rationale=rationale,
                     request="select design alternatives for this iteration",
                     analysis=f"chosen: {', '.join(sorted(chosen)) or 'none'}",
                     decision=f"selection {selection.id} recorded")
        return {"selection": selection.id, "chosen": sorted(chosen),
                "rejected": sorted(rejections)}

    def revise_selection(self, chosen_das: list[str], rationale: str,
                         rejections: dict | None = None, method_note: str = "",
                         actor: str = "architect", at=None) -> dict:
        at = self._now(at)
        st = self.state
        self._require_open_iteration()
        if not rationale:
            raise err.MissingField("rationale")
        prior = st.current_selection()
        if prior is None:
            raise err.NoSelectionToRevise("no selection exists to revise")

        changes: list[FieldChange] = []
        # reopen: superseded selection keeps its record; DA statuses reset
        for da in st.design_alternatives.values():
            if da.status in (DaStatus.SELECTED, DaStatus.REJECTED):
                changes.append(_fc(da.id, "status", da.status, DaStatus.CANDIDATE))
                da.status = DaStatus.CANDIDATE

        chosen = set(chosen_das)
        rejections = rejections or {}
        try:
            self._check_selection(chosen, rejections)
        except err.AtriumError:
            # roll back the tentative status resets before surfacing
            for change in reversed(changes):
                da = st.design_alternatives[change.entity_id]
                da.status = DaStatus(change.before)
            raise

        selection = self._apply_selection(chosen, rationale, rejections,
                                          method_note, changes)
        changes.append(_fc(prior.id, "superseded_by", None, selection.id))
        prior.superseded_by = selection.id

        self._commit("revise_selection",
                     {"chosen_das": sorted(chosen), "rationale": rationale,
                      "rejections": rejections, "method_note": method_note},
                     actor, at, changes, rationale=rationale,
                     request=f"revise selection {prior.id}",
                     decision=f"selection {prior.id} superseded by {selection.id}")
        return {"selection": selection.id, "superseded": prior.id,
                "chosen": sorted(chosen)}

    def close_iteration(self, actor: str = "architect", rationale: str = "",
                        at=None) -> dict:
        at = self._now(at)
        st = self.state
        iteration = self._require_open_iteration()

        open_clars = sorted(c.id for c in st.clarifications.values()
                            if c.status is ClarificationStatus.OPEN)
        unprocessed = sorted(c.id for c in st.cfas.values()
                             if not c.archived and c.state is CfaState.UNPROCESSED)
        selection = st.current_selection()
        if open_clars or unprocessed or selection is None:
            raise err.GateFailed(open_clars, unprocessed, selection is None)

        changes: list[FieldChange] = []
        risk_ids = []
        for task in st.tasks.values():
            if task.status is TaskStatus.OPEN:
                clar = st.clarifications.get(task.origin_clarification)
                risk = Risk(id=st.new_id("R"), source_task=task.id,
                            iteration=iteration.number,
                            description=f"unfinished task {task.id}"
                                        + (f": {clar.question}" if clar else ""))
                st.risks[risk.id] = risk
                risk_ids.append(risk.id)
                changes.append(_created(risk))

        deliverables = {
            "refined_pa": {
                "elements": sorted(e.id for e in st.elements.values()
                                   if not e.retired),
                "selected_das": sorted(selection.chosen_das),
                "selection": selection.id,
            },
            "assumption_list": [
                {"id": a.id, "text": a.text, "validity": a.validity.value,
                 "superseded_by": a.superseded_by}
                for a in st.assumptions.values()],
            "risk_list": risk_ids,
            "interpretation": INTERPRETATION_NOTE,
        }

        changes.append(_fc(f"IT-{iteration.number}", "status", iteration.status,
                           IterationStatus.CLOSED))
        iteration.status = IterationStatus.CLOSED
        changes.append(_fc(f"IT-{iteration.number}", "closed_at", None, at))
        iteration.closed_at = at
        changes.append(_fc(f"IT-{iteration.number}", "deliverables", None,
                           deliverables))
        iteration.deliverables = deliverables

        self._commit("close_iteration", {}, actor, at, changes, rationale,
                     request=f"close iteration {iteration.number}",
                     decision=f"iteration {iteration.number} closed with "
                              f"{len(risk_ids)} risk(s)")
        return {"iteration": iteration.number, "risks": risk_ids,
                "deliverables": deliverables}
