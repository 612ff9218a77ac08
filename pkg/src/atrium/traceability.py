"""Typed link-graph queries: back-trace, what-if impact, integrity checks.

All queries are read-only over an engine snapshot. Graphs are small
(hundreds of nodes), so plain traversals suffice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import errors as err
from .model import CfaState, LinkKind, validate_entity
from .state import ProjectState


@dataclass
class ImpactReport:
    trigger: str
    affected_cfas: set[str] = field(default_factory=set)
    affected_das: set[str] = field(default_factory=set)
    affected_selections: set[str] = field(default_factory=set)
    dependent_clarifications: set[str] = field(default_factory=set)
    dependent_tasks: set[str] = field(default_factory=set)

    def to_dict(self) -> dict:
        return {
            "trigger": self.trigger,
            "affected_cfas": sorted(self.affected_cfas),
            "affected_das": sorted(self.affected_das),
            "affected_selections": sorted(self.affected_selections),
            "dependent_clarifications": sorted(self.dependent_clarifications),
            "dependent_tasks": sorted(self.dependent_tasks),
        }


def back_trace(state: ProjectState, selection: str) -> dict:
    """Assumptions reachable backwards from a selection, with one witness
    path each and the total path count per assumption."""
    if selection not in state.selections:
        raise err.UnknownSelection(f"unknown selection {selection}", [selection])

    results: dict[str, dict] = {}
    das = [l.from_id for l in state.links_to(selection, LinkKind.DA_TO_SELECTION)]
    for da in das:
        cfas = [l.from_id for l in state.links_to(da, LinkKind.CFA_TO_DA)]
        for cfa in cfas:
            assumptions = [l.from_id
                           for l in state.links_to(cfa, LinkKind.ASSUMPTION_TO_CFA)]
            for a in assumptions:
                entry = results.setdefault(
                    a, {"path": [selection, da, cfa, a], "path_count": 0})
                entry["path_count"] += 1
    return results


def impact_of(state: ProjectState, assumption: str) -> ImpactReport:
    """What-if preview of invalidating an assumption; pure query."""
    if assumption not in state.assumptions:
        raise err.UnknownAssumption(f"unknown assumption {assumption}", [assumption])

    report = ImpactReport(trigger=assumption)
    for link in state.links_from(assumption, LinkKind.ASSUMPTION_TO_CFA):
        cfa = state.cfas.get(link.to_id)
        if cfa is None or cfa.archived or cfa.state is not CfaState.PROCESSED:
            continue
        report.affected_cfas.add(cfa.id)
        for cfa_da in state.links_from(cfa.id, LinkKind.CFA_TO_DA):
            report.affected_das.add(cfa_da.to_id)
            for da_sel in state.links_from(cfa_da.to_id, LinkKind.DA_TO_SELECTION):
                report.affected_selections.add(da_sel.to_id)
    for link in state.links_to(assumption, LinkKind.CLARIFICATION_TO_ASSUMPTION):
        report.dependent_clarifications.add(link.from_id)
    for link in state.links_to(assumption, LinkKind.TASK_TO_ASSUMPTION):
        report.dependent_tasks.add(link.from_id)
    return report


def integrity_check(state: ProjectState) -> list[str]:
    """Cross-entity consistency over the whole store."""
    violations: list[str] = []

    for collection in (state.elements, state.segments, state.failure_modes,
                       state.cfas, state.design_goals, state.design_alternatives,
                       state.assumptions, state.clarifications, state.tasks,
                       state.risks, state.selections, state.links):
        for entity in collection.values():
            violations.extend(validate_entity(entity))

    # dangling link endpoints
    for link in state.links.values():
        for endpoint in (link.from_id, link.to_id):
            try:
                _, collection, key = state.locate(endpoint)
            except KeyError:
                violations.append(f"{link.id}: endpoint {endpoint} has unknown kind")
                continue
            if key not in collection:
                violations.append(f"{link.id}: dangling endpoint {endpoint}")

    # duplicate (kind, from, to) triples
    seen = set()
    for link in state.links.values():
        triple = (link.kind, link.from_id, link.to_id)
        if triple in seen:
            violations.append(f"{link.id}: duplicate link {triple}")
        seen.add(triple)

    # (target, failure-mode) unique among non-archived CFAs
    pairs = set()
    for cfa in state.cfas.values():
        if cfa.archived:
            continue
        pair = (cfa.target, cfa.failure_mode)
        if pair in pairs:
            violations.append(f"{cfa.id}: duplicate (target, failure-mode) {pair}")
        pairs.add(pair)
        if cfa.design_goal and cfa.design_goal not in state.design_goals:
            violations.append(f"{cfa.id}: unknown design goal {cfa.design_goal}")
        if not cfa.design_goal:
            violations.append(f"{cfa.id}: CFA without a design goal")

    # every clarification keeps at least one assumption link
    for clar in state.clarifications.values():
        if not state.links_from(clar.id, LinkKind.CLARIFICATION_TO_ASSUMPTION):
            violations.append(f"{clar.id}: clarification without assumption link")

    # supersession points at a Valid assumption created no earlier
    for a in state.assumptions.values():
        if a.superseded_by is None:
            continue
        successor = state.assumptions.get(a.superseded_by)
        if successor is None:
            violations.append(f"{a.id}: superseded-by unknown {a.superseded_by}")
        elif successor.created_in_iteration < a.created_in_iteration:
            violations.append(
                f"{a.id}: successor {successor.id} created in an earlier iteration")

    # segment graph must be a forest
    for seg in state.segments.values():
        seen_ids = {seg.id}
        parent = seg.parent
        while parent is not None:
            if parent in seen_ids:
                violations.append(f"{seg.id}: segment parent cycle")
                break
            seen_ids.add(parent)
            parent_seg = state.segments.get(parent)
            if parent_seg is None:
                violations.append(f"{seg.id}: unknown parent segment {parent}")
                break
            parent = parent_seg.parent

    return violations


def export_graph_dot(state: ProjectState) -> str:
    """Link graph as a DOT document for standard graph-drawing tools."""
    lines = ["digraph traceability {", "  rankdir=LR;"]
    for link in state.links.values():
        lines.append(f'  "{link.from_id}" -> "{link.to_id}" '
                     f'[label="{link.kind.value}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
