"""Durable project store: line-delimited JSON collections, iteration
baselines, architecture import, and document exports.

One file per entity collection with stable key order, so project history
diffs cleanly under version control.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from filelock import FileLock, Timeout

from . import errors as err
from .engine import INTERPRETATION_NOTE
from .model import CfaState, IterationStatus, LinkKind
from .state import ProjectState
from .traceability import integrity_check

COLLECTION_FILES = [
    "elements", "segments", "failure_modes", "cfas", "design_goals",
    "design_alternatives", "assumptions", "clarifications", "tasks",
    "risks", "selections", "links", "review_queues", "iterations",
]
LOG_FILES = ["change_log", "operation_log"]


class ProjectStore:
    """Filesystem-backed project store rooted at a directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def lock(self, timeout: float = 5.0) -> FileLock:
        self.root.mkdir(parents=True, exist_ok=True)
        lock = FileLock(str(self.root / ".lock"))
        try:
            lock.acquire(timeout=timeout)
        except Timeout:
            raise err.StoreLocked(f"store at {self.root} is locked by another writer")
        return lock

    def exists(self) -> bool:
        return (self.root / "project.json").exists()

    def save(self, state: ProjectState, check_integrity: bool = True) -> None:
        if check_integrity:
            violations = integrity_check(state)
            if violations:
                raise err.IntegrityError(violations)
        self.root.mkdir(parents=True, exist_ok=True)
        data = state.to_dict()
        for name in COLLECTION_FILES + LOG_FILES:
            path = self.root / f"{name}.jsonl"
            with path.open("w") as fh:
                for record in data[name]:
                    fh.write(json.dumps(record, default=str) + "\n")
        (self.root / "project.json").write_text(json.dumps(
            {"counters": data["counters"], "config": data["config"]}, indent=2) + "\n")
        self._write_baselines(state)

    def load(self) -> ProjectState:
        data: dict = {}
        for name in COLLECTION_FILES + LOG_FILES:
            path = self.root / f"{name}.jsonl"
            records = []
            if path.exists():
                with path.open() as fh:
                    for lineno, line in enumerate(fh, start=1):
                        line = line.strip()
                        if not line:
                            continue
                        try:
                            records.append(json.loads(line))
                        except json.JSONDecodeError as exc:
                            raise err.ParseError(str(path), lineno, str(exc))
            data[name] = records
        meta_path = self.root / "project.json"
        if meta_path.exists():
            try:
                meta = json.loads(meta_path.read_text())
            except json.JSONDecodeError as exc:
                raise err.ParseError(str(meta_path), exc.lineno, exc.msg)
            data["counters"] = meta.get("counters", {})
            data["config"] = meta.get("config", {})
        return ProjectState.from_dict(data)

    def _write_baselines(self, state: ProjectState) -> None:
        """Snapshot deliverables per closed iteration; immutable once written."""
        for iteration in state.iterations.values():
            if iteration.status is not IterationStatus.CLOSED:
                continue
            target = self.root / "baselines" / f"iteration-{iteration.number:03d}"
            if target.exists():
                continue
            target.mkdir(parents=True)
            docs = export_deliverables(state, iteration.number)
            (target / "snapshot.json").write_text(
                json.dumps(iteration.deliverables, indent=2, default=str) + "\n")
            for doc_name, text in docs.items():
                (target / f"{doc_name}.md").write_text(text)


# ---------------------------------------------------------------------------
# architecture import


def parse_architecture_file(path: str | Path) -> dict:
    """Parse an architecture description (JSON) into element/segment records."""
    path = Path(path)
    try:
        data = json.loads(path.read_text() or "{}")
    except json.JSONDecodeError as exc:
        raise err.ParseError(str(path), exc.lineno, exc.msg)
    if not isinstance(data, dict):
        raise err.ParseError(str(path), 1, "expected a JSON object")
    elements = data.get("elements", [])
    segments = data.get("segments", [])
    names = [e.get("name") for e in elements]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise err.DuplicateElementName(
            f"duplicate element names in {path.name}: {', '.join(dupes)}", dupes)
    warnings = []
    if not elements:
        warnings.append("architecture file lists no elements")
    return {"elements": elements, "segments": segments, "warnings": warnings}


# ---------------------------------------------------------------------------
# exports

FMEA_HEADER = ["cfa_id", "target", "failure_mode", "design_goal", "state",
               "functional_effect", "baseline_fulfills_dg", "da_ids",
               "assumption_ids"]


def export_fmea(state: ProjectState, include_archived: bool = False) -> str:
    """FMEA-style table, one row per CFA, as CSV with quoted fields."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, quoting=csv.QUOTE_ALL)
    writer.writerow(FMEA_HEADER)
    for cfa in state.cfas.values():
        if cfa.archived and not include_archived:
            continue
        das = sorted(l.to_id for l in state.links_from(cfa.id, LinkKind.CFA_TO_DA))
        assumptions = sorted(l.from_id for l in
                             state.links_to(cfa.id, LinkKind.ASSUMPTION_TO_CFA))
        analysis = cfa.analysis
        writer.writerow([
            cfa.id, cfa.target, cfa.failure_mode, cfa.design_goal or "",
            cfa.state.value,
            analysis.functional_effect if analysis else "",
            str(analysis.baseline_fulfills_dg).lower() if analysis else "",
            ";".join(das), ";".join(assumptions),
        ])
    return buffer.getvalue()


def export_deliverables(state: ProjectState, iteration: int) -> dict[str, str]:
    """The three iteration deliverables as human-readable documents."""
    record = state.iterations.get(iteration)
    if record is None or record.status is not IterationStatus.CLOSED:
        raise err.IterationNotClosed(f"iteration {iteration} is not closed")
    deliverables = record.deliverables or {}
    banner = f"> {deliverables.get('interpretation', INTERPRETATION_NOTE)}\n"

    assumption_lines = [f"# Assumption list — iteration {iteration}", "", banner]
    for entry in deliverables.get("assumption_list", []):
        suffix = f" (superseded by {entry['superseded_by']})" \
            if entry.get("superseded_by") else ""
        assumption_lines.append(
            f"- **{entry['id']}** [{entry['validity']}]{suffix}: {entry['text']}")

    risk_lines = [f"# Risk list — iteration {iteration}", "", banner]
    for risk_id in deliverables.get("risk_list", []):
        risk = state.risks[risk_id]
        task = state.tasks.get(risk.source_task)
        owner = f" (owner: {task.responsible_architect}, expert: {task.expert}, " \
                f"due: {task.due_date})" if task else ""
        risk_lines.append(f"- **{risk.id}**: {risk.description}{owner}")

    pa = deliverables.get("refined_pa", {})
    pa_lines = [f"# Refined preliminary architecture — iteration {iteration}",
                "", banner, "## Elements", ""]
    for element_id in pa.get("elements", []):
        element = state.elements[element_id]
        segment = state.segments[element.segment].name if element.segment else "-"
        pa_lines.append(f"- **{element.id}** {element.name} "
                        f"({element.kind.value}, {element.state.value}, "
                        f"segment: {segment})")
    pa_lines += ["", "## Selected design alternatives", ""]
    for da_id in pa.get("selected_das", []):
        da = state.design_alternatives[da_id]
        pa_lines.append(f"- **{da.id}**: {da.description}")

    return {
        "assumption_list": "\n".join(assumption_lines) + "\n",
        "risk_list": "\n".join(risk_lines) + "\n",
        "refined_pa": "\n".join(pa_lines) + "\n",
    }
