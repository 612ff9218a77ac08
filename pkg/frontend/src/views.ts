/** Pure view derivations. Everything here is a reshaping of mirrored API
 * data for display — the server stays the authority on all domain logic,
 * and authoritative derived sets (impact, coverage gaps, gate verdicts)
 * always come from API responses or error bodies. */

import type { ApiError, ImpactReport } from "./api.js";
import type { ViewModel } from "./viewmodel.js";

// ---------------------------------------------------------------------------
// CFA matrix

export type CellState = "Unprocessed" | "Processed" | "archived";

export interface MatrixCell {
  cfaId: string;
  state: CellState;
  flagged: boolean;
}

export interface MatrixRow {
  targetId: string;
  targetLabel: string;
  targetKind: "element" | "segment";
  cells: (MatrixCell | null)[];
}

export interface CfaMatrix {
  failureModes: { id: string; name: string }[];
  rows: MatrixRow[];
  /** Non-archived CFA counts per segment name (elements roll up to their
   * segment; segment-targeted CFAs count toward that segment). */
  segmentSummary: Record<string, { total: number; processed: number }>;
}

export function cfaMatrixView(model: ViewModel): CfaMatrix {
  const modes = model.failureModes.map((m) => ({ id: m.id, name: m.name }));
  const modeIndex = new Map(modes.map((m, i) => [m.id, i]));

  const byTarget = new Map<string, MatrixCell[]>();
  for (const cfa of model.cfas) {
    const column = modeIndex.get(cfa.failure_mode);
    if (column === undefined) continue;
    const cells =
      byTarget.get(cfa.target) ??
      new Array<MatrixCell | null>(modes.length).fill(null);
    cells[column] = {
      cfaId: cfa.id,
      state: cfa.archived ? "archived" : cfa.state,
      flagged: cfa.flagged_for_review,
    };
    byTarget.set(cfa.target, cells as MatrixCell[]);
  }

  const elementNames = new Map(model.elements.map((e) => [e.id, e.name]));
  const segmentNames = new Map(model.segments.map((s) => [s.id, s.name]));
  const rows: MatrixRow[] = [];
  for (const [targetId, cells] of byTarget) {
    const isSegment = segmentNames.has(targetId);
    rows.push({
      targetId,
      targetLabel:
        elementNames.get(targetId) ?? segmentNames.get(targetId) ?? targetId,
      targetKind: isSegment ? "segment" : "element",
      cells,
    });
  }
  rows.sort((a, b) => a.targetId.localeCompare(b.targetId));

  const elementSegment = new Map(
    model.elements.map((e) => [e.id, e.segment]),
  );
  const segmentSummary: CfaMatrix["segmentSummary"] = {};
  for (const cfa of model.cfas) {
    if (cfa.archived) continue; // archived cells are struck through, not counted
    const segId = segmentNames.has(cfa.target)
      ? cfa.target
      : elementSegment.get(cfa.target);
    const name = segId ? (segmentNames.get(segId) ?? "(none)") : "(none)";
    const bucket = (segmentSummary[name] ??= { total: 0, processed: 0 });
    bucket.total += 1;
    if (cfa.state === "Processed") bucket.processed += 1;
  }
  return { failureModes: modes, rows, segmentSummary };
}

// ---------------------------------------------------------------------------
// impact what-if

export interface ImpactHighlight {
  trigger: string;
  highlighted: Set<string>;
  sections: ImpactReport;
  empty: boolean;
}

/** Highlight exactly the entities in the API's impact report. */
export function impactWhatifView(report: ImpactReport): ImpactHighlight {
  const highlighted = new Set<string>([
    ...report.affected_cfas,
    ...report.affected_das,
    ...report.affected_selections,
    ...report.dependent_clarifications,
    ...report.dependent_tasks,
  ]);
  return {
    trigger: report.trigger,
    highlighted,
    sections: report,
    empty: highlighted.size === 0,
  };
}

// ---------------------------------------------------------------------------
// ledger board

export interface LedgerBoard {
  openClarifications: { id: string; question: string }[];
  tasks: { id: string; status: string; dueDate: string | null }[];
  resolved: { id: string; question: string; notes: string | null }[];
  assumptions: {
    id: string;
    text: string;
    validity: "Valid" | "Invalid";
    supersededBy: string | null;
  }[];
}

export function ledgerBoard(model: ViewModel): LedgerBoard {
  return {
    openClarifications: model.clarifications
      .filter((c) => c.status === "Open")
      .map((c) => ({ id: c.id, question: c.question })),
    tasks: model.tasks.map((t) => ({
      id: t.id,
      status: t.status,
      dueDate: t.due_date,
    })),
    resolved: model.clarifications
      .filter((c) => c.status === "Resolved")
      .map((c) => ({
        id: c.id,
        question: c.question,
        notes: c.resolution_notes,
      })),
    assumptions: model.assumptions.map((a) => ({
      id: a.id,
      text: a.text,
      validity: a.validity,
      supersededBy: a.superseded_by,
    })),
  };
}

/** Client-side mirror of the server's mandatory-field checks for the
 * convert-to-task form. The server re-validates; this only prevents a
 * request that is certain to be rejected. */
export function validateConvertForm(fields: {
  expert?: string;
  responsibleArchitect?: string;
  dueDate?: string;
  rationale?: string;
}): string[] {
  const missing: string[] = [];
  if (!fields.expert) missing.push("expert");
  if (!fields.responsibleArchitect) missing.push("responsible_architect");
  if (!fields.dueDate) missing.push("due_date");
  if (!fields.rationale) missing.push("rationale");
  return missing;
}

export function validateResolveForm(fields: {
  outcome?: string;
  expert?: string;
  notes?: string;
}): string[] {
  const missing: string[] = [];
  if (fields.outcome !== "Confirmed" && fields.outcome !== "Corrected") {
    missing.push("outcome");
  }
  if (!fields.expert) missing.push("expert");
  if (!fields.notes) missing.push("notes");
  return missing;
}

// ---------------------------------------------------------------------------
// iteration gate + selection workspace

export interface GateLights {
  openClarifications: string[];
  unprocessedCfas: string[];
  selectionMissing: boolean;
  closeEnabled: boolean;
}

/** Presentational filter over mirrored collections. The authoritative
 * verdict is the server's close_iteration response; on rejection the
 * GateFailed body replaces these lists verbatim (see applyGateFailure). */
export function gateLights(model: ViewModel): GateLights {
  const openClarifications = model.clarifications
    .filter((c) => c.status === "Open")
    .map((c) => c.id);
  const unprocessedCfas = model.cfas
    .filter((c) => !c.archived && c.state === "Unprocessed")
    .map((c) => c.id);
  const selectionMissing = !model.selections.some(
    (s) => s.iteration === model.openIteration && s.superseded_by === null,
  );
  return {
    openClarifications,
    unprocessedCfas,
    selectionMissing,
    closeEnabled:
      openClarifications.length === 0 &&
      unprocessedCfas.length === 0 &&
      !selectionMissing,
  };
}

/** Replace the lights with the server's GateFailed error body. */
export function applyGateFailure(body: ApiError): GateLights {
  const record = body as Record<string, unknown>;
  const openClarifications = (record["open_clarifications"] ?? []) as string[];
  const unprocessedCfas = (record["unprocessed_cfas"] ?? []) as string[];
  const selectionMissing = Boolean(record["selection_missing"]);
  return {
    openClarifications,
    unprocessedCfas,
    selectionMissing,
    closeEnabled: false,
  };
}

export interface CoverageMap {
  /** Needy CFA (processed, baseline does not fulfil the design goal) →
   * linked design-alternative ids, straight from the link mirror. */
  neededBy: Record<string, string[]>;
  candidates: { id: string; description: string }[];
  /** Unchosen candidates that still need a rejection rationale before
   * make_selection can be submitted. */
  rejectionNeeded: (chosen: string[]) => string[];
}

export function selectionWorkspace(model: ViewModel): CoverageMap {
  const neededBy: Record<string, string[]> = {};
  const needy = new Set(
    model.cfas
      .filter(
        (c) =>
          !c.archived &&
          c.state === "Processed" &&
          c.analysis !== null &&
          !c.analysis.baseline_fulfills_dg,
      )
      .map((c) => c.id),
  );
  for (const link of model.links) {
    if (link.kind === "CfaToDa" && needy.has(link.from_id)) {
      (neededBy[link.from_id] ??= []).push(link.to_id);
    }
  }
  const candidates = model.designAlternatives
    .filter((da) => da.status === "Candidate")
    .map((da) => ({ id: da.id, description: da.description }));
  return {
    neededBy,
    candidates,
    rejectionNeeded: (chosen: string[]) =>
      candidates.map((c) => c.id).filter((id) => !chosen.includes(id)),
  };
}

/** Uncovered-CFA highlight from a CoverageGap error body: the offending
 * ids are CFA ids to mark in the matrix. */
export function coverageGapHighlight(body: ApiError): Set<string> {
  return new Set(body.offending_ids);
}
