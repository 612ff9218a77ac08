import { describe, expect, it } from "vitest";

import type { ApiError, Cfa, ImpactReport } from "../src/api.js";
import { emptyViewModel, type ViewModel } from "../src/viewmodel.js";
import {
  applyGateFailure,
  cfaMatrixView,
  coverageGapHighlight,
  gateLights,
  impactWhatifView,
  ledgerBoard,
  selectionWorkspace,
  validateConvertForm,
  validateResolveForm,
} from "../src/views.js";

function cfa(partial: Partial<Cfa> & { id: string }): Cfa {
  return {
    target: "E-1",
    failure_mode: "FM-1",
    design_goal: "DG-1",
    state: "Unprocessed",
    archived: false,
    flagged_for_review: false,
    analysis: null,
    ...partial,
  };
}

function toyModel(): ViewModel {
  const model = emptyViewModel();
  model.elements = [
    { id: "E-1", name: "gps", kind: "hardware", state: "Legacy", segment: "SEG-1", retired: false },
    { id: "E-2", name: "imu", kind: "hardware", state: "Legacy", segment: "SEG-1", retired: false },
    { id: "E-3", name: "planner", kind: "software", state: "Legacy", segment: null, retired: false },
  ];
  model.segments = [
    { id: "SEG-1", name: "nav", parent: null, member_elements: ["E-1", "E-2"] },
  ];
  model.failureModes = [
    { id: "FM-1", name: "omission", scope: "PerElement" },
    { id: "FM-2", name: "power-loss", scope: "PerElement" },
  ];
  model.cfas = [
    cfa({ id: "CFA-1", target: "E-1", failure_mode: "FM-1" }),
    cfa({ id: "CFA-2", target: "E-1", failure_mode: "FM-2" }),
    cfa({ id: "CFA-3", target: "E-2", failure_mode: "FM-1" }),
    cfa({ id: "CFA-4", target: "E-2", failure_mode: "FM-2" }),
    cfa({ id: "CFA-5", target: "E-3", failure_mode: "FM-1" }),
    cfa({ id: "CFA-6", target: "E-3", failure_mode: "FM-2" }),
  ];
  model.openIteration = 1;
  return model;
}

describe("cfaMatrixView", () => {
  it("renders a 3x2 toy project as 6 unprocessed cells", () => {
    const matrix = cfaMatrixView(toyModel());
    expect(matrix.failureModes.map((m) => m.name)).toEqual([
      "omission",
      "power-loss",
    ]);
    expect(matrix.rows).toHaveLength(3);
    const cells = matrix.rows.flatMap((r) => r.cells);
    expect(cells).toHaveLength(6);
    expect(cells.every((c) => c !== null && c.state === "Unprocessed")).toBe(
      true,
    );
  });

  it("marks archived CFAs struck-through and excludes them from counts", () => {
    const model = toyModel();
    model.cfas[0]!.archived = true;
    const matrix = cfaMatrixView(model);
    const cell = matrix.rows.find((r) => r.targetId === "E-1")!.cells[0]!;
    expect(cell.state).toBe("archived");
    expect(matrix.segmentSummary["nav"]!.total).toBe(3); // 4 minus archived
    // archived cells are also excluded from gate counts
    expect(gateLights(model).unprocessedCfas).not.toContain("CFA-1");
  });

  it("rolls summary counts up to segments", () => {
    const model = toyModel();
    model.cfas[2]!.state = "Processed";
    const matrix = cfaMatrixView(model);
    expect(matrix.segmentSummary["nav"]).toEqual({ total: 4, processed: 1 });
    expect(matrix.segmentSummary["(none)"]).toEqual({ total: 2, processed: 0 });
  });
});

describe("impactWhatifView", () => {
  it("shows the no-downstream-effect state for an empty report", () => {
    const report: ImpactReport = {
      trigger: "A-1",
      affected_cfas: [],
      affected_das: [],
      affected_selections: [],
      dependent_clarifications: [],
      dependent_tasks: [],
    };
    const view = impactWhatifView(report);
    expect(view.empty).toBe(true);
    expect(view.highlighted.size).toBe(0);
  });

  it("highlights exactly the report entities", () => {
    const report: ImpactReport = {
      trigger: "A-2",
      affected_cfas: ["CFA-3"],
      affected_das: ["DA-1"],
      affected_selections: ["S-1"],
      dependent_clarifications: [],
      dependent_tasks: [],
    };
    const view = impactWhatifView(report);
    expect(view.highlighted).toEqual(new Set(["CFA-3", "DA-1", "S-1"]));
    expect(view.sections).toEqual(report);
  });
});

describe("ledgerBoard", () => {
  it("splits clarifications by status and badges assumptions", () => {
    const model = toyModel();
    model.clarifications = [
      { id: "C-1", question: "q1", status: "Open", linked_assumption: "A-1", resolution_notes: null },
      { id: "C-2", question: "q2", status: "Resolved", linked_assumption: "A-2", resolution_notes: "checked" },
      { id: "C-3", question: "q3", status: "ConvertedToTask", linked_assumption: "A-3", resolution_notes: null },
    ];
    model.tasks = [
      { id: "T-1", origin_clarification: "C-3", status: "Open", expert: "e", responsible_architect: "a", due_date: "2026-09-01" },
    ];
    model.assumptions = [
      { id: "A-1", text: "t1", validity: "Valid", superseded_by: null },
      { id: "A-2", text: "t2", validity: "Invalid", superseded_by: "A-4" },
    ];
    const board = ledgerBoard(model);
    expect(board.openClarifications.map((c) => c.id)).toEqual(["C-1"]);
    expect(board.resolved.map((c) => c.id)).toEqual(["C-2"]);
    expect(board.tasks).toHaveLength(1);
    expect(board.assumptions[1]).toMatchObject({
      validity: "Invalid",
      supersededBy: "A-4",
    });
  });
});

describe("form validation mirrors the server preconditions", () => {
  it("convert without due date blocks the request", () => {
    const missing = validateConvertForm({
      expert: "e",
      responsibleArchitect: "a",
      rationale: "r",
    });
    expect(missing).toEqual(["due_date"]);
  });

  it("complete convert form passes", () => {
    expect(
      validateConvertForm({
        expert: "e",
        responsibleArchitect: "a",
        dueDate: "2026-09-01",
        rationale: "r",
      }),
    ).toEqual([]);
  });

  it("resolve requires a known outcome, expert, and notes", () => {
    expect(validateResolveForm({ outcome: "Maybe" })).toEqual([
      "outcome",
      "expert",
      "notes",
    ]);
    expect(
      validateResolveForm({ outcome: "Confirmed", expert: "e", notes: "n" }),
    ).toEqual([]);
  });
});

describe("gateLights", () => {
  it("close enabled only when all three conditions clear", () => {
    const model = toyModel();
    expect(gateLights(model).closeEnabled).toBe(false); // unprocessed CFAs

    for (const c of model.cfas) {
      c.state = "Processed";
      c.analysis = { functional_effect: "ok", baseline_fulfills_dg: true };
    }
    expect(gateLights(model)).toMatchObject({
      unprocessedCfas: [],
      selectionMissing: true,
      closeEnabled: false,
    });

    model.selections = [
      { id: "S-1", chosen_das: [], iteration: 1, superseded_by: null },
    ];
    expect(gateLights(model).closeEnabled).toBe(true);

    model.clarifications = [
      { id: "C-1", question: "q", status: "Open", linked_assumption: "A-1", resolution_notes: null },
    ];
    const lights = gateLights(model);
    expect(lights.openClarifications).toEqual(["C-1"]);
    expect(lights.closeEnabled).toBe(false);
  });

  it("superseded selections do not satisfy the gate", () => {
    const model = toyModel();
    for (const c of model.cfas) c.state = "Processed";
    model.selections = [
      { id: "S-1", chosen_das: [], iteration: 1, superseded_by: "S-2" },
    ];
    expect(gateLights(model).selectionMissing).toBe(true);
  });

  it("applyGateFailure mirrors the server error body verbatim", () => {
    const body = {
      error_name: "GateFailed",
      detail: "gate conditions failed",
      offending_ids: [],
      open_clarifications: ["C-9"],
      unprocessed_cfas: ["CFA-2", "CFA-5"],
      selection_missing: true,
    } as ApiError;
    expect(applyGateFailure(body)).toEqual({
      openClarifications: ["C-9"],
      unprocessedCfas: ["CFA-2", "CFA-5"],
      selectionMissing: true,
      closeEnabled: false,
    });
  });
});

describe("selectionWorkspace", () => {
  it("maps needy CFAs to linked DAs and demands rejection rationales", () => {
    const model = toyModel();
    model.cfas[0]!.state = "Processed";
    model.cfas[0]!.analysis = {
      functional_effect: "stops",
      baseline_fulfills_dg: false,
    };
    model.designAlternatives = [
      { id: "DA-1", description: "fix", status: "Candidate", satisfies_cfas: ["CFA-1"], rejection_rationale: null },
      { id: "DA-2", description: "alt", status: "Candidate", satisfies_cfas: ["CFA-1"], rejection_rationale: null },
      { id: "DA-3", description: "old", status: "Rejected", satisfies_cfas: [], rejection_rationale: "past" },
    ];
    model.links = [
      { id: "L-1", kind: "CfaToDa", from_id: "CFA-1", to_id: "DA-1" },
      { id: "L-2", kind: "CfaToDa", from_id: "CFA-1", to_id: "DA-2" },
    ];
    const workspace = selectionWorkspace(model);
    expect(workspace.neededBy).toEqual({ "CFA-1": ["DA-1", "DA-2"] });
    expect(workspace.candidates.map((c) => c.id)).toEqual(["DA-1", "DA-2"]);
    expect(workspace.rejectionNeeded(["DA-1"])).toEqual(["DA-2"]);
  });

  it("coverage gap highlight carries the offending CFA ids", () => {
    const body: ApiError = {
      error_name: "CoverageGap",
      detail: "CFAs without a chosen design alternative: CFA-7",
      offending_ids: ["CFA-7"],
    };
    expect(coverageGapHighlight(body)).toEqual(new Set(["CFA-7"]));
  });
});
