/** Thin DOM rendering layer. No domain logic lives here: it renders the
 * structures produced by views.ts and wires buttons to API commands. */

import { ApiClient, CommandError } from "./api.js";
import type { ViewModel } from "./viewmodel.js";
import {
  applyGateFailure,
  cfaMatrixView,
  coverageGapHighlight,
  gateLights,
  impactWhatifView,
  ledgerBoard,
  selectionWorkspace,
  validateConvertForm,
  type GateLights,
} from "./views.js";

function el(tag: string, className: string, text = ""): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text) node.textContent = text;
  return node;
}

export function showBanner(message: string): void {
  const banner = document.getElementById("banner");
  if (!banner) return;
  banner.textContent = message;
  banner.classList.add("visible");
  setTimeout(() => banner.classList.remove("visible"), 6000);
}

export function surfaceError(error: unknown): void {
  if (error instanceof CommandError) {
    const ids = error.body.offending_ids.join(", ");
    showBanner(`${error.body.error_name}: ${error.body.detail}${ids ? ` (${ids})` : ""}`);
  } else {
    showBanner(String(error));
  }
}

export function renderMatrix(
  model: ViewModel,
  highlighted: Set<string>,
  onCellClick: (cfaId: string) => void,
): void {
  const root = document.getElementById("matrix");
  if (!root) return;
  root.replaceChildren();
  const matrix = cfaMatrixView(model);

  const table = el("table", "cfa-matrix");
  const head = el("tr", "");
  head.append(el("th", "", "target"));
  for (const mode of matrix.failureModes) {
    head.append(el("th", "", mode.name));
  }
  table.append(head);
  for (const row of matrix.rows) {
    const tr = el("tr", row.targetKind);
    tr.append(el("td", "target-label", row.targetLabel));
    for (const cell of row.cells) {
      if (cell === null) {
        tr.append(el("td", "cell empty"));
        continue;
      }
      const classes = [
        "cell",
        cell.state.toLowerCase(),
        cell.flagged ? "flagged" : "",
        highlighted.has(cell.cfaId) ? "highlighted" : "",
      ].join(" ");
      const td = el("td", classes, cell.cfaId);
      td.addEventListener("click", () => onCellClick(cell.cfaId));
      tr.append(td);
    }
    table.append(tr);
  }
  root.append(table);

  const summary = el("div", "segment-summary");
  for (const [name, counts] of Object.entries(matrix.segmentSummary)) {
    summary.append(
      el("span", "chip", `${name}: ${counts.processed}/${counts.total}`),
    );
  }
  root.append(summary);
}

export function renderImpact(
  client: ApiClient,
  assumptionId: string,
  refreshAll: () => Promise<void>,
): Promise<void> {
  return client
    .impactOf(assumptionId)
    .then((report) => {
      const view = impactWhatifView(report);
      const root = document.getElementById("impact");
      if (!root) return;
      root.replaceChildren();
      if (view.empty) {
        root.append(el("p", "empty", "no downstream effect"));
      } else {
        for (const [section, ids] of Object.entries(view.sections)) {
          if (section === "trigger" || !Array.isArray(ids) || !ids.length)
            continue;
          root.append(el("h4", "", section.replaceAll("_", " ")));
          const list = el("ul", "");
          for (const id of ids) list.append(el("li", "highlighted", id));
          root.append(list);
        }
      }
      const button = el("button", "danger", "invalidate with rationale");
      button.addEventListener("click", async () => {
        const reason = window.prompt("Invalidation rationale?");
        if (!reason) return;
        try {
          const result = await client.command("invalidate_assumption", {
            assumption: assumptionId,
            reason,
          });
          showBanner(
            `reverted: ${((result["reverted_cfas"] as string[]) ?? []).join(", ") || "none"}`,
          );
          await refreshAll();
        } catch (error) {
          surfaceError(error);
        }
      });
      root.append(button);
    })
    .catch(surfaceError);
}

export function renderLedger(model: ViewModel, client: ApiClient,
                             refreshAll: () => Promise<void>): void {
  const root = document.getElementById("ledger");
  if (!root) return;
  root.replaceChildren();
  const board = ledgerBoard(model);

  const columns: [string, { id: string }[]][] = [
    ["Open clarifications", board.openClarifications],
    ["Tasks", board.tasks],
    ["Resolved", board.resolved],
  ];
  for (const [title, cards] of columns) {
    const column = el("div", "column");
    column.append(el("h3", "", `${title} (${cards.length})`));
    for (const card of cards) {
      const node = el("div", "card", JSON.stringify(card));
      if (title === "Open clarifications") {
        const convert = el("button", "", "convert to task");
        convert.addEventListener("click", async () => {
          const fields = {
            expert: window.prompt("Expert?") ?? "",
            responsibleArchitect: window.prompt("Responsible architect?") ?? "",
            dueDate: window.prompt("Due date (YYYY-MM-DD)?") ?? "",
            rationale: window.prompt("Rationale?") ?? "",
          };
          const missing = validateConvertForm(fields);
          if (missing.length) {
            showBanner(`missing fields: ${missing.join(", ")}`); // no request sent
            return;
          }
          try {
            await client.command("convert_clarification_to_task", {
              clarification: card.id,
              expert: fields.expert,
              responsible_architect: fields.responsibleArchitect,
              due_date: fields.dueDate,
              rationale: fields.rationale,
            });
            await refreshAll();
          } catch (error) {
            surfaceError(error);
          }
        });
        node.append(convert);
      }
      column.append(node);
    }
    root.append(column);
  }

  const assumptions = el("div", "assumption-list");
  assumptions.append(el("h3", "", `Assumptions (${board.assumptions.length})`));
  for (const a of board.assumptions) {
    const badge = a.validity === "Valid" ? "badge valid" : "badge invalid";
    const row = el("div", "assumption-row");
    row.append(el("span", badge, a.validity));
    row.append(el("span", "", `${a.id}: ${a.text}`));
    if (a.supersededBy) row.append(el("span", "muted", `→ ${a.supersededBy}`));
    assumptions.append(row);
  }
  root.append(assumptions);
}

export function renderGate(
  model: ViewModel,
  lights: GateLights | null,
  client: ApiClient,
  refreshAll: () => Promise<void>,
): void {
  const root = document.getElementById("gate");
  if (!root) return;
  root.replaceChildren();
  const status = lights ?? gateLights(model);

  const panel = el("div", "gate-panel");
  const light = (label: string, bad: boolean, ids: string[]) => {
    const node = el("div", bad ? "light red" : "light green", label);
    if (ids.length) node.append(el("span", "ids", ids.join(", ")));
    return node;
  };
  panel.append(
    light("clarifications", status.openClarifications.length > 0,
          status.openClarifications),
    light("cfas processed", status.unprocessedCfas.length > 0,
          status.unprocessedCfas),
    light("selection", status.selectionMissing, []),
  );

  const close = el("button", "primary", "close iteration") as HTMLButtonElement;
  close.disabled = !status.closeEnabled;
  close.addEventListener("click", async () => {
    try {
      await client.command("close_iteration", {
        rationale: window.prompt("Closure rationale?") ?? "gate passed",
      });
      await refreshAll();
      showBanner("iteration closed — deliverables ready");
    } catch (error) {
      if (error instanceof CommandError && error.body.error_name === "GateFailed") {
        renderGate(model, applyGateFailure(error.body), client, refreshAll);
      }
      surfaceError(error);
    }
  });
  panel.append(close);
  root.append(panel);
}

export function renderSelection(
  model: ViewModel,
  client: ApiClient,
  refreshAll: () => Promise<void>,
  onCoverageGap: (uncovered: Set<string>) => void,
): void {
  const root = document.getElementById("selection");
  if (!root) return;
  root.replaceChildren();
  const workspace = selectionWorkspace(model);

  const coverage = el("div", "coverage-map");
  for (const [cfa, das] of Object.entries(workspace.neededBy)) {
    coverage.append(el("div", "", `${cfa} ← ${das.join(", ")}`));
  }
  root.append(coverage);

  const chosen = new Set<string>();
  const list = el("div", "candidates");
  for (const candidate of workspace.candidates) {
    const row = el("label", "candidate");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.addEventListener("change", () =>
      box.checked ? chosen.add(candidate.id) : chosen.delete(candidate.id),
    );
    row.append(box, el("span", "", `${candidate.id}: ${candidate.description}`));
    list.append(row);
  }
  root.append(list);

  const submit = el("button", "primary", "make selection");
  submit.addEventListener("click", async () => {
    const picked = [...chosen];
    const rejections: Record<string, string> = {};
    for (const id of workspace.rejectionNeeded(picked)) {
      rejections[id] = window.prompt(`Rejection rationale for ${id}?`) ?? "";
    }
    try {
      await client.command("make_selection", {
        chosen_das: picked,
        rationale: window.prompt("Selection rationale?") ?? "",
        rejections,
      });
      await refreshAll();
    } catch (error) {
      if (error instanceof CommandError && error.body.error_name === "CoverageGap") {
        onCoverageGap(coverageGapHighlight(error.body));
      }
      surfaceError(error);
    }
  });
  root.append(submit);
}

export function renderDeliverableLinks(baseUrl: string, iteration: number): void {
  const root = document.getElementById("deliverables");
  if (!root) return;
  root.replaceChildren();
  for (const name of ["refined_pa", "assumption_list", "risk_list"]) {
    const link = document.createElement("a");
    link.href = `${baseUrl}/v1/deliverables/${iteration}`;
    link.textContent = `${name} (iteration ${iteration})`;
    link.className = "deliverable-link";
    root.append(link);
  }
}
