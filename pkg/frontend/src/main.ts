/** Browser bootstrap: poll-based refresh against the /v1 API. */

import { ApiClient } from "./api.js";
import {
  renderDeliverableLinks,
  renderGate,
  renderImpact,
  renderLedger,
  renderMatrix,
  renderSelection,
  surfaceError,
} from "./dom.js";
import { emptyViewModel, pollCycle, refresh, type ViewModel } from "./viewmodel.js";

const POLL_INTERVAL_MS = 3000;

const baseUrl = (window as { ATRIUM_API_URL?: string }).ATRIUM_API_URL ?? "";
const client = new ApiClient(baseUrl);

let model: ViewModel = emptyViewModel();
let highlighted = new Set<string>();

function renderAll(): void {
  renderMatrix(model, highlighted, (cfaId) => {
    // clicking a cell opens the impact view on its first linked assumption
    const link = model.links.find(
      (l) => l.kind === "AssumptionToCfa" && l.to_id === cfaId,
    );
    if (link) void renderImpact(client, link.from_id, refreshAll);
  });
  renderLedger(model, client, refreshAll);
  renderGate(model, null, client, refreshAll);
  renderSelection(model, client, refreshAll, (uncovered) => {
    highlighted = uncovered;
    renderMatrix(model, highlighted, () => undefined);
  });
  if (model.openIteration === null) {
    const lastClosed = model.selections.reduce(
      (max, s) => Math.max(max, s.iteration),
      0,
    );
    if (lastClosed > 0) renderDeliverableLinks(baseUrl, lastClosed);
  }
}

async function refreshAll(): Promise<void> {
  model = await refresh(client, model);
  renderAll();
}

async function tick(): Promise<void> {
  try {
    const next = await pollCycle(client, model);
    if (next !== model) {
      model = next;
      renderAll();
    }
  } catch (error) {
    surfaceError(error);
  }
}

void refreshAll().catch(surfaceError);
setInterval(() => void tick(), POLL_INTERVAL_MS);
