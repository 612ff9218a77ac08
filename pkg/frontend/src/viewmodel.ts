/** Client-side mirror of the API collections plus the last-seen change
 * sequence. The mirror is refreshed whenever the change cursor advances;
 * after a poll cycle every entity state held here equals the API's. */

import type {
  ApiClient,
  Assumption,
  Cfa,
  Clarification,
  DesignAlternative,
  Element,
  FailureMode,
  Link,
  Risk,
  Segment,
  Selection,
  Task,
} from "./api.js";

export interface ViewModel {
  elements: Element[];
  segments: Segment[];
  failureModes: FailureMode[];
  cfas: Cfa[];
  assumptions: Assumption[];
  clarifications: Clarification[];
  tasks: Task[];
  designAlternatives: DesignAlternative[];
  risks: Risk[];
  selections: Selection[];
  links: Link[];
  openIteration: number | null;
  lastSeenSequence: number;
}

export function emptyViewModel(): ViewModel {
  return {
    elements: [],
    segments: [],
    failureModes: [],
    cfas: [],
    assumptions: [],
    clarifications: [],
    tasks: [],
    designAlternatives: [],
    risks: [],
    selections: [],
    links: [],
    openIteration: null,
    lastSeenSequence: 0,
  };
}

/** Full refresh of every mirrored collection. */
export async function refresh(
  client: ApiClient,
  model: ViewModel,
): Promise<ViewModel> {
  const [
    elements,
    segments,
    failureModes,
    cfas,
    assumptions,
    clarifications,
    tasks,
    designAlternatives,
    risks,
    selections,
    links,
    summary,
  ] = await Promise.all([
    client.listElements(),
    client.listSegments(),
    client.listFailureModes(),
    client.listCfas(),
    client.listAssumptions(),
    client.listClarifications(),
    client.listTasks(),
    client.listDesignAlternatives(),
    client.listRisks(),
    client.listSelections(),
    client.listLinks(),
    client.projectSummary(),
  ]);
  return {
    ...model,
    elements,
    segments,
    failureModes,
    cfas,
    assumptions,
    clarifications,
    tasks,
    designAlternatives,
    risks,
    selections,
    links,
    openIteration: summary.open_iteration,
    lastSeenSequence: summary.change_sequence,
  };
}

/** One poll cycle: check the change cursor, refresh only if it advanced.
 * Returns the (possibly unchanged) model. */
export async function pollCycle(
  client: ApiClient,
  model: ViewModel,
): Promise<ViewModel> {
  const changes = await client.changesSince(model.lastSeenSequence);
  if (changes.entries.length === 0) {
    return model;
  }
  return refresh(client, model);
}
