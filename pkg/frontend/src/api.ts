/** Typed client for the /v1 HTTP API. All responses are validated with zod
 * so a drifting server contract fails loudly instead of rendering garbage. */

import { z } from "zod";

export const ElementSchema = z
  .object({
    id: z.string(),
    name: z.string(),
    kind: z.string(),
    state: z.string(),
    segment: z.string().nullable(),
    retired: z.boolean(),
  })
  .passthrough();

export const SegmentSchema = z
  .object({
    id: z.string(),
    name: z.string(),
    parent: z.string().nullable(),
    member_elements: z.array(z.string()),
  })
  .passthrough();

export const FailureModeSchema = z
  .object({ id: z.string(), name: z.string(), scope: z.string() })
  .passthrough();

export const AnalysisSchema = z
  .object({
    functional_effect: z.string(),
    baseline_fulfills_dg: z.boolean(),
  })
  .passthrough();

export const CfaSchema = z
  .object({
    id: z.string(),
    target: z.string(),
    failure_mode: z.string(),
    design_goal: z.string().nullable(),
    state: z.enum(["Unprocessed", "Processed"]),
    archived: z.boolean(),
    flagged_for_review: z.boolean(),
    analysis: AnalysisSchema.nullable(),
  })
  .passthrough();

export const AssumptionSchema = z
  .object({
    id: z.string(),
    text: z.string(),
    validity: z.enum(["Valid", "Invalid"]),
    superseded_by: z.string().nullable(),
  })
  .passthrough();

export const ClarificationSchema = z
  .object({
    id: z.string(),
    question: z.string(),
    status: z.enum(["Open", "Resolved", "ConvertedToTask"]),
    linked_assumption: z.string().nullable(),
    resolution_notes: z.string().nullable(),
  })
  .passthrough();

export const TaskSchema = z
  .object({
    id: z.string(),
    origin_clarification: z.string(),
    status: z.enum(["Open", "Complete"]),
    expert: z.string(),
    responsible_architect: z.string(),
    due_date: z.string().nullable(),
  })
  .passthrough();

export const DesignAlternativeSchema = z
  .object({
    id: z.string(),
    description: z.string(),
    status: z.enum(["Candidate", "Selected", "Rejected"]),
    satisfies_cfas: z.array(z.string()),
    rejection_rationale: z.string().nullable(),
  })
  .passthrough();

export const RiskSchema = z
  .object({ id: z.string(), description: z.string(), source_task: z.string() })
  .passthrough();

export const SelectionSchema = z
  .object({
    id: z.string(),
    chosen_das: z.array(z.string()),
    iteration: z.number(),
    superseded_by: z.string().nullable(),
  })
  .passthrough();

export const LinkSchema = z
  .object({
    id: z.string(),
    kind: z.string(),
    from_id: z.string(),
    to_id: z.string(),
  })
  .passthrough();

export const ProjectSummarySchema = z.object({
  counts: z.record(z.string(), z.number()),
  open_iteration: z.number().nullable(),
  change_sequence: z.number(),
});

export const ChangesSchema = z.object({
  entries: z.array(z.object({ sequence: z.number() }).passthrough()),
  next_cursor: z.number(),
});

export const ImpactReportSchema = z.object({
  trigger: z.string(),
  affected_cfas: z.array(z.string()),
  affected_das: z.array(z.string()),
  affected_selections: z.array(z.string()),
  dependent_clarifications: z.array(z.string()),
  dependent_tasks: z.array(z.string()),
});

export const ApiErrorSchema = z
  .object({
    error_name: z.string(),
    detail: z.string(),
    offending_ids: z.array(z.string()),
  })
  .passthrough();

export type Element = z.infer<typeof ElementSchema>;
export type Segment = z.infer<typeof SegmentSchema>;
export type FailureMode = z.infer<typeof FailureModeSchema>;
export type Cfa = z.infer<typeof CfaSchema>;
export type Assumption = z.infer<typeof AssumptionSchema>;
export type Clarification = z.infer<typeof ClarificationSchema>;
export type Task = z.infer<typeof TaskSchema>;
export type DesignAlternative = z.infer<typeof DesignAlternativeSchema>;
export type Risk = z.infer<typeof RiskSchema>;
export type Selection = z.infer<typeof SelectionSchema>;
export type Link = z.infer<typeof LinkSchema>;
export type ImpactReport = z.infer<typeof ImpactReportSchema>;
export type ApiError = z.infer<typeof ApiErrorSchema>;

/** Domain rejection from the server, carrying the structured error body. */
export class CommandError extends Error {
  constructor(
    public readonly status: number,
    public readonly body: ApiError,
  ) {
    super(`${body.error_name}: ${body.detail}`);
  }
}

function randomRequestId(): string {
  if (typeof crypto !== "undefined" && "randomUUID" in crypto) {
    return crypto.randomUUID();
  }
  return `req-${Date.now()}-${Math.random().toString(36).slice(2)}`;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly actor: string = "architect",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async getJson(path: string): Promise<unknown> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`);
    if (!response.ok) {
      throw new CommandError(
        response.status,
        ApiErrorSchema.parse(await response.json()),
      );
    }
    return response.json();
  }

  async listElements(): Promise<Element[]> {
    return z.array(ElementSchema).parse(await this.getJson("/v1/elements"));
  }
  async listSegments(): Promise<Segment[]> {
    return z.array(SegmentSchema).parse(await this.getJson("/v1/segments"));
  }
  async listFailureModes(): Promise<FailureMode[]> {
    return z
      .array(FailureModeSchema)
      .parse(await this.getJson("/v1/failure_modes"));
  }
  async listCfas(): Promise<Cfa[]> {
    return z.array(CfaSchema).parse(await this.getJson("/v1/cfas"));
  }
  async listAssumptions(): Promise<Assumption[]> {
    return z
      .array(AssumptionSchema)
      .parse(await this.getJson("/v1/assumptions"));
  }
  async listClarifications(): Promise<Clarification[]> {
    return z
      .array(ClarificationSchema)
      .parse(await this.getJson("/v1/clarifications"));
  }
  async listTasks(): Promise<Task[]> {
    return z.array(TaskSchema).parse(await this.getJson("/v1/tasks"));
  }
  async listDesignAlternatives(): Promise<DesignAlternative[]> {
    return z
      .array(DesignAlternativeSchema)
      .parse(await this.getJson("/v1/design_alternatives"));
  }
  async listRisks(): Promise<Risk[]> {
    return z.array(RiskSchema).parse(await this.getJson("/v1/risks"));
  }
  async listSelections(): Promise<Selection[]> {
    return z
      .array(SelectionSchema)
      .parse(await this.getJson("/v1/selections"));
  }
  async listLinks(): Promise<Link[]> {
    return z.array(LinkSchema).parse(await this.getJson("/v1/links"));
  }

  async projectSummary() {
    return ProjectSummarySchema.parse(await this.getJson("/v1/project"));
  }

  async changesSince(after: number) {
    return ChangesSchema.parse(
      await this.getJson(`/v1/changes?after=${after}`),
    );
  }

  async impactOf(assumptionId: string): Promise<ImpactReport> {
    return ImpactReportSchema.parse(
      await this.getJson(`/v1/trace/impact/${assumptionId}`),
    );
  }

  async deliverables(iteration: number): Promise<Record<string, string>> {
    return z
      .record(z.string(), z.string())
      .parse(await this.getJson(`/v1/deliverables/${iteration}`));
  }

  /** POST a command envelope; throws CommandError on 4xx with the body. */
  async command(
    name: string,
    payload: Record<string, unknown>,
  ): Promise<Record<string, unknown>> {
    const response = await this.fetchFn(`${this.baseUrl}/v1/commands/${name}`, {
      method: "POST",
      headers: { "Content-Type": "application/json", "X-Actor": this.actor },
      body: JSON.stringify({
        request_id: randomRequestId(),
        actor: this.actor,
        payload,
      }),
    });
    const body = await response.json();
    if (!response.ok) {
      throw new CommandError(response.status, ApiErrorSchema.parse(body));
    }
    return z
      .object({ request_id: z.string(), result: z.record(z.string(), z.unknown()) })
      .parse(body).result;
  }
}
