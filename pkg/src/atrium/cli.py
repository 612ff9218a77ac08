"""Command-line surface: `atrium <noun> <verb> [args]`.

Exit codes: 0 success, 1 domain error, 2 usage error. Every mutating
subcommand requires --rationale (or a command-specific notes/reason flag).
Output is human-readable by default; --format structured emits JSON.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import errors as err
from . import scenario as scenario_mod
from . import store as store_mod
from . import traceability
from .changelog import audit as audit_entries
from .engine import Engine, clock_for
from .model import to_record
from .state import ProjectState


class Context:
    def __init__(self, project: str, fmt: str, actor: str):
        self.project = Path(project)
        self.fmt = fmt
        self.actor = actor
        self.store = store_mod.ProjectStore(self.project)

    def load(self) -> ProjectState:
        if not self.store.exists():
            return ProjectState()
        return self.store.load()

    def engine(self, state: ProjectState) -> Engine:
        return Engine(state, clock=clock_for(state))

    def mutate(self, fn):
        """Load, apply, save under the store lock; render the result."""
        lock = self.store.lock()
        try:
            state = self.load()
            result = fn(self.engine(state))
            self.store.save(state)
        finally:
            lock.release()
        self.emit(result)
        return result

    def emit(self, payload):
        if self.fmt == "structured":
            click.echo(json.dumps(payload, indent=2, default=str, sort_keys=True))
        else:
            _render_human(payload)


def _render_human(payload, indent=""):
    if isinstance(payload, dict):
        for key, value in payload.items():
            if isinstance(value, (dict, list)):
                click.echo(f"{indent}{key}:")
                _render_human(value, indent + "  ")
            else:
                click.echo(f"{indent}{key}: {value}")
    elif isinstance(payload, list):
        for item in payload:
            if isinstance(item, (dict, list)):
                _render_human(item, indent + "  ")
            else:
                click.echo(f"{indent}- {item}")
    else:
        click.echo(f"{indent}{payload}")


def _domain_errors(fn):
    import functools

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except err.AtriumError as exc:
            click.echo(f"error: {exc.name}: {exc.detail}", err=True)
            if exc.offending_ids:
                click.echo("offending: " + ", ".join(exc.offending_ids), err=True)
            sys.exit(1)

    return wrapper


pass_ctx = click.make_pass_decorator(Context)


@click.group()
@click.option("--project", default=".", envvar="ATRIUM_PROJECT",
              help="Project store directory.")
@click.option("--format", "fmt", type=click.Choice(["human", "structured"]),
              default="human")
@click.option("--actor", default="architect", envvar="ATRIUM_ACTOR")
@click.pass_context
def main(ctx, project, fmt, actor):
    """ATRIUM: refine preliminary architectures under uncertainty."""
    ctx.obj = Context(project, fmt, actor)


# ---------------------------------------------------------------------- setup


@main.command("import")
@click.argument("file", type=click.Path(exists=True))
@click.option("--rationale", prompt="Rationale")
@pass_ctx
@_domain_errors
def import_cmd(ctx, file, rationale):
    """Import an architecture description file (elements and segments)."""
    parsed = store_mod.parse_architecture_file(file)
    result = ctx.mutate(lambda e: e.import_architecture(
        elements=parsed["elements"], segments=parsed["segments"],
        actor=ctx.actor, rationale=rationale))
    for warning in parsed["warnings"]:
        click.echo(f"warning: {warning}", err=True)
    return result


# ------------------------------------------------------------------ iteration


@main.group()
def iteration():
    """Iteration lifecycle."""


@iteration.command("open")
@click.option("--roadmap", type=click.Path(exists=True),
              help="JSON file with roadmap elements to merge.")
@click.option("--rationale", prompt="Rationale")
@pass_ctx
@_domain_errors
def iteration_open(ctx, roadmap, rationale):
    roadmap_elements = []
    if roadmap:
        roadmap_elements = json.loads(Path(roadmap).read_text()).get("elements", [])
    ctx.mutate(lambda e: e.open_iteration(
        roadmap_elements=roadmap_elements, actor=ctx.actor, rationale=rationale))


@iteration.command("close")
@click.option("--rationale", prompt="Rationale")
@pass_ctx
@_domain_errors
def iteration_close(ctx, rationale):
    ctx.mutate(lambda e: e.close_iteration(actor=ctx.actor, rationale=rationale))


@main.command("params")
@click.argument("file", type=click.Path(exists=True))
@click.option("--rationale", prompt="Rationale")
@pass_ctx
@_domain_errors
def params_define(ctx, file, rationale):
    """Define process parameters from a JSON file (scope, failure modes,
    design goals, DG assignment) and generate CFAs."""
    spec = json.loads(Path(file).read_text())
    ctx.mutate(lambda e: e.define_process_parameters(
        elements_in_scope=spec.get("elements_in_scope") or list(e.state.elements),
        failure_modes=spec.get("failure_modes", []),
        design_goals=spec.get("design_goals", []),
        dg_assignment=spec.get("dg_assignment"),
        default_dg=spec.get("default_dg"),
        actor=ctx.actor, rationale=rationale))


# -------------------------------------------------------------------- element


@main.group()
def element():
    """Element inventory."""


@element.command("add")
@click.argument("name")
@click.option("--kind", type=click.Choice(["hardware", "software", "functional"]),
              default="hardware")
@click.option("--segment", default=None)
@click.option("--rationale", prompt="Rationale")
@pass_ctx
@_domain_errors
def element_add(ctx, name, kind, segment, rationale):
    result = ctx.mutate(lambda e: e.add_element(
        name=name, kind=kind, segment=segment,
        actor=ctx.actor, rationale=rationale))
    for warning in result.get("warnings", []):
        click.echo(f"warning: {warning}", err=True)


@element.command("retire")
@click.argument("element_id")
@click.option("--rationale", prompt="Rationale")
@pass_ctx
@_domain_errors
def element_retire(ctx, element_id, rationale):
    ctx.mutate(lambda e: e.retire_element(element=element_id,
                                          rationale=rationale, actor=ctx.actor))


@element.command("list")
@pass_ctx
@_domain_errors
def element_list(ctx):
    state = ctx.load()
    ctx.emit([to_record(e) for e in state.elements.values()])


# ------------------------------------------------------------------------ cfa


@main.group()
def cfa():
    """Component failure alternatives."""


@cfa.command("analyze")
@click.argument("cfa_id")
@click.option("--effect", required=True)
@click.option("--baseline/--no-baseline", "baseline", default=True,
              help="Does the baseline architecture fulfil the design goal?")
@click.option("--da", "das", multiple=True,
              help="Design alternative description (repeatable).")
@click.option("--cite", "cited", multiple=True,
              help="Assumption id cited by the analysis (repeatable).")
@click.option("--rationale", prompt="Rationale")
@pass_ctx
@_domain_errors
def cfa_analyze(ctx, cfa_id, effect, baseline, das, cited, rationale):
    ctx.mutate(lambda e: e.analyze_cfa(
        cfa=cfa_id, effect=effect, baseline_fulfills_dg=baseline,
        das=list(das), cited_assumptions=list(cited),
        analyst=ctx.actor, actor=ctx.actor, rationale=rationale))


@cfa.command("list")
@click.option("--include-archived", is_flag=True)
@pass_ctx
@_domain_errors
def cfa_list(ctx, include_archived):
    state = ctx.load()
    ctx.emit([to_record(c) for c in state.cfas.values()
              if include_archived or not c.archived])


# ----------------------------------------------------------------- assumption


@main.group()
def assumption():
    """Assumption ledger."""


@assumption.command("add")
@click.argument("text")
@click.option("--category", default=None)
@click.option("--link", "links", multiple=True, help="Linked CFA id (repeatable).")
@click.option("--rationale", prompt="Rationale")
@pass_ctx
@_domain_errors
def assumption_add(ctx, text, category, links, rationale):
    ctx.mutate(lambda e: e.add_assumption(
        text=text, category=category, linked_cfas=list(links),
        actor=ctx.actor, rationale=rationale))


@assumption.command("invalidate")
@click.argument("assumption_id")
@click.option("--rationale", prompt="Rationale")
@click.option("--replacement-text", default=None)
@click.option("--replacement-link", "replacement_links", multiple=True)
@pass_ctx
@_domain_errors
def assumption_invalidate(ctx, assumption_id, rationale, replacement_text,
                          replacement_links):
    replacement = None
    if replacement_text:
        replacement = {"text": replacement_text,
                       "linked_cfas": list(replacement_links)}
    ctx.mutate(lambda e: e.invalidate_assumption(
        assumption=assumption_id, reason=rationale, replacement=replacement,
        actor=ctx.actor))


@assumption.command("list")
@pass_ctx
@_domain_errors
def assumption_list(ctx):
    state = ctx.load()
    ctx.emit([to_record(a) for a in state.assumptions.values()])


@main.command("review")
@click.argument("queue_id")
@click.argument("cfa_id")
@click.argument("disposition",
                type=click.Choice(["KeepProcessed", "MarkUnprocessed"]))
@click.option("--rationale", prompt="Rationale")
@pass_ctx
@_domain_errors
def review_set(ctx, queue_id, cfa_id, disposition, rationale):
    """Record a triage disposition on a review queue entry."""
    ctx.mutate(lambda e: e.set_review_disposition(
        queue=queue_id, cfa=cfa_id, disposition=disposition,
        actor=ctx.actor, rationale=rationale))


# -------------------------------------------------------------- clarification


@main.group()
def clarification():
    """Clarification ledger."""


@clarification.command("raise")
@click.argument("question")
@click.option("--assumption", "assumption_id", default=None,
              help="Existing assumption id to link.")
@click.option("--new-assumption", "assumption_text", default=None,
              help="Text for a new assumption.")
@click.option("--link", "links", multiple=True, help="CFA id (repeatable).")
@click.option("--rationale", prompt="Rationale")
@pass_ctx
@_domain_errors
def clarification_raise(ctx, question, assumption_id, assumption_text, links,
                        rationale):
    ctx.mutate(lambda e: e.raise_clarification(
        question=question, assumption=assumption_id,
        assumption_text=assumption_text, linked_cfas=list(links),
        actor=ctx.actor, rationale=rationale))


@clarification.command("resolve")
@click.argument("clarification_id")
@click.option("--outcome", type=click.Choice(["Confirmed", "Corrected"]),
              required=True)
@click.option("--expert", required=True)
@click.option("--notes", prompt="Resolution notes")
@click.option("--new-text", default=None)
@click.option("--link", "links", multiple=True)
@pass_ctx
@_domain_errors
def clarification_resolve(ctx, clarification_id, outcome, expert, notes,
                          new_text, links):
    ctx.mutate(lambda e: e.resolve_clarification(
        clarification=clarification_id, outcome=outcome, expert=expert,
        notes=notes, new_text=new_text, new_linked_cfas=list(links),
        actor=ctx.actor))


@clarification.command("convert")
@click.argument("clarification_id")
@click.option("--expert", required=True)
@click.option("--architect", "responsible_architect", required=True)
@click.option("--due", "due_date", required=True, help="Due date YYYY-MM-DD.")
@click.option("--rationale", prompt="Rationale")
@pass_ctx
@_domain_errors
def clarification_convert(ctx, clarification_id, expert, responsible_architect,
                          due_date, rationale):
    ctx.mutate(lambda e: e.convert_clarification_to_task(
        clarification=clarification_id, expert=expert,
        responsible_architect=responsible_architect, due_date=due_date,
        actor=ctx.actor, rationale=rationale))


@clarification.command("list")
@pass_ctx
@_domain_errors
def clarification_list(ctx):
    state = ctx.load()
    ctx.emit([to_record(c) for c in state.clarifications.values()])


@main.group()
def task():
    """Investigation tasks."""


@task.command("complete")
@click.argument("task_id")
@click.option("--outcome", type=click.Choice(["Confirmed", "Corrected"]),
              required=True)
@click.option("--notes", prompt="Outcome notes")
@click.option("--new-text", default=None)
@click.option("--link", "links", multiple=True)
@pass_ctx
@_domain_errors
def task_complete(ctx, task_id, outcome, notes, new_text, links):
    ctx.mutate(lambda e: e.complete_task(
        task=task_id, outcome=outcome, notes=notes, new_text=new_text,
        new_linked_cfas=list(links), actor=ctx.actor))


@task.command("list")
@pass_ctx
@_domain_errors
def task_list(ctx):
    state = ctx.load()
    ctx.emit([to_record(t) for t in state.tasks.values()])


# ------------------------------------------------------------------ selection


@main.group()
def selection():
    """Design-alternative selection."""


def _parse_rejections(pairs) -> dict:
    rejections = {}
    for pair in pairs:
        da_id, _, text = pair.partition("=")
        rejections[da_id] = text
    return rejections


@selection.command("make")
@click.option("--choose", "chosen", multiple=True, help="Chosen DA id.")
@click.option("--reject", "rejects", multiple=True,
              help="DA-ID=rationale for each unchosen candidate.")
@click.option("--rationale", prompt="Rationale")
@click.option("--method-note", default="")
@pass_ctx
@_domain_errors
def selection_make(ctx, chosen, rejects, rationale, method_note):
    ctx.mutate(lambda e: e.make_selection(
        chosen_das=list(chosen), rationale=rationale,
        rejections=_parse_rejections(rejects), method_note=method_note,
        actor=ctx.actor))


@selection.command("revise")
@click.option("--choose", "chosen", multiple=True)
@click.option("--reject", "rejects", multiple=True)
@click.option("--rationale", prompt="Rationale")
@click.option("--method-note", default="")
@pass_ctx
@_domain_errors
def selection_revise(ctx, chosen, rejects, rationale, method_note):
    ctx.mutate(lambda e: e.revise_selection(
        chosen_das=list(chosen), rationale=rationale,
        rejections=_parse_rejections(rejects), method_note=method_note,
        actor=ctx.actor))


# ---------------------------------------------------------------------- trace


@main.group()
def trace():
    """Traceability queries (read-only)."""


@trace.command("back")
@click.argument("selection_id")
@pass_ctx
@_domain_errors
def trace_back(ctx, selection_id):
    state = ctx.load()
    ctx.emit(traceability.back_trace(state, selection_id))


@trace.command("impact")
@click.argument("assumption_id")
@pass_ctx
@_domain_errors
def trace_impact(ctx, assumption_id):
    state = ctx.load()
    ctx.emit(traceability.impact_of(state, assumption_id).to_dict())


@trace.command("check")
@pass_ctx
@_domain_errors
def trace_check(ctx):
    state = ctx.load()
    violations = traceability.integrity_check(state)
    ctx.emit({"violations": violations})
    if violations:
        sys.exit(1)


# --------------------------------------------------------------------- export


@main.group()
def export():
    """File exports."""


@export.command("fmea")
@click.option("--include-archived", is_flag=True)
@click.option("-o", "--output", type=click.Path(), default=None)
@pass_ctx
@_domain_errors
def export_fmea_cmd(ctx, include_archived, output):
    state = ctx.load()
    table = store_mod.export_fmea(state, include_archived=include_archived)
    if output:
        Path(output).write_text(table)
    else:
        click.echo(table, nl=False)


@export.command("deliverables")
@click.argument("iteration_number", type=int)
@click.option("--outdir", type=click.Path(), default=None)
@pass_ctx
@_domain_errors
def export_deliverables_cmd(ctx, iteration_number, outdir):
    state = ctx.load()
    docs = store_mod.export_deliverables(state, iteration_number)
    if outdir:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in docs.items():
            (out / f"{name}.md").write_text(text)
        click.echo(f"wrote {len(docs)} documents to {out}")
    else:
        for name, text in docs.items():
            click.echo(f"--- {name} ---")
            click.echo(text)


@export.command("graph")
@click.option("-o", "--output", type=click.Path(), default=None)
@pass_ctx
@_domain_errors
def export_graph_cmd(ctx, output):
    state = ctx.load()
    dot = traceability.export_graph_dot(state)
    if output:
        Path(output).write_text(dot)
    else:
        click.echo(dot, nl=False)


@main.command("audit")
@click.option("--entity", default=None)
@click.option("--by-actor", "by_actor", default=None)
@click.option("--iteration", type=int, default=None)
@pass_ctx
@_domain_errors
def audit_cmd(ctx, entity, by_actor, iteration):
    """Query the change ledger."""
    state = ctx.load()
    entries = audit_entries(state.change_log, entity_id=entity,
                            actor=by_actor, iteration=iteration)
    ctx.emit([to_record(e) for e in entries])


# ------------------------------------------------------------------- scenario


@main.group()
def scenario():
    """Generated case-study scenario."""


@scenario.command("build")
@click.option("--config", "config_file", type=click.Path(exists=True),
              default=None)
@pass_ctx
@_domain_errors
def scenario_build(ctx, config_file):
    config = scenario_mod.ScenarioConfig.from_file(config_file) \
        if config_file else scenario_mod.ScenarioConfig()
    engine = scenario_mod.build_case_study(config)
    lock = ctx.store.lock()
    try:
        ctx.store.save(engine.state)
    finally:
        lock.release()
    ctx.emit({"elements": len(engine.state.elements),
              "segments": len(engine.state.segments),
              "cfas": len(engine.state.cfas)})


@scenario.command("replay")
@click.option("--script", "script_file", type=click.Path(exists=True),
              default=None, help="JSON action list; defaults to the canonical script.")
@pass_ctx
@_domain_errors
def scenario_replay(ctx, script_file):
    lock = ctx.store.lock()
    try:
        state = ctx.load()
        engine = ctx.engine(state)
        script = scenario_mod.load_script(script_file) if script_file \
            else scenario_mod.canonical_script(state)
        stats = scenario_mod.replay_workflow(engine, script, actor=ctx.actor)
        ctx.store.save(state)
    finally:
        lock.release()
    ctx.emit(stats)


# ---------------------------------------------------------------------- serve


@main.command("serve")
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@pass_ctx
def serve(ctx, host, port):
    """Run the HTTP service for the web UI."""
    import uvicorn

    from .api import create_app

    uvicorn.run(create_app(ctx.project), host=host, port=port)


if __name__ == "__main__":
    main()
