"""HTTP service over the engine: resource reads, command endpoints per
mutation, traceability queries, and a monotone change-cursor feed.

Mutations are funneled through a single in-process writer lock; the store
is persisted after every accepted command. Command endpoints are
idempotent under request-id replay.
"""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import FastAPI, Header, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import errors as err
from . import store as store_mod
from . import traceability
from .changelog import audit as audit_entries
from .engine import Engine, clock_for
from .model import to_record
from .state import ProjectState

COMMANDS = [
    "import_architecture", "open_iteration", "define_process_parameters",
    "add_element", "retire_element", "analyze_cfa", "add_assumption",
    "set_review_disposition", "invalidate_assumption", "raise_clarification",
    "resolve_clarification", "convert_clarification_to_task", "complete_task",
    "make_selection", "revise_selection", "close_iteration",
]

COLLECTIONS = [
    "elements", "segments", "failure_modes", "cfas", "design_goals",
    "design_alternatives", "assumptions", "clarifications", "tasks",
    "risks", "selections", "links", "review_queues",
]

NOT_FOUND_ERRORS = (
    err.UnknownElement, err.UnknownSegment, err.UnknownCfa,
    err.UnknownAssumption, err.UnknownClarification, err.UnknownTask,
    err.UnknownSelection, err.UnknownDesignAlternative, err.UnknownReviewQueue,
)


class CommandEnvelope(BaseModel):
    request_id: str
    actor: str = "architect"
    payload: dict = Field(default_factory=dict)


class CommandResult(BaseModel):
    request_id: str
    result: dict


def create_app(project_root: str | Path) -> FastAPI:
    app = FastAPI(title="atrium", version="1")
    store = store_mod.ProjectStore(project_root)
    state = store.load() if store.exists() else ProjectState()
    writer_lock = threading.Lock()
    replay_cache: dict[str, dict] = {}

    app.state.project_state = state
    app.state.store = store

    @app.exception_handler(err.AtriumError)
    async def domain_error_handler(_request: Request, exc: err.AtriumError):
        status = 404 if isinstance(exc, NOT_FOUND_ERRORS) else 409
        return JSONResponse(status_code=status, content=exc.to_dict())

    @app.get("/v1/project")
    def project_summary():
        it = state.current_iteration()
        return {
            "counts": {name: len(getattr(state, name)) for name in COLLECTIONS},
            "open_iteration": it.number if it else None,
            "change_sequence": len(state.change_log),
        }

    for name in COLLECTIONS:
        def make_reader(collection_name: str):
            def reader():
                return [to_record(entity)
                        for entity in getattr(state, collection_name).values()]
            return reader
        app.get(f"/v1/{name}", name=f"list_{name}")(make_reader(name))

    @app.get("/v1/iterations")
    def list_iterations():
        return [to_record(it) for it in state.iterations.values()]

    @app.get("/v1/changes")
    def change_cursor(after: int = 0, limit: int = 500):
        entries = [to_record(e) for e in state.change_log
                   if e.sequence > after][:limit]
        return {"entries": entries,
                "next_cursor": entries[-1]["sequence"] if entries else after}

    @app.get("/v1/audit")
    def audit_query(entity: str | None = None, actor: str | None = None,
                    iteration: int | None = None):
        entries = audit_entries(state.change_log, entity_id=entity,
                                actor=actor, iteration=iteration)
        return [to_record(e) for e in entries]

    @app.get("/v1/trace/back/{selection_id}")
    def trace_back(selection_id: str):
        return traceability.back_trace(state, selection_id)

    @app.get("/v1/trace/impact/{assumption_id}")
    def trace_impact(assumption_id: str):
        return traceability.impact_of(state, assumption_id).to_dict()

    @app.get("/v1/integrity")
    def integrity():
        return {"violations": traceability.integrity_check(state)}

    @app.get("/v1/export/fmea")
    def export_fmea(include_archived: bool = False):
        return {"csv": store_mod.export_fmea(state,
                                             include_archived=include_archived)}

    @app.get("/v1/deliverables/{iteration_number}")
    def deliverables(iteration_number: int):
        return store_mod.export_deliverables(state, iteration_number)

    @app.post("/v1/commands/{command}", response_model=CommandResult)
    def run_command(command: str, envelope: CommandEnvelope,
                    x_actor: str | None = Header(default=None)):
        if command not in COMMANDS:
            raise err.AtriumError(f"unknown command {command}")
        actor = x_actor or envelope.actor
        with writer_lock:
            if envelope.request_id in replay_cache:
                return CommandResult(request_id=envelope.request_id,
                                     result=replay_cache[envelope.request_id])
            engine = Engine(state, clock=clock_for(state))
            result = getattr(engine, command)(**envelope.payload, actor=actor)
            store.save(state)
            replay_cache[envelope.request_id] = result
        return CommandResult(request_id=envelope.request_id, result=result)

    return app
