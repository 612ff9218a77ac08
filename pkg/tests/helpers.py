"""Shared test fixtures: toy project builders, brute-force oracles, and a
random valid-operation fuzzer driving the engine."""

from __future__ import annotations

import random

from atrium import errors as err
from atrium.engine import Engine, stepping_clock
from atrium.model import (
    CfaState,
    ClarificationStatus,
    DaStatus,
    LinkKind,
    TaskStatus,
    Validity,
)
from atrium.state import ProjectState


def toy_engine(n_elements: int = 3, per_element_modes: int = 2,
               segments: bool = False, clock=None) -> Engine:
    """Small project with an open iteration and generated CFAs."""
    engine = Engine(clock=clock or stepping_clock())
    seg_specs = []
    element_specs = []
    for i in range(n_elements):
        seg = None
        if segments:
            seg = f"seg-{i % 2}"
        element_specs.append({"name": f"unit-{i}", "kind": "hardware",
                              "segment": seg})
    if segments:
        seg_specs = [{"name": "seg-0"}, {"name": "seg-1"}]
    engine.import_architecture(elements=element_specs, segments=seg_specs,
                               rationale="test baseline")
    engine.open_iteration(rationale="test iteration")
    engine.define_process_parameters(
        elements_in_scope=list(engine.state.elements),
        failure_modes=[{"name": f"mode-{m}", "scope": "PerElement"}
                       for m in range(per_element_modes)],
        design_goals=[{"description": "stay controllable"}],
        default_dg=0, rationale="test parameters")
    return engine


# ---------------------------------------------------------------------------
# brute-force oracles (kept independent of the engine implementation)


def oracle_reverted_set(state: ProjectState, assumption_id: str) -> set[str]:
    """CFAs that must flip Processed -> Unprocessed on invalidation:
    linear scan of the raw link list filtered by CFA state."""
    out = set()
    for link in state.links.values():
        if link.kind is LinkKind.ASSUMPTION_TO_CFA and link.from_id == assumption_id:
            cfa = state.cfas.get(link.to_id)
            if cfa and not cfa.archived and cfa.state is CfaState.PROCESSED:
                out.add(cfa.id)
    return out


def oracle_back_trace(state: ProjectState, selection_id: str) -> set[str]:
    """Exhaustive reverse reachability over the raw edge list."""
    edges = [(l.from_id, l.to_id, l.kind) for l in state.links.values()]
    das = {f for f, t, k in edges
           if k is LinkKind.DA_TO_SELECTION and t == selection_id}
    cfas = {f for f, t, k in edges if k is LinkKind.CFA_TO_DA and t in das}
    return {f for f, t, k in edges
            if k is LinkKind.ASSUMPTION_TO_CFA and t in cfas}


def oracle_coverage_ok(state: ProjectState, chosen: set[str]) -> bool:
    """Brute-force bipartite coverage: every needy CFA must touch a chosen DA."""
    for cfa in state.cfas.values():
        if cfa.archived or cfa.state is not CfaState.PROCESSED:
            continue
        if cfa.analysis is None or cfa.analysis.baseline_fulfills_dg:
            continue
        linked = {l.to_id for l in state.links.values()
                  if l.kind is LinkKind.CFA_TO_DA and l.from_id == cfa.id}
        if not linked & chosen:
            return False
    return True


def count_mutating_ops(state: ProjectState) -> int:
    return len(state.operation_log)


# ---------------------------------------------------------------------------
# random valid-operation fuzzer


def apply_random_op(engine: Engine, rng: random.Random) -> str | None:
    """Apply one randomly chosen valid operation; returns its name."""
    st = engine.state
    live_cfas = [c.id for c in st.cfas.values() if not c.archived]
    valid_assumptions = [a.id for a in st.assumptions.values()
                         if a.validity is Validity.VALID]
    open_clars = [c.id for c in st.clarifications.values()
                  if c.status is ClarificationStatus.OPEN]
    open_tasks = [t.id for t in st.tasks.values() if t.status is TaskStatus.OPEN]
    pending = [(q.id, cfa) for q in st.review_queues.values()
               for cfa, d in q.disposition.items()
               if d.value == "PendingReview" and not st.cfas[cfa].archived]

    choices = ["add_element", "add_assumption", "raise_clarification"]
    if live_cfas:
        choices += ["analyze_cfa"] * 3
    if valid_assumptions:
        choices.append("invalidate_assumption")
    if open_clars:
        choices += ["resolve_clarification", "convert_clarification"]
    if open_tasks:
        choices.append("complete_task")
    if pending:
        choices.append("review_disposition")
    op = rng.choice(choices)
    n = rng.randrange(1_000_000)

    if op == "add_element":
        engine.add_element(name=f"fuzz-element-{n}", rationale="fuzz")
    elif op == "analyze_cfa":
        cfa = rng.choice(live_cfas)
        baseline = rng.random() < 0.7
        das = [] if baseline else [f"alternative-{n}-{i}"
                                   for i in range(rng.randint(1, 2))]
        cited = rng.sample(valid_assumptions,
                           min(len(valid_assumptions), rng.randint(0, 2)))
        engine.analyze_cfa(cfa=cfa, effect=f"effect-{n}",
                           baseline_fulfills_dg=baseline, das=das,
                           cited_assumptions=cited, rationale="fuzz")
    elif op == "add_assumption":
        linked = rng.sample(live_cfas, min(len(live_cfas), rng.randint(0, 3)))
        engine.add_assumption(text=f"assumption-{n}", linked_cfas=linked,
                              rationale="fuzz")
    elif op == "invalidate_assumption":
        target = rng.choice(valid_assumptions)
        replacement = None
        if rng.random() < 0.5:
            linked = rng.sample(live_cfas, min(len(live_cfas), rng.randint(0, 2)))
            replacement = {"text": f"replacement-{n}", "linked_cfas": linked}
        engine.invalidate_assumption(assumption=target, reason="fuzz reason",
                                     replacement=replacement)
    elif op == "raise_clarification":
        linked = rng.sample(live_cfas, min(len(live_cfas), rng.randint(0, 2)))
        engine.raise_clarification(question=f"question-{n}",
                                   assumption_text=f"assumption-{n}",
                                   linked_cfas=linked, rationale="fuzz")
    elif op == "resolve_clarification":
        clar = rng.choice(open_clars)
        if rng.random() < 0.5:
            engine.resolve_clarification(clarification=clar, outcome="Confirmed",
                                         expert="fuzz-expert", notes="confirmed")
        else:
            engine.resolve_clarification(
                clarification=clar, outcome="Corrected", expert="fuzz-expert",
                notes="corrected", new_text=f"corrected-{n}",
                new_linked_cfas=rng.sample(live_cfas,
                                           min(len(live_cfas), 1)))
    elif op == "convert_clarification":
        engine.convert_clarification_to_task(
            clarification=rng.choice(open_clars), expert="fuzz-expert",
            responsible_architect="fuzz-architect",
            due_date=f"2026-11-{rng.randint(1, 28):02d}", rationale="fuzz")
    elif op == "complete_task":
        task = rng.choice(open_tasks)
        if rng.random() < 0.5:
            engine.complete_task(task=task, outcome="Confirmed", notes="done")
        else:
            engine.complete_task(task=task, outcome="Corrected", notes="fixed",
                                 new_text=f"task-corrected-{n}")
    elif op == "review_disposition":
        queue, cfa = rng.choice(pending)
        verdict = rng.choice(["KeepProcessed", "MarkUnprocessed"])
        engine.set_review_disposition(queue=queue, cfa=cfa,
                                      disposition=verdict, rationale="fuzz")
    return op


def fuzz_project(seed: int, ops: int, n_elements: int = 4) -> Engine:
    rng = random.Random(seed)
    engine = toy_engine(n_elements=n_elements)
    for _ in range(ops):
        apply_random_op(engine, rng)
    return engine
