"""Desk-scale scenario generator and scripted workflow replay.

Builds a representative project (25 elements, 4 main segments, a
sub-segment layout sized so the generated CFA count lands in a target
band) and replays a deterministic script of analyses, clarifications,
resolutions, conversions and selection through the real engine, emitting
process statistics.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from . import errors as err
from .engine import Engine, stepping_clock
from .model import CfaState, ClarificationStatus, LinkKind, TaskStatus, Validity
from .state import ProjectState

ELEMENT_NAMES = [
    "front-camera", "front-radar", "side-radar-left", "side-radar-right",
    "lidar-roof", "gps-receiver", "imu-unit",
    "engine-control-unit", "battery-manager", "dc-dc-converter",
    "power-distribution-box", "alternator-controller", "fuel-controller",
    "brake-actuator", "steering-actuator", "suspension-controller",
    "wheel-speed-sensors", "stability-controller", "park-brake-module",
    "central-gateway", "telematics-unit", "driver-display",
    "body-controller", "hmi-controller", "diagnostics-logger",
]

MAIN_SEGMENTS = ["perception", "powertrain", "chassis", "connectivity"]


@dataclass
class ScenarioConfig:
    element_count: int = 25
    segment_layout: list[int] = field(default_factory=lambda: [7, 6, 6, 6])
    per_element_modes: list[str] = field(
        default_factory=lambda: ["omission", "power-loss"])
    per_segment_modes: list[str] = field(
        default_factory=lambda: ["communication-failure"])
    target_cfa_range: tuple[int, int] | None = (75, 85)
    seed: int = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "ScenarioConfig":
        data = json.loads(Path(path).read_text())
        if "target_cfa_range" in data and data["target_cfa_range"] is not None:
            data["target_cfa_range"] = tuple(data["target_cfa_range"])
        return cls(**data)


def expected_cfa_count(config: ScenarioConfig, sub_segments: int) -> int:
    """Counting formula: |elements|·|per-element modes| +
    |segments with members|·|per-segment modes|."""
    mains = len([s for s in config.segment_layout if s > 0])
    segments_with_members = mains + sub_segments if config.per_segment_modes else 0
    return (config.element_count * len(config.per_element_modes)
            + segments_with_members * len(config.per_segment_modes))


def choose_sub_segment_count(config: ScenarioConfig) -> int:
    """Smallest sub-segment count whose CFA total lands in the target band."""
    if config.target_cfa_range is None:
        return 0
    low, high = config.target_cfa_range
    midpoint = (low + high) / 2
    feasible = [k for k in range(config.element_count + 1)
                if low <= expected_cfa_count(config, k) <= high]
    if not feasible:
        raise err.ConfigInfeasible(
            f"no sub-segment layout yields a CFA count in [{low}, {high}]")
    return min(feasible, key=lambda k: abs(expected_cfa_count(config, k) - midpoint))


def build_case_study(config: ScenarioConfig | None = None) -> Engine:
    """Generate the scenario project with an open iteration and fresh CFAs."""
    config = config or ScenarioConfig()
    if sum(config.segment_layout) not in (0, config.element_count):
        raise err.ConfigInfeasible(
            "segment layout must partition the element inventory")
    sub_count = choose_sub_segment_count(config)

    engine = Engine(clock=stepping_clock())
    rng = random.Random(config.seed)

    names = list(ELEMENT_NAMES)
    while len(names) < config.element_count:
        names.append(f"element-{len(names) + 1:02d}")
    names = names[:config.element_count]

    segments: list[dict] = []
    element_segment: list[str | None] = [None] * config.element_count
    if config.segment_layout:
        mains = [MAIN_SEGMENTS[i] if i < len(MAIN_SEGMENTS) else f"segment-{i + 1}"
                 for i in range(len(config.segment_layout))]
        segments = [{"name": m} for m in mains]
        index = 0
        assignments: list[str] = []
        for main, size in zip(mains, config.segment_layout):
            for _ in range(size):
                assignments.append(main)
                index += 1
        # the first sub_count elements get a private sub-segment under their main
        for i in range(config.element_count):
            main = assignments[i]
            if i < sub_count:
                sub_name = f"{main}-sub-{i + 1:02d}"
                segments.append({"name": sub_name, "parent": main})
                element_segment[i] = sub_name
            else:
                element_segment[i] = main

    elements = [{"name": names[i], "kind": rng.choice(
        ["hardware", "software", "functional"]),
        "segment": element_segment[i]} for i in range(config.element_count)]

    engine.import_architecture(elements=elements, segments=segments,
                               actor="scenario",
                               rationale="scenario baseline architecture")
    engine.open_iteration(
        classification=[
            {"parameter_id": "1.1", "name": "vehicle-type", "value": "truck"},
            {"parameter_id": "1.2", "name": "automation", "value": "level-3"},
            {"parameter_id": "1.3", "name": "setting", "value": "highway"},
        ],
        actor="scenario", rationale="open scenario iteration")

    failure_modes = (
        [{"name": m, "scope": "PerElement"} for m in config.per_element_modes]
        + [{"name": m, "scope": "PerSegment"} for m in config.per_segment_modes])
    design_goals = [{
        "description": "reach a minimal risk condition after a single fault",
        "composition": "TimeBased",
        "composition_notes": "phase change at the end of the handover time",
        "sub_goals": [
            {"description": "gradual decrease in speed and increased distance "
                            "to surrounding vehicles",
             "activation_condition": "within handover time"},
            {"description": "stop in the same lane",
             "activation_condition": "after handover time has elapsed"},
        ],
    }]
    engine.define_process_parameters(
        elements_in_scope=list(engine.state.elements),
        failure_modes=failure_modes, design_goals=design_goals,
        default_dg=0, actor="scenario",
        rationale="scenario process parameters")
    return engine


# ---------------------------------------------------------------------------
# canonical workflow script


@dataclass
class ScriptParams:
    clarifications: int = 40
    confirmed_resolutions: int = 18
    corrected_resolutions: int = 12
    conversions: int = 10
    completed_tasks: int = 6
    cfas_with_two_das: int = 5
    cfas_with_one_da: int = 4
    seed: int = 0


def canonical_script(state: ProjectState,
                     params: ScriptParams | None = None) -> list[dict]:
    """Deterministic action list reproducing the target process statistics."""
    params = params or ScriptParams()
    rng = random.Random(params.seed)
    cfa_ids = [c.id for c in state.cfas.values() if not c.archived]
    needy_count = params.cfas_with_two_das + params.cfas_with_one_da
    if len(cfa_ids) < needy_count + params.clarifications:
        raise err.ConfigInfeasible("not enough CFAs for the requested script")

    shuffled = cfa_ids[:]
    rng.shuffle(shuffled)
    needy = shuffled[:needy_count]
    clar_targets = shuffled[needy_count:needy_count + params.clarifications]

    next_a = state.counters.get("A", 0)
    next_da = state.counters.get("DA", 0)
    next_c = state.counters.get("C", 0)
    next_t = state.counters.get("T", 0)

    actions: list[dict] = []
    clar_ids, assumption_ids = [], []
    for i in range(params.clarifications):
        actions.append({"op": "raise_clarification",
                        "question": f"needs expert input #{i + 1}: behaviour of "
                                    f"{clar_targets[i]} under fault",
                        "assumption_text": f"working assumption #{i + 1} about "
                                           f"{clar_targets[i]}",
                        "linked_cfas": [clar_targets[i]]})
        next_c += 1
        next_a += 1
        clar_ids.append(f"C-{next_c}")
        assumption_ids.append(f"A-{next_a}")

    cfa_assumption = dict(zip(clar_targets, assumption_ids))
    da_plan: dict[str, list[str]] = {}
    for idx, cfa in enumerate(needy):
        n_das = 2 if idx < params.cfas_with_two_das else 1
        da_plan[cfa] = [f"redundant path option {idx + 1}.{j + 1}"
                        for j in range(n_das)]

    # alternatives are created in analysis order, which follows cfa_ids
    chosen, rejected = [], []
    for cfa in cfa_ids:
        if cfa in da_plan:
            ids = [f"DA-{next_da + j + 1}" for j in range(len(da_plan[cfa]))]
            next_da += len(ids)
            chosen.append(ids[0])
            rejected.extend(ids[1:])

    for cfa in cfa_ids:
        if cfa in da_plan:
            actions.append({"op": "analyze_cfa", "cfa": cfa,
                            "effect": f"loss of function at {cfa}; baseline "
                                      "cannot reach the design goal",
                            "baseline_fulfills_dg": False,
                            "das": da_plan[cfa], "analyst": "architect-1"})
        else:
            cited = [cfa_assumption[cfa]] if cfa in cfa_assumption else []
            actions.append({"op": "analyze_cfa", "cfa": cfa,
                            "effect": f"degraded but acceptable behaviour at {cfa}",
                            "baseline_fulfills_dg": True,
                            "cited_assumptions": cited,
                            "analyst": "architect-1"})

    corrected_reverts = []
    for i in range(params.confirmed_resolutions):
        actions.append({"op": "resolve_clarification",
                        "clarification": clar_ids[i], "outcome": "Confirmed",
                        "expert": "expert-1",
                        "notes": "confirmed by expert consultation"})
    for i in range(params.confirmed_resolutions,
                   params.confirmed_resolutions + params.corrected_resolutions):
        target_cfa = clar_targets[i]
        actions.append({"op": "resolve_clarification",
                        "clarification": clar_ids[i], "outcome": "Corrected",
                        "expert": "expert-1",
                        "notes": "expert correction; original assumption wrong",
                        "new_text": f"corrected assumption #{i + 1} about "
                                    f"{target_cfa}",
                        "new_linked_cfas": [target_cfa]})
        next_a += 1
        corrected_reverts.append((target_cfa, f"A-{next_a}"))

    resolved_total = params.confirmed_resolutions + params.corrected_resolutions
    task_ids = []
    for i in range(resolved_total, resolved_total + params.conversions):
        actions.append({"op": "convert_clarification_to_task",
                        "clarification": clar_ids[i], "expert": "expert-2",
                        "responsible_architect": "architect-2",
                        "due_date": f"2026-10-{(i % 28) + 1:02d}"})
        next_t += 1
        task_ids.append(f"T-{next_t}")
    for task in task_ids[:params.completed_tasks]:
        actions.append({"op": "complete_task", "task": task,
                        "outcome": "Confirmed",
                        "notes": "tests performed; assumption holds"})

    for cfa, replacement in corrected_reverts:
        actions.append({"op": "analyze_cfa", "cfa": cfa,
                        "effect": f"re-analysed {cfa} with corrected assumption",
                        "baseline_fulfills_dg": True,
                        "cited_assumptions": [replacement],
                        "analyst": "architect-1"})

    actions.append({"op": "make_selection", "chosen_das": chosen,
                    "rationale": "alternatives covering every failing CFA at "
                                 "least cost",
                    "rejections": {da: "covered by a cheaper chosen alternative"
                                   for da in rejected},
                    "method_note": "team trade-off workshop"})
    actions.append({"op": "close_iteration"})
    return actions


def load_script(path: str | Path) -> list[dict]:
    data = json.loads(Path(path).read_text())
    if not isinstance(data, list):
        raise err.ParseError(str(path), 1, "expected a JSON array of actions")
    return data


def replay_workflow(engine: Engine, script: list[dict],
                    actor: str = "scenario") -> dict:
    """Run a script through the engine and report process statistics."""
    corrections = 0
    reverted = 0
    completed = 0
    for step, action in enumerate(script):
        kwargs = {k: v for k, v in action.items() if k != "op"}
        try:
            result = getattr(engine, action["op"])(**kwargs, actor=actor)
        except err.AtriumError as exc:
            raise err.ScriptActionRejected(step, exc)
        if action["op"] in ("resolve_clarification", "complete_task"):
            if action.get("outcome") == "Corrected":
                corrections += 1
            reverted += len(result.get("reverted_cfas", []))
        if action["op"] == "complete_task":
            completed += 1
    return statistics(engine.state, corrections=corrections,
                      reverted_cfa_count=reverted, tasks_completed=completed)


def statistics(state: ProjectState, corrections: int = 0,
               reverted_cfa_count: int = 0, tasks_completed: int = 0) -> dict:
    live_cfas = [c for c in state.cfas.values() if not c.archived]
    da_counts = {c.id: 0 for c in live_cfas}
    for link in state.links_of_kind(LinkKind.CFA_TO_DA):
        if link.from_id in da_counts:
            da_counts[link.from_id] += 1
    raised = len(state.clarifications)
    return {
        "cfa_total": len(live_cfas),
        "cfas_processed": sum(1 for c in live_cfas
                              if c.state is CfaState.PROCESSED),
        "cfas_with_das": sum(1 for n in da_counts.values() if n >= 1),
        "cfas_with_multiple_das": sum(1 for n in da_counts.values() if n >= 2),
        "clarifications_raised": raised,
        "resolved": sum(1 for c in state.clarifications.values()
                        if c.status is ClarificationStatus.RESOLVED),
        "converted": sum(1 for c in state.clarifications.values()
                         if c.status is ClarificationStatus.CONVERTED_TO_TASK),
        "tasks_completed": tasks_completed,
        "corrections": corrections,
        "correction_rate": corrections / raised if raised else 0.0,
        "reverted_cfa_count": reverted_cfa_count,
        "invalidated_assumptions": sum(1 for a in state.assumptions.values()
                                       if a.validity is Validity.INVALID),
        "open_tasks": sum(1 for t in state.tasks.values()
                          if t.status is TaskStatus.OPEN),
        "risk_count": len(state.risks),
    }
