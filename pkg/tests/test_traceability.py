import random

import pytest

from atrium import errors as err
from atrium.model import Link, LinkKind
from atrium.traceability import (
    back_trace,
    export_graph_dot,
    impact_of,
    integrity_check,
)
from helpers import (
    apply_random_op,
    fuzz_project,
    oracle_back_trace,
    oracle_reverted_set,
    toy_engine,
)


def project_with_selection():
    engine = toy_engine(n_elements=3)
    cfas = list(engine.state.cfas)
    a1 = engine.add_assumption(text="premise-1", linked_cfas=cfas[:2],
                               rationale="r")["assumption"]
    a2 = engine.add_assumption(text="premise-2", linked_cfas=[cfas[0]],
                               rationale="r")["assumption"]
    das = engine.analyze_cfa(cfa=cfas[0], effect="bad",
                             baseline_fulfills_dg=False,
                             das=["shared fix"], cited_assumptions=[a1])["das"]
    engine.analyze_cfa(cfa=cfas[1], effect="bad", baseline_fulfills_dg=False,
                       das=[das[0]])
    for cfa in cfas[2:]:
        engine.analyze_cfa(cfa=cfa, effect="fine", baseline_fulfills_dg=True)
    selection = engine.make_selection(chosen_das=das,
                                      rationale="covers both")["selection"]
    return engine, selection, (a1, a2), das


# ---------------------------------------------------------------------------
# back_trace


def test_back_trace_finds_assumptions_with_path_counts():
    engine, selection, (a1, a2), das = project_with_selection()
    result = back_trace(engine.state, selection)
    # a1 linked to both CFAs covered by the shared DA -> two paths
    assert result[a1]["path_count"] == 2
    assert result[a2]["path_count"] == 1
    path = result[a2]["path"]
    assert path[0] == selection and path[-1] == a2
    assert len(path) == 4


def test_back_trace_unknown_selection():
    engine = toy_engine()
    with pytest.raises(err.UnknownSelection):
        back_trace(engine.state, "S-999")


def test_back_trace_matches_oracle_randomized():
    rng = random.Random(17)
    for _ in range(20):
        engine = toy_engine(n_elements=rng.randint(2, 4))
        for _ in range(rng.randint(5, 20)):
            apply_random_op(engine, rng)
        # force every CFA processed, then select something
        chosen = []
        for cfa in engine.state.cfas.values():
            if cfa.archived:
                continue
            if cfa.state.value == "Unprocessed":
                engine.analyze_cfa(cfa=cfa.id, effect="e",
                                   baseline_fulfills_dg=False,
                                   das=[f"fix-{cfa.id}"])
        for cfa in engine.state.cfas.values():
            if cfa.archived or cfa.analysis is None:
                continue
            if not cfa.analysis.baseline_fulfills_dg:
                linked = engine.state.links_from(cfa.id, LinkKind.CFA_TO_DA)
                chosen.append(linked[0].to_id)
        rejections = {da.id: "not picked"
                      for da in engine.state.design_alternatives.values()
                      if da.id not in chosen and da.status.value == "Candidate"}
        selection = engine.make_selection(chosen_das=sorted(set(chosen)),
                                          rationale="fuzz selection",
                                          rejections=rejections)["selection"]
        result = back_trace(engine.state, selection)
        assert set(result) == oracle_back_trace(engine.state, selection)


# ---------------------------------------------------------------------------
# impact_of


def test_impact_matches_actual_invalidation():
    rng = random.Random(23)
    for _ in range(20):
        engine = fuzz_project(seed=rng.randrange(10_000), ops=25)
        valid = [a.id for a in engine.state.assumptions.values()
                 if a.validity.value == "Valid"]
        if not valid:
            continue
        target = rng.choice(valid)
        report = impact_of(engine.state, target)
        actual = engine.invalidate_assumption(assumption=target, reason="check")
        assert report.affected_cfas == set(actual["reverted_cfas"])


def test_impact_is_pure():
    engine, selection, (a1, _), _ = project_with_selection()
    before = engine.state.state_hash()
    report = impact_of(engine.state, a1)
    assert engine.state.state_hash() == before
    assert report.affected_selections == {selection}
    assert engine.state.assumptions[a1].validity.value == "Valid"


def test_impact_includes_clarifications_and_tasks():
    engine = toy_engine()
    cfa = next(iter(engine.state.cfas))
    raised = engine.raise_clarification(question="q?", assumption_text="a",
                                        linked_cfas=[cfa], rationale="r")
    task = engine.convert_clarification_to_task(
        clarification=raised["clarification"], expert="e",
        responsible_architect="a", due_date="2026-09-01", rationale="r")["task"]
    report = impact_of(engine.state, raised["assumption"])
    assert report.dependent_clarifications == {raised["clarification"]}
    assert report.dependent_tasks == {task}


def test_impact_skips_unprocessed_and_archived_cfas():
    engine = toy_engine()
    cfas = list(engine.state.cfas)
    a = engine.add_assumption(text="x", linked_cfas=cfas[:2],
                              rationale="r")["assumption"]
    engine.analyze_cfa(cfa=cfas[0], effect="e", baseline_fulfills_dg=True)
    report = impact_of(engine.state, a)
    assert report.affected_cfas == {cfas[0]}  # cfas[1] is still Unprocessed


def test_impact_unknown_assumption():
    engine = toy_engine()
    with pytest.raises(err.UnknownAssumption):
        impact_of(engine.state, "A-404")


def test_impact_agrees_with_reverted_oracle_fuzz():
    rng = random.Random(29)
    engine = toy_engine()
    for _ in range(200):
        apply_random_op(engine, rng)
        for a in engine.state.assumptions.values():
            if a.validity.value != "Valid":
                continue
            assert impact_of(engine.state, a.id).affected_cfas == \
                oracle_reverted_set(engine.state, a.id)


# ---------------------------------------------------------------------------
# integrity_check


def test_clean_project_has_no_violations():
    engine = fuzz_project(seed=31, ops=500)
    assert integrity_check(engine.state) == []


def test_planted_dangling_link_detected():
    engine = toy_engine()
    bad = Link("L-999", LinkKind.ASSUMPTION_TO_CFA, "A-77", "CFA-1")
    engine.state.links[bad.id] = bad
    violations = integrity_check(engine.state)
    assert any("dangling endpoint A-77" in v for v in violations)


def test_duplicate_cfa_pair_detected():
    engine = toy_engine()
    cfa = next(iter(engine.state.cfas.values()))
    clone = type(cfa)(id="CFA-900", target=cfa.target,
                      failure_mode=cfa.failure_mode, design_goal=cfa.design_goal)
    engine.state.cfas[clone.id] = clone
    violations = integrity_check(engine.state)
    assert any("duplicate (target, failure-mode)" in v for v in violations)


def test_clarification_without_assumption_link_detected():
    engine = toy_engine()
    raised = engine.raise_clarification(question="q?", assumption_text="a",
                                        rationale="r")
    link_ids = [l.id for l in engine.state.links_from(
        raised["clarification"], LinkKind.CLARIFICATION_TO_ASSUMPTION)]
    for lid in link_ids:
        del engine.state.links[lid]
    del engine.state._by_from  # force index rebuild after the tampering
    violations = integrity_check(engine.state)
    assert any("without assumption link" in v for v in violations)


def test_segment_cycle_detected():
    engine = toy_engine(segments=True)
    segs = list(engine.state.segments)
    engine.state.segments[segs[0]].parent = segs[1]
    engine.state.segments[segs[1]].parent = segs[0]
    violations = integrity_check(engine.state)
    assert any("segment parent cycle" in v for v in violations)


# ---------------------------------------------------------------------------
# graph export


def test_dot_export_contains_every_link():
    engine, _, _, _ = project_with_selection()
    dot = export_graph_dot(engine.state)
    assert dot.startswith("digraph")
    for link in engine.state.links.values():
        assert f'"{link.from_id}" -> "{link.to_id}"' in dot
