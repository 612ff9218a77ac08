"""Acceptance suite: one test per release criterion, each printing a
single PASS/FAIL line. Every expected value is checked against an
independent recount (raw ledger scan, counting formula, or brute-force
graph oracle), never against the engine's own bookkeeping alone.
"""

import json
import random
import time
from contextlib import contextmanager

import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from atrium import errors as err
from atrium.api import create_app
from atrium.cli import main as cli_main
from atrium.engine import Engine
from atrium.model import CfaState, LinkKind, Validity
from atrium.scenario import (
    ScenarioConfig,
    build_case_study,
    canonical_script,
    choose_sub_segment_count,
    expected_cfa_count,
    replay_workflow,
)
from atrium.store import ProjectStore
from helpers import (
    apply_random_op,
    fuzz_project,
    oracle_coverage_ok,
    oracle_reverted_set,
    toy_engine,
)


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"FAIL  {name}")
        raise
    print(f"PASS  {name}")


# ---------------------------------------------------------------------------
# 1. scenario scale


def test_scenario_scale_match():
    with criterion("scenario scale: 25 elements, 4 mains, CFAs in [75, 85], <1s"):
        start = time.perf_counter()
        engine = build_case_study()
        elapsed = time.perf_counter() - start
        st = engine.state
        assert len(st.elements) == 25
        mains = [s for s in st.segments.values() if s.parent is None]
        assert len(mains) == 4
        assert 75 <= len(st.cfas) <= 85
        config = ScenarioConfig()
        assert len(st.cfas) == expected_cfa_count(
            config, choose_sub_segment_count(config))
        assert elapsed < 1.0, f"build took {elapsed:.2f}s"


# ---------------------------------------------------------------------------
# 2. workflow statistics


def recount_from_ledger(state):
    """Independent statistics recount from the raw change ledger and links."""
    raised = resolved = converted = corrections = 0
    for entry in state.change_log:
        for change in entry.implemented_changes:
            if change.field == "created" and change.entity_id.startswith("C-"):
                raised += 1
            if change.entity_id.startswith("C-") and change.field == "status":
                if change.after == "Resolved":
                    resolved += 1
                elif change.after == "ConvertedToTask":
                    converted += 1
            if (change.entity_id.startswith("A-") and change.field == "validity"
                    and change.after == "Invalid"):
                corrections += 1
    da_per_cfa = {}
    for link in state.links.values():
        if link.kind is LinkKind.CFA_TO_DA:
            da_per_cfa.setdefault(link.from_id, set()).add(link.to_id)
    return {
        "raised": raised, "resolved": resolved, "converted": converted,
        "corrections": corrections,
        "cfas_with_das": sum(1 for v in da_per_cfa.values() if len(v) >= 1),
        "cfas_with_multiple_das": sum(1 for v in da_per_cfa.values()
                                      if len(v) >= 2),
        "open_tasks": sum(1 for t in state.tasks.values()
                          if t.status.value == "Open"),
        "risks": len(state.risks),
    }


def test_workflow_statistics_match():
    with criterion("workflow statistics: 40/30/10, rate 0.30±0.02, 9/5 DAs, "
                   "risks = open tasks, <5s"):
        engine = build_case_study()
        start = time.perf_counter()
        stats = replay_workflow(engine, canonical_script(engine.state))
        elapsed = time.perf_counter() - start
        assert stats["clarifications_raised"] == 40
        assert stats["resolved"] == 30
        assert stats["converted"] == 10
        assert stats["correction_rate"] == pytest.approx(0.30, abs=0.02)
        assert stats["cfas_with_das"] == 9
        assert stats["cfas_with_multiple_das"] == 5
        assert stats["risk_count"] == stats["open_tasks"]

        ledger = recount_from_ledger(engine.state)
        assert ledger["raised"] == stats["clarifications_raised"]
        assert ledger["resolved"] == stats["resolved"]
        assert ledger["converted"] == stats["converted"]
        assert ledger["corrections"] == stats["corrections"]
        assert ledger["cfas_with_das"] == stats["cfas_with_das"]
        assert ledger["cfas_with_multiple_das"] == stats["cfas_with_multiple_das"]
        assert ledger["risks"] == ledger["open_tasks"] == stats["risk_count"]
        assert elapsed < 5.0, f"replay took {elapsed:.2f}s"


# ---------------------------------------------------------------------------
# 3. propagation oracle equivalence


def test_propagation_oracle_equivalence():
    with criterion("propagation equals graph oracle on 1,000 random projects"):
        rng = random.Random(2026)
        checked = 0
        for trial in range(1000):
            engine = toy_engine(n_elements=rng.randint(2, 5))
            for _ in range(rng.randint(3, 18)):
                apply_random_op(engine, rng)
            st = engine.state
            entities = sum(len(getattr(st, n)) for n in (
                "elements", "segments", "cfas", "design_alternatives",
                "assumptions", "clarifications", "tasks", "links"))
            assert entities <= 200, f"trial {trial} grew to {entities} entities"
            valid = [a.id for a in st.assumptions.values()
                     if a.validity is Validity.VALID]
            if not valid:
                continue
            target = rng.choice(valid)
            expected = oracle_reverted_set(st, target)
            result = engine.invalidate_assumption(assumption=target,
                                                  reason="acceptance trial")
            assert set(result["reverted_cfas"]) == expected, f"trial {trial}"
            checked += 1
        assert checked > 900  # nearly every trial exercises an invalidation


# ---------------------------------------------------------------------------
# 4. gate truth table


def gate_fixture(open_clar: bool, unprocessed: bool, no_selection: bool):
    """Toy project staged so exactly the requested gate conditions hold."""
    engine = toy_engine()
    for cfa in list(engine.state.cfas.values()):
        engine.analyze_cfa(cfa=cfa.id, effect="fine", baseline_fulfills_dg=True)
    if not no_selection:
        engine.make_selection(chosen_das=[], rationale="baseline suffices")
    if unprocessed:
        cfa = next(iter(engine.state.cfas))
        a = engine.add_assumption(text="stale premise", linked_cfas=[cfa],
                                  rationale="fixture")["assumption"]
        engine.invalidate_assumption(assumption=a, reason="fixture")
        assert engine.state.cfas[cfa].state is CfaState.UNPROCESSED
    if open_clar:
        engine.raise_clarification(question="pending?", assumption_text="tbd",
                                   rationale="fixture")
    return engine


def test_gate_truth_table():
    with criterion("iteration gate matches three-condition conjunction "
                   "(all 8 combinations)"):
        for bits in range(8):
            open_clar = bool(bits & 4)
            unprocessed = bool(bits & 2)
            no_selection = bool(bits & 1)
            engine = gate_fixture(open_clar, unprocessed, no_selection)
            should_close = not (open_clar or unprocessed or no_selection)
            if should_close:
                engine.close_iteration()
                assert engine.state.current_iteration() is None, bits
            else:
                with pytest.raises(err.GateFailed) as excinfo:
                    engine.close_iteration()
                gate = excinfo.value
                assert bool(gate.open_clarifications) == open_clar, bits
                assert bool(gate.unprocessed_cfas) == unprocessed, bits
                assert gate.selection_missing == no_selection, bits
                assert engine.state.current_iteration() is not None, bits


# ---------------------------------------------------------------------------
# 5. append-only + monotonicity fuzz


def test_append_only_and_monotonicity_fuzz():
    with criterion("10,000-op fuzz: append-only ledgers, monotone validity, "
                   "one change entry per operation"):
        total_ops = 0
        for seed in range(5):
            rng = random.Random(seed)
            engine = toy_engine(n_elements=4)
            base_ops = len(engine.state.operation_log)
            seen_a: set[str] = set()
            seen_c: set[str] = set()
            invalid: set[str] = set()
            for i in range(2000):
                before = len(engine.state.change_log)
                apply_random_op(engine, rng)
                total_ops += 1
                st = engine.state
                assert len(st.change_log) == before + 1
                assert seen_a <= set(st.assumptions)
                assert seen_c <= set(st.clarifications)
                seen_a, seen_c = set(st.assumptions), set(st.clarifications)
                # monotone validity, checked on a sample plus all known-invalid
                for aid in invalid:
                    assert st.assumptions[aid].validity is Validity.INVALID
                for a in st.assumptions.values():
                    if a.validity is Validity.INVALID:
                        invalid.add(a.id)
            assert len(engine.state.change_log) == len(engine.state.operation_log)
            assert len(engine.state.operation_log) - base_ops == 2000
            sequences = [e.sequence for e in engine.state.change_log]
            assert sequences == list(range(1, len(sequences) + 1))
        assert total_ops == 10_000


# ---------------------------------------------------------------------------
# 6. selection coverage


def bipartite_fixture(rng):
    """Random needy-CFA/DA bipartite instance built through the engine."""
    n_cfas = rng.randint(1, 6)
    n_das = rng.randint(1, 6)
    engine = toy_engine(n_elements=n_cfas, per_element_modes=1)
    cfa_ids = list(engine.state.cfas)
    da_ids: list[str] = []
    for i, cfa in enumerate(cfa_ids):
        edge_count = rng.randint(1, max(1, n_das // 2))
        picks = rng.sample(range(n_das), min(edge_count, n_das))
        das = []
        for j in picks:
            das.append(da_ids[j] if j < len(da_ids) else f"alternative-{j}")
        created = engine.analyze_cfa(cfa=cfa, effect="bad",
                                     baseline_fulfills_dg=False, das=das)["das"]
        for da in created:
            if da not in da_ids:
                da_ids.append(da)
    return engine, cfa_ids, da_ids


def test_selection_coverage_matches_brute_force():
    with criterion("selection accepted iff brute-force coverage check passes "
                   "(random bipartite instances)"):
        rng = random.Random(77)
        accepted = rejected = 0
        for trial in range(300):
            engine, cfa_ids, da_ids = bipartite_fixture(rng)
            assert len(cfa_ids) + len(da_ids) <= 50
            chosen = {da for da in da_ids if rng.random() < 0.5}
            rejections = {da: "not picked" for da in da_ids if da not in chosen}
            expected_ok = oracle_coverage_ok(engine.state, chosen)
            try:
                engine.make_selection(chosen_das=sorted(chosen),
                                      rationale="trial",
                                      rejections=rejections)
                assert expected_ok, f"trial {trial}: accepted a coverage gap"
                accepted += 1
            except err.CoverageGap:
                assert not expected_ok, f"trial {trial}: rejected full coverage"
                rejected += 1
        assert accepted > 20 and rejected > 20  # both branches exercised


# ---------------------------------------------------------------------------
# 7. persistence round-trip


def test_persistence_round_trip_and_replay_hash(tmp_path):
    with criterion("save/load identity and log-replay hash on fuzzed states"):
        for seed in range(12):
            engine = fuzz_project(seed=seed, ops=40)
            store = ProjectStore(tmp_path / f"proj-{seed}")
            store.save(engine.state)
            loaded = store.load()
            assert loaded.canonical_json() == engine.state.canonical_json()
            replayed = Engine.from_log(loaded.operation_log)
            assert replayed.state.state_hash() == engine.state.state_hash()


# ---------------------------------------------------------------------------
# 8. CLI/API parity


PARITY_OPS = [
    ("add_assumption", {"text": "bus has headroom", "rationale": "measured"}),
    ("analyze_cfa", {"cfa": "CFA-1", "effect": "unit stops",
                     "baseline_fulfills_dg": False,
                     "das": ["redundant unit"],
                     "cited_assumptions": ["A-1"], "rationale": "needed"}),
    ("raise_clarification", {"question": "confirm load?", "assumption": "A-1",
                             "rationale": "verify"}),
    ("resolve_clarification", {"clarification": "C-1", "outcome": "Corrected",
                               "expert": "expert-1", "notes": "was wrong",
                               "new_text": "corrected premise",
                               "new_linked_cfas": ["CFA-1"]}),
    ("analyze_cfa", {"cfa": "CFA-1", "effect": "unit stops",
                     "baseline_fulfills_dg": False, "das": ["DA-1"],
                     "cited_assumptions": ["A-2"], "rationale": "redo"}),
]


def run_ops_via_cli(project, monkeypatch):
    monkeypatch.setenv("ATRIUM_FAKE_TIME", "1")
    runner = CliRunner()
    cli_for_op = {
        "add_assumption": lambda p: ["assumption", "add", p["text"],
                                     "--rationale", p["rationale"]],
        "analyze_cfa": lambda p: (["cfa", "analyze", p["cfa"],
                                   "--effect", p["effect"], "--no-baseline"]
                                  + [x for da in p["das"] for x in ("--da", da)]
                                  + [x for a in p["cited_assumptions"]
                                     for x in ("--cite", a)]
                                  + ["--rationale", p["rationale"]]),
        "raise_clarification": lambda p: ["clarification", "raise",
                                          p["question"], "--assumption",
                                          p["assumption"], "--rationale",
                                          p["rationale"]],
        "resolve_clarification": lambda p: (["clarification", "resolve",
                                             p["clarification"], "--outcome",
                                             p["outcome"], "--expert",
                                             p["expert"], "--notes", p["notes"],
                                             "--new-text", p["new_text"]]
                                            + [x for c in p["new_linked_cfas"]
                                               for x in ("--link", c)]),
    }
    for op, payload in PARITY_OPS:
        result = runner.invoke(cli_main, ["--project", str(project),
                                          "--actor", "architect"]
                               + cli_for_op[op](payload))
        assert result.exit_code == 0, f"{op}: {result.output}"
    return ProjectStore(project).load()


def run_ops_via_api(project, monkeypatch):
    monkeypatch.setenv("ATRIUM_FAKE_TIME", "1")
    client = TestClient(create_app(project))
    for i, (op, payload) in enumerate(PARITY_OPS):
        response = client.post(f"/v1/commands/{op}",
                               json={"request_id": f"parity-{i}",
                                     "actor": "architect",
                                     "payload": payload})
        assert response.status_code == 200, f"{op}: {response.text}"
    return ProjectStore(project).load()


def test_cli_api_parity(tmp_path, monkeypatch):
    with criterion("identical operation sequences through CLI and API "
                   "produce identical change logs"):
        monkeypatch.setenv("ATRIUM_FAKE_TIME", "1")
        base = toy_engine()
        store_a = ProjectStore(tmp_path / "via-cli")
        store_b = ProjectStore(tmp_path / "via-api")
        store_a.save(base.state)
        store_b.save(base.state)

        state_cli = run_ops_via_cli(tmp_path / "via-cli", monkeypatch)
        state_api = run_ops_via_api(tmp_path / "via-api", monkeypatch)

        from atrium.changelog import entry_to_record
        log_cli = [entry_to_record(e) for e in state_cli.change_log]
        log_api = [entry_to_record(e) for e in state_api.change_log]
        assert log_cli == log_api
        assert state_cli.state_hash() == state_api.state_hash()
