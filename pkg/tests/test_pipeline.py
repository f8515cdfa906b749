from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

from critiqueplan.focus import empty_state, state_from_dict
from critiqueplan.merge import MergeWeights
from critiqueplan.model import CaseBundle, bundle_from_dict, bundle_to_dict, load_bundle
from critiqueplan.pipeline import (
    ValidationFailure,
    aggregate_reports,
    corpus_table,
    dump_plans,
    run_case,
    run_corpus_files,
    run_corpus_generated,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def fixture(name: str) -> CaseBundle:
    return load_bundle(FIXTURES / f"{name}.json")


def expected(name: str) -> str:
    return " ".join((FIXTURES / f"{name}.expected.txt").read_text(encoding="utf-8").split())


def normalized(texts: list[str]) -> str:
    return " ".join(" ".join(texts).split())


def test_overlap_case_reduces_five_messages_to_one():
    result = run_case(fixture("multi_injury_overlap"))
    assert normalized(result.messages) == expected("multi_injury_overlap")
    report = result.report
    assert report.message_count_before == 5
    assert report.message_count_after == 1
    assert report.np_count_before == 14
    assert report.np_count_after == 13
    assert report.focus_shifts_before == 4
    assert report.focus_shifts_after == 2
    assert set(report.rules_fired) == {"Combine-Similar-Intentions", "Trailing-Comment"}


def test_conflict_case_fires_exactly_revise_conflict():
    result = run_case(fixture("conflicting_procedure"))
    assert normalized(result.messages) == expected("conflicting_procedure")
    assert list(result.report.rules_fired) == ["Revise-Conflict"]
    assert result.report.message_count_before == 2
    assert result.report.message_count_after == 1
    # The disputed procedure stays out of shared knowledge.
    assert "peritoneal_lavage" in result.state.conflicted
    assert "peritoneal_lavage" not in result.state.shared_knowledge


def test_dependent_case_fires_exactly_revise_interactions():
    result = run_case(fixture("dependent_procedures"))
    assert normalized(result.messages) == expected("dependent_procedures")
    assert list(result.report.rules_fired) == ["Revise-Interactions"]


def test_schedule_attaches_to_recommendation_message():
    result = run_case(fixture("priority_in_context"))
    assert len(result.messages) == 1
    assert normalized(result.messages) == expected("priority_in_context")


def test_standalone_schedule_leads_with_subordinate_clause():
    result = run_case(fixture("priority_standalone"))
    assert normalized(result.messages) == expected("priority_standalone")


def test_empty_bundle_yields_nothing_and_keeps_state():
    result = run_case(CaseBundle())
    assert result.messages == []
    assert result.state == empty_state()
    assert result.report.message_count_after == 0
    assert result.report.np_count_after == 0


def test_validation_failure_carries_paths():
    data = bundle_to_dict(fixture("multi_injury_overlap"))
    data["critiques"][0]["steps"][0]["goals"] = []
    with pytest.raises(ValidationFailure) as err:
        run_case(bundle_from_dict(data))
    assert err.value.violations[0].location.startswith("critiques[0]")


def test_rerun_from_same_state_is_identical():
    bundle = fixture("multi_injury_overlap")
    first = run_case(bundle)
    second = run_case(bundle)
    assert first.messages == second.messages
    assert first.state == second.state
    assert first.report == second.report


def test_turn_state_threads_to_next_turn():
    first = run_case(fixture("multi_injury_overlap"))
    assert "laparotomy" in first.state.shared_knowledge
    # A later turn mentioning the laparotomy refers to it definitely.
    followup = {
        "lexicon": {
            "laparotomy": {
                "imperative": "do <art> laparotomy",
                "gerund": "doing <art> laparotomy",
                "has_article": True,
            }
        },
        "goals": [{"id": "g", "gerund": "closing out the case", "infinitive": "close out the case"}],
        "critiques": [
            {
                "id": "f1",
                "kind": "omitted_actions",
                "severity": {"level": "caution", "urgency": "immediately"},
                "steps": [{"action": "laparotomy", "goals": ["g"]}],
            }
        ],
        "cbmr": [],
    }
    result = run_case(bundle_from_dict(followup), prior_state=first.state)
    assert result.messages[0].startswith("Caution: do the laparotomy")


def test_bundle_embedded_state_is_used_when_no_prior_given():
    data = {
        "lexicon": {
            "laparotomy": {
                "imperative": "do <art> laparotomy",
                "gerund": "doing <art> laparotomy",
                "has_article": True,
            }
        },
        "goals": [{"id": "g", "gerund": "closing the case", "infinitive": "close the case"}],
        "critiques": [
            {
                "id": "c1",
                "kind": "omitted_actions",
                "severity": {"level": "caution", "urgency": "immediately"},
                "steps": [{"action": "laparotomy", "goals": ["g"]}],
            }
        ],
        "cbmr": [],
        "state": {"focus_stack": [], "shared_knowledge": ["laparotomy"], "conflicted": []},
    }
    bundle = bundle_from_dict(data)
    assert bundle_to_dict(bundle)["state"] == data["state"]
    result = run_case(bundle)
    assert result.messages[0].startswith("Caution: do the laparotomy")
    # An explicit prior state wins over the embedded one.
    fresh = run_case(bundle, prior_state=empty_state())
    assert fresh.messages[0].startswith("Caution: do a laparotomy")


def test_final_focus_stack_tracks_mention_order():
    result = run_case(fixture("multi_injury_overlap"))
    # Trailing comment mentions laparotomy then the repair, so the repair
    # ends up on top.
    assert result.state.focus_stack[-1] == "repair_left_diaphragm"
    assert result.state.focus_stack[-2] == "laparotomy"


def test_dump_plans_shows_segment_tree():
    result = run_case(fixture("schematic_two_goals"))
    text = dump_plans(result)
    assert "SEQUENCE" in text
    assert text.count("MOTIVATION") >= 3
    assert "trailing" not in text  # nothing trails here


def test_weights_flow_through_run_case():
    silent = MergeWeights(w2=0.0, w4=0.0)
    result = run_case(fixture("multi_injury_overlap"), weights=silent)
    # Nothing merges, though a leftover may still trail onto a single.
    assert "Combine-Similar-Intentions" not in result.report.rules_fired
    assert result.report.message_count_after >= 4


# ---------------------------------------------------------------------------
# Corpus runs


def test_corpus_over_checked_in_fixtures():
    paths = sorted(FIXTURES.glob("*.json"))
    entries = run_corpus_files(paths)
    assert all(entry.error is None for entry in entries)
    table = corpus_table(entries)
    assert "TOTAL" in table
    assert "multi_injury_overlap" in table
    reports = [e.report for e in entries if e.report]
    total = aggregate_reports(reports)
    assert total.message_count_before == sum(r.message_count_before for r in reports)
    assert total.np_count_after == sum(r.np_count_after for r in reports)


def test_corpus_skips_unreadable_case(tmp_path):
    good = FIXTURES / "reminder_shared_record.json"
    bad = tmp_path / "broken.json"
    bad.write_text("{not json", encoding="utf-8")
    entries = run_corpus_files([good, bad])
    assert entries[0].error is None
    assert entries[1].error is not None


def test_generated_corpus_is_deterministic():
    first = run_corpus_generated(10, seed=42, overlap=0.6)
    second = run_corpus_generated(10, seed=42, overlap=0.6)
    assert [e.report for e in first] == [e.report for e in second]


def test_generated_corpus_never_grows_messages_or_nps():
    for entry in run_corpus_generated(100, seed=7, overlap=0.6):
        report = entry.report
        assert report is not None
        assert report.message_count_after <= report.message_count_before
        assert report.np_count_after <= report.np_count_before


# ---------------------------------------------------------------------------
# Command line


def run_cli(*args: str, cwd: Path | None = None) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "critiqueplan.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd or FIXTURES.parent,
    )


def test_cli_plan_prints_message_and_metrics():
    proc = run_cli("plan", str(FIXTURES / "multi_injury_overlap.json"), "--metrics")
    assert proc.returncode == 0
    assert "Caution: check for medication allergies" in proc.stdout
    assert "messages     5 -> 1" in proc.stdout


def test_cli_plan_json_metrics():
    proc = run_cli("plan", str(FIXTURES / "conflicting_procedure.json"), "--json-metrics")
    assert proc.returncode == 0
    payload = json.loads(proc.stdout.split("\n\n", 1)[1])
    assert payload["rules_fired"] == ["Revise-Conflict"]


def test_cli_plan_rejects_invalid_case(tmp_path):
    data = bundle_to_dict(fixture("multi_injury_overlap"))
    data["critiques"][0]["steps"][0]["goals"] = []
    path = tmp_path / "invalid.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    proc = run_cli("plan", str(path))
    assert proc.returncode == 2
    assert "critiques[0].steps[0].goals" in proc.stderr


def test_cli_state_persists_between_invocations(tmp_path):
    state_path = tmp_path / "state.json"
    proc = run_cli(
        "plan", str(FIXTURES / "multi_injury_overlap.json"), "--state", str(state_path)
    )
    assert proc.returncode == 0
    state = state_from_dict(json.loads(state_path.read_text(encoding="utf-8")))
    assert "laparotomy" in state.shared_knowledge
    again = run_cli(
        "plan", str(FIXTURES / "reminder_shared_record.json"), "--state", str(state_path)
    )
    assert again.returncode == 0


def test_cli_gen_round_trips(tmp_path):
    out = tmp_path / "case.json"
    proc = run_cli("gen", "--seed", "3", "--out", str(out))
    assert proc.returncode == 0
    bundle = load_bundle(out)
    assert bundle.critiques
    plan = run_cli("plan", str(out))
    assert plan.returncode == 0


def test_cli_corpus_generate():
    proc = run_cli("corpus", "--generate", "5", "--seed", "9")
    assert proc.returncode == 0
    assert "TOTAL" in proc.stdout


def test_cli_corpus_directory():
    proc = run_cli("corpus", str(FIXTURES))
    assert proc.returncode == 0
    assert "multi_injury_overlap" in proc.stdout


def test_cli_corpus_all_unreadable_exits_nonzero(tmp_path):
    (tmp_path / "one.json").write_text("{broken", encoding="utf-8")
    (tmp_path / "two.json").write_text("[]", encoding="utf-8")
    proc = run_cli("corpus", str(tmp_path))
    assert proc.returncode == 1
    assert "warning" in proc.stderr


def test_cli_dump_plans_flag():
    proc = run_cli("plan", str(FIXTURES / "schematic_two_goals.json"), "--dump-plans")
    assert proc.returncode == 0
    assert "SEQUENCE" in proc.stdout
    assert "MOTIVATE g2 shared" in proc.stdout
