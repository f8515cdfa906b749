from __future__ import annotations

import random
from itertools import combinations

import pytest

from critiqueplan.generator import generate_bundle
from critiqueplan.merge import (
    MergeWeights,
    analyze_cells,
    combine_similar_intentions,
    enumerate_candidates,
    group_mergeable,
    order_cells,
    score,
)
from critiqueplan.model import OmittedActions, load_bundle
from critiqueplan.plan import GoalStatus
from helpers import goal, omitted, oracle_best_total

from pathlib import Path

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def overlap_critiques():
    return list(load_bundle(FIXTURES / "multi_injury_overlap.json").critiques)


def schematic_critiques():
    return list(load_bundle(FIXTURES / "schematic_two_goals.json").critiques)


# ---------------------------------------------------------------------------
# Grouping


def test_laparotomy_chains_all_five_overlap_critiques_into_one_group():
    groups = group_mergeable(overlap_critiques())
    assert len(groups) == 1
    assert [c.id for c in groups[0]] == ["c1", "c2", "c3", "c4", "c5"]


def test_disjoint_critiques_stay_singletons():
    a = omitted("a", 0, [("x", [goal("g1")])])
    b = omitted("b", 1, [("y", [goal("g2")])])
    groups = group_mergeable([a, b])
    assert [[c.id for c in g] for g in groups] == [["a"], ["b"]]


def test_overlap_grouping_is_transitive():
    g1, g2, g3 = goal("g1"), goal("g2"), goal("g3")
    a = omitted("a", 0, [("x", [g1])])
    b = omitted("b", 1, [("x", [g2]), ("y", [g2])])
    c = omitted("c", 2, [("y", [g3])])
    groups = group_mergeable([a, b, c])
    assert len(groups) == 1


def test_grouping_matches_naive_closure_on_generated_bundles():
    for seed in range(40):
        bundle = generate_bundle(seed, overlap=0.5)
        critiques = [c for c in bundle.critiques if isinstance(c.kind, OmittedActions)]
        groups = [g for g in group_mergeable(bundle.critiques) if isinstance(g[0].kind, OmittedActions)]

        # Naive transitive closure over the overlap graph.
        def features(c):
            return {("a", s.action.id) for s in c.kind.steps} | {
                ("g", g.id) for s in c.kind.steps for g in s.goals
            }

        remaining = set(range(len(critiques)))
        closure = []
        while remaining:
            component = {remaining.pop()}
            changed = True
            while changed:
                changed = False
                for i in list(remaining):
                    if any(features(critiques[i]) & features(critiques[j]) for j in component):
                        component.add(i)
                        remaining.discard(i)
                        changed = True
            closure.append(frozenset(critiques[i].id for i in component))
        got = {frozenset(c.id for c in group) for group in groups}
        assert got == set(closure)


# ---------------------------------------------------------------------------
# Cell ordering


def test_overlap_group_cells_follow_recommended_order():
    groups = group_mergeable(overlap_critiques())
    merged = [c for c in groups[0] if c.id != "c4"]
    cells = order_cells(merged)
    assert [[a.id for a in c.actions] for c in cells] == [
        ["check_allergies"],
        ["pulmonary_care"],
        ["laparotomy"],
    ]
    assert [g.id for g in cells[0].signature] == [
        "g_pulmonary",
        "g_rib_fracture",
        "g_abdominal",
        "g_gi_tract",
    ]
    assert [g.id for g in cells[1].signature] == ["g_pulmonary", "g_rib_fracture"]
    assert [g.id for g in cells[2].signature] == ["g_abdominal"]


def test_schematic_cells_keep_equal_signatures_apart_when_order_demands():
    cells = order_cells(schematic_critiques())
    assert [[a.id for a in c.actions] for c in cells] == [["a0"], ["a1"], ["a2", "a3"], ["a4"]]
    assert [g.id for g in cells[2].signature] == ["g1", "g2"]


def test_single_critique_cells_are_signature_runs():
    g1, g2 = goal("g1"), goal("g2")
    critique = omitted("c", 0, [("a", [g1]), ("b", [g1]), ("c", [g2])])
    cells = order_cells([critique])
    assert [[a.id for a in c.actions] for c in cells] == [["a", "b"], ["c"]]


def test_conflicting_precedence_reports_cycle_and_falls_back():
    g1, g2 = goal("g1"), goal("g2")
    a = omitted("a", 0, [("x", [g1]), ("y", [g2])])
    b = omitted("b", 1, [("y", [g2]), ("x", [g1])])
    layout = analyze_cells([a, b])
    assert layout.has_cycle
    # Fallback keeps emission order.
    assert [[a_.id for a_ in c.actions] for c in layout.cells] == [["x"], ["y"]]
    chosen, _ = combine_similar_intentions([a, b])
    assert chosen  # still plans something usable


def test_conflicting_orders_with_shared_signature_collapse_into_one_cell():
    g1, g2 = goal("g1"), goal("g2")
    a = omitted("a", 0, [("x", [g1]), ("y", [g1])])
    b = omitted("b", 1, [("y", [g2]), ("x", [g2])])
    layout = analyze_cells([a, b])
    assert layout.has_cycle
    assert [[a_.id for a_ in c.actions] for c in layout.cells] == [["x", "y"]]
    assert layout.edges == frozenset()


def test_same_signature_nonadjacent_actions_merge_when_no_order_conflict():
    g1, g2 = goal("g1"), goal("g2")
    a = omitted("a", 0, [("x", [g1])])
    b = omitted("b", 1, [("y", [g2])])
    c = omitted("c", 2, [("z", [g1]), ("x", [g1])])
    cells = order_cells([a, b, c])
    ids = [[ref.id for ref in cell.actions] for cell in cells]
    assert ["x", "z"] in ids or ["z", "x"] in ids


# ---------------------------------------------------------------------------
# Candidate enumeration


def test_four_cells_enumerate_seven_candidates():
    cells = order_cells(schematic_critiques())
    assert len(cells) == 4
    candidates = enumerate_candidates(cells)
    # Compositions of 4 into at most 3 parts: C(3,0) + C(3,1) + C(3,2).
    assert len(candidates) == 7
    assert all(1 <= len(c.segments) <= 3 for c in candidates)


def test_single_cell_enumerates_one_candidate():
    g1 = goal("g1")
    cells = order_cells([omitted("c", 0, [("a", [g1])])])
    assert len(enumerate_candidates(cells)) == 1


def test_schematic_three_segment_candidate_statuses():
    cells = order_cells(schematic_critiques())
    candidates = enumerate_candidates(cells)
    three = next(
        c
        for c in candidates
        if [len(s.cells) for s in c.segments] == [2, 1, 1]
    )
    assert three.segments[0].status_of("g2") is GoalStatus.INITIATE
    assert three.segments[1].status_of("g2") is GoalStatus.SHARED
    assert three.segments[2].status_of("g2") is GoalStatus.COMPLETE
    assert three.segments[1].status_of("g1") is GoalStatus.COMPLETE


# ---------------------------------------------------------------------------
# Scoring


def test_single_unmerged_critique_score_terms():
    g1, g2 = goal("g1"), goal("g2")
    critique = omitted("c", 0, [("a", [g1]), ("b", [g2])])
    chosen, leftovers = combine_similar_intentions([critique])
    assert leftovers == []
    s = chosen[0].score
    assert s.t1_goal_spread == 2  # one segment per goal
    assert s.t2_action_repetition_saved == 0
    assert s.t3_goal_repetitions == 0
    assert s.t4_critiques_merged == 1


def test_identical_duplicates_merge_into_one_segment_saving_every_action():
    g1 = goal("g1")
    a = omitted("a", 0, [("x", [g1]), ("y", [g1])])
    b = omitted("b", 1, [("x", [g1]), ("y", [g1])])
    chosen, leftovers = combine_similar_intentions([a, b])
    assert leftovers == []
    assert len(chosen) == 1
    s = chosen[0].score
    assert len(chosen[0].candidate.segments) == 1
    assert s.t2_action_repetition_saved == 2
    assert s.t3_goal_repetitions == 0
    assert s.t4_critiques_merged == 2


def test_overlap_case_chooses_two_segments_and_excludes_trailing_fit():
    chosen, leftovers = combine_similar_intentions(overlap_critiques())
    assert len(chosen) == 1
    merge = chosen[0]
    assert {c.id for c in merge.critiques} == {"c1", "c2", "c3", "c5"}
    assert [c.id for c in leftovers] == ["c4"]
    assert len(merge.candidate.segments) == 2
    s = merge.score
    assert (s.t1_goal_spread, s.t2_action_repetition_saved) == (8, 4)
    assert (s.t3_goal_repetitions, s.t4_critiques_merged) == (3, 5)
    assert s.total == pytest.approx(7.0)


def test_schematic_case_merges_fully_into_three_segments():
    chosen, leftovers = combine_similar_intentions(schematic_critiques())
    assert leftovers == []
    assert len(chosen) == 1
    assert len(chosen[0].candidate.segments) == 3
    assert chosen[0].score.total == pytest.approx(2.0)


def test_zero_merge_reward_keeps_critiques_apart():
    weights = MergeWeights(w2=0.0, w4=0.0)
    chosen, leftovers = combine_similar_intentions(overlap_critiques(), weights)
    assert all(len(m.critiques) == 1 for m in chosen)


def test_score_invariants_on_generated_bundles():
    weights = MergeWeights()
    for seed in range(60):
        bundle = generate_bundle(seed, overlap=0.6)
        chosen, _ = combine_similar_intentions(list(bundle.critiques), weights)
        for merge in chosen:
            s = merge.score
            assert s.t2_action_repetition_saved >= 0
            assert s.t4_critiques_merged >= 1
            assert s.total == pytest.approx(
                weights.w2 * s.t2_action_repetition_saved
                + weights.w4 * s.t4_critiques_merged
                - weights.w1 * s.t1_goal_spread
                - weights.w3 * s.t3_goal_repetitions
            )


# ---------------------------------------------------------------------------
# Structural invariants


def test_candidates_respect_cap_and_action_uniqueness():
    for seed in range(80):
        bundle = generate_bundle(seed, overlap=0.7)
        chosen, _ = combine_similar_intentions(list(bundle.critiques))
        for merge in chosen:
            assert 1 <= len(merge.candidate.segments) <= 3
            seen: set[str] = set()
            for segment in merge.candidate.segments:
                for cell in segment.cells:
                    for action in cell.actions:
                        assert action.id not in seen
                        seen.add(action.id)


def test_fidelity_of_merge_outputs_plus_leftovers():
    from critiqueplan.model import critique_pairs

    for seed in range(80):
        bundle = generate_bundle(seed, overlap=0.7)
        omitteds = [c for c in bundle.critiques if isinstance(c.kind, OmittedActions)]
        chosen, leftovers = combine_similar_intentions(list(bundle.critiques))
        expected = frozenset().union(*[critique_pairs(c) for c in omitteds]) if omitteds else frozenset()
        got: set[tuple[str, str]] = set()
        for merge in chosen:
            for segment in merge.candidate.segments:
                for cell in segment.cells:
                    for action in cell.actions:
                        for g in cell.signature:
                            got.add((action.id, g.id))
        for critique in leftovers:
            got |= critique_pairs(critique)
        assert got == expected


def test_goal_status_pattern_per_goal():
    pattern_ok = {
        (GoalStatus.SOLE,),
        (GoalStatus.INITIATE,),
    }
    for seed in range(60):
        bundle = generate_bundle(seed, overlap=0.7)
        chosen, _ = combine_similar_intentions(list(bundle.critiques))
        for merge in chosen:
            per_goal: dict[str, list[GoalStatus]] = {}
            for segment in merge.candidate.segments:
                for gid, status in segment.goal_statuses:
                    per_goal.setdefault(gid, []).append(status)
            for statuses in per_goal.values():
                t = tuple(statuses)
                if t in pattern_ok:
                    continue
                assert t[0] is GoalStatus.INITIATE
                assert t[-1] is GoalStatus.COMPLETE
                assert all(s is GoalStatus.SHARED for s in t[1:-1])


def test_monotone_degradation_removing_a_critique_never_raises_t4():
    for seed in range(30):
        bundle = generate_bundle(seed, overlap=0.8)
        groups = [
            g for g in group_mergeable(list(bundle.critiques))
            if isinstance(g[0].kind, OmittedActions) and len(g) >= 2
        ]
        for group in groups:
            chosen, _ = combine_similar_intentions(group)
            full_t4 = max(m.score.t4_critiques_merged for m in chosen)
            for drop in range(len(group)):
                rest = [c for i, c in enumerate(group) if i != drop]
                sub_chosen, _ = combine_similar_intentions(rest)
                sub_t4 = max(m.score.t4_critiques_merged for m in sub_chosen)
                assert sub_t4 <= full_t4


# ---------------------------------------------------------------------------
# Brute-force oracle


def test_chosen_totals_match_brute_force_on_small_generated_bundles():
    weights = MergeWeights()
    checked = 0
    for seed in range(120):
        bundle = generate_bundle(seed, overlap=0.7)
        groups = [
            g for g in group_mergeable(list(bundle.critiques))
            if isinstance(g[0].kind, OmittedActions)
        ]
        chosen, _ = combine_similar_intentions(list(bundle.critiques), weights)
        by_first = {min(c.order_index for c in m.critiques): m for m in chosen}
        for group in groups:
            if len(group) > 5:
                continue
            actions = {s.action.id for c in group for s in c.kind.steps}
            if len(actions) > 8:
                continue
            merge = next(
                m for m in chosen
                if set(c.id for c in m.critiques) <= set(c.id for c in group)
            )
            best = oracle_best_total(group, weights.w1, weights.w2, weights.w3, weights.w4)
            assert merge.score.total == pytest.approx(best), (seed, [c.id for c in group])
            checked += 1
    assert checked >= 40
