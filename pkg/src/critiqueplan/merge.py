"""Combining critiques that share communicative intent.

Overlapping omitted-action critiques are regrouped into a single message:
actions are grouped into cells by the full set of goals they serve, cells
are ordered by the recommended execution order, and consecutive cells are
packed into at most three segments.  Candidate packings are scored by a
four-term metric balancing goal spread, saved action repetition, goal
repetition, and how many critiques the message absorbs; leaving one
critique out to ride along as a trailing comment is scored as an option
like any other.

Search is exhaustive at the small group sizes this domain produces, so the
chosen candidate's score equals the brute-force optimum by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

from .model import (
    Critique,
    GoalRef,
    OmittedActions,
    PostponeDependent,
    PreconditionReminder,
    PreferredAlternative,
    SchedulePriority,
    Severity,
    SeverityLevel,
    Urgency,
    critique_actions,
)
from .plan import (
    Cell,
    GoalStatus,
    Motivate,
    Recommend,
    Relation,
    RelationKind,
    TextPlan,
    motivation_node,
    run_cells,
)
from .trailing import TrailingComment, trailing_eligible, uniform_signature


@dataclass(frozen=True)
class MergeWeights:
    """Metric weights; the defaults are frozen against the worked examples."""

    w1: float = 1.0  # goal spread across segments (cost)
    w2: float = 2.0  # action repetition saved (gain)
    w3: float = 1.0  # goal repetitions in the message (cost)
    w4: float = 2.0  # critiques folded into the message (gain)


@dataclass(frozen=True)
class ScoreBreakdown:
    t1_goal_spread: int
    t2_action_repetition_saved: int
    t3_goal_repetitions: int
    t4_critiques_merged: int
    total: float


@dataclass(frozen=True)
class Segment:
    """One step of the merged sequence, realized as one sentence."""

    cells: tuple[Cell, ...]
    goal_statuses: tuple[tuple[str, GoalStatus], ...]

    def status_of(self, goal_id: str) -> GoalStatus:
        for gid, status in self.goal_statuses:
            if gid == goal_id:
                return status
        return GoalStatus.SOLE


@dataclass(frozen=True)
class MergeCandidate:
    segments: tuple[Segment, ...]
    merged_ids: frozenset[str]
    severity: Severity


@dataclass(frozen=True)
class ChosenMerge:
    """A winning candidate with its audit trail."""

    candidate: MergeCandidate
    critiques: tuple[Critique, ...]
    score: ScoreBreakdown
    cycle_reported: bool = False


@dataclass(frozen=True)
class CellLayout:
    """Ordered cells plus the must-separate precedence constraints."""

    cells: tuple[Cell, ...]
    edges: frozenset[tuple[int, int]]
    has_cycle: bool


# ---------------------------------------------------------------------------
# Grouping


def group_mergeable(critiques: Sequence[Critique]) -> list[list[Critique]]:
    """Partition omitted-action critiques by transitive action/goal overlap;
    every other critique forms its own singleton group."""
    ordered = sorted(critiques, key=lambda c: c.order_index)
    omitted = [c for c in ordered if isinstance(c.kind, OmittedActions)]
    others = [c for c in ordered if not isinstance(c.kind, OmittedActions)]

    parent = list(range(len(omitted)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i: int, j: int) -> None:
        parent[find(i)] = find(j)

    features: list[set[str]] = []
    for critique in omitted:
        kind = critique.kind
        assert isinstance(kind, OmittedActions)
        keys = {f"a:{s.action.id}" for s in kind.steps}
        keys |= {f"g:{g.id}" for s in kind.steps for g in s.goals}
        features.append(keys)
    for i, j in combinations(range(len(omitted)), 2):
        if features[i] & features[j]:
            union(i, j)

    buckets: dict[int, list[Critique]] = {}
    for i, critique in enumerate(omitted):
        buckets.setdefault(find(i), []).append(critique)
    groups = sorted(buckets.values(), key=lambda g: g[0].order_index)
    groups.extend([c] for c in others)
    groups.sort(key=lambda g: g[0].order_index)
    return groups


# ---------------------------------------------------------------------------
# Cells and precedence


def _goal_rank(critiques: Sequence[Critique]) -> dict[str, int]:
    rank: dict[str, int] = {}
    for critique in sorted(critiques, key=lambda c: c.order_index):
        kind = critique.kind
        if isinstance(kind, OmittedActions):
            for step in kind.steps:
                for goal in step.goals:
                    rank.setdefault(goal.id, len(rank))
    return rank


def _toposort(items, edges, key):
    """Kahn's algorithm with a deterministic tiebreak; on a cycle, returns
    the tiebreak order outright and flags it."""
    indegree = {item: 0 for item in items}
    outgoing: dict = {item: [] for item in items}
    for a, b in edges:
        indegree[b] += 1
        outgoing[a].append(b)
    ready = [item for item in items if indegree[item] == 0]
    order: list[str] = []
    while ready:
        ready.sort(key=key)
        item = ready.pop(0)
        order.append(item)
        for nxt in outgoing[item]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                ready.append(nxt)
    if len(order) < len(items):
        return sorted(items, key=key), True
    return order, False


def analyze_cells(group: Sequence[Critique]) -> CellLayout:
    """Cells for a merge of the whole group, ordered by the within-critique
    execution order, with the pairs that may not share a segment.

    Actions sharing a full goal signature share a cell, except when cells
    ordered between them would make the cell graph cyclic; then signature
    runs over the action order keep the sequence realizable.
    """
    ordered = sorted(group, key=lambda c: c.order_index)
    if len(ordered) == 1:
        kind = ordered[0].kind
        assert isinstance(kind, OmittedActions)
        return CellLayout(cells=run_cells(kind.steps), edges=frozenset(), has_cycle=False)

    rank = _goal_rank(ordered)
    goal_sets: dict[str, dict[str, GoalRef]] = {}
    first_seen: dict[str, tuple[int, int]] = {}
    action_refs: dict[str, object] = {}
    action_edges: set[tuple[str, str]] = set()
    position = 0
    for critique in ordered:
        kind = critique.kind
        assert isinstance(kind, OmittedActions)
        step_actions: list[str] = []
        for step in kind.steps:
            aid = step.action.id
            action_refs.setdefault(aid, step.action)
            first_seen.setdefault(aid, (critique.order_index, position))
            goal_sets.setdefault(aid, {})
            for goal in step.goals:
                goal_sets[aid].setdefault(goal.id, goal)
            step_actions.append(aid)
            position += 1
        for i, j in combinations(range(len(step_actions)), 2):
            if step_actions[i] != step_actions[j]:
                action_edges.add((step_actions[i], step_actions[j]))

    action_order, has_cycle = _toposort(
        sorted(first_seen, key=first_seen.__getitem__), action_edges, first_seen.__getitem__
    )

    def signature(aid: str) -> tuple[GoalRef, ...]:
        return tuple(sorted(goal_sets[aid].values(), key=lambda g: rank[g.id]))

    def build(groups: list[list[str]]) -> CellLayout | None:
        action_cell = {aid: ci for ci, aids in enumerate(groups) for aid in aids}
        edges: set[tuple[int, int]] = set()
        for a, b in action_edges:
            ca, cb = action_cell[a], action_cell[b]
            if ca != cb:
                edges.add((ca, cb))

        def cell_key(ci: int) -> tuple[int, int]:
            return min(first_seen[aid] for aid in groups[ci])

        order, cyclic = _toposort(range(len(groups)), edges, cell_key)
        if cyclic and not has_cycle:
            return None
        renumber = {old: new for new, old in enumerate(order)}
        cells = tuple(
            Cell(
                actions=tuple(
                    action_refs[aid]
                    for aid in sorted(groups[old], key=first_seen.__getitem__)
                ),
                signature=signature(groups[old][0]),
            )
            for old in order
        )
        remapped = frozenset((renumber[a], renumber[b]) for a, b in edges)
        return CellLayout(cells=cells, edges=remapped, has_cycle=has_cycle)

    # Full signature grouping first.
    by_signature: dict[frozenset[str], list[str]] = {}
    for aid in action_order:
        by_signature.setdefault(frozenset(goal_sets[aid]), []).append(aid)
    layout = build(list(by_signature.values()))
    if layout is not None:
        return layout

    # Signature runs over the action order.
    runs: list[list[str]] = []
    prev_sig: frozenset[str] | None = None
    for aid in action_order:
        sig = frozenset(goal_sets[aid])
        if runs and sig == prev_sig:
            runs[-1].append(aid)
        else:
            runs.append([aid])
        prev_sig = sig
    layout = build(runs)
    assert layout is not None
    return layout


def order_cells(group: Sequence[Critique]) -> tuple[Cell, ...]:
    """Ordered cells for merging the whole group (one cell run per step run
    when the group is a single critique)."""
    return analyze_cells(group).cells


# ---------------------------------------------------------------------------
# Candidate enumeration


def _compositions(n: int, max_parts: int = 3) -> list[tuple[int, ...]]:
    """All ways to split n ordered items into at most max_parts runs."""
    out: list[tuple[int, ...]] = []

    def rec(remaining: int, parts: tuple[int, ...]) -> None:
        if remaining == 0:
            out.append(parts)
            return
        if len(parts) == max_parts:
            return
        for take in range(1, remaining + 1):
            rec(remaining - take, parts + (take,))

    rec(n, ())
    return out


def _segment_statuses(
    segments: Sequence[Sequence[Cell]],
) -> list[tuple[tuple[str, GoalStatus], ...]]:
    occurrences: dict[str, list[int]] = {}
    goal_cells: dict[str, list[Cell]] = {}
    for si, cells in enumerate(segments):
        for cell in cells:
            for goal in cell.signature:
                occ = occurrences.setdefault(goal.id, [])
                if not occ or occ[-1] != si:
                    occ.append(si)
                goal_cells.setdefault(goal.id, []).append(cell)

    def status(goal_id: str, si: int) -> GoalStatus:
        occ = occurrences[goal_id]
        if len(occ) == 1:
            cells = goal_cells[goal_id]
            lone = len(cells) == 1 and len(cells[0].signature) == 1
            return GoalStatus.SOLE if lone else GoalStatus.INITIATE
        if si == occ[0]:
            return GoalStatus.INITIATE
        if si == occ[-1]:
            return GoalStatus.COMPLETE
        return GoalStatus.SHARED

    out: list[tuple[tuple[str, GoalStatus], ...]] = []
    for si, cells in enumerate(segments):
        seen: dict[str, GoalStatus] = {}
        for cell in cells:
            for goal in cell.signature:
                seen.setdefault(goal.id, status(goal.id, si))
        out.append(tuple(seen.items()))
    return out


def merged_severity(critiques: Sequence[Critique]) -> Severity:
    severity = Severity(SeverityLevel.CONSIDER, Urgency.UNSPECIFIED)
    for critique in critiques:
        kind = critique.kind
        if isinstance(kind, OmittedActions):
            severity = severity.max_with(kind.severity)
    return severity


def enumerate_candidates(
    cells: Sequence[Cell],
    merged_ids: frozenset[str] = frozenset(),
    severity: Severity = Severity(SeverityLevel.CAUTION, Urgency.UNSPECIFIED),
) -> list[MergeCandidate]:
    """Every packing of the ordered cells into 1..3 consecutive segments,
    with goal statuses assigned per segment."""
    out: list[MergeCandidate] = []
    for composition in _compositions(len(cells)):
        segments: list[tuple[Cell, ...]] = []
        start = 0
        for size in composition:
            segments.append(tuple(cells[start : start + size]))
            start += size
        statuses = _segment_statuses(segments)
        out.append(
            MergeCandidate(
                segments=tuple(
                    Segment(cells=seg, goal_statuses=st) for seg, st in zip(segments, statuses)
                ),
                merged_ids=merged_ids,
                severity=severity,
            )
        )
    return out


def _feasible(composition_bounds: list[tuple[int, int]], edges: frozenset[tuple[int, int]]) -> bool:
    for lo, hi in composition_bounds:
        for a, b in edges:
            if lo <= a < hi and lo <= b < hi:
                return False
    return True


# ---------------------------------------------------------------------------
# Scoring


def _explicit_goal_mentions(candidate: MergeCandidate) -> dict[str, int]:
    """How often each goal is named outright; anaphoric cells name none."""
    mentions: dict[str, int] = {}
    for segment in candidate.segments:
        for cell in segment.cells:
            statuses = [segment.status_of(g.id) for g in cell.signature]
            anaphor = (
                len(cell.signature) >= 2
                and all(s in (GoalStatus.SHARED, GoalStatus.COMPLETE) for s in statuses)
                and any(s is GoalStatus.SHARED for s in statuses)
            )
            if anaphor:
                continue
            for goal in cell.signature:
                mentions[goal.id] = mentions.get(goal.id, 0) + 1
    return mentions


def score(
    candidate: MergeCandidate,
    originals: Sequence[Critique],
    weights: MergeWeights,
    trailing: Sequence[TrailingComment] = (),
) -> ScoreBreakdown:
    """Score a candidate against the critiques it covers.  `originals` must
    include the sources of any trailing comments riding on the message."""
    orig_mentions: dict[str, int] = {}
    for critique in originals:
        for ref in critique_actions(critique):
            orig_mentions[ref.id] = orig_mentions.get(ref.id, 0) + 1

    cand_mentions: dict[str, int] = {}
    for segment in candidate.segments:
        for cell in segment.cells:
            for action in cell.actions:
                cand_mentions[action.id] = cand_mentions.get(action.id, 0) + 1
    for comment in trailing:
        cand_mentions[comment.focused_action.id] = cand_mentions.get(comment.focused_action.id, 0) + 1
        for ref in comment.companions:
            cand_mentions[ref.id] = cand_mentions.get(ref.id, 0) + 1

    t2 = sum(
        orig_mentions.get(aid, 1) - 1
        for aid, count in cand_mentions.items()
        if count == 1
    )

    goal_units: dict[str, int] = {}
    for segment in candidate.segments:
        seen: set[str] = set()
        for cell in segment.cells:
            for goal in cell.signature:
                seen.add(goal.id)
        for gid in seen:
            goal_units[gid] = goal_units.get(gid, 0) + 1
    goal_mentions = _explicit_goal_mentions(candidate)
    for comment in trailing:
        for goal in comment.purpose:
            goal_units[goal.id] = goal_units.get(goal.id, 0) + 1
            goal_mentions[goal.id] = goal_mentions.get(goal.id, 0) + 1

    t1 = sum(goal_units.values())
    t3 = sum(max(0, count - 1) for count in goal_mentions.values())
    t4 = len(candidate.merged_ids) + len(trailing)

    total = weights.w2 * t2 + weights.w4 * t4 - weights.w1 * t1 - weights.w3 * t3
    return ScoreBreakdown(
        t1_goal_spread=t1,
        t2_action_repetition_saved=t2,
        t3_goal_repetitions=t3,
        t4_critiques_merged=t4,
        total=total,
    )


# ---------------------------------------------------------------------------
# Structural conciseness guard


def candidate_np_count(candidate: MergeCandidate, trailing: Sequence[TrailingComment] = ()) -> int:
    total = 0
    for segment in candidate.segments:
        for cell in segment.cells:
            total += len(cell.actions)
            statuses = [segment.status_of(g.id) for g in cell.signature]
            anaphor = (
                len(cell.signature) >= 2
                and all(s in (GoalStatus.SHARED, GoalStatus.COMPLETE) for s in statuses)
                and any(s is GoalStatus.SHARED for s in statuses)
            )
            total += 1 if anaphor else len(cell.signature)
    for comment in trailing:
        total += 1 + len(comment.companions) + len(comment.purpose)
    return total


def critique_np_count(critique: Critique) -> int:
    """Structural noun phrases in the critique's own one-message realization."""
    kind = critique.kind
    if isinstance(kind, OmittedActions):
        cells = run_cells(kind.steps)
        return sum(len(c.actions) + len(c.signature) for c in cells)
    if isinstance(kind, SchedulePriority):
        return len(kind.do_first) + 1
    if isinstance(kind, (PreconditionReminder, PostponeDependent)):
        return 2
    if isinstance(kind, PreferredAlternative):
        return 3
    raise TypeError(f"unknown critique kind: {kind!r}")


# ---------------------------------------------------------------------------
# Selection


def _predict_trailing(
    candidate: MergeCandidate,
    excluded: Sequence[Critique],
) -> list[TrailingComment]:
    body_ids = frozenset(
        action.id
        for segment in candidate.segments
        for cell in segment.cells
        for action in cell.actions
    )
    comments: list[TrailingComment] = []
    for critique in excluded:
        if not trailing_eligible(critique, body_ids):
            continue
        kind = critique.kind
        assert isinstance(kind, OmittedActions)
        focused = next(s.action for s in kind.steps if s.action.id in body_ids)
        companions = tuple(s.action for s in kind.steps if s.action.id not in body_ids)
        comments.append(
            TrailingComment(
                source_id=critique.id,
                focused_action=focused,
                companions=companions,
                purpose=tuple(uniform_signature(kind) or ()),
                rank=len(comments) + 1,
            )
        )
    return comments


def _subset_candidates(subset: list[Critique]) -> tuple[list[MergeCandidate], bool]:
    layout = analyze_cells(subset)
    if len(subset) == 1:
        candidate = MergeCandidate(
            segments=(Segment(cells=layout.cells, goal_statuses=_sole_statuses(layout.cells)),),
            merged_ids=frozenset({subset[0].id}),
            severity=merged_severity(subset),
        )
        return [candidate], False

    severity = merged_severity(subset)
    ids = frozenset(c.id for c in subset)
    out: list[MergeCandidate] = []
    for composition in _compositions(len(layout.cells)):
        bounds: list[tuple[int, int]] = []
        start = 0
        for size in composition:
            bounds.append((start, start + size))
            start += size
        if not _feasible(bounds, layout.edges):
            continue
        segments = [tuple(layout.cells[lo:hi]) for lo, hi in bounds]
        statuses = _segment_statuses(segments)
        out.append(
            MergeCandidate(
                segments=tuple(Segment(cells=s, goal_statuses=st) for s, st in zip(segments, statuses)),
                merged_ids=ids,
                severity=severity,
            )
        )
    return out, layout.has_cycle


def _sole_statuses(cells: Sequence[Cell]) -> tuple[tuple[str, GoalStatus], ...]:
    seen: dict[str, GoalStatus] = {}
    for cell in cells:
        for goal in cell.signature:
            seen.setdefault(goal.id, GoalStatus.SOLE)
    return tuple(seen.items())


def combine_similar_intentions(
    critiques: Sequence[Critique],
    weights: MergeWeights = MergeWeights(),
) -> tuple[list[ChosenMerge], list[Critique]]:
    """Pick, per overlap group, the best-scoring way to fold its critiques
    into one message; everything else becomes a leftover.  Candidates that
    would come out structurally wordier than the critiques they absorb are
    discarded outright."""
    chosen: list[ChosenMerge] = []
    leftovers: list[Critique] = []

    for group in group_mergeable(critiques):
        if not isinstance(group[0].kind, OmittedActions):
            leftovers.extend(group)
            continue

        best: tuple[tuple, ChosenMerge, list[Critique]] | None = None
        for size in range(len(group), 0, -1):
            for subset_ids in combinations(range(len(group)), size):
                subset = [group[i] for i in subset_ids]
                excluded = [group[i] for i in range(len(group)) if i not in subset_ids]
                candidates, cycle = _subset_candidates(subset)
                for candidate in candidates:
                    trailing = _predict_trailing(candidate, excluded)
                    covered = subset + [c for c in excluded if any(t.source_id == c.id for t in trailing)]
                    if candidate_np_count(candidate, trailing) > sum(
                        critique_np_count(c) for c in covered
                    ):
                        continue
                    breakdown = score(candidate, covered, weights, trailing)
                    key = (
                        breakdown.total,
                        -len(candidate.segments),
                        -breakdown.t3_goal_repetitions,
                        -min(c.order_index for c in subset),
                    )
                    if best is None or key > best[0]:
                        best = (
                            key,
                            ChosenMerge(
                                candidate=candidate,
                                critiques=tuple(subset),
                                score=breakdown,
                                cycle_reported=cycle,
                            ),
                            excluded,
                        )
        # Singleton candidates are always feasible and never wordier than
        # themselves, so a group always yields a winner.
        assert best is not None
        chosen.append(best[1])
        leftovers.extend(best[2])

    chosen.sort(key=lambda m: min(c.order_index for c in m.critiques))
    leftovers.sort(key=lambda c: c.order_index)
    return chosen, leftovers


# ---------------------------------------------------------------------------
# Plan construction


def candidate_plan(candidate: MergeCandidate) -> TextPlan:
    """Build the realizable plan tree for a chosen candidate.  A merged
    message announces severity once, up front, and drops urgency adverbs;
    an unmerged single keeps its original announcing form."""
    single = len(candidate.merged_ids) == 1
    announce = candidate.severity.urgency is not Urgency.UNSPECIFIED
    nodes = []
    for i, segment in enumerate(candidate.segments):
        recommend = Recommend(
            severity=candidate.severity,
            cells=segment.cells,
            announce=announce and i == 0,
            adverb=single and announce,
        )
        rank: dict[str, int] = {}
        goals: dict[str, GoalRef] = {}
        for cell in segment.cells:
            for goal in cell.signature:
                rank.setdefault(goal.id, len(rank))
                goals.setdefault(goal.id, goal)
        motivates = tuple(
            Motivate(goals[gid], segment.status_of(gid))
            for gid in sorted(goals, key=rank.__getitem__)
        )
        nodes.append(motivation_node(recommend, motivates))
    if len(nodes) == 1:
        return TextPlan(nodes[0])
    return TextPlan(Relation(RelationKind.SEQUENCE, tuple(nodes)))
