"""Schema-based surface realization.

Realization is a deterministic walk over a plan tree: every aggregation
decision (what merged, which goals carry which status, whether the severity
prefix or urgency adverb appears) was made upstream and is encoded in the
tree, so the walk only picks templates and fills slots.  Articles are the
one context-sensitive piece: they are resolved against the discourse state
as it evolves through the paragraph.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .focus import ClauseOrder, DiscourseState
from .model import GoalRef, Lexicon, SeverityLevel, Urgency
from .phrasing import (
    LexiconError,
    MentionTracker,
    capitalize,
    elide_repeats,
    serial_join,
)
from .plan import (
    Act,
    ActionDone,
    Cell,
    Decide,
    GoalStatus,
    Motivate,
    PlanNode,
    Prefer,
    Recommend,
    Relation,
    RelationKind,
    Schedule,
    ScheduleReason,
    TextPlan,
)

_ADVERBS = {Urgency.IMMEDIATELY: "immediately", Urgency.NOW: "now"}

_DEPENDENCY_TAIL = "the outcome of the latter may affect the need to do the former"


@dataclass
class Realization:
    """One realized paragraph plus the mentions it made."""

    text: str
    state: DiscourseState
    sentence_mentions: list[list[str]] = field(default_factory=list)
    noun_phrases: int = 0


# ---------------------------------------------------------------------------
# Cells and segments


def _segment_parts(node: PlanNode) -> tuple[Recommend, dict[str, GoalStatus]] | None:
    """A segment is a recommendation, optionally motivated by its goals."""
    if isinstance(node, Act) and isinstance(node.act, Recommend):
        return node.act, {}
    if (
        isinstance(node, Relation)
        and node.relation is RelationKind.MOTIVATION
        and isinstance(node.children[0], Act)
        and isinstance(node.children[0].act, Recommend)
    ):
        statuses: dict[str, GoalStatus] = {}
        satellite = node.children[1]
        sat_nodes = satellite.children if isinstance(satellite, Relation) else (satellite,)
        for sat in sat_nodes:
            if isinstance(sat, Act) and isinstance(sat.act, Motivate):
                statuses[sat.act.goal.id] = sat.act.status
        return node.children[0].act, statuses
    return None


def _goal_phrase(
    signature: tuple[GoalRef, ...],
    statuses: dict[str, GoalStatus],
    tracker: MentionTracker,
) -> str:
    def status_of(goal: GoalRef) -> GoalStatus:
        return statuses.get(goal.id, GoalStatus.SOLE)

    values = [status_of(g) for g in signature]
    if (
        len(signature) >= 2
        and all(s in (GoalStatus.SHARED, GoalStatus.COMPLETE) for s in values)
        and any(s is GoalStatus.SHARED for s in values)
    ):
        # Every goal here was introduced earlier; point back instead of
        # repeating the goal phrases.
        tracker.goal_anaphor()
        if len(signature) == 2:
            return "to address both of these goals"
        return "to address these goals"

    groups: list[tuple[GoalStatus, list[GoalRef]]] = []
    for goal in signature:
        status = status_of(goal)
        if groups and groups[-1][0] is status:
            groups[-1][1].append(goal)
        else:
            groups.append((status, [goal]))

    parts: list[str] = []
    for status, goals in groups:
        if status is GoalStatus.SOLE:
            parts.append("to " + serial_join([tracker.goal_infinitive(g) for g in goals]))
        elif status is GoalStatus.COMPLETE:
            parts.append("to complete " + serial_join([tracker.goal_gerund(g) for g in goals]))
        else:
            # INITIATE, and the rare lone SHARED continuation, both read as
            # partial contribution to an open goal.
            parts.append("as part of " + serial_join([tracker.goal_gerund(g) for g in goals]))
    return " and ".join(parts)


def _cell_text(
    cell: Cell,
    statuses: dict[str, GoalStatus],
    tracker: MentionTracker,
    gerund_mode: bool,
    adverb: str | None,
) -> str:
    if gerund_mode:
        phrases = [tracker.gerund(a) for a in cell.actions]
    else:
        phrases = [tracker.imperative(a) for a in cell.actions]
    action_text = serial_join(elide_repeats(phrases))
    if adverb:
        action_text += f" {adverb}"
    return f"{action_text} {_goal_phrase(cell.signature, statuses, tracker)}"


def _join_cells(cell_texts: list[str]) -> str:
    if len(cell_texts) == 1:
        return cell_texts[0]
    if len(cell_texts) == 2:
        complex_cells = any(", " in t or " and " in t for t in cell_texts)
        sep = ", and " if complex_cells else " and "
        return sep.join(cell_texts)
    return ", ".join(cell_texts[:-1]) + ", and " + cell_texts[-1]


def _segment_sentence(
    recommend: Recommend,
    statuses: dict[str, GoalStatus],
    tracker: MentionTracker,
    cue: str,
) -> str:
    severity = recommend.severity
    adverb = _ADVERBS.get(severity.urgency) if recommend.adverb else None
    gerund_mode = (
        recommend.announce
        and severity.level is SeverityLevel.CONSIDER
        and recommend.adverb
    )

    cell_texts: list[str] = []
    prev_head: str | None = None
    for i, cell in enumerate(recommend.cells):
        text = _cell_text(cell, statuses, tracker, gerund_mode, adverb if i == 0 else None)
        head = text.split()[0] if text else ""
        if prev_head is not None and head == prev_head:
            text = text.split(None, 1)[1] if " " in text else text
        else:
            prev_head = head
        cell_texts.append(text)
    body = _join_cells(cell_texts)

    if recommend.announce:
        if severity.level is SeverityLevel.CAUTION:
            body = f"Caution: {body}"
        elif gerund_mode:
            body = f"Consider {body}"
        else:
            body = f"Consider: {body}"
    if cue:
        body = f"{cue} {body}"
    return capitalize(body) + "."


def _segment_cues(count: int) -> list[str]:
    if count <= 1:
        return [""] * count
    return [""] + ["Next"] * (count - 2) + ["Then"]


# ---------------------------------------------------------------------------
# Schedules


def _priority_tail(act: Schedule) -> str:
    if len(act.do_first) == 1:
        return "because it has a higher priority"
    return "because they have a higher priority"


def _schedule_sentences(act: Schedule, order: ClauseOrder, tracker: MentionTracker) -> list[str]:
    if act.reason is ScheduleReason.PRIORITY:
        if order is ClauseOrder.SUBORDINATE_FIRST:
            tracker.begin_sentence()
            before = tracker.gerund(act.before)
            firsts = serial_join(elide_repeats([tracker.imperative(a) for a in act.do_first]))
            return [capitalize(f"before {before}, {firsts} {_priority_tail(act)}.")]
        tracker.begin_sentence()
        firsts = serial_join(elide_repeats([tracker.imperative(a) for a in act.do_first]))
        before = tracker.gerund(act.before)
        return [capitalize(f"{firsts} before {before} {_priority_tail(act)}.")]
    if act.reason is ScheduleReason.REMINDER:
        tracker.begin_sentence()
        precondition = tracker.imperative(act.do_first[0])
        before = tracker.imperative(act.before)
        return [f"Please remember to {precondition} before you {before}."]
    # Dependency: `before` is the postponed action, do_first its basis.
    tracker.begin_sentence()
    postponed = tracker.imperative(act.before)
    basis = tracker.gerund(act.do_first[0])
    if act.before.id in tracker.state.conflicted:
        return [f"Do not {postponed} until after {basis} since {_DEPENDENCY_TAIL}."]
    first = f"Do not {postponed} until after {basis}."
    tracker.begin_sentence()
    return [first, capitalize(_DEPENDENCY_TAIL) + "."]


def _condition_clause(act: Schedule, tracker: MentionTracker) -> str:
    """The consequent clause once a schedule is demoted under a condition.
    The antecedent already names the pivot, so the clause points back at it
    ("first", "afterward") instead of repeating the noun phrase."""
    if act.reason is ScheduleReason.REMINDER:
        return f"remember to first {tracker.imperative(act.do_first[0])}"
    if act.reason is ScheduleReason.PRIORITY:
        firsts = serial_join(elide_repeats([tracker.imperative(a) for a in act.do_first]))
        return f"{firsts} first {_priority_tail(act)}"
    return f"do not {tracker.imperative(act.before)} until afterward"


# ---------------------------------------------------------------------------
# Acts


def _prefer_sentence(act: Prefer, tracker: MentionTracker) -> str:
    tracker.begin_sentence()
    preferred = tracker.gerund(act.preferred)
    dispreferred = tracker.gerund(act.dispreferred)
    purpose = tracker.goal_gerund(act.purpose)
    return capitalize(f"{preferred} is preferred over {dispreferred} for {purpose}.")


def _decide_sentence(act: Decide, tracker: MentionTracker) -> str:
    tracker.begin_sentence()
    basis = tracker.noun(act.basis)
    decided = tracker.imperative(act.decided)
    return f"Use the results of {basis} to decide whether or not to {decided}."


# ---------------------------------------------------------------------------
# Tree walk


def _realize_node(node: PlanNode, tracker: MentionTracker) -> list[str]:
    segment = _segment_parts(node)
    if segment is not None:
        recommend, statuses = segment
        tracker.begin_sentence()
        return [_segment_sentence(recommend, statuses, tracker, cue="")]

    if isinstance(node, Relation):
        if node.relation is RelationKind.SEQUENCE:
            parts = [_segment_parts(child) for child in node.children]
            if all(p is not None for p in parts):
                cues = _segment_cues(len(node.children))
                sentences = []
                for (recommend, statuses), cue in zip(parts, cues):  # type: ignore[misc]
                    tracker.begin_sentence()
                    sentences.append(_segment_sentence(recommend, statuses, tracker, cue))
                return sentences
            out: list[str] = []
            for child in node.children:
                out.extend(_realize_node(child, tracker))
            return out
        if node.relation is RelationKind.CONCESSION:
            nucleus, satellite = node.children
            sentences = _realize_node(nucleus, tracker)
            sentences.extend(_condition_sentences(satellite, tracker, concessive=True))
            return sentences
        if node.relation is RelationKind.CONDITION:
            return _condition_sentences(node, tracker, concessive=False)
        # Elaboration: satellite sentences simply follow the nucleus.
        nucleus, satellite = node.children
        return _realize_node(nucleus, tracker) + _realize_node(satellite, tracker)

    act = node.act
    if isinstance(act, Schedule):
        return _schedule_sentences(act, ClauseOrder.SUBORDINATE_FIRST, tracker)
    if isinstance(act, Prefer):
        return [_prefer_sentence(act, tracker)]
    if isinstance(act, Decide):
        return [_decide_sentence(act, tracker)]
    if isinstance(act, ActionDone):
        return []
    if isinstance(act, Motivate):
        return []
    raise TypeError(f"cannot realize act {act!r}")


def _condition_sentences(node: PlanNode, tracker: MentionTracker, concessive: bool) -> list[str]:
    if not (isinstance(node, Relation) and node.relation is RelationKind.CONDITION):
        return _realize_node(node, tracker)
    nucleus, satellite = node.children
    tracker.begin_sentence()
    if isinstance(satellite, Act) and isinstance(satellite.act, ActionDone):
        antecedent = tracker.imperative(satellite.act.action)
    else:
        antecedent = " ".join(_realize_node(satellite, tracker))
    if isinstance(nucleus, Act) and isinstance(nucleus.act, Schedule):
        consequent = _condition_clause(nucleus.act, tracker)
    else:
        consequent = " ".join(_realize_node(nucleus, tracker)).rstrip(".")
        consequent = consequent[:1].lower() + consequent[1:]
    opener = "However, if" if concessive else "If"
    return [f"{opener} you {antecedent}, then {consequent}."]


def plan_sentences(plan: TextPlan, tracker: MentionTracker) -> list[str]:
    """Realize a plan into sentences against a live tracker, so a caller can
    keep appending to the same paragraph (trailing comments, schedules)."""
    return _realize_node(plan.root, tracker)


def schedule_sentences(act: Schedule, order: ClauseOrder, tracker: MentionTracker) -> list[str]:
    return _schedule_sentences(act, order, tracker)


def realize_plan(plan: TextPlan, state: DiscourseState, lexicon: Lexicon) -> Realization:
    tracker = MentionTracker(state=state, lexicon=lexicon)
    sentences = _realize_node(plan.root, tracker)
    return Realization(
        text=" ".join(sentences),
        state=tracker.state,
        sentence_mentions=tracker.sentences,
        noun_phrases=tracker.noun_phrase_count,
    )


def realize(plan: TextPlan, state: DiscourseState, lexicon: Lexicon) -> tuple[str, DiscourseState]:
    """Realize one plan as a paragraph; returns the text and the discourse
    state after all its mentions.  Raises LexiconError when an action has no
    lexicon entry."""
    result = realize_plan(plan, state, lexicon)
    return result.text, result.state


def realize_schedule(
    act: Schedule,
    order: ClauseOrder,
    state: DiscourseState,
    lexicon: Lexicon,
) -> str:
    """Realize one scheduling constraint with the given clause order."""
    tracker = MentionTracker(state=state, lexicon=lexicon)
    return " ".join(_schedule_sentences(act, order, tracker))


# ---------------------------------------------------------------------------
# Metrics


def count_noun_phrases(realized: Realization | TextPlan) -> int:
    """Structural noun-phrase count: action mentions plus goal mentions,
    with a goal anaphor counting once.  No text parsing."""
    if isinstance(realized, Realization):
        return realized.noun_phrases
    plan: TextPlan = realized
    total = 0

    def visit(node: PlanNode, in_condition: bool) -> None:
        nonlocal total
        segment = _segment_parts(node)
        if segment is not None:
            recommend, statuses = segment
            for cell in recommend.cells:
                total += len(cell.actions)
                values = [statuses.get(g.id, GoalStatus.SOLE) for g in cell.signature]
                anaphor = (
                    len(cell.signature) >= 2
                    and all(s in (GoalStatus.SHARED, GoalStatus.COMPLETE) for s in values)
                    and any(s is GoalStatus.SHARED for s in values)
                )
                total += 1 if anaphor else len(cell.signature)
            return
        if isinstance(node, Relation):
            if node.relation is RelationKind.CONDITION:
                nucleus, satellite = node.children
                visit(satellite, in_condition)
                visit(nucleus, True)
                return
            for child in node.children:
                visit(child, in_condition)
            return
        act = node.act
        if isinstance(act, Schedule):
            if in_condition:
                total += 1 if act.reason is ScheduleReason.DEPENDENCY else len(act.do_first)
            else:
                total += len(act.do_first) + 1
        elif isinstance(act, Prefer):
            total += 3
        elif isinstance(act, Decide):
            total += 2
        elif isinstance(act, ActionDone):
            total += 1

    visit(plan.root, False)
    return total


def count_focus_shifts(
    sentence_mentions: Sequence[Sequence[str]],
    state: DiscourseState,
) -> int:
    """A shift is a sentence whose first-mentioned action is not on top of
    the focus stack; mentions within the sentence then restack in order."""
    stack: list[str] = list(state.focus_stack)
    shifts = 0
    for mentions in sentence_mentions:
        if not mentions:
            continue
        first = mentions[0]
        if not stack or stack[-1] != first:
            shifts += 1
        for mention in mentions:
            if mention in stack:
                stack.remove(mention)
            stack.append(mention)
    return shifts
