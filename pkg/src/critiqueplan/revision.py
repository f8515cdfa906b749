"""Rewriting interacting critique pairs into single coherent plans.

Two rules fire here.  A schedule-style critique that presumes an action the
system wants replaced contradicts the replacement advice; the pair is
rewritten as a concession whose scheduling half is conditional on the
disputed action actually being done.  A postponement whose basis action is
itself being recommended is rewritten as a sequence: do the basis, then use
its results to decide about the postponed action.  Neither rewrite drops
content; real-time support may not silently discard advice.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .model import (
    ActionRef,
    Critique,
    OmittedActions,
    PostponeDependent,
    PreconditionReminder,
    PreferredAlternative,
    SchedulePriority,
    Urgency,
)
from .plan import (
    Act,
    ActionDone,
    Decide,
    GoalStatus,
    Motivate,
    Prefer,
    Recommend,
    Relation,
    RelationKind,
    Schedule,
    ScheduleReason,
    TextPlan,
    motivation_node,
    run_cells,
)


class TriggerKind(Enum):
    CONFLICT = "conflict"
    INTERACTION = "interaction"


@dataclass(frozen=True)
class RevisionTrigger:
    kind: TriggerKind
    primary_id: str    # conflict: the preferred-alternative critique; interaction: the recommending critique
    secondary_id: str  # conflict: the scheduling critique; interaction: the postponement
    pivot: ActionRef


def _presumed_action(critique: Critique) -> ActionRef | None:
    """The action a scheduling critique takes for granted will happen."""
    kind = critique.kind
    if isinstance(kind, (PreconditionReminder, SchedulePriority)):
        return kind.before
    if isinstance(kind, PostponeDependent):
        return kind.depends_on
    return None


def detect_triggers(critiques: list[Critique]) -> list[RevisionTrigger]:
    """Find conflict and interaction pairs; each critique joins at most one
    trigger, earliest-emitted pairs first."""
    ordered = sorted(critiques, key=lambda c: c.order_index)
    potential: list[tuple[tuple[int, int], RevisionTrigger]] = []

    for prefer in ordered:
        if not isinstance(prefer.kind, PreferredAlternative):
            continue
        for scheduled in ordered:
            presumed = _presumed_action(scheduled)
            if presumed is None or presumed.id != prefer.kind.dispreferred.id:
                continue
            pair = tuple(sorted((prefer.order_index, scheduled.order_index)))
            potential.append(
                (
                    pair,
                    RevisionTrigger(
                        kind=TriggerKind.CONFLICT,
                        primary_id=prefer.id,
                        secondary_id=scheduled.id,
                        pivot=prefer.kind.dispreferred,
                    ),
                )
            )

    for postpone in ordered:
        if not isinstance(postpone.kind, PostponeDependent):
            continue
        basis = postpone.kind.depends_on
        for execute in ordered:
            kind = execute.kind
            if not isinstance(kind, OmittedActions):
                continue
            if all(step.action.id != basis.id for step in kind.steps):
                continue
            pair = tuple(sorted((postpone.order_index, execute.order_index)))
            potential.append(
                (
                    pair,
                    RevisionTrigger(
                        kind=TriggerKind.INTERACTION,
                        primary_id=execute.id,
                        secondary_id=postpone.id,
                        pivot=basis,
                    ),
                )
            )

    potential.sort(key=lambda item: (item[0], item[1].kind.value))
    used: set[str] = set()
    triggers: list[RevisionTrigger] = []
    for _, trigger in potential:
        if trigger.primary_id in used or trigger.secondary_id in used:
            continue
        used.add(trigger.primary_id)
        used.add(trigger.secondary_id)
        triggers.append(trigger)
    return triggers


def _schedule_act(critique: Critique) -> Schedule:
    kind = critique.kind
    if isinstance(kind, PreconditionReminder):
        return Schedule((kind.precondition,), kind.before, ScheduleReason.REMINDER)
    if isinstance(kind, SchedulePriority):
        return Schedule(tuple(kind.do_first), kind.before, ScheduleReason.PRIORITY)
    if isinstance(kind, PostponeDependent):
        return Schedule((kind.depends_on,), kind.postponed, ScheduleReason.DEPENDENCY)
    raise ValueError(f"critique {critique.id} is not a scheduling critique")


def revise_conflict(preferred: Critique, scheduled: Critique) -> TextPlan:
    """Concede that the disputed action may still happen: the preference is
    stated, and the scheduling advice becomes conditional on it."""
    if isinstance(scheduled.kind, PreferredAlternative):
        preferred, scheduled = scheduled, preferred
    kind = preferred.kind
    if not isinstance(kind, PreferredAlternative):
        raise ValueError("conflict revision needs a preferred-alternative critique")
    presumed = _presumed_action(scheduled)
    if presumed is None or presumed.id != kind.dispreferred.id:
        raise ValueError(
            f"critiques {preferred.id} and {scheduled.id} do not form a conflict pair"
        )

    prefer = Act(Prefer(kind.preferred, kind.dispreferred, kind.purpose))
    condition = Relation(
        RelationKind.CONDITION,
        (Act(_schedule_act(scheduled)), Act(ActionDone(kind.dispreferred))),
    )
    return TextPlan(Relation(RelationKind.CONCESSION, (prefer, condition)))


def revise_interactions(postpone: Critique, execute: Critique) -> TextPlan:
    """Sequence the basis action's recommendation with the decision it
    informs.  The recommendation's goals open as partial contributions,
    since the decision step continues them."""
    if isinstance(execute.kind, PostponeDependent) and isinstance(postpone.kind, OmittedActions):
        postpone, execute = execute, postpone
    pk = postpone.kind
    ek = execute.kind
    if not isinstance(pk, PostponeDependent) or not isinstance(ek, OmittedActions):
        raise ValueError("interaction revision needs a postponement and a recommendation")
    pivot = pk.depends_on
    if all(step.action.id != pivot.id for step in ek.steps):
        raise ValueError(
            f"critiques {postpone.id} and {execute.id} share no dependency basis"
        )

    cells = run_cells(ek.steps)
    recommend = Recommend(
        severity=ek.severity,
        cells=cells,
        announce=False,
        adverb=ek.severity.urgency is not Urgency.UNSPECIFIED,
    )
    pivot_goal_ids = {
        goal.id for step in ek.steps if step.action.id == pivot.id for goal in step.goals
    }
    seen: dict[str, Motivate] = {}
    for cell in cells:
        for goal in cell.signature:
            status = GoalStatus.INITIATE if goal.id in pivot_goal_ids else GoalStatus.SOLE
            seen.setdefault(goal.id, Motivate(goal, status))
    subtree = motivation_node(recommend, tuple(seen.values()))
    decide = Act(Decide(basis=pivot, decided=pk.postponed))
    return TextPlan(Relation(RelationKind.SEQUENCE, (subtree, decide)))
