"""Tree representation of message plans.

A plan is a tree whose leaves are communicative acts and whose interior
nodes are rhetorical relations.  Sequence is the only multinuclear relation;
the binary relations hold exactly a nucleus and a satellite, in that order.
`build_plan` produces the per-critique plan an unmerged critique realizes
from; the merge and revision passes build larger trees out of the same
nodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Union

from .model import (
    ActionRef,
    Critique,
    GoalRef,
    OmittedActions,
    PostponeDependent,
    PreconditionReminder,
    PreferredAlternative,
    SchedulePriority,
    Severity,
    Step,
    Urgency,
)


class RelationKind(Enum):
    SEQUENCE = "sequence"
    MOTIVATION = "motivation"
    CONCESSION = "concession"
    CONDITION = "condition"
    ELABORATION = "elaboration"


class GoalStatus(Enum):
    SOLE = "sole"          # "to <goal>"
    INITIATE = "initiate"  # "as part of <goal-ing>"
    SHARED = "shared"      # "to address both of these goals"
    COMPLETE = "complete"  # "to complete <goal-ing>"


class ScheduleReason(Enum):
    PRIORITY = "priority"
    DEPENDENCY = "dependency"
    REMINDER = "reminder"


@dataclass(frozen=True)
class Cell:
    """An action group paired with the goal set it serves."""

    actions: tuple[ActionRef, ...]
    signature: tuple[GoalRef, ...]


@dataclass(frozen=True)
class Recommend:
    """Tell the hearer to perform the cells' actions.

    `announce` controls the severity prefix; `adverb` controls the urgency
    adverb.  Both are decided upstream (single, merged and revised messages
    differ), so realization stays a pure tree walk.
    """

    severity: Severity
    cells: tuple[Cell, ...]
    announce: bool = True
    adverb: bool = True


@dataclass(frozen=True)
class Motivate:
    goal: GoalRef
    status: GoalStatus


@dataclass(frozen=True)
class Schedule:
    """Ordering constraint: do `do_first` before `before`."""

    do_first: tuple[ActionRef, ...]
    before: ActionRef
    reason: ScheduleReason


@dataclass(frozen=True)
class Prefer:
    preferred: ActionRef
    dispreferred: ActionRef
    purpose: GoalRef


@dataclass(frozen=True)
class Decide:
    """Use the results of `basis` to decide whether to do `decided`."""

    basis: ActionRef
    decided: ActionRef


@dataclass(frozen=True)
class ActionDone:
    """Hypothetical performance of an action; fills a Condition antecedent."""

    action: ActionRef


CommunicativeAct = Union[Recommend, Motivate, Schedule, Prefer, Decide, ActionDone]


@dataclass(frozen=True)
class Act:
    act: CommunicativeAct


@dataclass(frozen=True)
class Relation:
    relation: RelationKind
    children: tuple["PlanNode", ...]

    def __post_init__(self) -> None:
        if self.relation is RelationKind.SEQUENCE:
            if len(self.children) < 2:
                raise ValueError("sequence needs at least two children")
        elif len(self.children) != 2:
            raise ValueError(f"{self.relation.value} needs exactly nucleus and satellite")


PlanNode = Union[Act, Relation]


@dataclass(frozen=True)
class TextPlan:
    root: PlanNode


def run_cells(steps: tuple[Step, ...]) -> tuple[Cell, ...]:
    """Group consecutive steps that serve the same goal set into cells."""
    cells: list[Cell] = []
    for step in steps:
        sig_ids = frozenset(g.id for g in step.goals)
        if cells and frozenset(g.id for g in cells[-1].signature) == sig_ids:
            last = cells[-1]
            cells[-1] = Cell(actions=last.actions + (step.action,), signature=last.signature)
        else:
            cells.append(Cell(actions=(step.action,), signature=tuple(step.goals)))
    return tuple(cells)


def motivation_node(recommend: Recommend, motivates: tuple[Motivate, ...]) -> PlanNode:
    """One message segment: a recommendation motivated by its goals."""
    if not motivates:
        return Act(recommend)
    if len(motivates) == 1:
        satellite: PlanNode = Act(motivates[0])
    else:
        satellite = Relation(RelationKind.SEQUENCE, tuple(Act(m) for m in motivates))
    return Relation(RelationKind.MOTIVATION, (Act(recommend), satellite))


def build_plan(critique: Critique) -> TextPlan:
    """The individual plan a critique realizes from when nothing merges it.

    Omitted-actions critiques become one recommendation whose cells follow
    the recommended execution order, each goal motivated with Sole status.
    The other kinds map to their single corresponding act.
    """
    kind = critique.kind
    if isinstance(kind, OmittedActions):
        cells = run_cells(kind.steps)
        recommend = Recommend(
            severity=kind.severity,
            cells=cells,
            announce=kind.severity.urgency is not Urgency.UNSPECIFIED,
            adverb=kind.severity.urgency is not Urgency.UNSPECIFIED,
        )
        seen: dict[str, GoalRef] = {}
        for cell in cells:
            for goal in cell.signature:
                seen.setdefault(goal.id, goal)
        motivates = tuple(Motivate(goal, GoalStatus.SOLE) for goal in seen.values())
        return TextPlan(motivation_node(recommend, motivates))
    if isinstance(kind, SchedulePriority):
        return TextPlan(Act(Schedule(tuple(kind.do_first), kind.before, ScheduleReason.PRIORITY)))
    if isinstance(kind, PreconditionReminder):
        return TextPlan(Act(Schedule((kind.precondition,), kind.before, ScheduleReason.REMINDER)))
    if isinstance(kind, PostponeDependent):
        return TextPlan(Act(Schedule((kind.depends_on,), kind.postponed, ScheduleReason.DEPENDENCY)))
    if isinstance(kind, PreferredAlternative):
        return TextPlan(Act(Prefer(kind.preferred, kind.dispreferred, kind.purpose)))
    raise TypeError(f"unknown critique kind: {kind!r}")


def walk(node: PlanNode) -> Iterator[PlanNode]:
    yield node
    if isinstance(node, Relation):
        for child in node.children:
            yield from walk(child)


def plan_pairs(plan: TextPlan) -> frozenset[tuple[str, str]]:
    """(action id, goal id) pairs recoverable from the plan's recommendations."""
    pairs: set[tuple[str, str]] = set()
    for node in walk(plan.root):
        if isinstance(node, Act) and isinstance(node.act, Recommend):
            for cell in node.act.cells:
                for action in cell.actions:
                    for goal in cell.signature:
                        pairs.add((action.id, goal.id))
    return frozenset(pairs)


def _act_label(act: CommunicativeAct) -> str:
    if isinstance(act, Recommend):
        cells = "; ".join(
            "{} -> {}".format(
                ", ".join(a.id for a in cell.actions),
                ", ".join(g.id for g in cell.signature),
            )
            for cell in act.cells
        )
        return f"RECOMMEND {act.severity.level.value} [{cells}]"
    if isinstance(act, Motivate):
        return f"MOTIVATE {act.goal.id} {act.status.value}"
    if isinstance(act, Schedule):
        first = ", ".join(a.id for a in act.do_first)
        return f"SCHEDULE {act.reason.value} [{first}] before {act.before.id}"
    if isinstance(act, Prefer):
        return f"PREFER {act.preferred.id} over {act.dispreferred.id} for {act.purpose.id}"
    if isinstance(act, Decide):
        return f"DECIDE {act.decided.id} from {act.basis.id}"
    if isinstance(act, ActionDone):
        return f"ACTION-DONE {act.action.id}"
    raise TypeError(f"unknown act: {act!r}")


def dump_plan(plan: TextPlan) -> str:
    """Indented one-node-per-line rendering, relation names uppercase."""
    lines: list[str] = []

    def emit(node: PlanNode, depth: int) -> None:
        pad = "  " * depth
        if isinstance(node, Relation):
            lines.append(f"{pad}{node.relation.value.upper()}")
            for child in node.children:
                emit(child, depth + 1)
        else:
            lines.append(f"{pad}{_act_label(node.act)}")

    emit(plan.root, 0)
    return "\n".join(lines)
