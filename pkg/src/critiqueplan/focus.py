"""Discourse state carried across planning turns.

Three pieces of state shape how messages are worded:

* the focus stack orders recently mentioned actions (most recent last);
* shared knowledge holds actions the hearer already knows about, either
  from record entries or from earlier system messages, licensing definite
  reference;
* the conflicted set holds actions whose place in the plan the system
  disputes; these are always referred to indefinitely, and they stay out
  of shared knowledge until the dispute is moot.

State values are immutable; every operation returns a new state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .model import ActionRef, Lexicon
from .plan import Act, PlanNode, Recommend, Relation, Schedule, TextPlan
from . import plan as plan_ir


class Article(Enum):
    DEFINITE = "definite"
    INDEFINITE = "indefinite"
    NONE = "none"


class ClauseOrder(Enum):
    SUBORDINATE_FIRST = "subordinate_first"
    MAIN_FIRST = "main_first"


@dataclass(frozen=True)
class DiscourseState:
    focus_stack: tuple[str, ...] = ()
    shared_knowledge: frozenset[str] = frozenset()
    conflicted: frozenset[str] = frozenset()


def empty_state() -> DiscourseState:
    return DiscourseState()


def ingest_cbmr(state: DiscourseState, entries: Sequence[ActionRef]) -> DiscourseState:
    """Record entries become shared knowledge; an entry also settles any
    earlier dispute about that action (the physician has proceeded)."""
    ids = {entry.id for entry in entries}
    if not ids:
        return state
    return DiscourseState(
        focus_stack=state.focus_stack,
        shared_knowledge=state.shared_knowledge | ids,
        conflicted=state.conflicted - ids,
    )


def mark_conflicted(state: DiscourseState, action_ids: Iterable[str]) -> DiscourseState:
    """Disputed actions lose their shared status: the definite article would
    wrongly signal acceptance into the plan."""
    ids = frozenset(action_ids)
    if not ids:
        return state
    return DiscourseState(
        focus_stack=state.focus_stack,
        shared_knowledge=state.shared_knowledge - ids,
        conflicted=state.conflicted | ids,
    )


def push_mention(state: DiscourseState, action_id: str) -> DiscourseState:
    """Move a mentioned action to the top of the focus stack and, unless it
    is under dispute, into shared knowledge."""
    stack = tuple(a for a in state.focus_stack if a != action_id) + (action_id,)
    shared = state.shared_knowledge
    if action_id not in state.conflicted:
        shared = shared | {action_id}
    return DiscourseState(focus_stack=stack, shared_knowledge=shared, conflicted=state.conflicted)


def plan_mentions(plan: TextPlan) -> list[str]:
    """Action ids in the order a realization of the plan mentions them."""
    order: list[str] = []

    def visit_schedule(act: Schedule, in_condition: bool) -> None:
        if in_condition:
            # The "if you do <pivot>" clause already voiced the pivot; the
            # revised clause re-mentions only what it still spells out.
            if act.reason is plan_ir.ScheduleReason.DEPENDENCY:
                order.append(act.before.id)
            else:
                order.extend(a.id for a in act.do_first)
            return
        if act.reason is plan_ir.ScheduleReason.DEPENDENCY:
            order.append(act.before.id)
            order.extend(a.id for a in act.do_first)
        else:
            order.extend(a.id for a in act.do_first)
            order.append(act.before.id)

    def visit(node: PlanNode) -> None:
        if isinstance(node, Relation):
            if node.relation is plan_ir.RelationKind.CONDITION:
                nucleus, satellite = node.children
                # Antecedent ("if you ...") is voiced before the consequent.
                visit(satellite)
                if isinstance(nucleus, Act) and isinstance(nucleus.act, Schedule):
                    visit_schedule(nucleus.act, in_condition=True)
                else:
                    visit(nucleus)
                return
            for child in node.children:
                visit(child)
            return
        act = node.act
        if isinstance(act, Recommend):
            for cell in act.cells:
                order.extend(a.id for a in cell.actions)
        elif isinstance(act, Schedule):
            visit_schedule(act, in_condition=False)
        elif isinstance(act, plan_ir.Prefer):
            order.extend((act.preferred.id, act.dispreferred.id))
        elif isinstance(act, plan_ir.Decide):
            order.extend((act.basis.id, act.decided.id))
        elif isinstance(act, plan_ir.ActionDone):
            order.append(act.action.id)

    visit(plan.root)
    return order


def update_after_message(state: DiscourseState, plan: TextPlan) -> DiscourseState:
    for action_id in plan_mentions(plan):
        state = push_mention(state, action_id)
    return state


def choose_article(state: DiscourseState, action: ActionRef, lexicon: Lexicon) -> Article:
    """Definite only for undisputed shared knowledge."""
    entry = lexicon[action.lexicon_key]
    if not entry.has_article:
        return Article.NONE
    if action.id in state.conflicted:
        return Article.INDEFINITE
    if action.id not in state.shared_knowledge:
        return Article.INDEFINITE
    return Article.DEFINITE


def clause_order(
    state: DiscourseState,
    act: Schedule,
    host_segment_actions: frozenset[str] | None = None,
) -> ClauseOrder:
    """Main clause first only when the constraint continues actions already
    in focus, i.e. all of do_first were mentioned in the immediately
    preceding segment of the same message.  A constraint that is the sole
    content of its message leads with the subordinate clause instead."""
    if host_segment_actions is None:
        return ClauseOrder.SUBORDINATE_FIRST
    if all(a.id in host_segment_actions for a in act.do_first):
        return ClauseOrder.MAIN_FIRST
    return ClauseOrder.SUBORDINATE_FIRST


def state_to_dict(state: DiscourseState) -> dict:
    return {
        "focus_stack": list(state.focus_stack),
        "shared_knowledge": sorted(state.shared_knowledge),
        "conflicted": sorted(state.conflicted),
    }


def state_from_dict(data: dict) -> DiscourseState:
    return DiscourseState(
        focus_stack=tuple(data.get("focus_stack", [])),
        shared_knowledge=frozenset(data.get("shared_knowledge", [])),
        conflicted=frozenset(data.get("conflicted", [])),
    )


def load_state(path: Path | str) -> DiscourseState:
    return state_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_state(state: DiscourseState, path: Path | str) -> None:
    Path(path).write_text(json.dumps(state_to_dict(state), indent=2) + "\n", encoding="utf-8")
