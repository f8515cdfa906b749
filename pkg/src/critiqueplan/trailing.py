"""Trailing comments: leftover critiques appended to a host message.

A critique that missed the merge but references an action the merged
message already introduced is appended rather than emitted separately.  The
previously focused action becomes the sentence subject, cue words flag that
it was already discussed, and any genuinely new actions ride along in an
"along with" phrase.  Comments are ordered by how recently their focused
action was introduced, so reading them pops the focus stack.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

from .focus import DiscourseState
from .model import ActionRef, Critique, GoalRef, Lexicon, OmittedActions
from .phrasing import MentionTracker, serial_join

if TYPE_CHECKING:
    from .merge import MergeCandidate


@dataclass(frozen=True)
class TrailingComment:
    source_id: str
    focused_action: ActionRef
    companions: tuple[ActionRef, ...]
    purpose: tuple[GoalRef, ...]
    rank: int


def uniform_signature(kind: OmittedActions) -> tuple[GoalRef, ...] | None:
    """The shared goal signature when every step serves the same goals."""
    signature: tuple[GoalRef, ...] | None = None
    for step in kind.steps:
        ids = tuple(g.id for g in step.goals)
        if signature is None:
            signature = step.goals
        elif tuple(g.id for g in signature) != ids:
            return None
    return signature


def trailing_eligible(critique: Critique, body_action_ids: frozenset[str]) -> bool:
    """A leftover can trail only if it points back at the host without
    re-introducing host actions in companion position (which would suggest
    new instances of them) and its goals apply to every action uniformly."""
    kind = critique.kind
    if not isinstance(kind, OmittedActions):
        return False
    if uniform_signature(kind) is None:
        return False
    actions = [step.action for step in kind.steps]
    shared = [a for a in actions if a.id in body_action_ids]
    if not shared:
        return False
    companions = [a for a in actions if a.id not in body_action_ids]
    # All non-focused actions must be new to the host message.
    return len(shared) == 1 and len(companions) == len(actions) - 1


def candidate_intro_order(candidate: "MergeCandidate") -> dict[str, int]:
    """Position of each action's introduction in the host message body."""
    order: dict[str, int] = {}
    for segment in candidate.segments:
        for cell in segment.cells:
            for action in cell.actions:
                order.setdefault(action.id, len(order))
    return order


def select_trailing(
    candidate: "MergeCandidate",
    leftovers: Sequence[Critique],
) -> tuple[list[TrailingComment], list[Critique]]:
    """Split leftovers into trailing comments on this candidate and critiques
    that stay leftover.  Comments come out most-recently-introduced first."""
    intro = candidate_intro_order(candidate)
    body_ids = frozenset(intro)
    picked: list[tuple[int, Critique]] = []
    remaining: list[Critique] = []
    for critique in leftovers:
        if not trailing_eligible(critique, body_ids):
            remaining.append(critique)
            continue
        kind = critique.kind
        assert isinstance(kind, OmittedActions)
        shared = [s.action for s in kind.steps if s.action.id in body_ids]
        picked.append((intro[shared[0].id], critique))

    picked.sort(key=lambda item: -item[0])
    comments: list[TrailingComment] = []
    for rank, (position, critique) in enumerate(picked, start=1):
        kind = critique.kind
        assert isinstance(kind, OmittedActions)
        signature = uniform_signature(kind) or ()
        focused = next(s.action for s in kind.steps if s.action.id in body_ids)
        companions = tuple(s.action for s in kind.steps if s.action.id not in body_ids)
        comments.append(
            TrailingComment(
                source_id=critique.id,
                focused_action=focused,
                companions=companions,
                purpose=tuple(signature),
                rank=rank,
            )
        )
    return comments, remaining


def trailing_sentence(comment: TrailingComment, tracker: MentionTracker) -> str:
    tracker.begin_sentence()
    cue = "Moreover," if comment.rank == 1 else "In addition,"
    subject = tracker.gerund(comment.focused_action)
    sentence = f"{cue} {subject} is also indicated"
    if comment.companions:
        companions = serial_join([tracker.gerund(a) for a in comment.companions])
        sentence += f", along with {companions},"
    goals = serial_join([tracker.goal_infinitive(g) for g in comment.purpose])
    return f"{sentence} to {goals}."


def realize_trailing(
    comment: TrailingComment,
    lexicon: Lexicon,
    state: DiscourseState,
) -> str:
    """Realize one trailing comment against the given discourse state."""
    tracker = MentionTracker(state=state, lexicon=lexicon)
    return trailing_sentence(comment, tracker)
