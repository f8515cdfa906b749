"""Logical-form vocabulary for advisory critiques.

A critique is one advisory unit emitted by an upstream plan checker: it
names actions, the treatment goals those actions serve, and how urgent the
advice is.  Everything downstream (merging, revision, realization) works on
these immutable values, so a case can be planned repeatedly with identical
results.

The lexicon is data, not code: each action id maps to an imperative and a
gerund template.  Templates may carry a single ``<art>`` slot where the
article (definite/indefinite) is decided at realization time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Union

ARTICLE_SLOT = "<art>"


class SeverityLevel(Enum):
    CAUTION = "caution"
    CONSIDER = "consider"


class Urgency(Enum):
    IMMEDIATELY = "immediately"
    NOW = "now"
    UNSPECIFIED = "unspecified"


# Ordering used when a merged message takes the maximum severity of its inputs.
_LEVEL_RANK = {SeverityLevel.CONSIDER: 0, SeverityLevel.CAUTION: 1}
_URGENCY_RANK = {Urgency.UNSPECIFIED: 0, Urgency.NOW: 1, Urgency.IMMEDIATELY: 2}


@dataclass(frozen=True)
class Severity:
    """Estimated weight of the error a critique flags, plus its urgency."""

    level: SeverityLevel
    urgency: Urgency = Urgency.UNSPECIFIED

    def max_with(self, other: "Severity") -> "Severity":
        level = max(self.level, other.level, key=_LEVEL_RANK.__getitem__)
        urgency = max(self.urgency, other.urgency, key=_URGENCY_RANK.__getitem__)
        return Severity(level, urgency)


@dataclass(frozen=True)
class ActionRef:
    """Reference to a single orderable action or procedure."""

    id: str
    lexicon_key: str

    @classmethod
    def of(cls, key: str) -> "ActionRef":
        return cls(id=key, lexicon_key=key)


@dataclass(frozen=True)
class GoalRef:
    """A treatment goal, carrying both surface forms used at realization."""

    id: str
    gerund_phrase: str      # "treating the intra-abdominal injury"
    short_infinitive: str   # "treat the intra-abdominal injury"


@dataclass(frozen=True)
class LexiconEntry:
    """Surface templates for one action.

    ``has_article`` means both templates contain exactly one ``<art>`` slot;
    the realizer fills it with "the", "a"/"an", or nothing at mention time.
    """

    imperative_template: str
    gerund_template: str
    has_article: bool = False


Lexicon = Mapping[str, LexiconEntry]


@dataclass(frozen=True)
class Step:
    """One recommended action together with the goals it serves."""

    action: ActionRef
    goals: tuple[GoalRef, ...]


@dataclass(frozen=True)
class OmittedActions:
    """Actions the physician should have ordered, in recommended order."""

    severity: Severity
    steps: tuple[Step, ...]


@dataclass(frozen=True)
class SchedulePriority:
    """Do these actions before another one because they rank higher."""

    do_first: tuple[ActionRef, ...]
    before: ActionRef


@dataclass(frozen=True)
class PreconditionReminder:
    """Check a precondition before performing an action."""

    precondition: ActionRef
    before: ActionRef


@dataclass(frozen=True)
class PostponeDependent:
    """Hold off on an action whose need depends on another action's outcome."""

    postponed: ActionRef
    depends_on: ActionRef


@dataclass(frozen=True)
class PreferredAlternative:
    """A different procedure is preferred for the stated purpose."""

    preferred: ActionRef
    dispreferred: ActionRef
    purpose: GoalRef


CritiqueKind = Union[
    OmittedActions,
    SchedulePriority,
    PreconditionReminder,
    PostponeDependent,
    PreferredAlternative,
]


@dataclass(frozen=True)
class Critique:
    """One advisory unit, tagged with its emission order."""

    id: str
    order_index: int
    kind: CritiqueKind


@dataclass(frozen=True)
class CaseBundle:
    """Everything one planning turn needs: critiques plus record entries.

    ``state`` optionally embeds the prior turn's discourse state (the same
    shape the state file uses); an explicitly supplied state wins over it.
    """

    lexicon: dict[str, LexiconEntry] = field(default_factory=dict)
    goals: tuple[GoalRef, ...] = ()
    critiques: tuple[Critique, ...] = ()
    cbmr: tuple[ActionRef, ...] = ()
    state: dict | None = None


@dataclass(frozen=True)
class Violation:
    """A single schema or invariant breach, located by a JSON-ish path."""

    location: str
    message: str


def critique_actions(critique: Critique) -> tuple[ActionRef, ...]:
    """All actions a critique mentions, in surface order, without repeats."""
    kind = critique.kind
    if isinstance(kind, OmittedActions):
        seen: dict[str, ActionRef] = {}
        for step in kind.steps:
            seen.setdefault(step.action.id, step.action)
        return tuple(seen.values())
    if isinstance(kind, SchedulePriority):
        return tuple(kind.do_first) + (kind.before,)
    if isinstance(kind, PreconditionReminder):
        return (kind.precondition, kind.before)
    if isinstance(kind, PostponeDependent):
        return (kind.postponed, kind.depends_on)
    if isinstance(kind, PreferredAlternative):
        return (kind.preferred, kind.dispreferred)
    raise TypeError(f"unknown critique kind: {kind!r}")


def critique_goals(critique: Critique) -> tuple[GoalRef, ...]:
    kind = critique.kind
    if isinstance(kind, OmittedActions):
        seen: dict[str, GoalRef] = {}
        for step in kind.steps:
            for goal in step.goals:
                seen.setdefault(goal.id, goal)
        return tuple(seen.values())
    if isinstance(kind, PreferredAlternative):
        return (kind.purpose,)
    return ()


def critique_pairs(critique: Critique) -> frozenset[tuple[str, str]]:
    """(action id, goal id) motivation pairs carried by an omitted-actions
    critique; empty for the scheduling and preference kinds."""
    kind = critique.kind
    if not isinstance(kind, OmittedActions):
        return frozenset()
    return frozenset(
        (step.action.id, goal.id) for step in kind.steps for goal in step.goals
    )


# ---------------------------------------------------------------------------
# Validation


def validate_bundle(bundle: CaseBundle) -> list[Violation]:
    """Check every structural invariant; violations are data, never raises."""
    out: list[Violation] = []

    for key, entry in bundle.lexicon.items():
        loc = f"lexicon[{key!r}]"
        for name, template in (
            ("imperative", entry.imperative_template),
            ("gerund", entry.gerund_template),
        ):
            slots = template.count(ARTICLE_SLOT)
            if entry.has_article and slots != 1:
                out.append(
                    Violation(f"{loc}.{name}", f"expected exactly one {ARTICLE_SLOT} slot, found {slots}")
                )
            if not entry.has_article and slots != 0:
                out.append(
                    Violation(f"{loc}.{name}", f"{ARTICLE_SLOT} slot present but has_article is false")
                )
            if not template.strip():
                out.append(Violation(f"{loc}.{name}", "template is empty"))

    goal_ids: set[str] = set()
    for i, goal in enumerate(bundle.goals):
        loc = f"goals[{i}]"
        if goal.id in goal_ids:
            out.append(Violation(loc, f"duplicate goal id {goal.id!r}"))
        goal_ids.add(goal.id)
        if not goal.gerund_phrase.strip():
            out.append(Violation(f"{loc}.gerund", "gerund phrase is empty"))

    def check_action(ref: ActionRef, loc: str) -> None:
        if ref.lexicon_key not in bundle.lexicon:
            out.append(Violation(loc, f"action {ref.lexicon_key!r} not in lexicon"))

    def check_goal(ref: GoalRef, loc: str) -> None:
        if ref.id not in goal_ids:
            out.append(Violation(loc, f"goal {ref.id!r} not declared"))

    critique_ids: set[str] = set()
    order_indexes: set[int] = set()
    for i, critique in enumerate(bundle.critiques):
        loc = f"critiques[{i}]"
        if critique.id in critique_ids:
            out.append(Violation(loc, f"duplicate critique id {critique.id!r}"))
        critique_ids.add(critique.id)
        if critique.order_index in order_indexes:
            out.append(Violation(loc, f"duplicate order_index {critique.order_index}"))
        order_indexes.add(critique.order_index)

        kind = critique.kind
        if isinstance(kind, OmittedActions):
            if not kind.steps:
                out.append(Violation(f"{loc}.steps", "steps must be nonempty"))
            for j, step in enumerate(kind.steps):
                check_action(step.action, f"{loc}.steps[{j}].action")
                if not step.goals:
                    out.append(Violation(f"{loc}.steps[{j}].goals", "goal set must be nonempty"))
                for goal in step.goals:
                    check_goal(goal, f"{loc}.steps[{j}].goals")
            level, urgency = kind.severity.level, kind.severity.urgency
            if level is SeverityLevel.CAUTION and urgency is Urgency.NOW:
                out.append(Violation(f"{loc}.severity", "caution pairs with immediately or unspecified"))
            if level is SeverityLevel.CONSIDER and urgency is Urgency.IMMEDIATELY:
                out.append(Violation(f"{loc}.severity", "consider pairs with now or unspecified"))
        elif isinstance(kind, SchedulePriority):
            if not kind.do_first:
                out.append(Violation(f"{loc}.do_first", "do_first must be nonempty"))
            for j, ref in enumerate(kind.do_first):
                check_action(ref, f"{loc}.do_first[{j}]")
            check_action(kind.before, f"{loc}.before")
        elif isinstance(kind, PreconditionReminder):
            check_action(kind.precondition, f"{loc}.precondition")
            check_action(kind.before, f"{loc}.before")
        elif isinstance(kind, PostponeDependent):
            check_action(kind.postponed, f"{loc}.postponed")
            check_action(kind.depends_on, f"{loc}.depends_on")
            if kind.postponed.id == kind.depends_on.id:
                out.append(Violation(loc, "postponed action equals its own dependency"))
        elif isinstance(kind, PreferredAlternative):
            check_action(kind.preferred, f"{loc}.preferred")
            check_action(kind.dispreferred, f"{loc}.dispreferred")
            check_goal(kind.purpose, f"{loc}.purpose")
            if kind.preferred.id == kind.dispreferred.id:
                out.append(Violation(loc, "preferred action equals dispreferred action"))
        else:
            out.append(Violation(loc, f"unknown critique kind {type(kind).__name__}"))

    for i, ref in enumerate(bundle.cbmr):
        check_action(ref, f"cbmr[{i}]")

    return out


# ---------------------------------------------------------------------------
# JSON wire format
#
# {
#   "lexicon":   {key: {"imperative": str, "gerund": str, "has_article": bool}},
#   "goals":     [{"id": str, "gerund": str, "infinitive": str}],
#   "critiques": [ ... one object per critique, see kinds below ... ],
#   "cbmr":      [action key, ...]
# }
#
# Critique kinds (the array position is the emission order):
#   {"id", "kind": "omitted_actions", "severity": {"level", "urgency"?},
#    "steps": [{"action": key, "goals": [goal id, ...]}]}
#   {"id", "kind": "schedule_priority", "do_first": [key...], "before": key}
#   {"id", "kind": "precondition_reminder", "precondition": key, "before": key}
#   {"id", "kind": "postpone_dependent", "postponed": key, "depends_on": key}
#   {"id", "kind": "preferred_alternative", "preferred": key,
#    "dispreferred": key, "purpose": goal id}


class BundleParseError(ValueError):
    """Raised when a case file is structurally unreadable (not a mere
    invariant violation; those are reported by validate_bundle)."""


def _require(mapping: Mapping, key: str, where: str):
    if key not in mapping:
        raise BundleParseError(f"{where}: missing required field {key!r}")
    return mapping[key]


def bundle_from_dict(data: Mapping) -> CaseBundle:
    if not isinstance(data, Mapping):
        raise BundleParseError("case file root must be an object")

    lexicon: dict[str, LexiconEntry] = {}
    for key, raw in dict(data.get("lexicon", {})).items():
        lexicon[key] = LexiconEntry(
            imperative_template=_require(raw, "imperative", f"lexicon[{key!r}]"),
            gerund_template=_require(raw, "gerund", f"lexicon[{key!r}]"),
            has_article=bool(raw.get("has_article", False)),
        )

    goals: list[GoalRef] = []
    goal_by_id: dict[str, GoalRef] = {}
    for i, raw in enumerate(data.get("goals", [])):
        goal = GoalRef(
            id=_require(raw, "id", f"goals[{i}]"),
            gerund_phrase=_require(raw, "gerund", f"goals[{i}]"),
            short_infinitive=_require(raw, "infinitive", f"goals[{i}]"),
        )
        goals.append(goal)
        goal_by_id[goal.id] = goal

    def action(key, where: str) -> ActionRef:
        if not isinstance(key, str):
            raise BundleParseError(f"{where}: action reference must be a string")
        return ActionRef.of(key)

    def goal(key, where: str) -> GoalRef:
        if key not in goal_by_id:
            # Keep the reference resolvable so validate_bundle can report it.
            return GoalRef(id=str(key), gerund_phrase="", short_infinitive="")
        return goal_by_id[key]

    critiques: list[Critique] = []
    for i, raw in enumerate(data.get("critiques", [])):
        where = f"critiques[{i}]"
        cid = _require(raw, "id", where)
        kind_name = _require(raw, "kind", where)
        kind: CritiqueKind
        if kind_name == "omitted_actions":
            sev = _require(raw, "severity", where)
            severity = Severity(
                level=SeverityLevel(_require(sev, "level", f"{where}.severity")),
                urgency=Urgency(sev.get("urgency", "unspecified")),
            )
            steps = tuple(
                Step(
                    action=action(_require(s, "action", f"{where}.steps[{j}]"), f"{where}.steps[{j}]"),
                    goals=tuple(goal(g, f"{where}.steps[{j}]") for g in _require(s, "goals", f"{where}.steps[{j}]")),
                )
                for j, s in enumerate(raw.get("steps", []))
            )
            kind = OmittedActions(severity=severity, steps=steps)
        elif kind_name == "schedule_priority":
            kind = SchedulePriority(
                do_first=tuple(action(a, where) for a in _require(raw, "do_first", where)),
                before=action(_require(raw, "before", where), where),
            )
        elif kind_name == "precondition_reminder":
            kind = PreconditionReminder(
                precondition=action(_require(raw, "precondition", where), where),
                before=action(_require(raw, "before", where), where),
            )
        elif kind_name == "postpone_dependent":
            kind = PostponeDependent(
                postponed=action(_require(raw, "postponed", where), where),
                depends_on=action(_require(raw, "depends_on", where), where),
            )
        elif kind_name == "preferred_alternative":
            kind = PreferredAlternative(
                preferred=action(_require(raw, "preferred", where), where),
                dispreferred=action(_require(raw, "dispreferred", where), where),
                purpose=goal(_require(raw, "purpose", where), where),
            )
        else:
            raise BundleParseError(f"{where}: unknown kind {kind_name!r}")
        critiques.append(Critique(id=cid, order_index=i, kind=kind))

    cbmr = tuple(action(key, f"cbmr[{i}]") for i, key in enumerate(data.get("cbmr", [])))
    state = data.get("state")
    if state is not None and not isinstance(state, Mapping):
        raise BundleParseError("state must be an object when present")
    return CaseBundle(
        lexicon=lexicon,
        goals=tuple(goals),
        critiques=tuple(critiques),
        cbmr=cbmr,
        state=dict(state) if state is not None else None,
    )


def bundle_to_dict(bundle: CaseBundle) -> dict:
    data: dict = {
        "lexicon": {
            key: {
                "imperative": e.imperative_template,
                "gerund": e.gerund_template,
                "has_article": e.has_article,
            }
            for key, e in bundle.lexicon.items()
        },
        "goals": [
            {"id": g.id, "gerund": g.gerund_phrase, "infinitive": g.short_infinitive}
            for g in bundle.goals
        ],
        "critiques": [],
        "cbmr": [a.lexicon_key for a in bundle.cbmr],
    }
    for critique in bundle.critiques:
        kind = critique.kind
        raw: dict = {"id": critique.id}
        if isinstance(kind, OmittedActions):
            raw["kind"] = "omitted_actions"
            raw["severity"] = {
                "level": kind.severity.level.value,
                "urgency": kind.severity.urgency.value,
            }
            raw["steps"] = [
                {"action": s.action.lexicon_key, "goals": [g.id for g in s.goals]}
                for s in kind.steps
            ]
        elif isinstance(kind, SchedulePriority):
            raw["kind"] = "schedule_priority"
            raw["do_first"] = [a.lexicon_key for a in kind.do_first]
            raw["before"] = kind.before.lexicon_key
        elif isinstance(kind, PreconditionReminder):
            raw["kind"] = "precondition_reminder"
            raw["precondition"] = kind.precondition.lexicon_key
            raw["before"] = kind.before.lexicon_key
        elif isinstance(kind, PostponeDependent):
            raw["kind"] = "postpone_dependent"
            raw["postponed"] = kind.postponed.lexicon_key
            raw["depends_on"] = kind.depends_on.lexicon_key
        elif isinstance(kind, PreferredAlternative):
            raw["kind"] = "preferred_alternative"
            raw["preferred"] = kind.preferred.lexicon_key
            raw["dispreferred"] = kind.dispreferred.lexicon_key
            raw["purpose"] = kind.purpose.id
        data["critiques"].append(raw)
    if bundle.state is not None:
        data["state"] = dict(bundle.state)
    return data


def load_bundle(path: Path | str) -> CaseBundle:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BundleParseError(f"{path}: invalid JSON: {exc}") from exc
    return bundle_from_dict(data)


def goal_order(bundle: CaseBundle) -> dict[str, int]:
    """Rank goals by first mention across critiques (emission order, then
    step position); unmentioned goals follow in declaration order.  Used to
    realize goal lists in a stable, discourse-faithful order."""
    rank: dict[str, int] = {}
    for critique in sorted(bundle.critiques, key=lambda c: c.order_index):
        kind = critique.kind
        if isinstance(kind, OmittedActions):
            for step in kind.steps:
                for goal in step.goals:
                    rank.setdefault(goal.id, len(rank))
        elif isinstance(kind, PreferredAlternative):
            rank.setdefault(kind.purpose.id, len(rank))
    for goal in bundle.goals:
        rank.setdefault(goal.id, len(rank))
    return rank


def actions_by_id(bundle: CaseBundle) -> dict[str, ActionRef]:
    out: dict[str, ActionRef] = {}
    for critique in bundle.critiques:
        for ref in critique_actions(critique):
            out.setdefault(ref.id, ref)
    for ref in bundle.cbmr:
        out.setdefault(ref.id, ref)
    return out
