"""Seeded random case generator for regression and property runs.

Bundles come out fully realizable: every synthesized action gets lexicon
templates (some with article slots) and every goal gets both surface forms.
The overlap probability controls how often a critique reuses an action or
goal that an earlier critique already mentioned, which is what gives the
merge rules something to do.
"""

from __future__ import annotations

import random

from .model import (
    ActionRef,
    CaseBundle,
    Critique,
    GoalRef,
    LexiconEntry,
    OmittedActions,
    PostponeDependent,
    PreconditionReminder,
    PreferredAlternative,
    SchedulePriority,
    Severity,
    SeverityLevel,
    Step,
    Urgency,
)

_VERBS = [
    ("check for", False),
    ("order", False),
    ("do", True),
    ("get", True),
    ("insert", True),
    ("perform", False),
]

_PROCEDURES = [
    "chest scan",
    "fluid bolus",
    "airway assessment",
    "blood panel",
    "splint adjustment",
    "wound review",
    "pressure dressing",
    "oxygen titration",
    "line placement",
    "transfer briefing",
]

_CONDITIONS = [
    "the airway obstruction",
    "the ongoing blood loss",
    "a possible internal injury",
    "the unstable fracture",
    "the suspected infection",
    "a possible pressure injury",
]


def _gerund(verb: str) -> str:
    head, _, rest = verb.partition(" ")
    gerunds = {"check": "checking", "order": "ordering", "do": "doing",
               "get": "getting", "insert": "inserting", "perform": "performing"}
    return f"{gerunds[head]} {rest}".strip()


class BundleGenerator:
    def __init__(self, seed: int, overlap: float = 0.5, max_actions: int = 10) -> None:
        self.rng = random.Random(seed)
        self.overlap = overlap
        self.max_actions = max(2, min(max_actions, len(_PROCEDURES)))

    def generate(self, n_critiques: int | None = None) -> CaseBundle:
        rng = self.rng
        n = n_critiques if n_critiques is not None else rng.randint(2, 6)

        pool_size = rng.randint(2, self.max_actions)
        lexicon: dict[str, LexiconEntry] = {}
        actions: list[ActionRef] = []
        for i in range(pool_size):
            verb, has_article = _VERBS[rng.randrange(len(_VERBS))]
            noun = _PROCEDURES[i]
            key = f"act_{i}"
            slot = "<art> " if has_article else ""
            lexicon[key] = LexiconEntry(
                imperative_template=f"{verb} {slot}{noun}",
                gerund_template=f"{_gerund(verb)} {slot}{noun}",
                has_article=has_article,
            )
            actions.append(ActionRef.of(key))

        goal_pool = rng.randint(1, min(5, len(_CONDITIONS)))
        goals = tuple(
            GoalRef(
                id=f"goal_{i}",
                gerund_phrase=f"treating {_CONDITIONS[i]}",
                short_infinitive=f"treat {_CONDITIONS[i]}",
            )
            for i in range(goal_pool)
        )

        used_actions: list[ActionRef] = []
        used_goals: list[GoalRef] = []

        def pick_action() -> ActionRef:
            if used_actions and rng.random() < self.overlap:
                return used_actions[rng.randrange(len(used_actions))]
            ref = actions[rng.randrange(len(actions))]
            if ref not in used_actions:
                used_actions.append(ref)
            return ref

        def pick_goal() -> GoalRef:
            if used_goals and rng.random() < self.overlap:
                return used_goals[rng.randrange(len(used_goals))]
            goal = goals[rng.randrange(len(goals))]
            if goal not in used_goals:
                used_goals.append(goal)
            return goal

        critiques: list[Critique] = []
        for order in range(n):
            roll = rng.random()
            if roll < 0.70 or len(actions) < 2:
                steps: list[Step] = []
                taken: set[str] = set()
                for _ in range(rng.randint(1, 4)):
                    ref = pick_action()
                    if ref.id in taken:
                        continue
                    taken.add(ref.id)
                    goal_count = 1 if rng.random() < 0.7 else 2
                    step_goals: dict[str, GoalRef] = {}
                    for _ in range(goal_count):
                        goal = pick_goal()
                        step_goals[goal.id] = goal
                    steps.append(Step(action=ref, goals=tuple(step_goals.values())))
                if not steps:
                    ref = pick_action()
                    goal = pick_goal()
                    steps = [Step(action=ref, goals=(goal,))]
                level = SeverityLevel.CAUTION if rng.random() < 0.7 else SeverityLevel.CONSIDER
                if rng.random() < 0.3:
                    urgency = Urgency.UNSPECIFIED
                else:
                    urgency = Urgency.IMMEDIATELY if level is SeverityLevel.CAUTION else Urgency.NOW
                kind_obj = OmittedActions(severity=Severity(level, urgency), steps=tuple(steps))
            else:
                a, b = rng.sample(actions, 2)
                if roll < 0.80:
                    kind_obj = SchedulePriority(do_first=(a,), before=b)
                elif roll < 0.88:
                    kind_obj = PreconditionReminder(precondition=a, before=b)
                elif roll < 0.95:
                    kind_obj = PostponeDependent(postponed=a, depends_on=b)
                else:
                    kind_obj = PreferredAlternative(preferred=a, dispreferred=b, purpose=pick_goal())
                for ref in (a, b):
                    if ref not in used_actions:
                        used_actions.append(ref)
            critiques.append(Critique(id=f"c{order}", order_index=order, kind=kind_obj))

        cbmr = tuple(ref for ref in actions if self.rng.random() < 0.2)
        return CaseBundle(lexicon=lexicon, goals=goals, critiques=tuple(critiques), cbmr=cbmr)


def generate_bundle(seed: int, overlap: float = 0.5, n_critiques: int | None = None,
                    max_actions: int = 10) -> CaseBundle:
    return BundleGenerator(seed, overlap=overlap, max_actions=max_actions).generate(n_critiques)
