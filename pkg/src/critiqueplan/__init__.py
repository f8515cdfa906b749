"""Plan integrated advisory messages from individual critiques."""

from .focus import (
    Article,
    ClauseOrder,
    DiscourseState,
    choose_article,
    clause_order,
    empty_state,
    ingest_cbmr,
    update_after_message,
)
from .merge import (
    MergeCandidate,
    MergeWeights,
    ScoreBreakdown,
    Segment,
    combine_similar_intentions,
    enumerate_candidates,
    group_mergeable,
    order_cells,
    score,
)
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
    Violation,
    load_bundle,
    validate_bundle,
)
from .pipeline import MetricsReport, run_case
from .plan import GoalStatus, TextPlan, build_plan, dump_plan
from .realize import count_focus_shifts, count_noun_phrases, realize, realize_schedule
from .revision import RevisionTrigger, detect_triggers, revise_conflict, revise_interactions
from .trailing import TrailingComment, realize_trailing, select_trailing

__all__ = [
    "ActionRef",
    "Article",
    "CaseBundle",
    "ClauseOrder",
    "Critique",
    "DiscourseState",
    "GoalRef",
    "GoalStatus",
    "LexiconEntry",
    "MergeCandidate",
    "MergeWeights",
    "MetricsReport",
    "OmittedActions",
    "PostponeDependent",
    "PreconditionReminder",
    "PreferredAlternative",
    "RevisionTrigger",
    "SchedulePriority",
    "ScoreBreakdown",
    "Segment",
    "Severity",
    "SeverityLevel",
    "Step",
    "TextPlan",
    "TrailingComment",
    "Urgency",
    "Violation",
    "build_plan",
    "choose_article",
    "clause_order",
    "combine_similar_intentions",
    "count_focus_shifts",
    "count_noun_phrases",
    "detect_triggers",
    "dump_plan",
    "empty_state",
    "enumerate_candidates",
    "group_mergeable",
    "ingest_cbmr",
    "load_bundle",
    "order_cells",
    "realize",
    "realize_schedule",
    "realize_trailing",
    "revise_conflict",
    "revise_interactions",
    "run_case",
    "score",
    "select_trailing",
    "update_after_message",
    "validate_bundle",
]
