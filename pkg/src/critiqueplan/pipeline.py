"""The full planning turn: validate, revise, merge, attach, realize, report.

One call to run_case takes a bundle and the discourse state left by the
previous turn and produces the planned messages, the state for the next
turn, and a metrics report comparing the planned output against the
baseline of realizing every critique as its own message.
"""

from __future__ import annotations


from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .focus import (
    ClauseOrder,
    DiscourseState,
    clause_order,
    empty_state,
    ingest_cbmr,
    mark_conflicted,
    state_from_dict,
)
from .generator import BundleGenerator
from .merge import (
    ChosenMerge,
    MergeWeights,
    candidate_plan,
    combine_similar_intentions,
)
from .model import (
    CaseBundle,
    Critique,
    OmittedActions,
    PostponeDependent,
    PreferredAlternative,
    SchedulePriority,
    Violation,
    validate_bundle,
)
from .phrasing import MentionTracker
from .plan import Schedule, ScheduleReason, TextPlan, build_plan, dump_plan
from .realize import count_focus_shifts, plan_sentences, schedule_sentences
from .revision import TriggerKind, detect_triggers, revise_conflict, revise_interactions
from .trailing import TrailingComment, select_trailing, trailing_eligible, trailing_sentence


class ValidationFailure(ValueError):
    def __init__(self, violations: list[Violation]) -> None:
        super().__init__(f"{len(violations)} violation(s)")
        self.violations = violations


RULE_COMBINE = "Combine-Similar-Intentions"
RULE_TRAILING = "Trailing-Comment"
RULE_CONFLICT = "Revise-Conflict"
RULE_INTERACTION = "Revise-Interactions"


@dataclass(frozen=True)
class MetricsReport:
    message_count_before: int
    message_count_after: int
    np_count_before: int
    np_count_after: int
    focus_shifts_before: int
    focus_shifts_after: int
    rules_fired: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "message_count_before": self.message_count_before,
            "message_count_after": self.message_count_after,
            "np_count_before": self.np_count_before,
            "np_count_after": self.np_count_after,
            "focus_shifts_before": self.focus_shifts_before,
            "focus_shifts_after": self.focus_shifts_after,
            "rules_fired": list(self.rules_fired),
        }


@dataclass
class PlannedMessage:
    """One output message before realization."""

    plan: TextPlan
    source_ids: tuple[str, ...]
    order_key: int
    label: str
    merge: ChosenMerge | None = None
    trailing: tuple[TrailingComment, ...] = ()
    schedules: tuple[tuple[Schedule, ClauseOrder], ...] = ()
    text: str = ""
    sentence_mentions: list[list[str]] = field(default_factory=list)
    noun_phrases: int = 0


@dataclass
class CaseResult:
    messages: list[str]
    state: DiscourseState
    report: MetricsReport
    planned: list[PlannedMessage]
    explain: list[str]

    @property
    def output_text(self) -> str:
        return "\n\n".join(self.messages)


def initial_turn_state(bundle: CaseBundle, prior: DiscourseState | None) -> DiscourseState:
    """Prior state plus this turn's record entries and conflict marks.

    A preference critique disputes its dispreferred procedure outright; a
    postponement disputes its postponed action only when that action is
    already part of shared knowledge (otherwise there is nothing to argue
    with yet)."""
    if prior is None and bundle.state is not None:
        prior = state_from_dict(bundle.state)
    state = ingest_cbmr(prior or empty_state(), bundle.cbmr)
    disputed: list[str] = []
    for critique in bundle.critiques:
        kind = critique.kind
        if isinstance(kind, PreferredAlternative):
            disputed.append(kind.dispreferred.id)
        elif isinstance(kind, PostponeDependent) and kind.postponed.id in state.shared_knowledge:
            disputed.append(kind.postponed.id)
    return mark_conflicted(state, disputed)


def _candidate_body_ids(merge: ChosenMerge) -> frozenset[str]:
    return frozenset(
        action.id
        for segment in merge.candidate.segments
        for cell in segment.cells
        for action in cell.actions
    )


def _plan_messages(
    bundle: CaseBundle,
    weights: MergeWeights,
) -> tuple[list[PlannedMessage], list[str], list[str]]:
    """Build all planned messages, in discourse order, plus fired rules and
    explain lines."""
    rules: list[str] = []
    explain: list[str] = []
    critiques = sorted(bundle.critiques, key=lambda c: c.order_index)
    by_id = {c.id: c for c in critiques}

    messages: list[PlannedMessage] = []
    consumed: set[str] = set()
    for trigger in detect_triggers(critiques):
        primary = by_id[trigger.primary_id]
        secondary = by_id[trigger.secondary_id]
        if trigger.kind is TriggerKind.CONFLICT:
            plan = revise_conflict(primary, secondary)
            rules.append(RULE_CONFLICT)
            explain.append(
                f"{RULE_CONFLICT}: {primary.id} + {secondary.id} (pivot {trigger.pivot.id})"
            )
        else:
            plan = revise_interactions(secondary, primary)
            rules.append(RULE_INTERACTION)
            explain.append(
                f"{RULE_INTERACTION}: {primary.id} + {secondary.id} (pivot {trigger.pivot.id})"
            )
        consumed.update((primary.id, secondary.id))
        messages.append(
            PlannedMessage(
                plan=plan,
                source_ids=(primary.id, secondary.id),
                order_key=min(primary.order_index, secondary.order_index),
                label=f"revised({trigger.kind.value})",
            )
        )

    pool = [c for c in critiques if c.id not in consumed]
    chosen, leftovers = combine_similar_intentions(pool, weights)

    candidate_messages: list[PlannedMessage] = []
    for merge in chosen:
        if len(merge.critiques) > 1:
            rules.append(RULE_COMBINE)
        s = merge.score
        explain.append(
            "merge [{}]: segments={} t1={} t2={} t3={} t4={} total={:g}{}".format(
                ", ".join(c.id for c in merge.critiques),
                len(merge.candidate.segments),
                s.t1_goal_spread,
                s.t2_action_repetition_saved,
                s.t3_goal_repetitions,
                s.t4_critiques_merged,
                s.total,
                " (cell-order cycle, emission order used)" if merge.cycle_reported else "",
            )
        )
        candidate_messages.append(
            PlannedMessage(
                plan=candidate_plan(merge.candidate),
                source_ids=tuple(c.id for c in merge.critiques),
                order_key=min(c.order_index for c in merge.critiques),
                label="merged" if len(merge.critiques) > 1 else "single",
                merge=merge,
            )
        )

    # Route leftovers: trailing comments and schedule attachments point back
    # at the candidate message that mentioned their actions most recently.
    trailing_pool: dict[int, list[Critique]] = {}
    standalone: list[Critique] = []
    attached_schedules: dict[int, list[Critique]] = {}
    candidate_order = sorted(
        range(len(candidate_messages)), key=lambda i: candidate_messages[i].order_key
    )
    for leftover in leftovers:
        kind = leftover.kind
        host: int | None = None
        if isinstance(kind, OmittedActions):
            best_key: tuple[int, int] | None = None
            for rank, idx in enumerate(candidate_order):
                merge = candidate_messages[idx].merge
                assert merge is not None
                body = _candidate_body_ids(merge)
                if not trailing_eligible(leftover, body):
                    continue
                intro: dict[str, int] = {}
                for segment in merge.candidate.segments:
                    for cell in segment.cells:
                        for action in cell.actions:
                            intro.setdefault(action.id, len(intro))
                shared_pos = max(
                    intro[s.action.id] for s in kind.steps if s.action.id in intro
                )
                key = (rank, shared_pos)
                if best_key is None or key > best_key:
                    best_key = key
                    host = idx
            if host is not None:
                trailing_pool.setdefault(host, []).append(leftover)
                continue
        elif isinstance(kind, SchedulePriority):
            needed = {a.id for a in kind.do_first}
            for rank, idx in enumerate(candidate_order):
                merge = candidate_messages[idx].merge
                assert merge is not None
                if needed <= _candidate_body_ids(merge):
                    host = idx
            if host is not None:
                attached_schedules.setdefault(host, []).append(leftover)
                continue
        standalone.append(leftover)

    for idx, pool_critiques in trailing_pool.items():
        merge = candidate_messages[idx].merge
        assert merge is not None
        comments, rest = select_trailing(merge.candidate, pool_critiques)
        standalone.extend(rest)
        candidate_messages[idx].trailing = tuple(comments)
        candidate_messages[idx].source_ids += tuple(c.source_id for c in comments)
        for comment in comments:
            rules.append(RULE_TRAILING)
            explain.append(
                f"{RULE_TRAILING}: {comment.source_id} onto [{', '.join(c.id for c in merge.critiques)}]"
                f" focused on {comment.focused_action.id} (rank {comment.rank})"
            )

    for idx, schedule_critiques in attached_schedules.items():
        message = candidate_messages[idx]
        merge = message.merge
        assert merge is not None
        last_segment = merge.candidate.segments[-1]
        segment_ids = frozenset(
            action.id for cell in last_segment.cells for action in cell.actions
        )
        pairs = []
        for critique in schedule_critiques:
            kind = critique.kind
            assert isinstance(kind, SchedulePriority)
            act = Schedule(tuple(kind.do_first), kind.before, ScheduleReason.PRIORITY)
            order = clause_order(empty_state(), act, segment_ids)
            pairs.append((act, order))
            explain.append(
                f"schedule {critique.id} attached ({order.value}) to"
                f" [{', '.join(c.id for c in merge.critiques)}]"
            )
        message.schedules = tuple(pairs)
        message.source_ids += tuple(c.id for c in schedule_critiques)

    messages.extend(candidate_messages)
    for critique in standalone:
        messages.append(
            PlannedMessage(
                plan=build_plan(critique),
                source_ids=(critique.id,),
                order_key=critique.order_index,
                label="single",
            )
        )

    messages.sort(key=lambda m: m.order_key)
    return messages, rules, explain


def _realize_messages(
    messages: list[PlannedMessage],
    state: DiscourseState,
    lexicon,
) -> DiscourseState:
    for message in messages:
        tracker = MentionTracker(state=state, lexicon=lexicon)
        sentences = plan_sentences(message.plan, tracker)
        for act, order in message.schedules:
            sentences.extend(schedule_sentences(act, order, tracker))
        for comment in message.trailing:
            sentences.append(trailing_sentence(comment, tracker))
        message.text = " ".join(sentences)
        message.sentence_mentions = tracker.sentences
        message.noun_phrases = tracker.noun_phrase_count
        state = tracker.state
    return state


def _baseline_metrics(
    bundle: CaseBundle,
    turn_state: DiscourseState,
) -> tuple[int, int, int]:
    """Realize each critique as its own message from the turn-initial state.
    Articles do not thread between baseline messages (each critique was
    emitted independently), but the focus stack threads for shift counting."""
    critiques = sorted(bundle.critiques, key=lambda c: c.order_index)
    np_total = 0
    all_sentences: list[list[str]] = []
    for critique in critiques:
        tracker = MentionTracker(state=turn_state, lexicon=bundle.lexicon)
        plan_sentences(build_plan(critique), tracker)
        np_total += tracker.noun_phrase_count
        all_sentences.extend(tracker.sentences)
    shifts = count_focus_shifts(all_sentences, turn_state)
    return len(critiques), np_total, shifts


def run_case(
    bundle: CaseBundle,
    weights: MergeWeights = MergeWeights(),
    prior_state: DiscourseState | None = None,
) -> CaseResult:
    violations = validate_bundle(bundle)
    if violations:
        raise ValidationFailure(violations)

    turn_state = initial_turn_state(bundle, prior_state)
    messages, rules, explain = _plan_messages(bundle, weights)
    end_state = _realize_messages(messages, turn_state, bundle.lexicon)

    before_msgs, before_np, before_shifts = _baseline_metrics(bundle, turn_state)
    after_sentences: list[list[str]] = []
    for message in messages:
        after_sentences.extend(message.sentence_mentions)
    report = MetricsReport(
        message_count_before=before_msgs,
        message_count_after=len(messages),
        np_count_before=before_np,
        np_count_after=sum(m.noun_phrases for m in messages),
        focus_shifts_before=before_shifts,
        focus_shifts_after=count_focus_shifts(after_sentences, turn_state),
        rules_fired=tuple(rules),
    )
    return CaseResult(
        messages=[m.text for m in messages],
        state=end_state,
        report=report,
        planned=messages,
        explain=explain,
    )


def dump_plans(result: CaseResult) -> str:
    blocks = []
    for i, message in enumerate(result.planned, start=1):
        header = f"message {i} [{message.label}] critiques: {', '.join(message.source_ids)}"
        blocks.append(header + "\n" + dump_plan(message.plan))
        for comment in message.trailing:
            blocks.append(
                f"  + trailing {comment.source_id}: focus {comment.focused_action.id},"
                f" rank {comment.rank}"
            )
        for act, order in message.schedules:
            blocks.append(f"  + schedule ({order.value}): before {act.before.id}")
    return "\n".join(blocks)


# ---------------------------------------------------------------------------
# Corpus runs


@dataclass
class CorpusEntry:
    name: str
    report: MetricsReport | None
    error: str | None = None


def aggregate_reports(reports: Sequence[MetricsReport]) -> MetricsReport:
    rules: list[str] = []
    for report in reports:
        rules.extend(report.rules_fired)
    return MetricsReport(
        message_count_before=sum(r.message_count_before for r in reports),
        message_count_after=sum(r.message_count_after for r in reports),
        np_count_before=sum(r.np_count_before for r in reports),
        np_count_after=sum(r.np_count_after for r in reports),
        focus_shifts_before=sum(r.focus_shifts_before for r in reports),
        focus_shifts_after=sum(r.focus_shifts_after for r in reports),
        rules_fired=tuple(rules),
    )


def run_corpus_files(
    paths: Sequence[Path],
    weights: MergeWeights = MergeWeights(),
) -> list[CorpusEntry]:
    from .model import load_bundle

    entries: list[CorpusEntry] = []
    for path in paths:
        try:
            bundle = load_bundle(path)
            result = run_case(bundle, weights)
            entries.append(CorpusEntry(name=path.stem, report=result.report))
        except ValidationFailure as exc:
            detail = "; ".join(f"{v.location}: {v.message}" for v in exc.violations[:3])
            entries.append(CorpusEntry(name=path.stem, report=None, error=detail))
        except Exception as exc:  # unreadable case: skip with warning
            entries.append(CorpusEntry(name=path.stem, report=None, error=str(exc)))
    return entries


def run_corpus_generated(
    count: int,
    seed: int,
    overlap: float = 0.5,
    weights: MergeWeights = MergeWeights(),
) -> list[CorpusEntry]:
    generator = BundleGenerator(seed, overlap=overlap)
    entries: list[CorpusEntry] = []
    for i in range(count):
        bundle = generator.generate()
        result = run_case(bundle, weights)
        entries.append(CorpusEntry(name=f"gen-{seed}-{i}", report=result.report))
    return entries


def corpus_table(entries: Sequence[CorpusEntry]) -> str:
    rows = [("case", "msgs", "nps", "shifts", "rules")]
    for entry in entries:
        if entry.report is None:
            rows.append((entry.name, "-", "-", "-", f"skipped: {entry.error}"))
            continue
        r = entry.report
        rows.append(
            (
                entry.name,
                f"{r.message_count_before}->{r.message_count_after}",
                f"{r.np_count_before}->{r.np_count_after}",
                f"{r.focus_shifts_before}->{r.focus_shifts_after}",
                ", ".join(sorted(set(r.rules_fired))) or "-",
            )
        )
    reports = [e.report for e in entries if e.report is not None]
    if reports:
        total = aggregate_reports(reports)
        rows.append(
            (
                "TOTAL",
                f"{total.message_count_before}->{total.message_count_after}",
                f"{total.np_count_before}->{total.np_count_after}",
                f"{total.focus_shifts_before}->{total.focus_shifts_after}",
                "",
            )
        )
    widths = [max(len(row[i]) for row in rows) for i in range(5)]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip() for row in rows]
    return "\n".join(lines)
