"""Low-level surface helpers shared by the realizer and trailing comments.

The MentionTracker threads discourse state through a realization: every
action phrase is built against the state as it stands at that point in the
text, then the mention is pushed, so a second reference to the same action
later in the paragraph automatically comes out definite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import ARTICLE_SLOT, ActionRef, GoalRef, Lexicon
from .focus import Article, DiscourseState, choose_article, push_mention

_VOWELS = "aeiou"


def indefinite_article(following: str) -> str:
    word = following.strip().split()[0] if following.strip() else ""
    return "an" if word[:1].lower() in _VOWELS else "a"


def fill_article(template: str, article: Article) -> str:
    if ARTICLE_SLOT not in template:
        return template
    before, after = template.split(ARTICLE_SLOT, 1)
    if article is Article.DEFINITE:
        word = "the"
    elif article is Article.INDEFINITE:
        word = indefinite_article(after)
    else:
        # Slot present but no article applies; collapse the slot.
        return (before.rstrip() + " " + after.lstrip()).strip()
    return before + word + after


def strip_light_verb(imperative: str) -> str:
    """Plain noun reference for an action: "do the peritoneal lavage" ->
    "the peritoneal lavage".  Falls back to the phrase unchanged."""
    for verb in ("do ", "perform "):
        if imperative.startswith(verb):
            return imperative[len(verb):]
    return imperative


def serial_join(items: list[str]) -> str:
    """"A", "A and B", "A, B, and C"."""
    if not items:
        return ""
    if len(items) == 1:
        return items[0]
    if len(items) == 2:
        return f"{items[0]} and {items[1]}"
    return ", ".join(items[:-1]) + f", and {items[-1]}"


def _common_prefix_len(a: list[str], b: list[str]) -> int:
    n = 0
    for x, y in zip(a, b):
        if x != y:
            break
        n += 1
    return n


def elide_repeats(phrases: list[str]) -> list[str]:
    """Drop a repeated leading verb chunk from consecutive phrases, so
    "do A" + "do B" lists as "do A and B" and "check for x" + "check for y"
    as "check for x and y".  At least one token always survives."""
    out: list[str] = []
    prev_tokens: list[str] | None = None
    for phrase in phrases:
        tokens = phrase.split()
        if prev_tokens is not None:
            shared = _common_prefix_len(prev_tokens, tokens)
            shared = min(shared, len(tokens) - 1)
            if shared > 0:
                out.append(" ".join(tokens[shared:]))
                prev_tokens = tokens
                continue
        out.append(phrase)
        prev_tokens = tokens
    return out


def capitalize(sentence: str) -> str:
    return sentence[:1].upper() + sentence[1:] if sentence else sentence


@dataclass
class MentionTracker:
    """Builds action and goal phrases while recording what got mentioned.

    Counts are structural: a goal anaphor ("both of these goals") counts as
    one noun phrase without mentioning any goal by name.
    """

    state: DiscourseState
    lexicon: Lexicon
    sentences: list[list[str]] = field(default_factory=list)
    action_mentions: list[str] = field(default_factory=list)
    goal_mention_counts: dict[str, int] = field(default_factory=dict)
    anaphor_count: int = 0

    def begin_sentence(self) -> None:
        self.sentences.append([])

    def _record(self, action: ActionRef) -> None:
        if not self.sentences:
            self.begin_sentence()
        self.sentences[-1].append(action.id)
        self.action_mentions.append(action.id)
        self.state = push_mention(self.state, action.id)

    def _entry(self, action: ActionRef):
        try:
            return self.lexicon[action.lexicon_key]
        except KeyError:
            raise LexiconError(action.lexicon_key) from None

    def imperative(self, action: ActionRef) -> str:
        entry = self._entry(action)
        article = choose_article(self.state, action, self.lexicon)
        phrase = fill_article(entry.imperative_template, article)
        self._record(action)
        return phrase

    def gerund(self, action: ActionRef) -> str:
        entry = self._entry(action)
        article = choose_article(self.state, action, self.lexicon)
        phrase = fill_article(entry.gerund_template, article)
        self._record(action)
        return phrase

    def noun(self, action: ActionRef) -> str:
        entry = self._entry(action)
        article = choose_article(self.state, action, self.lexicon)
        phrase = strip_light_verb(fill_article(entry.imperative_template, article))
        self._record(action)
        return phrase

    def goal_infinitive(self, goal: GoalRef) -> str:
        self.goal_mention_counts[goal.id] = self.goal_mention_counts.get(goal.id, 0) + 1
        return goal.short_infinitive

    def goal_gerund(self, goal: GoalRef) -> str:
        self.goal_mention_counts[goal.id] = self.goal_mention_counts.get(goal.id, 0) + 1
        return goal.gerund_phrase

    def goal_anaphor(self) -> None:
        self.anaphor_count += 1

    @property
    def noun_phrase_count(self) -> int:
        return len(self.action_mentions) + sum(self.goal_mention_counts.values()) + self.anaphor_count


class LexiconError(KeyError):
    """An action has no lexicon entry; names the missing action."""

    def __init__(self, action_key: str) -> None:
        super().__init__(action_key)
        self.action_key = action_key

    def __str__(self) -> str:
        return f"no lexicon entry for action {self.action_key!r}"
