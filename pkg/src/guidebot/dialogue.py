"""Domain chatbot: keyword-intent matching plus a lexicon sentiment engine.

Contract is (query text, optional object label) in, (reply text, sentiment
class, sentiment level) out. An object mentioned once sticks in the context
so follow-ups ("what color is it") resolve against it without another look.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from typing import Optional

CONTEXT_TURN_CAP = 50
INTENT_MATCH_THRESHOLD = 0.5
NEGATOR_WINDOW = 2  # tokens a negator may sit before the word it cancels

_TOKEN = re.compile(r"[a-z0-9']+")


class SentimentClass(enum.Enum):
    JOY = "Joy"
    ANGRY = "Angry"
    SAD = "Sad"
    FEAR = "Fear"
    NEUTRAL = "Neutral"


class SentimentLevel(enum.Enum):
    HIGH = "High"
    MEDIUM = "Medium"
    LOW = "Low"


# Deterministic argmax order for tied class scores.
_CLASS_ORDER = (
    SentimentClass.JOY,
    SentimentClass.ANGRY,
    SentimentClass.SAD,
    SentimentClass.FEAR,
)


class KnowledgeBaseError(Exception):
    pass


@dataclass(frozen=True)
class Query:
    text: str
    object_label: Optional[str] = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("query text must be non-empty")


@dataclass(frozen=True)
class Reply:
    text: str
    sentiment_class: SentimentClass
    sentiment_level: SentimentLevel

    def __post_init__(self):
        if not self.text:
            raise ValueError("reply text must be non-empty")
        if (
            self.sentiment_class is SentimentClass.NEUTRAL
            and self.sentiment_level is not SentimentLevel.LOW
        ):
            raise ValueError("Neutral replies are always level Low")


@dataclass(frozen=True)
class Intent:
    tag: str
    patterns: tuple[frozenset[str], ...]
    answer: str

    def __post_init__(self):
        if not self.patterns or any(not p for p in self.patterns):
            raise ValueError(f"intent {self.tag!r} needs at least one non-empty pattern")
        if not self.answer:
            raise ValueError(f"intent {self.tag!r} needs an answer")


@dataclass(frozen=True)
class KnowledgeBase:
    objects: dict[str, tuple[Intent, ...]]
    general: tuple[Intent, ...]
    fallback: str

    def __post_init__(self):
        if not self.fallback:
            raise KnowledgeBaseError("fallback answer is required")
        for label, intents in self.objects.items():
            tags = [i.tag for i in intents]
            if len(set(tags)) != len(tags):
                raise KnowledgeBaseError(f"duplicate intent tag under object {label!r}")


@dataclass(frozen=True)
class DialogueContext:
    current_object: Optional[str] = None
    turns: tuple[tuple[str, str], ...] = ()  # (query text, reply text), capped

    def with_turn(self, query_text: str, reply_text: str) -> "DialogueContext":
        turns = self.turns + ((query_text, reply_text),)
        return DialogueContext(self.current_object, turns[-CONTEXT_TURN_CAP:])


@dataclass(frozen=True)
class SentimentLexicon:
    entries: dict[str, tuple[SentimentClass, float]]
    negators: frozenset[str]
    low_max: float
    medium_max: float

    def __post_init__(self):
        if not 0 < self.low_max < self.medium_max:
            raise ValueError("thresholds must satisfy 0 < low_max < medium_max")
        for word, (cls, weight) in self.entries.items():
            if not 0 < weight <= 1:
                raise ValueError(f"lexicon weight for {word!r} must be in (0,1]")
            if cls is SentimentClass.NEUTRAL:
                raise ValueError("lexicon entries carry non-neutral classes only")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def match_intent(text: str, patterns: tuple[frozenset[str], ...]) -> Optional[float]:
    """Best containment score over the keyword sets, or None under 0.5.

    Ties keep the earliest pattern, which only matters to callers that
    inspect which pattern fired; the score itself is the max.
    """
    tokens = set(tokenize(text))
    best = 0.0
    for pattern in patterns:
        score = len(tokens & pattern) / len(pattern)
        if score > best:
            best = score
    return best if best >= INTENT_MATCH_THRESHOLD else None


def _best_intent(text: str, intents: tuple[Intent, ...]) -> Optional[Intent]:
    best: Optional[tuple[float, Intent]] = None
    for intent in intents:
        score = match_intent(text, intent.patterns)
        if score is None:
            continue
        if best is None or score > best[0]:  # ties keep the earliest intent
            best = (score, intent)
    return best[1] if best else None


def classify_sentiment(
    text: str, lexicon: SentimentLexicon
) -> tuple[SentimentClass, SentimentLevel]:
    """Lexicon-sum scoring. A negator within 2 tokens before a sentiment
    word cancels that word (pushes it toward Neutral rather than flipping
    to some opposite class, which the lexicon does not define)."""
    tokens = tokenize(text)
    scores = {cls: 0.0 for cls in _CLASS_ORDER}
    for i, token in enumerate(tokens):
        entry = lexicon.entries.get(token)
        if entry is None:
            continue
        window = tokens[max(0, i - NEGATOR_WINDOW) : i]
        if any(w in lexicon.negators for w in window):
            continue
        cls, weight = entry
        scores[cls] += weight
    top = max(scores.values())
    if top == 0.0:
        return SentimentClass.NEUTRAL, SentimentLevel.LOW
    winner = next(cls for cls in _CLASS_ORDER if scores[cls] == top)
    if top <= lexicon.low_max:
        level = SentimentLevel.LOW
    elif top <= lexicon.medium_max:
        level = SentimentLevel.MEDIUM
    else:
        level = SentimentLevel.HIGH
    return winner, level


def _make_reply(text: str, lexicon: SentimentLexicon) -> Reply:
    cls, level = classify_sentiment(text, lexicon)
    return Reply(text, cls, level)


def respond(
    query: Query,
    context: DialogueContext,
    kb: KnowledgeBase,
    lexicon: SentimentLexicon,
) -> tuple[Reply, DialogueContext]:
    """Resolution order: explicit object, then sticky context object, then
    general chit-chat, then the fallback line. Unmatched queries never fail.
    """
    current = context.current_object
    answer: Optional[str] = None

    if query.object_label is not None and query.object_label in kb.objects:
        current = query.object_label
        intent = _best_intent(query.text, kb.objects[current])
        if intent is not None:
            answer = intent.answer
    elif current is not None:
        intent = _best_intent(query.text, kb.objects[current])
        if intent is not None:
            answer = intent.answer

    if answer is None:
        intent = _best_intent(query.text, kb.general)
        if intent is not None:
            answer = intent.answer
    if answer is None:
        answer = kb.fallback

    reply = _make_reply(answer, lexicon)
    new_context = DialogueContext(current, context.turns).with_turn(query.text, reply.text)
    return reply, new_context


# --------------------------------------------------------------------------
# Fixture loading. Schemas in docs/FORMATS.md.


def kb_from_dict(doc: dict) -> KnowledgeBase:
    try:
        objects = {
            label: tuple(
                Intent(
                    tag=raw["intent"],
                    patterns=tuple(frozenset(p) for p in raw["patterns"]),
                    answer=raw["answer"],
                )
                for raw in intents
            )
            for label, intents in doc["objects"].items()
        }
        general = tuple(
            Intent(
                tag=raw.get("intent", f"general_{i}"),
                patterns=tuple(frozenset(p) for p in raw["patterns"]),
                answer=raw["answer"],
            )
            for i, raw in enumerate(doc["general"])
        )
        return KnowledgeBase(objects=objects, general=general, fallback=doc["fallback"])
    except (KeyError, TypeError, ValueError) as exc:
        raise KnowledgeBaseError(f"bad knowledge base document: {exc}") from exc


def load_kb(path) -> KnowledgeBase:
    with open(path, "r", encoding="utf-8") as fh:
        return kb_from_dict(json.load(fh))


def lexicon_from_dict(doc: dict) -> SentimentLexicon:
    try:
        entries = {
            word: (SentimentClass(cls), float(weight))
            for word, (cls, weight) in doc["entries"].items()
        }
        thresholds = doc["thresholds"]
        return SentimentLexicon(
            entries=entries,
            negators=frozenset(doc["negators"]),
            low_max=float(thresholds["low_max"]),
            medium_max=float(thresholds["medium_max"]),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"bad lexicon document: {exc}") from exc


def load_lexicon(path) -> SentimentLexicon:
    with open(path, "r", encoding="utf-8") as fh:
        return lexicon_from_dict(json.load(fh))
