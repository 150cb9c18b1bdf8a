"""Turns a sentiment-tagged reply into a timed four-track performance.

Tracks run in parallel: spoken words, a body-animation sequence picked by
greedy longest phrase match from an expert mapping table, one facial
emotion segment spanning the whole utterance, and an equal-slice viseme
track derived from a phoneme transcription of the text.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Optional

from .dialogue import Reply, SentimentClass, SentimentLevel

DEFAULT_SPEECH_RATE_WPM = 150.0
MIN_SPEECH_DURATION = 0.5

# Fixed phoneme inventory (ARPABET, stress markers dropped). Lexicon and
# viseme fixtures are validated against this set.
PHONEME_INVENTORY = frozenset(
    """AA AE AH AO AW AY B CH D DH EH ER EY F G HH IH IY JH K L M N NG
       OW OY P R S SH T TH UH UW V W Y Z ZH""".split()
)

_WORD = re.compile(r"[a-z0-9']+")


class ComposerError(Exception):
    pass


class EmptyDuration(ComposerError):
    pass


@dataclass(frozen=True)
class AnimationClip:
    id: str
    display_name: str
    duration: float

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError(f"clip {self.id!r} duration must be positive")


@dataclass(frozen=True)
class ClipLibrary:
    clips: dict[str, AnimationClip]

    def __post_init__(self):
        for clip_id, clip in self.clips.items():
            if clip.id != clip_id:
                raise ValueError(f"library key {clip_id!r} does not match clip id {clip.id!r}")


@dataclass(frozen=True)
class MappingTable:
    entries: dict[tuple[str, ...], str]  # lowercase token sequence -> clip id
    default_clip: str

    def __post_init__(self):
        for key in self.entries:
            if not key or any(not tok for tok in key):
                raise ValueError("mapping keys must be non-empty token sequences")


@dataclass(frozen=True)
class PhonemeLexicon:
    word_to_phonemes: dict[str, tuple[str, ...]]
    letter_fallback: dict[str, str]

    def __post_init__(self):
        missing = set("abcdefghijklmnopqrstuvwxyz") - set(self.letter_fallback)
        if missing:
            raise ValueError(f"letter fallback misses {sorted(missing)}")
        for word, seq in self.word_to_phonemes.items():
            bad = set(seq) - PHONEME_INVENTORY
            if bad:
                raise ValueError(f"word {word!r} uses unknown phonemes {sorted(bad)}")
        bad = set(self.letter_fallback.values()) - PHONEME_INVENTORY
        if bad:
            raise ValueError(f"letter fallback uses unknown phonemes {sorted(bad)}")


@dataclass(frozen=True)
class VisemeMap:
    shapes: dict[str, str]  # phoneme -> lip shape id

    def __post_init__(self):
        missing = PHONEME_INVENTORY - set(self.shapes)
        if missing:
            raise ValueError(f"viseme map misses phonemes {sorted(missing)}")


@dataclass(frozen=True)
class PerformanceTimeline:
    total_duration: float
    speech_track: tuple[tuple[str, float, float], ...]
    body_track: tuple[tuple[str, float, float], ...]
    face_track: tuple[tuple[SentimentClass, SentimentLevel, float, float], ...]
    viseme_track: tuple[tuple[str, float, float], ...]


def validate_mapping(table: MappingTable, library: ClipLibrary) -> None:
    unknown = {cid for cid in table.entries.values() if cid not in library.clips}
    if table.default_clip not in library.clips:
        unknown.add(table.default_clip)
    if unknown:
        raise ComposerError(f"mapping references unknown clips {sorted(unknown)}")


def validate_timeline(timeline: PerformanceTimeline) -> None:
    """Raise ComposerError if any track invariant is broken."""
    total = timeline.total_duration
    named = {
        "speech": [(s, e) for _, s, e in timeline.speech_track],
        "body": [(s, e) for _, s, e in timeline.body_track],
        "face": [(s, e) for _, _, s, e in timeline.face_track],
        "viseme": [(s, e) for _, s, e in timeline.viseme_track],
    }
    for name, spans in named.items():
        prev_end = 0.0
        for start, end in spans:
            if not (0.0 <= start < end <= total + 1e-9):
                raise ComposerError(f"{name} segment [{start},{end}] outside [0,{total}]")
            if start < prev_end - 1e-9:
                raise ComposerError(f"{name} segments overlap near t={start}")
            prev_end = end
    if timeline.face_track:
        if len(timeline.face_track) != 1:
            raise ComposerError("face track must hold exactly one segment per reply")
        _, _, start, end = timeline.face_track[0]
        if abs(start) > 1e-9 or abs(end - total) > 1e-9:
            raise ComposerError("face segment must cover the full duration")


def _words(text: str) -> list[str]:
    return _WORD.findall(text.lower())


def speech_duration(
    text: str,
    rate_wpm: float = DEFAULT_SPEECH_RATE_WPM,
    minimum: float = MIN_SPEECH_DURATION,
) -> float:
    if rate_wpm <= 0:
        raise ValueError("speech rate must be positive")
    return max(minimum, len(_words(text)) * 60.0 / rate_wpm)


def build_body_sequence(text: str, table: MappingTable) -> list[str]:
    """Greedy longest-match scan: phrases beat single words, every maximal
    run of unmatched tokens collapses into one default clip."""
    tokens = _words(text)
    out: list[str] = []
    in_default_run = False
    i = 0
    while i < len(tokens):
        best_len = 0
        best_clip: Optional[str] = None
        for key, clip_id in table.entries.items():
            k = len(key)
            if k > best_len and tuple(tokens[i : i + k]) == key:
                best_len = k
                best_clip = clip_id
        if best_clip is not None:
            if in_default_run:
                out.append(table.default_clip)
                in_default_run = False
            out.append(best_clip)
            i += best_len
        else:
            in_default_run = True
            i += 1
    if in_default_run:
        out.append(table.default_clip)
    return out


def text_to_phonemes(text: str, lexicon: PhonemeLexicon) -> list[str]:
    phonemes: list[str] = []
    for word in _words(text):
        seq = lexicon.word_to_phonemes.get(word)
        if seq is not None:
            phonemes.extend(seq)
        else:
            # Unknown word: spell it out letter by letter. Non-letter
            # characters (digits) contribute nothing.
            for letter in word:
                phoneme = lexicon.letter_fallback.get(letter)
                if phoneme is not None:
                    phonemes.append(phoneme)
    return phonemes


def make_viseme_track(
    phonemes: list[str], duration: float, viseme_map: VisemeMap
) -> tuple[tuple[str, float, float], ...]:
    if not phonemes:
        return ()
    if duration <= 0:
        raise EmptyDuration(f"cannot fit {len(phonemes)} phonemes into {duration} s")
    count = len(phonemes)
    track = []
    for i, phoneme in enumerate(phonemes):
        start = duration * i / count
        # Pin the last boundary so the track ends exactly at the duration.
        end = duration * (i + 1) / count if i < count - 1 else duration
        track.append((viseme_map.shapes[phoneme], start, end))
    return tuple(track)


def _proportional_spans(
    weights: list[float], total: float
) -> list[tuple[float, float]]:
    """Contiguous spans over [0, total] sized proportionally to weights.
    Boundaries come from cumulative fractions so the last end is exact."""
    full = sum(weights)
    spans = []
    acc = 0.0
    for i, w in enumerate(weights):
        start = total * acc / full
        acc += w
        end = total * acc / full if i < len(weights) - 1 else total
        spans.append((start, end))
    return spans


def assemble(
    reply: Reply,
    table: MappingTable,
    library: ClipLibrary,
    lexicon: PhonemeLexicon,
    viseme_map: VisemeMap,
    rate_wpm: float = DEFAULT_SPEECH_RATE_WPM,
    minimum: float = MIN_SPEECH_DURATION,
) -> PerformanceTimeline:
    validate_mapping(table, library)
    total = speech_duration(reply.text, rate_wpm, minimum)
    words = _words(reply.text)

    speech_track: tuple = ()
    if words:
        spans = _proportional_spans([len(w) for w in words], total)
        speech_track = tuple(
            (word, start, end) for word, (start, end) in zip(words, spans)
        )

    clip_ids = build_body_sequence(reply.text, table)
    if not clip_ids:
        clip_ids = [table.default_clip]
    durations = [library.clips[cid].duration for cid in clip_ids]
    body_track = tuple(
        (cid, start, end)
        for cid, (start, end) in zip(clip_ids, _proportional_spans(durations, total))
    )

    face_track = ((reply.sentiment_class, reply.sentiment_level, 0.0, total),)
    viseme_track = make_viseme_track(
        text_to_phonemes(reply.text, lexicon), total, viseme_map
    )

    timeline = PerformanceTimeline(
        total_duration=total,
        speech_track=speech_track,
        body_track=body_track,
        face_track=face_track,
        viseme_track=viseme_track,
    )
    validate_timeline(timeline)
    return timeline


def timeline_to_dict(timeline: PerformanceTimeline) -> dict:
    return {
        "total_duration": timeline.total_duration,
        "speech": [
            {"word": w, "start": s, "end": e} for w, s, e in timeline.speech_track
        ],
        "body": [
            {"clip": c, "start": s, "end": e} for c, s, e in timeline.body_track
        ],
        "face": [
            {"class": cls.value, "level": lvl.value, "start": s, "end": e}
            for cls, lvl, s, e in timeline.face_track
        ],
        "visemes": [
            {"shape": v, "start": s, "end": e} for v, s, e in timeline.viseme_track
        ],
    }


# --------------------------------------------------------------------------
# Fixture loading. Schemas in docs/FORMATS.md.


def load_clips(path) -> ClipLibrary:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    clips = {
        raw["id"]: AnimationClip(raw["id"], raw["display_name"], float(raw["duration"]))
        for raw in doc["clips"]
    }
    if len(clips) != len(doc["clips"]):
        raise ComposerError("duplicate clip id in library")
    return ClipLibrary(clips)


def load_mapping(path) -> MappingTable:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    entries = {
        tuple(phrase.lower().split()): clip_id
        for phrase, clip_id in doc["entries"].items()
    }
    return MappingTable(entries=entries, default_clip=doc["default_clip"])


def load_phonemes(path) -> PhonemeLexicon:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return PhonemeLexicon(
        word_to_phonemes={w: tuple(seq) for w, seq in doc["words"].items()},
        letter_fallback=dict(doc["letters"]),
    )


def load_visemes(path) -> VisemeMap:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return VisemeMap(shapes=dict(doc["map"]))
