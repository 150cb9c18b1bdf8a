"""Persistent registry of recognized static objects.

Anchors bind an object label to a pose inside one room, so the character
can answer "what am I looking at" without re-running recognition. Room
signatures (the set of labels seen in a room) disambiguate identical rooms
before their anchors are loaded. Stores are immutable values: mutations
return a new store.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

STORE_FORMAT_VERSION = 1
DEFAULT_PLACEMENT_CONFIDENCE = 0.6

Vec3 = tuple[float, float, float]


class AnchorError(Exception):
    pass


class ConfidenceTooLow(AnchorError):
    def __init__(self, got: float, threshold: float):
        super().__init__(f"recognition confidence {got} below placement threshold {threshold}")
        self.got = got
        self.threshold = threshold


class DuplicateAnchor(AnchorError):
    pass


class UnknownRoom(AnchorError):
    pass


class EmptyObservation(AnchorError):
    pass


class NonUnitDirection(AnchorError):
    pass


class MalformedStore(AnchorError):
    def __init__(self, position: str, reason: str):
        super().__init__(f"malformed anchor store at {position}: {reason}")
        self.position = position
        self.reason = reason


class UnsupportedVersion(AnchorError):
    pass


@dataclass(frozen=True)
class Pose:
    position: Vec3
    orientation: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)  # (w,x,y,z)

    def __post_init__(self):
        norm = math.sqrt(sum(c * c for c in self.orientation))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"orientation quaternion must be unit length, got norm {norm}")


@dataclass(frozen=True)
class Anchor:
    id: str
    room_id: str
    object_label: str
    pose: Pose
    radius: float
    created_at: float = 0.0

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("anchor radius must be positive")
        if not self.object_label:
            raise ValueError("anchor object_label must be non-empty")


@dataclass(frozen=True)
class RoomSignature:
    room_id: str
    labels: frozenset[str]

    def __post_init__(self):
        if not self.labels:
            raise ValueError("room signature labels must be non-empty")


@dataclass(frozen=True)
class AnchorStore:
    anchors: tuple[Anchor, ...] = ()
    signatures: tuple[RoomSignature, ...] = ()
    version: int = STORE_FORMAT_VERSION


@dataclass(frozen=True)
class Ambiguous:
    candidates: tuple[str, ...]


@dataclass(frozen=True)
class Unknown:
    pass


RoomResolution = Union[str, Ambiguous, Unknown]


@dataclass(frozen=True)
class RecognitionResult:
    """Top-1 label and confidence from the recognition endpoint.

    A miss is encoded as label "" with confidence 0, not as an error, so
    callers can tell "recognizer unsure" apart from "recognizer down".
    """

    label: str
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must lie in [0,1], got {self.confidence}")


def validate_store(store: AnchorStore) -> None:
    """Raise MalformedStore on any invariant violation."""
    by_room = {sig.room_id: sig for sig in store.signatures}
    if len(by_room) != len(store.signatures):
        raise MalformedStore("signatures", "duplicate room_id")
    seen_ids = set()
    for i, anchor in enumerate(store.anchors):
        where = f"anchors[{i}]"
        if anchor.id in seen_ids:
            raise MalformedStore(where, f"duplicate anchor id {anchor.id!r}")
        seen_ids.add(anchor.id)
        sig = by_room.get(anchor.room_id)
        if sig is None:
            raise MalformedStore(where, f"room {anchor.room_id!r} has no signature")
        if anchor.object_label not in sig.labels:
            raise MalformedStore(
                where, f"label {anchor.object_label!r} missing from {anchor.room_id!r} signature"
            )


def _distance(a: Vec3, b: Vec3) -> float:
    return math.dist(a, b)


def _next_anchor_id(store: AnchorStore) -> str:
    existing = {a.id for a in store.anchors}
    seq = len(store.anchors) + 1
    while f"a{seq:04d}" in existing:
        seq += 1
    return f"a{seq:04d}"


def place_anchor(
    store: AnchorStore,
    room_id: str,
    recognition: RecognitionResult,
    pose: Pose,
    radius: float,
    *,
    min_confidence: float = DEFAULT_PLACEMENT_CONFIDENCE,
    created_at: float = 0.0,
) -> tuple[AnchorStore, Anchor]:
    """Append an anchor for a recognized object; extends the room signature.

    Raises ConfidenceTooLow under `min_confidence`, and DuplicateAnchor when
    the same label already sits within `radius` of the pose in this room.
    """
    if recognition.confidence < min_confidence:
        raise ConfidenceTooLow(recognition.confidence, min_confidence)
    for anchor in store.anchors:
        if (
            anchor.room_id == room_id
            and anchor.object_label == recognition.label
            and _distance(anchor.pose.position, pose.position) <= radius
        ):
            raise DuplicateAnchor(
                f"{recognition.label!r} already anchored within {radius} m in {room_id!r}"
            )
    anchor = Anchor(
        id=_next_anchor_id(store),
        room_id=room_id,
        object_label=recognition.label,
        pose=pose,
        radius=radius,
        created_at=created_at,
    )
    signatures = list(store.signatures)
    for i, sig in enumerate(signatures):
        if sig.room_id == room_id:
            signatures[i] = RoomSignature(room_id, sig.labels | {recognition.label})
            break
    else:
        signatures.append(RoomSignature(room_id, frozenset({recognition.label})))
    new_store = AnchorStore(
        anchors=store.anchors + (anchor,),
        signatures=tuple(signatures),
        version=store.version,
    )
    return new_store, anchor


def resolve_room(store: AnchorStore, observed_labels: set[str]) -> RoomResolution:
    """Pick the room whose signature best overlaps the observed labels.

    The winner must strictly beat every other room's overlap; ties are
    Ambiguous, zero overlap everywhere is Unknown.
    """
    if not observed_labels:
        raise EmptyObservation("observed label set is empty")
    overlaps = {
        sig.room_id: len(sig.labels & observed_labels) for sig in store.signatures
    }
    if not overlaps:
        return Unknown()
    best = max(overlaps.values())
    if best == 0:
        return Unknown()
    winners = sorted(room for room, n in overlaps.items() if n == best)
    if len(winners) > 1:
        return Ambiguous(candidates=tuple(winners))
    return winners[0]


def load_room(store: AnchorStore, room_id: str) -> list[Anchor]:
    """All anchors of one room, ordered by id."""
    if all(sig.room_id != room_id for sig in store.signatures):
        raise UnknownRoom(f"no signature for room {room_id!r}")
    return sorted(
        (a for a in store.anchors if a.room_id == room_id), key=lambda a: a.id
    )


def hit_test(
    anchors: list[Anchor], origin: Vec3, direction: Vec3
) -> Optional[Anchor]:
    """First anchor hit by a forward ray.

    An anchor is hit when its center lies within `anchor.radius` of the ray
    and strictly in front of the origin; the smallest projection parameter
    wins, ties broken by smaller id.
    """
    norm = math.sqrt(sum(c * c for c in direction))
    if abs(norm - 1.0) > 1e-6:
        raise NonUnitDirection(f"direction norm {norm} is not 1")
    best: Optional[tuple[float, str, Anchor]] = None
    for anchor in anchors:
        rel = tuple(p - o for p, o in zip(anchor.pose.position, origin))
        along = sum(r * d for r, d in zip(rel, direction))
        if along <= 0:
            continue
        closest = tuple(o + along * d for o, d in zip(origin, direction))
        if _distance(anchor.pose.position, closest) > anchor.radius:
            continue
        key = (along, anchor.id)
        if best is None or key < (best[0], best[1]):
            best = (along, anchor.id, anchor)
    return best[2] if best else None


# --------------------------------------------------------------------------
# Persistence. Canonical JSON so save/load round-trips are bit-exact:
# rooms sorted by room_id with sorted label lists, anchors sorted by id.
# Schema documented in docs/FORMATS.md.


def store_to_dict(store: AnchorStore) -> dict:
    return {
        "version": store.version,
        "rooms": [
            {"room_id": sig.room_id, "labels": sorted(sig.labels)}
            for sig in sorted(store.signatures, key=lambda s: s.room_id)
        ],
        "anchors": [
            {
                "id": a.id,
                "room_id": a.room_id,
                "label": a.object_label,
                "position": list(a.pose.position),
                "orientation": list(a.pose.orientation),
                "radius": a.radius,
                "created_at": a.created_at,
            }
            for a in sorted(store.anchors, key=lambda a: a.id)
        ],
    }


def save(store: AnchorStore) -> bytes:
    validate_store(store)
    text = json.dumps(store_to_dict(store), indent=2, sort_keys=True)
    return (text + "\n").encode("utf-8")


def _vec(raw, length: int, where: str) -> tuple[float, ...]:
    if not isinstance(raw, list) or len(raw) != length:
        raise MalformedStore(where, f"expected a {length}-element number list")
    try:
        return tuple(float(v) for v in raw)
    except (TypeError, ValueError):
        raise MalformedStore(where, "non-numeric component")


def load(data: bytes) -> AnchorStore:
    try:
        doc = json.loads(data.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise MalformedStore("byte 0", f"not utf-8: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedStore(f"offset {exc.pos}", exc.msg) from exc
    if not isinstance(doc, dict):
        raise MalformedStore("document", "top level must be an object")
    version = doc.get("version")
    if version != STORE_FORMAT_VERSION:
        raise UnsupportedVersion(
            f"store version {version!r}, this build reads version {STORE_FORMAT_VERSION}"
        )
    signatures = []
    for i, raw in enumerate(_require_list(doc, "rooms")):
        where = f"rooms[{i}]"
        if not isinstance(raw, dict) or "room_id" not in raw or "labels" not in raw:
            raise MalformedStore(where, "expected object with room_id and labels")
        labels = raw["labels"]
        if not isinstance(labels, list) or not labels:
            raise MalformedStore(where, "labels must be a non-empty list")
        signatures.append(
            RoomSignature(str(raw["room_id"]), frozenset(str(l) for l in labels))
        )
    anchors = []
    for i, raw in enumerate(_require_list(doc, "anchors")):
        where = f"anchors[{i}]"
        if not isinstance(raw, dict):
            raise MalformedStore(where, "expected object")
        try:
            pose = Pose(
                position=_vec(raw.get("position"), 3, f"{where}.position"),
                orientation=_vec(raw.get("orientation"), 4, f"{where}.orientation"),
            )
            anchor = Anchor(
                id=str(raw["id"]),
                room_id=str(raw["room_id"]),
                object_label=str(raw["label"]),
                pose=pose,
                radius=float(raw["radius"]),
                created_at=float(raw.get("created_at", 0.0)),
            )
        except MalformedStore:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedStore(where, str(exc)) from exc
        anchors.append(anchor)
    store = AnchorStore(tuple(anchors), tuple(signatures), version=version)
    validate_store(store)
    return store


def _require_list(doc: dict, key: str) -> list:
    value = doc.get(key)
    if not isinstance(value, list):
        raise MalformedStore(key, "expected a list")
    return value
