"""Core domain types shared by every part of the clarification engine.

Everything here is an immutable value: mutation helpers return new objects,
so instances are safe to share across threads and to replay deterministically.
Serialization is plain dicts with snake_case keys; `to_dict`/`from_dict` are
exact inverses for every type (round-trip identity is covered by tests).

No model in this module ever talks to an LLM.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Optional


class InvariantViolation(ValueError):
    """A domain type was constructed with values that break its invariants."""


class LifecycleViolationError(Exception):
    """An ambiguity was asked to transition out of a terminal status."""


class Domain(str, Enum):
    CODING = "coding"
    DATA_ANALYSIS = "data_analysis"
    CREATIVE_WRITING = "creative_writing"


class AmbiguityStatus(str, Enum):
    OPEN = "open"
    RESOLVED = "resolved"
    ELIMINATED = "eliminated"


class Phase(str, Enum):
    DETECTING = "detecting"
    CLARIFYING = "clarifying"
    FINALIZING = "finalizing"
    DONE = "done"


# Option id reserved for the implicit "none of these" free-text escape.
# Planned options must not use it.
OTHER_OPTION_ID = "other"

FREE_TEXT_MAX_LEN = 200


def now_utc() -> datetime:
    """Current UTC time truncated to millisecond resolution."""
    dt = datetime.now(timezone.utc)
    return dt.replace(microsecond=(dt.microsecond // 1000) * 1000)


def format_ts(dt: datetime) -> str:
    """ISO-8601 with milliseconds and a trailing Z, e.g. 2025-02-15T10:00:00.123Z."""
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    dt = dt.astimezone(timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{dt.microsecond // 1000:03d}Z"


def parse_ts(value: str) -> datetime:
    dt = datetime.strptime(value, "%Y-%m-%dT%H:%M:%S.%fZ")
    return dt.replace(tzinfo=timezone.utc)


def normalize_label(text: str) -> str:
    """Lowercase, strip punctuation, collapse whitespace.

    Used for duplicate-merging in detection and for exact-label alignment,
    so "Time_Frame  Interpretation" and "time frame interpretation" compare equal.
    """
    return " ".join(re.sub(r"[^0-9a-z]+", " ", text.lower()).split())


def token_set(text: str) -> frozenset[str]:
    return frozenset(normalize_label(text).split())


@dataclass(frozen=True)
class AmbiguousPrompt:
    """A raw user request plus its task domain and optional context.

    The context carries domain-specific constraints (schemas, data shapes)
    that let the detector skip terms which are clear in context.
    """

    id: str
    text: str
    domain: Domain
    context: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.text or not self.text.strip():
            raise InvariantViolation("prompt text must be nonempty")
        if not isinstance(self.domain, Domain):
            object.__setattr__(self, "domain", Domain(self.domain))

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "text": self.text,
            "domain": self.domain.value,
            "context": self.context,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "AmbiguousPrompt":
        return cls(
            id=data["id"],
            text=data["text"],
            domain=Domain(data["domain"]),
            context=data.get("context"),
        )


@dataclass(frozen=True)
class Ambiguity:
    """One source of misunderstanding, with its resolution lifecycle.

    Status only ever moves open -> resolved or open -> eliminated; `resolution`
    is set exactly when the status is resolved. `depends_on` lists
    (reference id, option id) pairs under which this ambiguity exists at all;
    the reference may name a question id or an ambiguity id (the dataset is
    authored before question ids exist, plans are authored after).
    """

    id: str
    label: str
    description: str = ""
    status: AmbiguityStatus = AmbiguityStatus.OPEN
    resolution: Optional[str] = None
    depends_on: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.status, AmbiguityStatus):
            object.__setattr__(self, "status", AmbiguityStatus(self.status))
        if (self.resolution is not None) != (self.status is AmbiguityStatus.RESOLVED):
            raise InvariantViolation(
                f"ambiguity {self.id}: resolution must be set iff status is resolved"
            )
        object.__setattr__(
            self, "depends_on", tuple((str(a), str(b)) for a, b in self.depends_on)
        )

    def resolve(self, interpretation: str) -> "Ambiguity":
        if self.status is not AmbiguityStatus.OPEN:
            raise LifecycleViolationError(
                f"cannot resolve {self.id}: status is {self.status.value}"
            )
        if not interpretation:
            raise InvariantViolation("resolve requires a nonempty interpretation")
        return replace(self, status=AmbiguityStatus.RESOLVED, resolution=interpretation)

    def eliminate(self) -> "Ambiguity":
        if self.status is not AmbiguityStatus.OPEN:
            raise LifecycleViolationError(
                f"cannot eliminate {self.id}: status is {self.status.value}"
            )
        return replace(self, status=AmbiguityStatus.ELIMINATED, resolution=None)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "label": self.label,
            "description": self.description,
            "status": self.status.value,
            "resolution": self.resolution,
            "depends_on": [list(pair) for pair in self.depends_on],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Ambiguity":
        return cls(
            id=data["id"],
            label=data["label"],
            description=data.get("description", ""),
            status=AmbiguityStatus(data.get("status", "open")),
            resolution=data.get("resolution"),
            depends_on=tuple(tuple(p) for p in data.get("depends_on") or ()),
        )


class TransitionEvent(str, Enum):
    RESOLVE = "resolve"
    ELIMINATE = "eliminate"


def transition(
    ambiguity: Ambiguity,
    event: TransitionEvent | str,
    interpretation: Optional[str] = None,
) -> Ambiguity:
    """Apply a lifecycle event to an open ambiguity, returning the new value.

    Raises LifecycleViolationError for any transition out of a non-open status.
    """
    event = TransitionEvent(event)
    if event is TransitionEvent.RESOLVE:
        if interpretation is None:
            raise InvariantViolation("resolve event requires an interpretation")
        return ambiguity.resolve(interpretation)
    return ambiguity.eliminate()


@dataclass(frozen=True)
class Illustration:
    """An input/output example pair attached to an option."""

    input: str
    output: str

    def to_dict(self) -> dict[str, Any]:
        return {"input": self.input, "output": self.output}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Illustration":
        return cls(input=data["input"], output=data["output"])


@dataclass(frozen=True)
class Option:
    """One answer choice; selecting it records `resolves_to` on the target.

    `resolves_to` may contain the placeholder ``{free_text}``, substituted
    with the answer's free text (threshold-style questions).
    """

    id: str
    text: str
    resolves_to: str
    illustration: Optional[Illustration] = None

    def __post_init__(self) -> None:
        if not self.resolves_to:
            raise InvariantViolation(f"option {self.id}: resolves_to must be nonempty")

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "text": self.text,
            "resolves_to": self.resolves_to,
            "illustration": self.illustration.to_dict() if self.illustration else None,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Option":
        raw = data.get("illustration")
        return cls(
            id=data["id"],
            text=data["text"],
            resolves_to=data["resolves_to"],
            illustration=Illustration.from_dict(raw) if raw else None,
        )


@dataclass(frozen=True)
class ClarificationQuestion:
    """A multi-option question aimed at one ambiguity.

    `guard` lists (question id, option id) pairs that must all be present in
    the transcript before this question becomes active; guards may only point
    at questions earlier in plan order.
    """

    id: str
    targets: str
    text: str
    options: tuple[Option, ...]
    guard: tuple[tuple[str, str], ...] = ()
    allows_free_text: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "options", tuple(self.options))
        object.__setattr__(
            self, "guard", tuple((str(a), str(b)) for a, b in self.guard)
        )
        if len(self.options) < 2:
            raise InvariantViolation(f"question {self.id}: needs at least 2 options")
        ids = [o.id for o in self.options]
        if len(set(ids)) != len(ids):
            raise InvariantViolation(f"question {self.id}: duplicate option ids")
        if OTHER_OPTION_ID in ids:
            raise InvariantViolation(
                f"question {self.id}: option id {OTHER_OPTION_ID!r} is reserved"
            )

    def option(self, option_id: str) -> Optional[Option]:
        for opt in self.options:
            if opt.id == option_id:
                return opt
        return None

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "targets": self.targets,
            "text": self.text,
            "options": [o.to_dict() for o in self.options],
            "guard": [list(pair) for pair in self.guard],
            "allows_free_text": self.allows_free_text,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ClarificationQuestion":
        return cls(
            id=data["id"],
            targets=data["targets"],
            text=data["text"],
            options=tuple(Option.from_dict(o) for o in data["options"]),
            guard=tuple(tuple(p) for p in data.get("guard") or ()),
            allows_free_text=bool(data.get("allows_free_text", False)),
        )


@dataclass(frozen=True)
class Answer:
    """A recorded reply to one question."""

    question_id: str
    option_id: str
    free_text: Optional[str] = None
    answered_at: datetime = field(default_factory=now_utc)

    def to_dict(self) -> dict[str, Any]:
        return {
            "question_id": self.question_id,
            "option_id": self.option_id,
            "free_text": self.free_text,
            "answered_at": format_ts(self.answered_at),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Answer":
        return cls(
            question_id=data["question_id"],
            option_id=data["option_id"],
            free_text=data.get("free_text"),
            answered_at=parse_ts(data["answered_at"]),
        )
