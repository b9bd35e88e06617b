"""Transcript document model.

A transcript is a block of constant headers (led by ``@Begin``), a body of
utterance blocks interleaved with changeable headers, and a final ``@End``.
Each utterance block is one mainline plus its dependent tiers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

from slakit.chat_core.tokens import Token, render_tokens


class ParseMode(Enum):
    STRICT = "strict"
    LENIENT = "lenient"


class HeaderKind(Enum):
    CONSTANT = "constant"
    CHANGEABLE = "changeable"


#: Header names that may recur mid-body to signal situation changes.
#: The set is a profile: parse/validate accept a custom one.
CHANGEABLE_HEADERS = frozenset({
    "Activities",
    "Bck",
    "Comment",
    "Date",
    "Location",
    "New Episode",
    "Situation",
    "Time Duration",
    "Time Start",
})

#: Header names that belong to the leading constant block.
CONSTANT_HEADERS = frozenset({
    "Begin",
    "End",
    "Font",
    "ID",
    "Languages",
    "Media",
    "Options",
    "PID",
    "Participants",
    "Transcriber",
    "Warning",
})

_PARTICIPANT_CODE_RE = re.compile(r"^[A-Z]{3}$")
_TIER_CODE_RE = re.compile(r"^[a-z]{3}$")


def is_participant_code(code: str) -> bool:
    return bool(_PARTICIPANT_CODE_RE.match(code))


def is_tier_code(code: str) -> bool:
    return bool(_TIER_CODE_RE.match(code))


@dataclass(frozen=True)
class Header:
    name: str
    value: str = ""
    kind: HeaderKind = HeaderKind.CONSTANT

    def __post_init__(self):
        if not self.name:
            raise ValueError("header name must be nonempty")


@dataclass(frozen=True)
class Tier:
    code: str
    content: str


@dataclass(frozen=True)
class Utterance:
    """One mainline.

    ``raw_text`` preserves the source line content for provenance; it is
    excluded from equality so that a document keeps comparing equal after a
    canonicalizing round trip.  When constructed with ``raw_text=None`` the
    canonical rendering of the tokens is filled in.
    """

    speaker: str
    tokens: tuple[Token, ...]
    raw_text: str | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if self.raw_text is None:
            object.__setattr__(self, "raw_text", render_tokens(self.tokens))


@dataclass(frozen=True)
class UtteranceBlock:
    mainline: Utterance
    tiers: tuple[Tier, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tiers", tuple(self.tiers))


BodyItem = Union[Header, UtteranceBlock]


@dataclass(frozen=True)
class TranscriptDoc:
    constant_headers: tuple[Header, ...]
    body: tuple[BodyItem, ...] = ()
    has_end: bool = True

    def __post_init__(self):
        object.__setattr__(self, "constant_headers", tuple(self.constant_headers))
        object.__setattr__(self, "body", tuple(self.body))

    def utterance_blocks(self) -> list[UtteranceBlock]:
        return [item for item in self.body if isinstance(item, UtteranceBlock)]


def begin_header() -> Header:
    return Header("Begin")


def minimal_doc(participants: str, blocks=()) -> TranscriptDoc:
    """Convenience: Begin + @Participants + the given utterance blocks."""
    return TranscriptDoc(
        constant_headers=(begin_header(), Header("Participants", participants)),
        body=tuple(blocks),
    )


def _participant_entries(value: str) -> list[tuple[str, str, str]]:
    """Split an @Participants value into (code, name, role) triples."""
    entries = []
    for part in value.split(","):
        words = part.split()
        if not words:
            continue
        code = words[0]
        if len(words) == 1:
            entries.append((code, "", ""))
        elif len(words) == 2:
            entries.append((code, "", words[1]))
        else:
            entries.append((code, " ".join(words[1:-1]), words[-1]))
    return entries


def declared_participants(doc: TranscriptDoc) -> dict[str, tuple[str, str]]:
    """Map declared participant codes to (name, role) from @Participants."""
    declared: dict[str, tuple[str, str]] = {}
    for header in doc.constant_headers:
        if header.name == "Participants":
            for code, name, role in _participant_entries(header.value):
                declared.setdefault(code, (name, role))
    return declared
