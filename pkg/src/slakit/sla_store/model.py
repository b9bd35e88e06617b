"""Persistent models: the Root file and Descriptor files.

The Root keeps utterances (content tokens only, densely indexed) and the
codes immediately tied to them (dependent tiers), plus participants and the
remaining headers.  Everything else — group ranges, free-form code entries —
lives in Descriptor files keyed by a scheme name, so new coding streams can
be added without touching the Root.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from slakit.chat_core.model import Tier
from slakit.chat_core.tokens import CONTENT_KINDS, Token
from slakit.group_algebra import GroupRange

SCHEMA_VERSION = "1.0"

#: The descriptor scheme that mirrors inline CHAT group markup.
CHAT_GROUPS_SCHEME = "chat-groups"


@dataclass(frozen=True)
class ParticipantRecord:
    code: str
    name: str = ""
    role: str = ""
    language: Optional[str] = None
    corpus: Optional[str] = None


@dataclass(frozen=True)
class HeaderField:
    """A header abstracted out of the transcript.

    Changeable headers remember their body position: the number of
    utterances that precede them.
    """

    name: str
    value: str = ""
    changeable: bool = False
    body_position: Optional[int] = None

    def __post_init__(self):
        if self.changeable != (self.body_position is not None):
            raise ValueError("body_position is set exactly on changeable headers")


@dataclass(frozen=True)
class RootUtterance:
    id: str
    speaker: str
    tokens: tuple[Token, ...]
    tiers: tuple[Tier, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "tiers", tuple(self.tiers))
        for tok in self.tokens:
            if tok.kind not in CONTENT_KINDS:
                raise ValueError(f"root tokens must be content tokens, got {tok.kind}")
        if not self.id:
            raise ValueError("utterance id must be nonempty")


@dataclass(frozen=True)
class SlaRoot:
    transcript_id: str
    participants: tuple[ParticipantRecord, ...] = ()
    header_fields: tuple[HeaderField, ...] = ()
    utterances: tuple[RootUtterance, ...] = ()
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self):
        object.__setattr__(self, "participants", tuple(self.participants))
        object.__setattr__(self, "header_fields", tuple(self.header_fields))
        object.__setattr__(self, "utterances", tuple(self.utterances))

    def utterance(self, utterance_id: str) -> RootUtterance | None:
        for u in self.utterances:
            if u.id == utterance_id:
                return u
        return None

    def utterance_ids(self) -> set[str]:
        return {u.id for u in self.utterances}


@dataclass(frozen=True)
class CodeTarget:
    """What a code entry annotates: a group, an utterance or a single token."""

    kind: str  # "group" | "utterance" | "token"
    ref: str  # group id or utterance id
    token_index: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("group", "utterance", "token"):
            raise ValueError(f"bad target kind {self.kind!r}")
        if (self.kind == "token") != (self.token_index is not None):
            raise ValueError("token_index is set exactly on token targets")

    @classmethod
    def group(cls, group_id: str) -> "CodeTarget":
        return cls("group", group_id)

    @classmethod
    def utterance(cls, utterance_id: str) -> "CodeTarget":
        return cls("utterance", utterance_id)

    @classmethod
    def token(cls, utterance_id: str, index: int) -> "CodeTarget":
        return cls("token", utterance_id, index)

    def as_attr(self) -> str:
        if self.kind == "group":
            return f"group:{self.ref}"
        if self.kind == "token":
            return f"u:{self.ref}#{self.token_index}"
        return f"u:{self.ref}"

    @classmethod
    def from_attr(cls, raw: str) -> "CodeTarget":
        if raw.startswith("group:"):
            return cls.group(raw[len("group:"):])
        if raw.startswith("u:"):
            rest = raw[2:]
            if "#" in rest:
                ref, _, idx = rest.rpartition("#")
                return cls.token(ref, int(idx))
            return cls.utterance(rest)
        raise ValueError(f"bad code target {raw!r}")


@dataclass(frozen=True)
class CodeEntry:
    id: str
    target: CodeTarget
    key: str
    value: str = ""

    def __post_init__(self):
        if not self.id:
            raise ValueError("code entry id must be nonempty")
        if not self.key:
            raise ValueError("code key must be nonempty")

    def sort_key(self):
        return (self.target.as_attr(), self.key, self.value, self.id)


@dataclass(frozen=True)
class SlaDescriptor:
    """One coding stream over a Root.

    Groups and codes are kept in canonical sorted order so that equal
    descriptors serialize to identical bytes regardless of build order.
    """

    transcript_id: str
    scheme: str
    groups: tuple[GroupRange, ...] = ()
    codes: tuple[CodeEntry, ...] = ()
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self):
        if not self.scheme:
            raise ValueError("scheme name must be nonempty")
        object.__setattr__(
            self, "groups", tuple(sorted(self.groups, key=GroupRange.sort_key))
        )
        object.__setattr__(
            self, "codes", tuple(sorted(self.codes, key=CodeEntry.sort_key))
        )

    def group(self, group_id: str) -> GroupRange | None:
        for g in self.groups:
            if g.id == group_id:
                return g
        return None

    def code(self, code_id: str) -> CodeEntry | None:
        for c in self.codes:
            if c.id == code_id:
                return c
        return None

    def groups_for(self, utterance_id: str) -> list[GroupRange]:
        return [g for g in self.groups if g.utterance_id == utterance_id]
