"""Root and Descriptor XML serialization.

Element vocabulary:

* ``slaRoot`` (transcriptId, schemaVersion) containing ``participant``,
  ``headerField`` and ``u`` elements.
* ``u`` (id, who) containing ``w``/``p``/``t`` token elements (attribute
  ``i``: dense index) followed by ``tier`` elements.
* ``slaDescriptor`` (transcriptId, schemaVersion, scheme) containing
  ``group`` (id, u, start, end, kind, payload) and ``code`` (id, target,
  key, value) elements.

The single-node builders are reused by the Changes file, whose payload
fragments use the same vocabulary.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

from slakit.chat_core.model import Tier
from slakit.chat_core.tokens import Token, TokenKind
from slakit.errors import SchemaViolation
from slakit.group_algebra import GroupRange
from slakit.chat_core.tokens import ScopeMarkerKind
from slakit.sla_store.model import (
    CodeEntry,
    CodeTarget,
    HeaderField,
    ParticipantRecord,
    RootUtterance,
    SlaDescriptor,
    SlaRoot,
)
from slakit.xmlcanon import (
    check_document_attrs,
    int_attr,
    parse_bytes,
    require_attr,
    to_canonical_bytes,
)

_TOKEN_TAGS = {
    TokenKind.WORD: "w",
    TokenKind.PAUSE: "p",
    TokenKind.TERMINATOR: "t",
}
_TAG_KINDS = {tag: kind for kind, tag in _TOKEN_TAGS.items()}

_MARKER_KINDS = {kind.value: kind for kind in ScopeMarkerKind}


# -- element builders ----------------------------------------------------------

def participant_element(record: ParticipantRecord) -> ET.Element:
    el = ET.Element("participant")
    el.set("code", record.code)
    el.set("name", record.name)
    el.set("role", record.role)
    if record.language is not None:
        el.set("language", record.language)
    if record.corpus is not None:
        el.set("corpus", record.corpus)
    return el


def header_field_element(header: HeaderField) -> ET.Element:
    el = ET.Element("headerField")
    el.set("name", header.name)
    el.set("changeable", "true" if header.changeable else "false")
    if header.body_position is not None:
        el.set("pos", str(header.body_position))
    el.text = header.value or None
    return el


def token_element(token: Token, index: int | None = None) -> ET.Element:
    el = ET.Element(_TOKEN_TAGS[token.kind])
    if index is not None:
        el.set("i", str(index))
    el.text = token.text
    return el


def tier_element(tier: Tier) -> ET.Element:
    el = ET.Element("tier")
    el.set("code", tier.code)
    el.text = tier.content or None
    return el


def utterance_element(u: RootUtterance) -> ET.Element:
    el = ET.Element("u")
    el.set("id", u.id)
    el.set("who", u.speaker)
    for index, token in enumerate(u.tokens):
        el.append(token_element(token, index))
    for tier in u.tiers:
        el.append(tier_element(tier))
    return el


def group_element(group: GroupRange) -> ET.Element:
    el = ET.Element("group")
    el.set("id", group.id)
    el.set("u", group.utterance_id)
    el.set("start", str(group.start))
    el.set("end", str(group.end))
    el.set("kind", group.kind.value)
    if group.payload is not None:
        el.set("payload", group.payload)
    return el


def code_element(code: CodeEntry) -> ET.Element:
    el = ET.Element("code")
    el.set("id", code.id)
    el.set("target", code.target.as_attr())
    el.set("key", code.key)
    el.set("value", code.value)
    return el


# -- element readers -----------------------------------------------------------

def read_participant(el: ET.Element) -> ParticipantRecord:
    return ParticipantRecord(
        code=require_attr(el, "code"),
        name=el.get("name", ""),
        role=el.get("role", ""),
        language=el.get("language"),
        corpus=el.get("corpus"),
    )


def read_header_field(el: ET.Element) -> HeaderField:
    changeable = require_attr(el, "changeable") == "true"
    pos = el.get("pos")
    return HeaderField(
        name=require_attr(el, "name"),
        value=el.text or "",
        changeable=changeable,
        body_position=int(pos) if pos is not None else None,
    )


def read_token(el: ET.Element) -> Token:
    kind = _TAG_KINDS.get(el.tag)
    if kind is None:
        raise SchemaViolation(f"unexpected token element <{el.tag}>")
    return Token(kind, el.text or "")


def read_tier(el: ET.Element) -> Tier:
    return Tier(require_attr(el, "code"), el.text or "")


def read_utterance(el: ET.Element) -> RootUtterance:
    tokens: list[Token] = []
    tiers: list[Tier] = []
    for child in el:
        if child.tag in _TAG_KINDS:
            if tiers:
                raise SchemaViolation("token elements must precede tier elements")
            if child.get("i") is not None and int_attr(child, "i") != len(tokens):
                raise SchemaViolation(
                    f"token indices of <u id={el.get('id')!r}> are not dense"
                )
            tokens.append(read_token(child))
        elif child.tag == "tier":
            tiers.append(read_tier(child))
        else:
            raise SchemaViolation(f"unexpected element <{child.tag}> inside <u>")
    return RootUtterance(
        id=require_attr(el, "id"),
        speaker=require_attr(el, "who"),
        tokens=tuple(tokens),
        tiers=tuple(tiers),
    )


def read_group(el: ET.Element) -> GroupRange:
    kind_raw = require_attr(el, "kind")
    kind = _MARKER_KINDS.get(kind_raw)
    if kind is None:
        raise SchemaViolation(f"unknown group kind {kind_raw!r}")
    try:
        return GroupRange(
            id=require_attr(el, "id"),
            utterance_id=require_attr(el, "u"),
            start=int_attr(el, "start"),
            end=int_attr(el, "end"),
            kind=kind,
            payload=el.get("payload"),
        )
    except ValueError as exc:
        raise SchemaViolation(str(exc)) from exc


def read_code(el: ET.Element) -> CodeEntry:
    try:
        target = CodeTarget.from_attr(require_attr(el, "target"))
        return CodeEntry(
            id=require_attr(el, "id"),
            target=target,
            key=require_attr(el, "key"),
            value=el.get("value", ""),
        )
    except ValueError as exc:
        raise SchemaViolation(str(exc)) from exc


# -- documents -----------------------------------------------------------------

def root_element(root: SlaRoot) -> ET.Element:
    el = ET.Element("slaRoot")
    el.set("transcriptId", root.transcript_id)
    el.set("schemaVersion", root.schema_version)
    for record in root.participants:
        el.append(participant_element(record))
    for header in root.header_fields:
        el.append(header_field_element(header))
    for u in root.utterances:
        el.append(utterance_element(u))
    return el


def serialize_root(root: SlaRoot) -> bytes:
    _check_root(root)
    return to_canonical_bytes(root_element(root))


def parse_root(data: bytes) -> SlaRoot:
    el = parse_bytes(data, "slaRoot")
    transcript_id, version = check_document_attrs(el)
    participants: list[ParticipantRecord] = []
    headers: list[HeaderField] = []
    utterances: list[RootUtterance] = []
    for child in el:
        if child.tag == "participant":
            participants.append(read_participant(child))
        elif child.tag == "headerField":
            headers.append(read_header_field(child))
        elif child.tag == "u":
            try:
                utterances.append(read_utterance(child))
            except ValueError as exc:
                raise SchemaViolation(str(exc)) from exc
        else:
            raise SchemaViolation(f"unexpected element <{child.tag}> inside <slaRoot>")
    root = SlaRoot(transcript_id, tuple(participants), tuple(headers),
                   tuple(utterances), version)
    _check_root(root)
    return root


def _check_root(root: SlaRoot) -> None:
    seen: set[str] = set()
    declared = {p.code for p in root.participants}
    for u in root.utterances:
        if u.id in seen:
            raise SchemaViolation(f"duplicate utterance id {u.id!r}")
        seen.add(u.id)
        if u.speaker not in declared:
            raise SchemaViolation(
                f"utterance {u.id} speaker {u.speaker!r} is not a participant"
            )
    codes = [p.code for p in root.participants]
    if len(set(codes)) != len(codes):
        raise SchemaViolation("duplicate participant code")


def descriptor_element(descriptor: SlaDescriptor) -> ET.Element:
    el = ET.Element("slaDescriptor")
    el.set("transcriptId", descriptor.transcript_id)
    el.set("schemaVersion", descriptor.schema_version)
    el.set("scheme", descriptor.scheme)
    for group in descriptor.groups:
        el.append(group_element(group))
    for code in descriptor.codes:
        el.append(code_element(code))
    return el


def serialize_descriptor(descriptor: SlaDescriptor) -> bytes:
    return to_canonical_bytes(descriptor_element(descriptor))


def parse_descriptor(data: bytes) -> SlaDescriptor:
    el = parse_bytes(data, "slaDescriptor")
    transcript_id, version = check_document_attrs(el)
    scheme = require_attr(el, "scheme")
    groups: list[GroupRange] = []
    codes: list[CodeEntry] = []
    for child in el:
        if child.tag == "group":
            groups.append(read_group(child))
        elif child.tag == "code":
            codes.append(read_code(child))
        else:
            raise SchemaViolation(
                f"unexpected element <{child.tag}> inside <slaDescriptor>"
            )
    ids = [g.id for g in groups]
    if len(set(ids)) != len(ids):
        raise SchemaViolation("duplicate group id")
    return SlaDescriptor(transcript_id, scheme, tuple(groups), tuple(codes), version)
