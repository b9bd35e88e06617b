"""Conversion between transcript documents and the Root/Descriptor pair.

``from_chat`` strips inline group markup out of each utterance, keeping the
content tokens in the Root and turning the picked reading's groups into
standoff ranges in the ``chat-groups`` Descriptor.  ``to_chat`` is its
inverse: it re-inlines every group that inline bracketing can express.

Round-trip fidelity rules:

* ``@Participants`` lines are kept verbatim as header fields *and* parsed
  into participant records, so rendering reproduces the original bytes while
  programmatic consumers get structured data.
* ``@ID`` lines in the canonical ten-field shape immediately following
  ``@Participants`` (in declaration order) are absorbed into the records;
  ``to_chat`` regenerates them in place.  Anything else stays verbatim.
* A group spanning exactly one word is written back as ``word [marker]``,
  the canonical spelling of the two equivalent inline forms.
"""

from __future__ import annotations

from typing import Mapping, Optional, Sequence

from slakit.chat_core.model import (
    Header,
    HeaderKind,
    ParseMode,
    TranscriptDoc,
    Utterance,
    UtteranceBlock,
    _participant_entries,
    begin_header,
)
from slakit.chat_core.interpret import extract_inline_groups
from slakit.chat_core.tokens import (
    CONTENT_KINDS,
    ScopeMarkerKind,
    Token,
    TokenKind,
    marker,
    scope_close,
    scope_open,
)
from slakit.chat_core.validate import validate
from slakit.diagnostics import Diagnostic, Severity, errors_only
from slakit.errors import (
    AmbiguityUnresolved,
    DanglingReference,
    InvalidDoc,
    NotInlineRepresentable,
    UnbalancedScopes,
)
from slakit.group_algebra import GroupRange, GroupRelation, check_inline_representable, relate
from slakit.sla_store.model import (
    CHAT_GROUPS_SCHEME,
    HeaderField,
    ParticipantRecord,
    RootUtterance,
    SlaDescriptor,
    SlaRoot,
)

_ID_FIELD_COUNT = 11  # ten |-separated fields plus the empty tail


def _canonical_id_value(record: ParticipantRecord) -> str:
    parts = [record.language or "", record.corpus or "", record.code,
             "", "", "", "", record.role, "", ""]
    return "|".join(parts) + "|"


def _parse_id_value(value: str) -> Optional[tuple[str, str, str, str]]:
    """Return (language, corpus, code, role) for a canonical @ID value."""
    parts = value.split("|")
    if len(parts) != _ID_FIELD_COUNT or parts[-1] != "":
        return None
    if any(parts[i] for i in (3, 4, 5, 6, 8, 9)):
        return None
    return parts[0], parts[1], parts[2], parts[7]


def from_chat(
    doc: TranscriptDoc,
    transcript_id: str,
    picks: Mapping[str, int] | None = None,
    mode: ParseMode = ParseMode.STRICT,
) -> tuple[SlaRoot, SlaDescriptor, list[Diagnostic]]:
    """Split a strict-valid document into a Root and a chat-groups Descriptor.

    ``picks`` maps utterance ids (``u1``, ``u2``, ... in document order) to
    the interpretation index to use for ambiguous group markup.  Strict mode
    raises :class:`AmbiguityUnresolved` for an ambiguous utterance without a
    pick; lenient mode takes reading 0 and records a diagnostic.
    """
    findings = errors_only(validate(doc))
    if findings:
        raise InvalidDoc(findings)
    picks = dict(picks or {})
    strict = mode is ParseMode.STRICT
    diagnostics: list[Diagnostic] = []

    records, header_fields = _abstract_headers(doc)

    utterances: list[RootUtterance] = []
    groups: list[GroupRange] = []
    position = 0
    for item in doc.body:
        if isinstance(item, Header):
            header_fields.append(HeaderField(item.name, item.value, True, position))
            continue
        assert isinstance(item, UtteranceBlock)
        position += 1
        uid = f"u{position}"
        content = tuple(t for t in item.mainline.tokens if t.kind in CONTENT_KINDS)
        picked_ranges, extra = _pick_interpretation(
            item.mainline.tokens, uid, picks.get(uid), strict
        )
        diagnostics.extend(extra)
        groups.extend(picked_ranges)
        utterances.append(
            RootUtterance(uid, item.mainline.speaker, content, item.tiers)
        )

    root = SlaRoot(transcript_id, tuple(records), tuple(header_fields),
                   tuple(utterances))
    descriptor = SlaDescriptor(transcript_id, CHAT_GROUPS_SCHEME, tuple(groups))
    return root, descriptor, diagnostics


def _abstract_headers(
    doc: TranscriptDoc,
) -> tuple[list[ParticipantRecord], list[HeaderField]]:
    records: list[ParticipantRecord] = []
    order: dict[str, int] = {}
    for header in doc.constant_headers:
        if header.name != "Participants":
            continue
        for code, name, role in _participant_entries(header.value):
            if code not in order:
                order[code] = len(records)
                records.append(ParticipantRecord(code, name, role))

    fields: list[HeaderField] = []
    absorbing = False  # inside the @ID run that follows @Participants
    last_index = -1
    for header in doc.constant_headers:
        if header.name in ("Begin", "End"):
            continue
        if header.name == "Participants":
            fields.append(HeaderField(header.name, header.value))
            absorbing = True
            last_index = -1
            continue
        if absorbing and header.name == "ID":
            parsed = _parse_id_value(header.value)
            if parsed is not None:
                language, corpus, code, role = parsed
                index = order.get(code)
                record = records[index] if index is not None else None
                if record is not None and index > last_index \
                        and role == record.role and (language or corpus) \
                        and record.language is None and record.corpus is None:
                    records[index] = ParticipantRecord(
                        code, record.name, record.role,
                        language or None, corpus or None,
                    )
                    last_index = index
                    continue
            absorbing = False
        else:
            absorbing = False
        fields.append(HeaderField(header.name, header.value))
    return records, fields


def _pick_interpretation(
    tokens: Sequence[Token],
    uid: str,
    pick: int | None,
    strict: bool,
) -> tuple[tuple[GroupRange, ...], list[Diagnostic]]:
    diagnostics: list[Diagnostic] = []
    try:
        interpretations = extract_inline_groups(tokens, uid)
    except UnbalancedScopes as exc:
        if strict:
            raise UnbalancedScopes(f"utterance {uid}: {exc}") from exc
        diagnostics.append(Diagnostic(
            "unbalanced-scopes", f"utterance {uid}: {exc}; group markup dropped"
        ))
        return (), diagnostics
    if not interpretations:
        message = f"utterance {uid}: a marker cannot be bound to any scope or word"
        if strict:
            raise UnbalancedScopes(message)
        diagnostics.append(Diagnostic(
            "unbound-marker", f"{message}; group markup dropped"
        ))
        return (), diagnostics
    if pick is None:
        pick = 0
        if len(interpretations) > 1:
            if strict:
                raise AmbiguityUnresolved(uid, len(interpretations))
            diagnostics.append(Diagnostic(
                "ambiguous-utterance",
                f"utterance {uid}: {len(interpretations)} interpretations, "
                "defaulting to 0",
                severity=Severity.WARNING,
            ))
    elif not (0 <= pick < len(interpretations)):
        message = (f"utterance {uid}: pick {pick} out of range "
                   f"(have {len(interpretations)})")
        if strict:
            raise AmbiguityUnresolved(uid, len(interpretations))
        diagnostics.append(Diagnostic("ambiguous-utterance",
                                      f"{message}, defaulting to 0",
                                      severity=Severity.WARNING))
        pick = 0
    chosen = interpretations[pick]
    for start, end in chosen.unclaimed_scopes:
        diagnostics.append(Diagnostic(
            "scope-without-marker",
            f"utterance {uid}: scope [{start},{end}) has no marker and is dropped",
            severity=Severity.WARNING,
        ))
    return chosen.ranges, diagnostics


def to_chat(
    root: SlaRoot,
    descriptors: Sequence[SlaDescriptor] = (),
    mode: ParseMode = ParseMode.STRICT,
) -> tuple[TranscriptDoc, list[Diagnostic]]:
    """Assemble a transcript document from a Root and its descriptors.

    Groups from the ``chat-groups`` descriptor are re-inlined.  Strict mode
    raises :class:`NotInlineRepresentable` when an utterance's groups overlap
    or duplicate each other, and :class:`DanglingReference` for unresolvable
    references; lenient mode demotes the offenders to explanation markers and
    reports them.
    """
    strict = mode is ParseMode.STRICT
    diagnostics: list[Diagnostic] = []
    groups_by_utterance: dict[str, list[GroupRange]] = {}

    for descriptor in descriptors:
        if descriptor.scheme != CHAT_GROUPS_SCHEME:
            continue
        refs = resolve_refs(root, descriptor)
        if refs:
            if strict:
                raise DanglingReference(refs[0].message)
            diagnostics.extend(refs)
        for group in descriptor.groups:
            utterance = root.utterance(group.utterance_id)
            if utterance is None or group.end > len(utterance.tokens):
                continue  # already reported by resolve_refs
            groups_by_utterance.setdefault(group.utterance_id, []).append(group)

    body: list[Header | UtteranceBlock] = []
    changeable: dict[int, list[Header]] = {}
    tail_position = len(root.utterances)
    for field in root.header_fields:
        if field.changeable:
            pos = min(field.body_position, tail_position)
            changeable.setdefault(pos, []).append(
                Header(field.name, field.value, HeaderKind.CHANGEABLE)
            )

    for position, utterance in enumerate(root.utterances):
        body.extend(changeable.get(position, ()))
        groups = groups_by_utterance.get(utterance.id, [])
        tokens, demoted = _inline_tokens(utterance, groups, strict)
        for group in demoted:
            diagnostics.append(Diagnostic(
                "group-demoted",
                f"utterance {utterance.id}: group {group.id} "
                f"[{group.start},{group.end}) {group.kind.value} is not inline "
                "representable; demoted to an explanation marker",
                severity=Severity.WARNING,
            ))
        body.append(UtteranceBlock(
            Utterance(utterance.speaker, tuple(tokens)), utterance.tiers
        ))
    body.extend(changeable.get(tail_position, ()))

    doc = TranscriptDoc(tuple(_constant_headers(root)), tuple(body), has_end=True)
    findings = errors_only(validate(doc))
    if findings:
        if strict:
            raise InvalidDoc(findings)
        diagnostics.extend(findings)
    return doc, diagnostics


def _constant_headers(root: SlaRoot) -> list[Header]:
    headers = [begin_header()]
    constants = [f for f in root.header_fields if not f.changeable]
    synthesized_ids = [
        Header("ID", _canonical_id_value(r))
        for r in root.participants if r.language or r.corpus
    ]
    participant_index = next(
        (i for i, f in enumerate(constants) if f.name == "Participants"), None
    )
    if participant_index is None and root.participants:
        value = ", ".join(
            " ".join(x for x in (r.code, r.name, r.role) if x)
            for r in root.participants
        )
        headers.append(Header("Participants", value))
        headers.extend(synthesized_ids)
        headers.extend(Header(f.name, f.value) for f in constants)
        return headers
    for i, field in enumerate(constants):
        headers.append(Header(field.name, field.value))
        if i == participant_index:
            headers.extend(synthesized_ids)
    return headers


def _inline_tokens(
    utterance: RootUtterance,
    groups: list[GroupRange],
    strict: bool,
) -> tuple[list[Token], list[GroupRange]]:
    offending = check_inline_representable(groups)
    demoted: list[GroupRange] = []
    kept = groups
    if offending:
        if strict:
            raise NotInlineRepresentable(utterance.id, offending)
        kept = []
        for group in sorted(groups, key=GroupRange.sort_key):
            if all(relate(group, other) not in
                   (GroupRelation.OVERLAPPING, GroupRelation.EQUAL)
                   for other in kept):
                kept.append(group)
            else:
                demoted.append(group)

    opens: dict[int, list[GroupRange]] = {}
    closes: dict[int, list[GroupRange]] = {}
    fallbacks: dict[int, list[GroupRange]] = {}
    for group in kept:
        single_word = (
            group.end - group.start == 1
            and utterance.tokens[group.start].kind is TokenKind.WORD
        )
        if single_word:
            fallbacks.setdefault(group.start, []).append(group)
        else:
            opens.setdefault(group.start, []).append(group)
            closes.setdefault(group.end, []).append(group)
    for start in opens:
        opens[start].sort(key=lambda g: (-g.end, g.kind.value, g.id))
    for end in closes:
        closes[end].sort(key=lambda g: (-g.start, g.kind.value, g.id))

    demote_at: dict[int, list[GroupRange]] = {}
    for group in demoted:
        demote_at.setdefault(group.end - 1, []).append(group)

    tokens: list[Token] = []
    for index, token in enumerate(utterance.tokens):
        for _ in opens.get(index, ()):
            tokens.append(scope_open())
        tokens.append(token)
        for group in fallbacks.get(index, ()):
            tokens.append(marker(group.kind, group.payload))
        for group in demote_at.get(index, ()):
            note = f"{group.kind.value} {group.start}-{group.end}"
            if group.payload:
                note += f" {group.payload}"
            tokens.append(marker(ScopeMarkerKind.EXPLANATION, note))
        for group in closes.get(index + 1, ()):
            tokens.append(scope_close())
            tokens.append(marker(group.kind, group.payload))
    return tokens, demoted


def resolve_refs(root: SlaRoot, descriptor: SlaDescriptor) -> list[Diagnostic]:
    """Check that every group and code in a descriptor resolves against the Root."""
    out: list[Diagnostic] = []

    def err(rule: str, message: str) -> None:
        out.append(Diagnostic(rule, message))

    if descriptor.transcript_id != root.transcript_id:
        err("transcript-mismatch",
            f"descriptor {descriptor.scheme!r} is for transcript "
            f"{descriptor.transcript_id!r}, root is {root.transcript_id!r}")

    seen_groups: set[str] = set()
    for group in descriptor.groups:
        if group.id in seen_groups:
            err("duplicate-id", f"group {group.id} appears twice")
        seen_groups.add(group.id)
        utterance = root.utterance(group.utterance_id)
        if utterance is None:
            err("bad-group", f"group {group.id} references unknown utterance "
                f"{group.utterance_id}")
        elif group.end > len(utterance.tokens):
            err("bad-group", f"group {group.id} range [{group.start},{group.end}) "
                f"exceeds the {len(utterance.tokens)} tokens of {utterance.id}")

    seen_codes: set[str] = set()
    for code in descriptor.codes:
        if code.id in seen_codes:
            err("duplicate-id", f"code {code.id} appears twice")
        seen_codes.add(code.id)
        target = code.target
        if target.kind == "group":
            if target.ref not in seen_groups:
                err("dangling-reference",
                    f"code {code.id} targets unknown group {target.ref}")
            continue
        utterance = root.utterance(target.ref)
        if utterance is None:
            err("dangling-reference",
                f"code {code.id} targets unknown utterance {target.ref}")
        elif target.kind == "token" and not (
                0 <= target.token_index < len(utterance.tokens)):
            err("out-of-bounds",
                f"code {code.id} targets token {target.token_index} of "
                f"{target.ref}, which has {len(utterance.tokens)} tokens")
    return out
