"""Strict-invariant checks over an in-memory transcript.

Returns diagnostics rather than raising; an empty result means the document
is strict-valid.  Diagnostics carry no source line (there is no source); the
message names the offending header, block or tier instead.
"""

from __future__ import annotations

from slakit.chat_core.model import (
    CHANGEABLE_HEADERS,
    Header,
    HeaderKind,
    TranscriptDoc,
    UtteranceBlock,
    declared_participants,
    is_participant_code,
    is_tier_code,
)
from slakit.chat_core.tokens import render_tokens, tokenize_mainline
from slakit.diagnostics import Diagnostic


def validate(
    doc: TranscriptDoc,
    *,
    changeable_headers: frozenset[str] = CHANGEABLE_HEADERS,
) -> list[Diagnostic]:
    out: list[Diagnostic] = []

    def err(rule: str, message: str) -> None:
        out.append(Diagnostic(rule, message))

    if not doc.constant_headers or doc.constant_headers[0] != Header("Begin"):
        err("missing-begin", "first header is not @Begin")
    if not doc.has_end:
        err("missing-end", "document lacks the @End marker")

    for header in doc.constant_headers:
        if header.kind is not HeaderKind.CONSTANT:
            err("header-kind", f"@{header.name} in the constant block is marked changeable")
        if header.name in changeable_headers:
            err("header-kind", f"changeable header @{header.name} in the constant block")

    declared = declared_participants(doc)
    for code in declared:
        if not is_participant_code(code):
            err("bad-participant-code",
                f"declared participant code {code!r} is not three uppercase letters")

    for position, item in enumerate(doc.body):
        if isinstance(item, Header):
            if item.kind is not HeaderKind.CHANGEABLE:
                err("header-not-changeable",
                    f"body header @{item.name} (position {position}) is not changeable")
            elif item.name not in changeable_headers:
                err("header-not-changeable",
                    f"body header @{item.name} is not in the changeable profile")
            continue
        assert isinstance(item, UtteranceBlock)
        speaker = item.mainline.speaker
        where = f"utterance {position}"
        if not is_participant_code(speaker):
            err("bad-participant-code",
                f"{where}: speaker {speaker!r} is not three uppercase letters")
        elif speaker not in declared:
            err("unknown-participant",
                f"{where}: speaker {speaker} is not declared in @Participants")
        if tuple(tokenize_mainline(render_tokens(item.mainline.tokens))) \
                != item.mainline.tokens:
            err("token-segmentation",
                f"{where}: tokens are not a stable segmentation of their rendering")
        seen: set[str] = set()
        for tier in item.tiers:
            if not is_tier_code(tier.code):
                err("bad-tier-code",
                    f"{where}: tier code {tier.code!r} is not three lowercase letters")
            if tier.code in seen:
                err("duplicate-tier", f"{where}: tier %{tier.code} repeated")
            seen.add(tier.code)

    return out
