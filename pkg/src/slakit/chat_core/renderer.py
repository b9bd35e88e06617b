"""Canonical CHAT rendering.

Output is byte-deterministic: LF line endings, one tab after the label colon,
canonical token spacing, headers with empty values written bare.  Rendering
re-parses to an equal document.
"""

from __future__ import annotations

from slakit.chat_core.model import (
    CHANGEABLE_HEADERS,
    Header,
    TranscriptDoc,
    UtteranceBlock,
)
from slakit.chat_core.tokens import render_tokens
from slakit.chat_core.validate import validate
from slakit.diagnostics import errors_only
from slakit.errors import InvalidDoc


def header_line(header: Header) -> str:
    if header.value:
        return f"@{header.name}:\t{header.value}"
    return f"@{header.name}"


def render_chat(
    doc: TranscriptDoc,
    *,
    changeable_headers: frozenset[str] = CHANGEABLE_HEADERS,
) -> str:
    """Render a strict-valid document to canonical CHAT text."""
    findings = errors_only(validate(doc, changeable_headers=changeable_headers))
    if findings:
        raise InvalidDoc(findings)

    lines: list[str] = []
    for header in doc.constant_headers:
        lines.append(header_line(header))
    for item in doc.body:
        if isinstance(item, Header):
            lines.append(header_line(item))
            continue
        assert isinstance(item, UtteranceBlock)
        lines.append(f"*{item.mainline.speaker}:\t{render_tokens(item.mainline.tokens)}")
        for tier in item.tiers:
            lines.append(f"%{tier.code}:\t{tier.content}")
    lines.append("@End")
    return "\n".join(lines) + "\n"
