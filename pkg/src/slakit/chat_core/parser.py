"""CHAT text parser.

Line grammar:

* ``@Name`` or ``@Name:<sep>value`` — header (``<sep>`` is any run of spaces
  or tabs, canonically one tab).  A header with an empty value is written
  bare, which covers ``@Begin`` and ``@End``.
* ``*XXX:<sep>text`` — mainline for participant ``XXX``.
* ``%xxx:<sep>text`` — dependent tier attached to the preceding mainline.
* leading whitespace — continuation of the previous mainline or tier,
  folded in with a single space.

Blank lines are ignored.  In strict mode the first structural violation is
raised as the matching :mod:`slakit.errors` exception; in lenient mode every
violation becomes a :class:`Diagnostic` and the document is best effort (no
content is ever invented, lines that cannot be attached are skipped and
reported).
"""

from __future__ import annotations

import re

from slakit.chat_core.model import (
    CHANGEABLE_HEADERS,
    CONSTANT_HEADERS,
    Header,
    HeaderKind,
    ParseMode,
    Tier,
    TranscriptDoc,
    Utterance,
    UtteranceBlock,
    declared_participants,
    is_participant_code,
    is_tier_code,
)
from slakit.chat_core.tokens import tokenize_mainline
from slakit.diagnostics import Diagnostic, Severity
from slakit.errors import (
    DuplicateTier,
    MalformedLine,
    MissingBegin,
    MissingEnd,
    UnknownParticipant,
    UnterminatedMarker,
)

_HEADER_RE = re.compile(r"^@([^:]+?)(?::[ \t]*(.*))?$")
_MAINLINE_RE = re.compile(r"^\*([^:]*):[ \t]*(.*)$")
_TIER_RE = re.compile(r"^%([^:]*):[ \t]*(.*)$")

_STRICT_ERRORS = {
    "missing-begin": MissingBegin,
    "missing-end": MissingEnd,
    "unknown-participant": UnknownParticipant,
    "malformed-line": MalformedLine,
    "duplicate-tier": DuplicateTier,
    "bad-participant-code": MalformedLine,
    "bad-tier-code": MalformedLine,
    "header-not-changeable": MalformedLine,
    "unterminated-marker": UnterminatedMarker,
}


class _LogicalLine:
    __slots__ = ("text", "number")

    def __init__(self, text: str, number: int):
        self.text = text
        self.number = number


def _fold_lines(text: str, issue) -> list[_LogicalLine]:
    logical: list[_LogicalLine] = []
    for number, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip()
        if not line:
            continue
        if raw[0] in " \t":
            if logical:
                logical[-1].text += " " + line.lstrip()
            else:
                issue("malformed-line", "continuation line with nothing to continue",
                      number)
            continue
        logical.append(_LogicalLine(line, number))
    return logical


def parse_transcript(
    text: str,
    mode: ParseMode = ParseMode.STRICT,
    *,
    changeable_headers: frozenset[str] = CHANGEABLE_HEADERS,
) -> tuple[TranscriptDoc, list[Diagnostic]]:
    """Parse CHAT text into a :class:`TranscriptDoc` plus diagnostics.

    Accepts LF or CRLF line endings.  ``changeable_headers`` is the profile
    of header names allowed to recur mid-body.
    """
    diagnostics: list[Diagnostic] = []
    strict = mode is ParseMode.STRICT

    def issue(rule: str, message: str, line: int | None,
              severity: Severity = Severity.ERROR) -> None:
        if strict and severity is Severity.ERROR:
            raise _STRICT_ERRORS.get(rule, MalformedLine)(message, line)
        diagnostics.append(Diagnostic(rule, message, line, severity))

    text = text.replace("\r\n", "\n").replace("\r", "\n")
    lines = _fold_lines(text, issue)
    last_line = text.count("\n") + 1

    constant_headers: list[Header] = []
    body: list[Header | UtteranceBlock] = []
    has_end = False
    in_body = False
    current_block: UtteranceBlock | None = None
    speaker_lines: list[tuple[str, int]] = []

    def flush_block() -> None:
        nonlocal current_block
        if current_block is not None:
            body.append(current_block)
            current_block = None

    if not lines or lines[0].text != "@Begin":
        issue("missing-begin", "document does not start with @Begin",
              lines[0].number if lines else 1)
    else:
        constant_headers.append(Header("Begin"))
        lines = lines[1:]

    for logical in lines:
        line_text, number = logical.text, logical.number
        if has_end:
            issue("malformed-line", "content after @End", number)

        if line_text.startswith("@"):
            m = _HEADER_RE.match(line_text)
            if not m or not m.group(1).strip():
                issue("malformed-line", f"malformed header line: {line_text!r}", number)
                continue
            name = m.group(1).strip()
            value = m.group(2) or ""
            if name == "End":
                if value:
                    issue("malformed-line", "@End takes no value", number)
                has_end = True
                flush_block()
                continue
            if name == "Begin":
                if in_body or any(h.name == "Begin" for h in constant_headers):
                    issue("malformed-line", "unexpected @Begin", number)
                else:
                    if value:
                        issue("malformed-line", "@Begin takes no value", number)
                    constant_headers.insert(0, Header("Begin"))
                continue
            if name in changeable_headers:
                flush_block()
                in_body = True
                body.append(Header(name, value, HeaderKind.CHANGEABLE))
            elif not in_body:
                constant_headers.append(Header(name, value))
            else:
                issue("header-not-changeable",
                      f"header @{name} is not in the changeable profile", number)
                flush_block()
                body.append(Header(name, value, HeaderKind.CONSTANT))
            continue

        if line_text.startswith("*"):
            m = _MAINLINE_RE.match(line_text)
            if not m:
                issue("malformed-line", f"malformed mainline: {line_text!r}", number)
                continue
            code, content = m.group(1), m.group(2)
            if not is_participant_code(code):
                issue("bad-participant-code",
                      f"participant code {code!r} is not three uppercase letters",
                      number)
            tokens = tokenize_mainline(content, diagnostics=diagnostics,
                                       line=number, strict=strict)
            flush_block()
            in_body = True
            current_block = UtteranceBlock(Utterance(code, tuple(tokens), content))
            speaker_lines.append((code, number))
            continue

        if line_text.startswith("%"):
            m = _TIER_RE.match(line_text)
            if not m:
                issue("malformed-line", f"malformed tier line: {line_text!r}", number)
                continue
            code, content = m.group(1), m.group(2)
            if current_block is None:
                issue("malformed-line", "dependent tier with no preceding mainline",
                      number)
                continue
            if not is_tier_code(code):
                issue("bad-tier-code",
                      f"tier code {code!r} is not three lowercase letters", number)
            if any(t.code == code for t in current_block.tiers):
                issue("duplicate-tier", f"tier %{code} repeated in one block", number)
            current_block = UtteranceBlock(
                current_block.mainline, current_block.tiers + (Tier(code, content),)
            )
            continue

        issue("malformed-line",
              f"line starts with none of '@', '*', '%': {line_text!r}", number)

    flush_block()

    if not has_end:
        issue("missing-end", "document does not end with @End", last_line)

    doc = TranscriptDoc(tuple(constant_headers), tuple(body), has_end)

    declared = declared_participants(doc)
    for code, number in speaker_lines:
        if is_participant_code(code) and code not in declared:
            issue("unknown-participant",
                  f"speaker {code} is not declared in @Participants", number)

    return doc, diagnostics
