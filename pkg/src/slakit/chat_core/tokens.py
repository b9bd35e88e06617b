"""Mainline tokenizer and canonical token rendering.

Mainline text is a flat sequence of words, pauses, terminators and scoped-group
markup.  Scopes are delimited by bare ``<`` and ``>``; a bracketed marker such
as ``[/]`` or ``[= laughs]`` assigns a kind (and optional payload) to the scope
or word it follows.  The pause is the single character ``#`` and utterance
terminators are exactly ``.``, ``?`` and ``!`` standing alone; any other
whitespace-delimited run of characters is a word.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from slakit.diagnostics import Diagnostic, Severity
from slakit.errors import UnterminatedMarker


class TokenKind(Enum):
    WORD = "word"
    PAUSE = "pause"
    TERMINATOR = "terminator"
    SCOPE_OPEN = "scope_open"
    SCOPE_CLOSE = "scope_close"
    SCOPE_MARKER = "scope_marker"


#: Kinds that carry transcript content and receive standoff token indices.
CONTENT_KINDS = frozenset({TokenKind.WORD, TokenKind.PAUSE, TokenKind.TERMINATOR})

TERMINATORS = frozenset({".", "?", "!"})
PAUSE_CHAR = "#"


class ScopeMarkerKind(Enum):
    PARALINGUISTIC = "paralinguistic"
    EXPLANATION = "explanation"
    REPLACEMENT = "replacement"
    RETRACE = "retrace"
    RETRACE_CORRECTION = "retrace-correction"
    OVERLAP_FOLLOWS = "overlap-follows"
    OVERLAP_PRECEDES = "overlap-precedes"
    ERROR = "error"


# Bare marker bodies (no payload allowed).
_BARE_MARKERS = {
    "/": ScopeMarkerKind.RETRACE,
    "//": ScopeMarkerKind.RETRACE_CORRECTION,
    ">": ScopeMarkerKind.OVERLAP_FOLLOWS,
    "<": ScopeMarkerKind.OVERLAP_PRECEDES,
}

# Prefixed marker bodies; the remainder of the body is the payload.
# Longest prefix wins ("=!" before "=").
_PREFIX_MARKERS = (
    ("=!", ScopeMarkerKind.PARALINGUISTIC),
    ("=", ScopeMarkerKind.EXPLANATION),
    (":", ScopeMarkerKind.REPLACEMENT),
    ("*", ScopeMarkerKind.ERROR),
)

_MARKER_GLYPH = {
    ScopeMarkerKind.PARALINGUISTIC: "=!",
    ScopeMarkerKind.EXPLANATION: "=",
    ScopeMarkerKind.REPLACEMENT: ":",
    ScopeMarkerKind.ERROR: "*",
    ScopeMarkerKind.RETRACE: "/",
    ScopeMarkerKind.RETRACE_CORRECTION: "//",
    ScopeMarkerKind.OVERLAP_FOLLOWS: ">",
    ScopeMarkerKind.OVERLAP_PRECEDES: "<",
}

#: Marker kinds whose surface form may carry a payload.
PAYLOAD_MARKERS = frozenset({
    ScopeMarkerKind.PARALINGUISTIC,
    ScopeMarkerKind.EXPLANATION,
    ScopeMarkerKind.REPLACEMENT,
    ScopeMarkerKind.ERROR,
})


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    marker_kind: ScopeMarkerKind | None = None
    payload: str | None = None

    def __post_init__(self):
        if (self.kind is TokenKind.SCOPE_MARKER) != (self.marker_kind is not None):
            raise ValueError("marker_kind is set exactly on scope_marker tokens")
        if self.payload is not None and self.kind is not TokenKind.SCOPE_MARKER:
            raise ValueError("only scope_marker tokens carry a payload")
        if self.payload is not None and self.marker_kind not in PAYLOAD_MARKERS:
            raise ValueError(f"{self.marker_kind} markers take no payload")


def word(text: str) -> Token:
    return Token(TokenKind.WORD, text)


def pause() -> Token:
    return Token(TokenKind.PAUSE, PAUSE_CHAR)


def terminator(text: str) -> Token:
    if text not in TERMINATORS:
        raise ValueError(f"not a terminator: {text!r}")
    return Token(TokenKind.TERMINATOR, text)


def scope_open() -> Token:
    return Token(TokenKind.SCOPE_OPEN, "<")


def scope_close() -> Token:
    return Token(TokenKind.SCOPE_CLOSE, ">")


def marker(kind: ScopeMarkerKind, payload: str | None = None) -> Token:
    if payload is not None and kind not in PAYLOAD_MARKERS:
        raise ValueError(f"{kind} markers take no payload")
    return Token(TokenKind.SCOPE_MARKER, marker_surface(kind, payload), kind, payload)


def marker_surface(kind: ScopeMarkerKind, payload: str | None = None) -> str:
    glyph = _MARKER_GLYPH[kind]
    if payload:
        return f"[{glyph} {payload}]"
    return f"[{glyph}]"


def _classify_marker_body(body: str) -> tuple[ScopeMarkerKind, str | None] | None:
    bare = _BARE_MARKERS.get(body)
    if bare is not None:
        return bare, None
    for prefix, kind in _PREFIX_MARKERS:
        if body.startswith(prefix):
            payload = body[len(prefix):].strip()
            return kind, payload or None
    return None


_WORD_STOP = frozenset(" \t<>[")


def tokenize_mainline(
    line_text: str,
    *,
    diagnostics: list[Diagnostic] | None = None,
    line: int | None = None,
    strict: bool = True,
) -> list[Token]:
    """Tokenize the content of a mainline (text after the speaker label).

    Joining the returned tokens with :func:`render_tokens` yields the
    canonically spaced form of ``line_text``; re-tokenizing that form gives
    the same token list back.

    An unknown ``[...]`` body is kept verbatim as a word and reported through
    ``diagnostics`` (never dropped).  A ``[`` without a closing ``]`` raises
    :class:`UnterminatedMarker` when ``strict``; otherwise the rest of the
    line becomes a word and an error diagnostic is recorded.
    """
    sink = diagnostics if diagnostics is not None else []
    tokens: list[Token] = []
    i, n = 0, len(line_text)
    while i < n:
        c = line_text[i]
        if c in " \t":
            i += 1
            continue
        if c == "<":
            tokens.append(scope_open())
            i += 1
            continue
        if c == ">":
            tokens.append(scope_close())
            i += 1
            continue
        if c == "[":
            end = line_text.find("]", i)
            if end < 0:
                if strict:
                    raise UnterminatedMarker(
                        f"'[' at column {i + 1} has no matching ']'", line
                    )
                sink.append(Diagnostic(
                    "unterminated-marker",
                    f"'[' at column {i + 1} has no matching ']'",
                    line,
                ))
                tokens.append(word(line_text[i:].rstrip()))
                break
            body = line_text[i + 1:end]
            classified = _classify_marker_body(body)
            if classified is None:
                sink.append(Diagnostic(
                    "unknown-marker",
                    f"unknown marker [{body}] kept as a word",
                    line,
                    Severity.WARNING,
                ))
                tokens.append(word(line_text[i:end + 1]))
            else:
                tokens.append(marker(*classified))
            i = end + 1
            continue
        j = i
        while j < n and line_text[j] not in _WORD_STOP:
            j += 1
        chunk = line_text[i:j]
        if chunk == PAUSE_CHAR:
            tokens.append(pause())
        elif chunk in TERMINATORS:
            tokens.append(terminator(chunk))
        else:
            tokens.append(word(chunk))
        i = j
    return tokens


def render_tokens(tokens) -> str:
    """Join tokens with canonical spacing.

    Single spaces everywhere, except that nothing follows a scope open and
    nothing precedes a scope close (``<a b> [/] c``).
    """
    parts: list[str] = []
    prev: Token | None = None
    for tok in tokens:
        if prev is not None and prev.kind is not TokenKind.SCOPE_OPEN \
                and tok.kind is not TokenKind.SCOPE_CLOSE:
            parts.append(" ")
        if tok.kind is TokenKind.SCOPE_MARKER:
            parts.append(marker_surface(tok.marker_kind, tok.payload))
        else:
            parts.append(tok.text)
        prev = tok
    return "".join(parts)
