"""Enumerate the consistent readings of inline scoped-group markup.

A marker claims one scope that closed before it; no scope is claimed twice.
Only when every scope preceding a marker is claimed by some other marker may
the marker fall back to the single word immediately before it.  Any injective
assignment satisfying those rules is a consistent reading, so an utterance
such as ``<a b> <c d> [/] [//]`` — two adjacent closed scopes followed by two
trailing markers — has two readings, and the choice between them needs the
original recording.

Scopes left unclaimed carry no marker kind and therefore produce no range;
:func:`scan_structure` exposes them so converters can report the loss.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Optional, Sequence

from slakit.chat_core.model import Utterance
from slakit.chat_core.tokens import CONTENT_KINDS, ScopeMarkerKind, Token, TokenKind
from slakit.errors import UnbalancedScopes
from slakit.group_algebra import GroupRange

_FALLBACK = -1


@dataclass(frozen=True)
class Scope:
    """A matched ``<``/``>`` pair: content-token span plus token positions."""

    start: int
    end: int
    open_pos: int
    close_pos: int


@dataclass(frozen=True)
class Marker:
    pos: int
    kind: ScopeMarkerKind
    payload: Optional[str]
    fallback: Optional[int]  # content index of the word immediately before


@dataclass(frozen=True)
class Interpretation:
    """One consistent reading: the standoff ranges it induces.

    ``unclaimed_scopes`` lists the (start, end) spans of scopes left without
    a marker under this reading; they contribute no range.
    """

    ranges: tuple[GroupRange, ...]
    unclaimed_scopes: tuple[tuple[int, int], ...] = ()

    def signature(self) -> tuple:
        return tuple((r.start, r.end, r.kind, r.payload) for r in self.ranges)


def scan_structure(tokens: Sequence[Token]) -> tuple[list[Scope], list[Marker], int]:
    """Match scopes, collect markers, count content tokens.

    Raises :class:`UnbalancedScopes` when opens and closes cannot be paired.
    """
    scopes: list[Scope] = []
    markers: list[Marker] = []
    open_stack: list[tuple[int, int]] = []  # (content index at open, token pos)
    content = 0
    prev: Token | None = None
    prev_content_index: int | None = None
    for pos, tok in enumerate(tokens):
        if tok.kind is TokenKind.SCOPE_OPEN:
            open_stack.append((content, pos))
        elif tok.kind is TokenKind.SCOPE_CLOSE:
            if not open_stack:
                raise UnbalancedScopes(f"'>' at token {pos} closes nothing")
            start, open_pos = open_stack.pop()
            scopes.append(Scope(start, content, open_pos, pos))
        elif tok.kind is TokenKind.SCOPE_MARKER:
            fallback = None
            if prev is not None and prev.kind is TokenKind.WORD:
                fallback = prev_content_index
            markers.append(Marker(pos, tok.marker_kind, tok.payload, fallback))
        else:
            prev_content_index = content
            content += 1
        prev = tok
    if open_stack:
        raise UnbalancedScopes(f"{len(open_stack)} '<' left unclosed")
    scopes.sort(key=lambda s: (s.close_pos))
    return scopes, markers, content


def _assignments(scopes: list[Scope], markers: list[Marker]):
    """Yield every injective marker->scope map allowed by the binding rules.

    Each element of the yielded tuple is a scope index or ``_FALLBACK``.
    Zero-width scopes can hold no words and are never claimable.
    """
    claimable = [i for i, s in enumerate(scopes) if s.start < s.end]
    options: list[list[int]] = []
    for m in markers:
        opts = [i for i in claimable if scopes[i].close_pos < m.pos]
        opts.append(_FALLBACK)
        options.append(opts)
    for combo in product(*options):
        taken = [c for c in combo if c != _FALLBACK]
        if len(set(taken)) != len(taken):
            continue
        ok = True
        for m, choice in zip(markers, combo):
            if choice != _FALLBACK:
                continue
            if m.fallback is None:
                ok = False
                break
            # Fallback is the else-branch: every claimable scope closed
            # before this marker must be claimed by some other marker.
            for i in claimable:
                if scopes[i].close_pos < m.pos and i not in taken:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            yield combo


def _greedy_signature(scopes: list[Scope], markers: list[Marker]) -> tuple | None:
    """The left-to-right nearest-scope reading, used as the default pick."""
    taken: set[int] = set()
    spans: list[tuple[int, int, ScopeMarkerKind, str | None]] = []
    for m in markers:
        candidates = [i for i, s in enumerate(scopes)
                      if s.start < s.end and s.close_pos < m.pos and i not in taken]
        if candidates:
            choice = max(candidates, key=lambda i: scopes[i].close_pos)
            taken.add(choice)
            spans.append((scopes[choice].start, scopes[choice].end, m.kind, m.payload))
        elif m.fallback is not None:
            spans.append((m.fallback, m.fallback + 1, m.kind, m.payload))
        else:
            return None
    return tuple(sorted(spans, key=lambda s: (s[0], s[1], s[2].value, s[3] or "")))


def extract_inline_groups(
    utterance: Utterance | Sequence[Token],
    utterance_id: str = "u",
) -> list[Interpretation]:
    """Enumerate every consistent reading of an utterance's inline groups.

    Ranges index the utterance's content tokens (words, pauses, terminators)
    and get deterministic ids ``<utterance_id>.g<n>`` in range-sorted order.
    Well-formed markup yields at least one reading; more than one signals an
    ambiguity the source recording must resolve.  Returns ``[]`` when some
    marker cannot be bound at all.
    """
    tokens = utterance.tokens if isinstance(utterance, Utterance) else tuple(utterance)
    scopes, markers, _ = scan_structure(tokens)

    seen: dict[tuple, tuple[tuple[int, int], ...]] = {}
    for combo in _assignments(scopes, markers):
        spans = []
        for m, choice in zip(markers, combo):
            if choice == _FALLBACK:
                spans.append((m.fallback, m.fallback + 1, m.kind, m.payload))
            else:
                s = scopes[choice]
                spans.append((s.start, s.end, m.kind, m.payload))
        spans.sort(key=lambda s: (s[0], s[1], s[2].value, s[3] or ""))
        unclaimed = tuple(sorted(
            (s.start, s.end) for i, s in enumerate(scopes) if i not in set(combo)
        ))
        seen.setdefault(tuple(spans), unclaimed)

    ordered = sorted(seen, key=lambda sig: [
        (start, end, kind.value, payload or "") for start, end, kind, payload in sig
    ])
    preferred = _greedy_signature(scopes, markers)
    if preferred is not None and preferred in seen:
        ordered.remove(preferred)
        ordered.insert(0, preferred)

    interpretations = []
    for signature in ordered:
        ranges = tuple(
            GroupRange(f"{utterance_id}.g{i}", utterance_id, start, end, kind, payload)
            for i, (start, end, kind, payload) in enumerate(signature)
        )
        interpretations.append(Interpretation(ranges, seen[signature]))
    return interpretations
