"""Standoff word-group ranges and their interval algebra.

A group is a half-open token range ``[start, end)`` over one utterance's
content tokens, with a marker kind and optional payload.  Keeping ranges
apart from the token stream lets groups overlap freely; inline bracketing
can only express groups that are embedded in, or isolated from, each other,
which :func:`check_inline_representable` decides.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

from slakit.chat_core.tokens import ScopeMarkerKind
from slakit.errors import DifferentUtterance


@dataclass(frozen=True)
class GroupRange:
    id: str
    utterance_id: str
    start: int
    end: int
    kind: ScopeMarkerKind
    payload: Optional[str] = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("group id must be nonempty")
        if not (0 <= self.start < self.end):
            raise ValueError(f"bad range [{self.start}, {self.end})")

    def sort_key(self):
        return (self.utterance_id, self.start, self.end,
                self.kind.value, self.payload or "", self.id)


class GroupRelation(Enum):
    ISOLATED = "isolated"
    EMBEDDED = "embedded"
    OVERLAPPING = "overlapping"
    EQUAL = "equal"


def relate(a: GroupRange, b: GroupRange) -> GroupRelation:
    """Classify the interval relation between two ranges of one utterance."""
    if a.utterance_id != b.utterance_id:
        raise DifferentUtterance(
            f"ranges {a.id} and {b.id} reference different utterances"
        )
    if (a.start, a.end) == (b.start, b.end):
        return GroupRelation.EQUAL
    if a.end <= b.start or b.end <= a.start:
        return GroupRelation.ISOLATED
    if (a.start <= b.start and b.end <= a.end) or \
            (b.start <= a.start and a.end <= b.end):
        return GroupRelation.EMBEDDED
    return GroupRelation.OVERLAPPING


@dataclass(frozen=True)
class GroupForest:
    """Containment forest plus the overlap pairs that break tree shape.

    ``containment`` holds (parent id, child id) edges of the transitive
    reduction: the parent is the smallest range strictly containing the
    child.  Every partially-overlapping pair appears in ``overlaps`` (ids
    sorted within the pair) and in no containment edge.
    """

    containment: tuple[tuple[str, str], ...]
    overlaps: tuple[tuple[str, str], ...]
    roots: tuple[str, ...]


def build_forest(ranges: Iterable[GroupRange]) -> GroupForest:
    ordered = sorted(ranges, key=GroupRange.sort_key)
    containment: list[tuple[str, str]] = []
    overlaps: list[tuple[str, str]] = []
    roots: list[str] = []

    for child in ordered:
        parent: GroupRange | None = None
        for candidate in ordered:
            if candidate is child:
                continue
            if relate(candidate, child) is GroupRelation.EMBEDDED \
                    and candidate.start <= child.start and child.end <= candidate.end:
                if parent is None or (candidate.end - candidate.start,
                                      *candidate.sort_key()) < \
                        (parent.end - parent.start, *parent.sort_key()):
                    parent = candidate
        if parent is None:
            roots.append(child.id)
        else:
            containment.append((parent.id, child.id))

    for i, a in enumerate(ordered):
        for b in ordered[i + 1:]:
            if relate(a, b) is GroupRelation.OVERLAPPING:
                overlaps.append(tuple(sorted((a.id, b.id))))

    return GroupForest(tuple(containment), tuple(sorted(overlaps)), tuple(roots))


def check_inline_representable(
    ranges: Iterable[GroupRange],
) -> list[tuple[GroupRange, GroupRange]]:
    """Return the pairs that inline bracketing cannot express.

    An empty result means every pair is isolated or embedded, so the set
    can be written with ``<...>`` scopes.  Offending pairs are those that
    overlap partially or cover the same span.
    """
    ordered = sorted(ranges, key=GroupRange.sort_key)
    offending = []
    for i, a in enumerate(ordered):
        for b in ordered[i + 1:]:
            if relate(a, b) in (GroupRelation.OVERLAPPING, GroupRelation.EQUAL):
                offending.append((a, b))
    return offending
