"""Indexing, incremental merge and gap diagnostics for partial transcription.

The observational record is first carved into media-time segments (the
indexing phase).  Transcription then proceeds piece by piece: each piece
covers one indexed segment and is merged into the Root at the position its
segment's media time dictates, through the change log, so merge order never
changes the resulting bytes.  What was *not* transcribed is reportable: gaps
(untranscribed or unindexed media), per-status coverage, and the coded
reference chains a gap interrupts.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence

from slakit.chat_core.model import (
    Header,
    HeaderKind,
    ParseMode,
    Tier,
    TranscriptDoc,
    UtteranceBlock,
    is_participant_code,
    is_tier_code,
)
from slakit.chat_core.tokens import CONTENT_KINDS, tokenize_mainline
from slakit.diagnostics import Diagnostic
from slakit.errors import (
    DuplicateTier,
    DuplicateUtteranceId,
    EmptySegment,
    MalformedLine,
    OverlapInMediaTime,
    SchemaViolation,
    SegmentAlreadyTranscribed,
    SegmentNotIndexed,
    UnknownParticipant,
    UnknownScheme,
)
from slakit.sla_store.model import RootUtterance, SlaDescriptor, SlaRoot
from slakit.version_log import (
    ChangeLog,
    TranscriptState,
    apply_change,
    append_change,
    make_change,
)
from slakit.xmlcanon import (
    SCHEMA_VERSION,
    check_document_attrs,
    parse_bytes,
    require_attr,
    to_canonical_bytes,
)

_MEDIA_TIME_RE = re.compile(r"^(\d{2,}):([0-5]\d):([0-5]\d)\.(\d{3})$")
_SEGMENT_ID_RE = re.compile(r"^[A-Za-z0-9_-]+$")


def parse_media_time(text: str) -> int:
    """``HH:MM:SS.mmm`` to milliseconds."""
    m = _MEDIA_TIME_RE.match(text)
    if not m:
        raise ValueError(f"bad media time {text!r}, expected HH:MM:SS.mmm")
    hours, minutes, seconds, millis = (int(g) for g in m.groups())
    return ((hours * 60 + minutes) * 60 + seconds) * 1000 + millis


def format_media_time(ms: int) -> str:
    seconds, millis = divmod(ms, 1000)
    minutes, seconds = divmod(seconds, 60)
    hours, minutes = divmod(minutes, 60)
    return f"{hours:02d}:{minutes:02d}:{seconds:02d}.{millis:03d}"


class SegmentStatus(Enum):
    INDEXED = "indexed"
    TRANSCRIBED = "transcribed"
    EXCLUDED = "excluded"


@dataclass(frozen=True)
class Segment:
    id: str
    media_start: int
    media_end: int
    label: str = ""
    status: SegmentStatus = SegmentStatus.INDEXED
    tags: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tags", tuple(self.tags))
        if not _SEGMENT_ID_RE.match(self.id):
            raise ValueError(f"bad segment id {self.id!r}")
        if self.media_start >= self.media_end:
            raise EmptySegment(
                f"segment {self.id}: start {format_media_time(self.media_start)} "
                f"is not before end {format_media_time(self.media_end)}"
            )
        for tag in self.tags:
            if "," in tag or not tag:
                raise ValueError(f"bad tag {tag!r}")

    def duration(self) -> int:
        return self.media_end - self.media_start


@dataclass(frozen=True)
class SegmentIndex:
    transcript_id: str
    segments: tuple[Segment, ...] = ()
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self):
        ordered = tuple(sorted(self.segments, key=lambda s: s.media_start))
        ids = [s.id for s in ordered]
        if len(set(ids)) != len(ids):
            raise OverlapInMediaTime("duplicate segment id")
        for earlier, later in zip(ordered, ordered[1:]):
            if later.media_start < earlier.media_end:
                raise OverlapInMediaTime(
                    f"segments {earlier.id} and {later.id} overlap in media time"
                )
        object.__setattr__(self, "segments", ordered)

    def segment(self, segment_id: str) -> Optional[Segment]:
        for segment in self.segments:
            if segment.id == segment_id:
                return segment
        return None

    def with_status(self, segment_id: str, status: SegmentStatus) -> "SegmentIndex":
        updated = []
        for segment in self.segments:
            if segment.id == segment_id:
                if segment.status is not SegmentStatus.INDEXED:
                    raise SegmentNotIndexed(
                        f"segment {segment_id} is {segment.status.value}, "
                        "only indexed segments may change status"
                    )
                segment = replace(segment, status=status)
            updated.append(segment)
        return replace(self, segments=tuple(updated))


def create_index(transcript_id: str, entries: Sequence[Segment]) -> SegmentIndex:
    """Build a sorted, non-overlapping index or raise."""
    return SegmentIndex(transcript_id, tuple(entries))


# -- transcript pieces -----------------------------------------------------------


@dataclass(frozen=True)
class TranscriptPiece:
    segment_id: str
    utterances: tuple[RootUtterance, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "utterances", tuple(self.utterances))
        prefix = f"{self.segment_id}."
        for utterance in self.utterances:
            if not utterance.id.startswith(prefix):
                raise ValueError(
                    f"piece utterance id {utterance.id!r} is not prefixed by "
                    f"its segment id {self.segment_id!r}"
                )


def parse_piece_fragment(
    text: str,
    segment_id: str,
    mode: ParseMode = ParseMode.STRICT,
) -> tuple[TranscriptPiece, list[Diagnostic]]:
    """Parse a CHAT fragment (mainlines and tiers only) into a piece.

    Pieces carry content only; the merge path has no descriptor channel, so
    inline group markup is rejected in strict mode and stripped (with a
    diagnostic) in lenient mode.  Utterances get ids ``<segment>.u<n>``.
    """
    strict = mode is ParseMode.STRICT
    diagnostics: list[Diagnostic] = []

    def issue(rule: str, message: str, line: int,
              error=MalformedLine) -> None:
        if strict:
            raise error(message, line)
        diagnostics.append(Diagnostic(rule, message, line))

    utterances: list[RootUtterance] = []
    speaker: str | None = None
    tokens: list = []
    tiers: list[Tier] = []

    def flush() -> None:
        nonlocal speaker, tokens, tiers
        if speaker is None:
            return
        uid = f"{segment_id}.u{len(utterances) + 1}"
        utterances.append(RootUtterance(uid, speaker, tuple(tokens), tuple(tiers)))
        speaker, tokens, tiers = None, [], []

    text = text.replace("\r\n", "\n").replace("\r", "\n")
    logical: list[tuple[str, int]] = []
    for number, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip()
        if not line:
            continue
        if raw[0] in " \t":
            if logical:
                logical[-1] = (logical[-1][0] + " " + line.lstrip(), logical[-1][1])
            else:
                issue("malformed-line", "continuation with nothing to continue",
                      number)
            continue
        logical.append((line, number))

    for line, number in logical:
        if line.startswith("*"):
            head, sep, content = line.partition(":")
            if not sep:
                issue("malformed-line", f"malformed mainline: {line!r}", number)
                continue
            code = head[1:]
            if not is_participant_code(code):
                issue("bad-participant-code",
                      f"participant code {code!r} is not three uppercase letters",
                      number)
            flush()
            speaker = code
            line_tokens = tokenize_mainline(content.lstrip(" \t"),
                                            diagnostics=diagnostics,
                                            line=number, strict=strict)
            structural = [t for t in line_tokens if t.kind not in CONTENT_KINDS]
            if structural:
                issue("inline-groups-in-piece",
                      "pieces carry content only; inline group markup "
                      f"({len(structural)} structure tokens) is not supported",
                      number)
            tokens = [t for t in line_tokens if t.kind in CONTENT_KINDS]
        elif line.startswith("%"):
            head, sep, content = line.partition(":")
            if not sep:
                issue("malformed-line", f"malformed tier line: {line!r}", number)
                continue
            code = head[1:]
            if speaker is None:
                issue("malformed-line", "tier with no preceding mainline", number)
                continue
            if not is_tier_code(code):
                issue("bad-tier-code",
                      f"tier code {code!r} is not three lowercase letters", number)
            if any(t.code == code for t in tiers):
                issue("duplicate-tier", f"tier %{code} repeated", number,
                      DuplicateTier)
            tiers.append(Tier(code, content.lstrip(" \t")))
        else:
            issue("malformed-line",
                  f"fragment lines start with '*' or '%': {line!r}", number)
    flush()
    return TranscriptPiece(segment_id, tuple(utterances)), diagnostics


def _segment_of(index: SegmentIndex, utterance_id: str) -> Optional[Segment]:
    prefix = utterance_id.split(".", 1)[0]
    return index.segment(prefix)


def merge_piece(
    root: SlaRoot,
    log: ChangeLog,
    index: SegmentIndex,
    piece: TranscriptPiece,
    *,
    author: str = "pipeline",
) -> tuple[SlaRoot, ChangeLog, SegmentIndex]:
    """Insert a piece's utterances at their media position, through the log.

    The segment must be in status ``indexed``; it becomes ``transcribed``.
    Merging any permutation of a piece set yields the same Root.
    """
    segment = index.segment(piece.segment_id)
    if segment is None:
        raise SegmentNotIndexed(f"segment {piece.segment_id!r} is not in the index")
    if segment.status is SegmentStatus.TRANSCRIBED:
        raise SegmentAlreadyTranscribed(
            f"segment {piece.segment_id} is already transcribed"
        )
    if segment.status is not SegmentStatus.INDEXED:
        raise SegmentNotIndexed(
            f"segment {piece.segment_id} is {segment.status.value}"
        )
    existing = root.utterance_ids()
    for utterance in piece.utterances:
        if utterance.id in existing:
            raise DuplicateUtteranceId(f"utterance id {utterance.id} already merged")
    declared = {p.code for p in root.participants}
    for utterance in piece.utterances:
        if utterance.speaker not in declared:
            raise UnknownParticipant(
                f"piece speaker {utterance.speaker!r} is not a root participant"
            )

    state = TranscriptState(root)
    for utterance in piece.utterances:
        position = _insert_position(state.root, index, segment)
        change = make_change(log, "root", "insert",
                             f"u:{utterance.id}@{position}", utterance,
                             author=author)
        log = append_change(log, state, change)
        state = apply_change(state, change)
    return state.root, log, index.with_status(piece.segment_id,
                                              SegmentStatus.TRANSCRIBED)


def _insert_position(root: SlaRoot, index: SegmentIndex, segment: Segment) -> int:
    """First position whose utterance belongs to a media-later segment.

    Utterances with no known segment (not piece-born) sort before all
    pieces, preserving their relative order.
    """
    position = len(root.utterances)
    for at, utterance in enumerate(root.utterances):
        this_segment = _segment_of(index, utterance.id)
        if this_segment is not None and \
                this_segment.media_start > segment.media_start:
            return at
    return position


# -- reports -----------------------------------------------------------------------


@dataclass(frozen=True)
class GapEntry:
    """One maximal untranscribed stretch of the indexed window."""

    start: int
    end: int
    segment_ids: tuple[str, ...]  # non-transcribed segments inside the gap
    before: Optional[str]  # nearest transcribed segment ending at or before
    after: Optional[str]  # nearest transcribed segment starting at or after

    def duration(self) -> int:
        return self.end - self.start


def gap_report(root: SlaRoot, index: SegmentIndex) -> tuple[GapEntry, ...]:
    """Maximal runs of non-transcribed segments and unindexed spans between them."""
    segments = index.segments
    if not segments:
        return ()
    pieces: list[tuple[int, int, Optional[Segment]]] = []
    for at, segment in enumerate(segments):
        if at > 0 and segment.media_start > segments[at - 1].media_end:
            pieces.append((segments[at - 1].media_end, segment.media_start, None))
        pieces.append((segment.media_start, segment.media_end, segment))

    gaps: list[GapEntry] = []
    run: list[tuple[int, int, Optional[Segment]]] = []
    last_transcribed: Optional[str] = None

    def close_run(after: Optional[str]) -> None:
        nonlocal run
        if run:
            gaps.append(GapEntry(
                start=run[0][0],
                end=run[-1][1],
                segment_ids=tuple(p[2].id for p in run if p[2] is not None),
                before=last_transcribed,
                after=after,
            ))
            run = []

    for start, end, segment in pieces:
        if segment is not None and segment.status is SegmentStatus.TRANSCRIBED:
            close_run(after=segment.id)
            last_transcribed = segment.id
        else:
            run.append((start, end, segment))
    close_run(after=None)
    return tuple(gaps)


@dataclass(frozen=True)
class CoverageStats:
    """Fractions of the indexed media window per status.

    The window is [first segment start, last segment end]; the fractions sum
    to at most 1, the remainder being unindexed time inside the window.
    """

    transcribed: float
    indexed: float
    excluded: float
    unindexed: float
    window_ms: int


def coverage_stats(index: SegmentIndex) -> CoverageStats:
    segments = index.segments
    if not segments:
        return CoverageStats(0.0, 0.0, 0.0, 0.0, 0)
    window = segments[-1].media_end - segments[0].media_start
    totals = {status: 0 for status in SegmentStatus}
    for segment in segments:
        totals[segment.status] += segment.duration()
    covered = sum(totals.values())
    return CoverageStats(
        transcribed=totals[SegmentStatus.TRANSCRIBED] / window,
        indexed=totals[SegmentStatus.INDEXED] / window,
        excluded=totals[SegmentStatus.EXCLUDED] / window,
        unindexed=(window - covered) / window,
        window_ms=window,
    )


@dataclass(frozen=True)
class Breakpoint:
    chain: str
    from_utterance: str
    to_utterance: str
    gap_start: int
    gap_end: int


@dataclass(frozen=True)
class CohesionReport:
    """Broken-chain count: the minimal texture-disruption measure.

    A chain is the ordered list of code entries sharing a ``chain`` key
    value; it breaks where two consecutive members sit in different
    transcribed segments with at least one gap between them.
    """

    scheme: str
    total_chains: int
    broken_chains: int
    breakpoints: tuple[Breakpoint, ...]


def cohesion_diagnostic(
    root: SlaRoot,
    descriptors: Sequence[SlaDescriptor],
    index: SegmentIndex,
    scheme: str,
) -> CohesionReport:
    descriptor = next((d for d in descriptors if d.scheme == scheme), None)
    if descriptor is None:
        raise UnknownScheme(f"no descriptor for scheme {scheme!r}")

    positions = {u.id: at for at, u in enumerate(root.utterances)}

    def member_place(code) -> Optional[tuple[int, int, str]]:
        target = code.target
        if target.kind == "group":
            group = descriptor.group(target.ref)
            if group is None or group.utterance_id not in positions:
                return None
            return positions[group.utterance_id], group.start, group.utterance_id
        if target.ref not in positions:
            return None
        offset = target.token_index if target.kind == "token" else -1
        return positions[target.ref], offset, target.ref

    chains: dict[str, list[tuple[int, int, str]]] = {}
    for code in descriptor.codes:
        if code.key != "chain":
            continue
        place = member_place(code)
        if place is not None:
            chains.setdefault(code.value, []).append(place)

    gaps = gap_report(root, index)
    breakpoints: list[Breakpoint] = []
    broken: set[str] = set()
    for chain_id in sorted(chains):
        members = sorted(chains[chain_id])
        for (_, _, uid_a), (_, _, uid_b) in zip(members, members[1:]):
            seg_a = _segment_of(index, uid_a)
            seg_b = _segment_of(index, uid_b)
            if seg_a is None or seg_b is None or seg_a.id == seg_b.id:
                continue
            low = min(seg_a.media_end, seg_b.media_end)
            high = max(seg_a.media_start, seg_b.media_start)
            between = [g for g in gaps if low <= g.start and g.end <= high]
            if between:
                broken.add(chain_id)
                breakpoints.append(Breakpoint(
                    chain_id, uid_a, uid_b, between[0].start, between[0].end,
                ))
    return CohesionReport(scheme, len(chains), len(broken), tuple(breakpoints))


def insert_gap_headers(
    doc: TranscriptDoc,
    root: SlaRoot,
    index: SegmentIndex,
) -> TranscriptDoc:
    """Mark each gap in a rendered document with @New Episode + @Comment.

    ``doc`` must be the rendering of ``root`` (same utterance order).  The
    marker pair goes before the first utterance that follows the gap, or at
    the end of the body for a trailing gap.
    """
    gaps = gap_report(root, index)
    if not gaps:
        return doc

    def gap_headers(gap: GapEntry) -> tuple[Header, Header]:
        note = f"untranscribed {format_media_time(gap.start)}" \
               f"-{format_media_time(gap.end)}"
        if gap.segment_ids:
            note += " segments " + ", ".join(gap.segment_ids)
        return (Header("New Episode", "", HeaderKind.CHANGEABLE),
                Header("Comment", note, HeaderKind.CHANGEABLE))

    segment_order = {s.id: at for at, s in enumerate(index.segments)}

    def first_position_after(gap: GapEntry) -> Optional[int]:
        for position, utterance in enumerate(root.utterances):
            segment = _segment_of(index, utterance.id)
            if segment is not None and segment.media_start >= gap.end:
                return position
        return None

    inserts: dict[int, list[Header]] = {}
    trailing: list[Header] = []
    for gap in gaps:
        position = first_position_after(gap)
        if position is None:
            trailing.extend(gap_headers(gap))
        else:
            inserts.setdefault(position, []).extend(gap_headers(gap))

    body: list = []
    position = 0
    for item in doc.body:
        if isinstance(item, UtteranceBlock):
            body.extend(inserts.get(position, ()))
            position += 1
        body.append(item)
    body.extend(trailing)
    assert position == len(root.utterances), "doc does not match root"
    return replace(doc, body=tuple(body))


# -- XML ---------------------------------------------------------------------------


def serialize_index(index: SegmentIndex) -> bytes:
    el = ET.Element("slaIndex")
    el.set("transcriptId", index.transcript_id)
    el.set("schemaVersion", index.schema_version)
    for segment in index.segments:
        seg = ET.SubElement(el, "segment")
        seg.set("id", segment.id)
        seg.set("start", format_media_time(segment.media_start))
        seg.set("end", format_media_time(segment.media_end))
        seg.set("label", segment.label)
        seg.set("status", segment.status.value)
        seg.set("tags", ",".join(segment.tags))
    return to_canonical_bytes(el)


def parse_index(data: bytes) -> SegmentIndex:
    el = parse_bytes(data, "slaIndex")
    transcript_id, version = check_document_attrs(el)
    segments = []
    for child in el:
        if child.tag != "segment":
            raise SchemaViolation(f"unexpected element <{child.tag}> in <slaIndex>")
        try:
            status = SegmentStatus(require_attr(child, "status"))
            tags_raw = child.get("tags", "")
            segments.append(Segment(
                id=require_attr(child, "id"),
                media_start=parse_media_time(require_attr(child, "start")),
                media_end=parse_media_time(require_attr(child, "end")),
                label=child.get("label", ""),
                status=status,
                tags=tuple(tags_raw.split(",")) if tags_raw else (),
            ))
        except ValueError as exc:
            raise SchemaViolation(str(exc)) from exc
    try:
        return SegmentIndex(transcript_id, tuple(segments), version)
    except (OverlapInMediaTime, EmptySegment) as exc:
        raise SchemaViolation(str(exc)) from exc
