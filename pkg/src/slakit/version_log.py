"""Append-only change log over Root and Descriptor content.

A :class:`ChangeRecord` is an insert or update addressed by a path:

* ``header:<name>`` (``@<idx>`` names the position in the header list),
* ``u:<uid>`` (``@<idx>`` names the position in the utterance list),
* ``u:<uid>/t:<n>`` — one token,
* ``u:<uid>/tier:<code>`` (``@<idx>`` for position),
* ``group:<gid>`` / ``code:<cid>`` — descriptor entries.

Header, utterance and tier paths apply to the ``root`` target; group and
code paths to a ``descriptor:<scheme>`` target.  Updates carry a ``before``
snapshot equal to the current value, which makes every change reversible
without consulting the rest of the log.  Deletion is an update whose
``after`` is the :data:`TOMBSTONE` sentinel; on ordered nodes (headers,
utterances, tiers) the path must then carry ``@<idx>`` so a revert can put
the value back in place.  Tokens are update-only: inserting or deleting a
token would shift the dense indices that standoff ranges point at.

States are immutable; ``apply_change``/``revert_change`` return new values.
Appending requires the transcript's writer lock (see :mod:`slakit.locking`);
reads never block.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Optional, Union

from slakit.chat_core.model import Tier
from slakit.chat_core.tokens import CONTENT_KINDS, Token
from slakit.errors import (
    PathInvalid,
    SchemaViolation,
    SeqGap,
    StaleBefore,
    VersionOutOfRange,
)
from slakit.group_algebra import GroupRange
from slakit.sla_store.model import (
    CodeEntry,
    HeaderField,
    RootUtterance,
    SlaDescriptor,
    SlaRoot,
)
from slakit.sla_store import xmlio
from slakit.xmlcanon import (
    SCHEMA_VERSION,
    check_document_attrs,
    int_attr,
    parse_bytes,
    require_attr,
    to_canonical_bytes,
)


class _Tombstone:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "TOMBSTONE"


#: ``after`` payload marking a deletion.
TOMBSTONE = _Tombstone()

Payload = Union[HeaderField, RootUtterance, Token, Tier, GroupRange, CodeEntry,
                _Tombstone]

_PATH_RES = (
    ("header", re.compile(r"^header:(?P<name>[^@/]+)(?:@(?P<idx>\d+))?$")),
    ("token", re.compile(r"^u:(?P<uid>[^/@]+)/t:(?P<tok>\d+)$")),
    ("tier", re.compile(
        r"^u:(?P<uid>[^/@]+)/tier:(?P<code>[^@/]+)(?:@(?P<idx>\d+))?$")),
    ("utterance", re.compile(r"^u:(?P<uid>[^/@]+)(?:@(?P<idx>\d+))?$")),
    ("group", re.compile(r"^group:(?P<gid>[^@/]+)$")),
    ("code", re.compile(r"^code:(?P<cid>[^@/]+)$")),
)

_ROOT_KINDS = frozenset({"header", "utterance", "token", "tier"})
_PAYLOAD_TYPES = {
    "header": HeaderField,
    "utterance": RootUtterance,
    "token": Token,
    "tier": Tier,
    "group": GroupRange,
    "code": CodeEntry,
}


@dataclass(frozen=True)
class ChangePath:
    kind: str
    key: str  # header name, utterance id, group id or code id
    sub: Optional[str] = None  # tier code
    token_index: Optional[int] = None
    index: Optional[int] = None  # position for ordered nodes

    @classmethod
    def parse(cls, raw: str) -> "ChangePath":
        for kind, pattern in _PATH_RES:
            m = pattern.match(raw)
            if not m:
                continue
            g = m.groupdict()
            idx = g.get("idx")
            if kind == "header":
                return cls("header", g["name"], index=int(idx) if idx else None)
            if kind == "token":
                return cls("token", g["uid"], token_index=int(g["tok"]))
            if kind == "tier":
                return cls("tier", g["uid"], sub=g["code"],
                           index=int(idx) if idx else None)
            if kind == "utterance":
                return cls("utterance", g["uid"], index=int(idx) if idx else None)
            if kind == "group":
                return cls("group", g["gid"])
            return cls("code", g["cid"])
        raise PathInvalid(f"cannot parse change path {raw!r}")

    def is_within(self, query: "ChangePath") -> bool:
        """True when this path is at or below ``query`` (indexes ignored)."""
        if query.kind == "utterance" and self.kind in ("utterance", "token", "tier"):
            return self.key == query.key
        if self.kind != query.kind or self.key != query.key:
            return False
        if self.kind == "token":
            return self.token_index == query.token_index
        if self.kind == "tier":
            return self.sub == query.sub
        return True


@dataclass(frozen=True)
class ChangeRecord:
    seq: int
    target: str  # "root" or "descriptor:<scheme>"
    op: str  # "insert" or "update"
    path: str
    after: Payload
    before: Optional[Payload] = None
    timestamp: str = ""
    author: str = ""

    def __post_init__(self):
        if self.seq < 1:
            raise ValueError("seq must be positive")
        if self.op not in ("insert", "update"):
            raise ValueError(f"bad op {self.op!r}")
        if self.op == "update" and self.before is None:
            raise ValueError("update records require a before snapshot")
        if self.op == "insert" and self.before is not None:
            raise ValueError("insert records carry no before snapshot")
        if self.target != "root" and not self.target.startswith("descriptor:"):
            raise ValueError(f"bad target {self.target!r}")
        _parse_timestamp(self.timestamp)
        ChangePath.parse(self.path)

    @property
    def scheme(self) -> Optional[str]:
        if self.target.startswith("descriptor:"):
            return self.target[len("descriptor:"):]
        return None

    @property
    def parsed_path(self) -> ChangePath:
        return ChangePath.parse(self.path)


def _parse_timestamp(raw: str) -> datetime:
    try:
        stamp = datetime.fromisoformat(raw.replace("Z", "+00:00"))
    except ValueError as exc:
        raise ValueError(f"bad ISO 8601 timestamp {raw!r}") from exc
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp


def now_timestamp() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class ChangeLog:
    transcript_id: str
    records: tuple[ChangeRecord, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        previous = None
        for position, record in enumerate(self.records, start=1):
            if record.seq != position:
                raise SeqGap(f"record {position} has seq {record.seq}")
            stamp = _parse_timestamp(record.timestamp)
            if previous is not None and stamp < previous:
                raise ValueError(
                    f"timestamp of seq {record.seq} precedes its predecessor"
                )
            previous = stamp

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class VersionId:
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("version must be >= 0")


@dataclass(frozen=True)
class TranscriptState:
    """A Root plus its descriptors: the unit the change log evolves."""

    root: SlaRoot
    descriptors: tuple[SlaDescriptor, ...] = ()

    def __post_init__(self):
        ordered = tuple(sorted(self.descriptors, key=lambda d: d.scheme))
        schemes = [d.scheme for d in ordered]
        if len(set(schemes)) != len(schemes):
            raise ValueError("duplicate descriptor scheme")
        object.__setattr__(self, "descriptors", ordered)

    def descriptor(self, scheme: str) -> Optional[SlaDescriptor]:
        for descriptor in self.descriptors:
            if descriptor.scheme == scheme:
                return descriptor
        return None

    def _with_descriptor(self, descriptor: SlaDescriptor) -> "TranscriptState":
        rest = tuple(d for d in self.descriptors if d.scheme != descriptor.scheme)
        return TranscriptState(self.root, rest + (descriptor,))


# -- resolution and application --------------------------------------------------


def _check_payload(path: ChangePath, payload: Payload, *, allow_tombstone: bool):
    if payload is TOMBSTONE:
        if not allow_tombstone:
            raise PathInvalid(f"{path.kind} paths cannot take a tombstone here")
        return
    expected = _PAYLOAD_TYPES[path.kind]
    if not isinstance(payload, expected):
        raise PathInvalid(
            f"{path.kind} path needs a {expected.__name__} payload, "
            f"got {type(payload).__name__}"
        )
    if path.kind == "header" and payload.name != path.key:
        raise PathInvalid(f"payload header name {payload.name!r} != path {path.key!r}")
    if path.kind == "utterance" and payload.id != path.key:
        raise PathInvalid(f"payload utterance id {payload.id!r} != path {path.key!r}")
    if path.kind == "token" and payload.kind not in CONTENT_KINDS:
        raise PathInvalid("token payloads must be content tokens")
    if path.kind == "tier" and payload.code != path.sub:
        raise PathInvalid(f"payload tier code {payload.code!r} != path {path.sub!r}")
    if path.kind in ("group", "code") and payload.id != path.key:
        raise PathInvalid(f"payload id {payload.id!r} != path {path.key!r}")


def _utterance_position(root: SlaRoot, uid: str) -> Optional[int]:
    for position, utterance in enumerate(root.utterances):
        if utterance.id == uid:
            return position
    return None


def _current_value(state: TranscriptState, record: ChangeRecord):
    """Resolve the node a record addresses; None when absent.

    Returns (value, position) where position is the node's index in its
    ordered container (None for groups/codes).
    """
    path = record.parsed_path
    scheme = record.scheme
    if (path.kind in _ROOT_KINDS) == (scheme is not None):
        raise PathInvalid(
            f"{path.kind} path does not belong to target {record.target!r}"
        )

    if path.kind == "header":
        fields = state.root.header_fields
        if path.index is not None:
            if 0 <= path.index < len(fields) and fields[path.index].name == path.key:
                return fields[path.index], path.index
            return None, path.index
        for position, field in enumerate(fields):
            if field.name == path.key:
                return field, position
        return None, None

    if path.kind in ("utterance", "token", "tier"):
        position = _utterance_position(state.root, path.key)
        if position is None:
            return None, None
        utterance = state.root.utterances[position]
        if path.kind == "utterance":
            if path.index is not None and path.index != position:
                raise PathInvalid(
                    f"utterance {path.key} is at position {position}, "
                    f"path says {path.index}"
                )
            return utterance, position
        if path.kind == "token":
            if not (0 <= path.token_index < len(utterance.tokens)):
                return None, None
            return utterance.tokens[path.token_index], path.token_index
        for tier_position, tier in enumerate(utterance.tiers):
            if tier.code == path.sub:
                if path.index is not None and path.index != tier_position:
                    raise PathInvalid(
                        f"tier {path.sub} of {path.key} is at position "
                        f"{tier_position}, path says {path.index}"
                    )
                return tier, tier_position
        return None, None

    descriptor = state.descriptor(scheme)
    if descriptor is None:
        return None, None
    if path.kind == "group":
        return descriptor.group(path.key), None
    return descriptor.code(path.key), None


def _insert(state: TranscriptState, record: ChangeRecord) -> TranscriptState:
    path = record.parsed_path
    payload = record.after
    if payload is TOMBSTONE:
        raise PathInvalid("cannot insert a tombstone")
    _check_payload(path, payload, allow_tombstone=False)
    current, _ = _current_value(state, record)

    if path.kind == "header":
        fields = state.root.header_fields
        if path.index is None or not (0 <= path.index <= len(fields)):
            raise PathInvalid("header inserts need a valid @<idx> position")
        updated = fields[:path.index] + (payload,) + fields[path.index:]
        return replace(state, root=replace(state.root, header_fields=updated))

    if path.kind == "utterance":
        if current is not None:
            raise PathInvalid(f"utterance {path.key} already exists")
        utterances = state.root.utterances
        if path.index is None or not (0 <= path.index <= len(utterances)):
            raise PathInvalid("utterance inserts need a valid @<idx> position")
        updated = utterances[:path.index] + (payload,) + utterances[path.index:]
        return replace(state, root=replace(state.root, utterances=updated))

    if path.kind == "token":
        raise PathInvalid("tokens are update-only: inserts would shift indices")

    if path.kind == "tier":
        position = _utterance_position(state.root, path.key)
        if position is None:
            raise PathInvalid(f"unknown utterance {path.key}")
        utterance = state.root.utterances[position]
        if any(t.code == path.sub for t in utterance.tiers):
            raise PathInvalid(f"tier {path.sub} already exists on {path.key}")
        at = path.index if path.index is not None else len(utterance.tiers)
        if not (0 <= at <= len(utterance.tiers)):
            raise PathInvalid(f"tier position {at} out of range")
        tiers = utterance.tiers[:at] + (payload,) + utterance.tiers[at:]
        return _replace_utterance(state, position, replace(utterance, tiers=tiers))

    # group / code
    if current is not None:
        raise PathInvalid(f"{path.kind} {path.key} already exists")
    scheme = record.scheme
    descriptor = state.descriptor(scheme) or SlaDescriptor(
        state.root.transcript_id, scheme
    )
    if path.kind == "group":
        descriptor = replace(descriptor, groups=descriptor.groups + (payload,))
    else:
        descriptor = replace(descriptor, codes=descriptor.codes + (payload,))
    return state._with_descriptor(descriptor)


def _update(state: TranscriptState, record: ChangeRecord) -> TranscriptState:
    path = record.parsed_path
    tombstone = record.after is TOMBSTONE
    _check_payload(path, record.after,
                   allow_tombstone=path.kind not in ("token",))
    current, position = _current_value(state, record)
    if current is None:
        raise PathInvalid(f"nothing at path {record.path!r}")
    if record.before != current:
        raise StaleBefore(
            f"before snapshot does not match current value at {record.path!r}"
        )
    if tombstone and path.kind in ("header", "utterance", "tier") \
            and path.index is None:
        raise PathInvalid(
            f"tombstoning a {path.kind} needs the @<idx> position for revert"
        )
    return _set_value(state, record, position,
                      None if tombstone else record.after)


def _set_value(state: TranscriptState, record: ChangeRecord,
               position: Optional[int], value) -> TranscriptState:
    """Replace (or, with value=None, remove) the node a record addresses."""
    path = record.parsed_path

    if path.kind == "header":
        fields = state.root.header_fields
        if value is None:
            updated = fields[:position] + fields[position + 1:]
        else:
            updated = fields[:position] + (value,) + fields[position + 1:]
        return replace(state, root=replace(state.root, header_fields=updated))

    if path.kind == "utterance":
        utterances = state.root.utterances
        if value is None:
            updated = utterances[:position] + utterances[position + 1:]
        else:
            updated = utterances[:position] + (value,) + utterances[position + 1:]
        return replace(state, root=replace(state.root, utterances=updated))

    if path.kind == "token":
        at = _utterance_position(state.root, path.key)
        utterance = state.root.utterances[at]
        tokens = utterance.tokens[:position] + (value,) + utterance.tokens[position + 1:]
        return _replace_utterance(state, at, replace(utterance, tokens=tokens))

    if path.kind == "tier":
        at = _utterance_position(state.root, path.key)
        utterance = state.root.utterances[at]
        if value is None:
            tiers = utterance.tiers[:position] + utterance.tiers[position + 1:]
        else:
            tiers = utterance.tiers[:position] + (value,) + utterance.tiers[position + 1:]
        return _replace_utterance(state, at, replace(utterance, tiers=tiers))

    descriptor = state.descriptor(record.scheme)
    if path.kind == "group":
        groups = tuple(g for g in descriptor.groups if g.id != path.key)
        if value is not None:
            groups += (value,)
        descriptor = replace(descriptor, groups=groups)
    else:
        codes = tuple(c for c in descriptor.codes if c.id != path.key)
        if value is not None:
            codes += (value,)
        descriptor = replace(descriptor, codes=codes)
    return state._with_descriptor(descriptor)


def _replace_utterance(state: TranscriptState, position: int,
                       utterance: RootUtterance) -> TranscriptState:
    utterances = state.root.utterances
    updated = utterances[:position] + (utterance,) + utterances[position + 1:]
    return replace(state, root=replace(state.root, utterances=updated))


# -- public operations -----------------------------------------------------------


def apply_change(state: TranscriptState, change: ChangeRecord) -> TranscriptState:
    """Apply one change; the result differs from ``state`` exactly at the path."""
    if change.op == "insert":
        return _insert(state, change)
    return _update(state, change)


def revert_change(state: TranscriptState, change: ChangeRecord) -> TranscriptState:
    """Undo the most recently applied change: revert(apply(s, c), c) == s."""
    path = change.parsed_path
    if change.op == "insert":
        current, position = _current_value(state, change)
        if current != change.after:
            raise PathInvalid(
                f"cannot revert insert at {change.path!r}: value changed"
            )
        return _set_value(state, change, position, None)
    if change.after is TOMBSTONE:
        undo = replace(change, op="insert", after=change.before, before=None)
        return _insert(state, undo)
    current, position = _current_value(state, change)
    if current != change.after:
        raise PathInvalid(f"cannot revert update at {change.path!r}: value changed")
    return _set_value(state, change, position, change.before)


def append_change(log: ChangeLog, state: TranscriptState,
                  change: ChangeRecord) -> ChangeLog:
    """Validate a change against the current state and append it to the log."""
    if state.root.transcript_id != log.transcript_id:
        raise PathInvalid(
            f"state transcript {state.root.transcript_id!r} does not match "
            f"log transcript {log.transcript_id!r}"
        )
    if change.seq != len(log.records) + 1:
        raise SeqGap(f"expected seq {len(log.records) + 1}, got {change.seq}")
    if log.records:
        if _parse_timestamp(change.timestamp) < _parse_timestamp(
                log.records[-1].timestamp):
            raise ValueError("timestamp precedes the last record")
    apply_change(state, change)  # validation only
    return ChangeLog(log.transcript_id, log.records + (change,))


def materialize(base_state: TranscriptState, log: ChangeLog,
                version: Union[VersionId, int]) -> TranscriptState:
    """Fold the first ``version`` changes over the base state."""
    n = version.n if isinstance(version, VersionId) else version
    if not (0 <= n <= len(log.records)):
        raise VersionOutOfRange(f"version {n} not in 0..{len(log.records)}")
    state = base_state
    for record in log.records[:n]:
        state = apply_change(state, record)
    return state


def history(log: ChangeLog, path: str, target: Optional[str] = None
            ) -> list[ChangeRecord]:
    """Records at or below ``path`` (position suffixes ignored), in seq order."""
    query = ChangePath.parse(path)
    out = []
    for record in log.records:
        if target is not None and record.target != target:
            continue
        if record.parsed_path.is_within(query):
            out.append(record)
    return out


def make_change(log: ChangeLog, target: str, op: str, path: str, after: Payload,
                before: Optional[Payload] = None, author: str = "",
                timestamp: Optional[str] = None) -> ChangeRecord:
    """Build the next record for ``log`` with sequence number and timestamp."""
    stamp = timestamp if timestamp is not None else now_timestamp()
    if log.records:
        last = _parse_timestamp(log.records[-1].timestamp)
        if _parse_timestamp(stamp) < last:
            stamp = log.records[-1].timestamp
    return ChangeRecord(len(log.records) + 1, target, op, path, after, before,
                        stamp, author)


# -- XML -------------------------------------------------------------------------

_PAYLOAD_BUILDERS = {
    HeaderField: xmlio.header_field_element,
    RootUtterance: xmlio.utterance_element,
    Token: xmlio.token_element,
    Tier: xmlio.tier_element,
    GroupRange: xmlio.group_element,
    CodeEntry: xmlio.code_element,
}


def _payload_element(payload: Payload) -> ET.Element:
    if payload is TOMBSTONE:
        return ET.Element("tombstone")
    builder = _PAYLOAD_BUILDERS[type(payload)]
    return builder(payload)


def _read_payload(wrapper: ET.Element) -> Payload:
    children = list(wrapper)
    if len(children) != 1:
        raise SchemaViolation(
            f"<{wrapper.tag}> must wrap exactly one payload element"
        )
    el = children[0]
    if el.tag == "tombstone":
        return TOMBSTONE
    if el.tag == "headerField":
        return xmlio.read_header_field(el)
    if el.tag == "u":
        return xmlio.read_utterance(el)
    if el.tag in ("w", "p", "t"):
        return xmlio.read_token(el)
    if el.tag == "tier":
        return xmlio.read_tier(el)
    if el.tag == "group":
        return xmlio.read_group(el)
    if el.tag == "code":
        return xmlio.read_code(el)
    raise SchemaViolation(f"unexpected payload element <{el.tag}>")


def serialize_changes(log: ChangeLog) -> bytes:
    el = ET.Element("slaChanges")
    el.set("transcriptId", log.transcript_id)
    el.set("schemaVersion", SCHEMA_VERSION)
    for record in log.records:
        change = ET.SubElement(el, "change")
        change.set("seq", str(record.seq))
        change.set("target", record.target)
        change.set("op", record.op)
        change.set("path", record.path)
        change.set("timestamp", record.timestamp)
        change.set("author", record.author)
        if record.before is not None:
            before = ET.SubElement(change, "before")
            before.append(_payload_element(record.before))
        after = ET.SubElement(change, "after")
        after.append(_payload_element(record.after))
    return to_canonical_bytes(el)


def parse_changes(data: bytes) -> ChangeLog:
    el = parse_bytes(data, "slaChanges")
    transcript_id, _ = check_document_attrs(el)
    records = []
    for child in el:
        if child.tag != "change":
            raise SchemaViolation(f"unexpected element <{child.tag}> in <slaChanges>")
        before_el = child.find("before")
        after_el = child.find("after")
        if after_el is None:
            raise SchemaViolation("change lacks an <after> payload")
        try:
            records.append(ChangeRecord(
                seq=int_attr(child, "seq"),
                target=require_attr(child, "target"),
                op=require_attr(child, "op"),
                path=require_attr(child, "path"),
                after=_read_payload(after_el),
                before=_read_payload(before_el) if before_el is not None else None,
                timestamp=require_attr(child, "timestamp"),
                author=child.get("author", ""),
            ))
        except (ValueError, PathInvalid) as exc:
            raise SchemaViolation(str(exc)) from exc
    try:
        return ChangeLog(transcript_id, tuple(records))
    except (SeqGap, ValueError) as exc:
        raise SchemaViolation(str(exc)) from exc
