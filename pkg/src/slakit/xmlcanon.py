"""Canonical XML reading and writing shared by all file kinds.

The canonical form is the contract: UTF-8, LF, two-space indent, attributes
in the fixed order each serializer supplies, XML declaration on top and a
trailing newline.  Serializing equal values twice gives identical bytes.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

from slakit.errors import MalformedXml, SchemaViolation, VersionUnsupported

SCHEMA_VERSION = "1.0"


def to_canonical_bytes(root: ET.Element) -> bytes:
    ET.indent(root, space="  ")
    return ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n"


def parse_bytes(data: bytes, expected_tag: str) -> ET.Element:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise MalformedXml(f"not well-formed XML: {exc}") from exc
    if root.tag != expected_tag:
        raise SchemaViolation(f"expected <{expected_tag}>, found <{root.tag}>")
    return root


def require_attr(element: ET.Element, name: str) -> str:
    value = element.get(name)
    if value is None:
        raise SchemaViolation(f"<{element.tag}> lacks required attribute {name!r}")
    return value


def check_document_attrs(element: ET.Element) -> tuple[str, str]:
    """Validate transcriptId/schemaVersion; only major version 1 is readable."""
    transcript_id = require_attr(element, "transcriptId")
    if not transcript_id:
        raise SchemaViolation(f"<{element.tag}> has an empty transcriptId")
    version = require_attr(element, "schemaVersion")
    major = version.split(".", 1)[0]
    if major != SCHEMA_VERSION.split(".", 1)[0]:
        raise VersionUnsupported(f"schema version {version} is not supported")
    return transcript_id, version


def int_attr(element: ET.Element, name: str) -> int:
    raw = require_attr(element, name)
    try:
        return int(raw)
    except ValueError as exc:
        raise SchemaViolation(f"attribute {name}={raw!r} is not an integer") from exc
