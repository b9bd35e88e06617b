"""Multi-file transcript storage: Root, Descriptor and their XML forms."""

from slakit.sla_store.model import (
    SCHEMA_VERSION,
    CodeEntry,
    CodeTarget,
    HeaderField,
    ParticipantRecord,
    RootUtterance,
    SlaDescriptor,
    SlaRoot,
)
from slakit.sla_store.xmlio import (
    parse_descriptor,
    parse_root,
    serialize_descriptor,
    serialize_root,
)
from slakit.sla_store.convert import from_chat, resolve_refs, to_chat

__all__ = [
    "SCHEMA_VERSION",
    "CodeEntry",
    "CodeTarget",
    "HeaderField",
    "ParticipantRecord",
    "RootUtterance",
    "SlaDescriptor",
    "SlaRoot",
    "from_chat",
    "parse_descriptor",
    "parse_root",
    "resolve_refs",
    "serialize_descriptor",
    "serialize_root",
    "to_chat",
]
