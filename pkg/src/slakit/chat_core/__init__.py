"""CHAT transcript model: tokenizer, parser, renderer, group interpretation."""

from slakit.chat_core.tokens import (
    ScopeMarkerKind,
    Token,
    TokenKind,
    marker_surface,
    render_tokens,
    tokenize_mainline,
)
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
from slakit.chat_core.parser import parse_transcript
from slakit.chat_core.renderer import render_chat
from slakit.chat_core.validate import validate
from slakit.chat_core.interpret import Interpretation, extract_inline_groups

__all__ = [
    "CHANGEABLE_HEADERS",
    "CONSTANT_HEADERS",
    "Header",
    "HeaderKind",
    "Interpretation",
    "ParseMode",
    "ScopeMarkerKind",
    "Tier",
    "Token",
    "TokenKind",
    "TranscriptDoc",
    "Utterance",
    "UtteranceBlock",
    "declared_participants",
    "extract_inline_groups",
    "is_participant_code",
    "is_tier_code",
    "marker_surface",
    "parse_transcript",
    "render_chat",
    "render_tokens",
    "tokenize_mainline",
    "validate",
]
